#include "tdsim/eclipse.hpp"

#include <cmath>
#include <stdexcept>

namespace tdsim {

void SybilPool::validate() const {
    if (attacker_nodes < 0 || honest_nodes < 0) throw std::invalid_argument("node counts must be non-negative");
    if (attacker_nodes + honest_nodes < 1) throw std::invalid_argument("sybil pool is empty");
    if (outbound_count < 1) throw std::invalid_argument("outbound count must be >= 1");
    if (!(addrman_poisoning >= 0.0 && addrman_poisoning <= 1.0)) {
        throw std::invalid_argument("address-manager poisoning must lie in [0, 1]");
    }
}

double SybilPool::attacker_share() const {
    return static_cast<double>(attacker_nodes) / static_cast<double>(attacker_nodes + honest_nodes);
}

double eclipse_probability(const SybilPool& pool) {
    pool.validate();
    return std::pow(pool.attacker_share(), pool.outbound_count);
}

double eclipse_probability_without_replacement(const SybilPool& pool) {
    pool.validate();
    const long total = pool.attacker_nodes + pool.honest_nodes;
    if (pool.outbound_count > total) {
        throw std::invalid_argument("cannot draw more distinct peers than the pool holds");
    }
    // prod_{i<C} (N_a - i) / (N - i)
    double p = 1.0;
    for (int i = 0; i < pool.outbound_count; ++i) {
        if (pool.attacker_nodes - i <= 0) return 0.0;
        p *= static_cast<double>(pool.attacker_nodes - i) / static_cast<double>(total - i);
    }
    return p;
}

DeEclipseResult resolve_de_eclipse(const SybilPool& pool, RandomSource& rng, TriggerMode mode) {
    if (mode == TriggerMode::Pessimistic) return DeEclipseResult::DeEclipsed;
    const double honest = 1.0 - pool.attacker_share();
    const double p = (1.0 - pool.addrman_poisoning) * honest;
    return rng.bernoulli(p) ? DeEclipseResult::DeEclipsed : DeEclipseResult::StillEclipsed;
}

std::string_view to_string(ProbeKind kind) {
    switch (kind) {
        case ProbeKind::Eclipsed: return "Eclipsed";
        case ProbeKind::LeakDetected: return "LeakDetected";
        case ProbeKind::Inconclusive: return "Inconclusive";
    }
    return "Unknown";
}

ProbeVerdict transaction_probe(const VictimTopology& topology) {
    if (topology.hidden_tx_link) {
        return {ProbeKind::LeakDetected, "withheld transaction announced back by an honest peer"};
    }
    return {ProbeKind::Eclipsed, "withheld transaction never resurfaced"};
}

ProbeVerdict BlockProber::probe(const VictimTopology& topology, const Block& fresh_block) {
    if (fresh_block.height <= last_height_) {
        throw std::invalid_argument("block probe needs a block newer than height " +
                                    std::to_string(last_height_));
    }
    last_height_ = fresh_block.height;
    if (topology.hidden_tx_link || topology.hidden_block_link) {
        return {ProbeKind::LeakDetected,
                "victim relayed withheld block " + std::to_string(fresh_block.height)};
    }
    return {ProbeKind::Eclipsed, "withheld block " + std::to_string(fresh_block.height) + " stayed hidden"};
}

ProbeVerdict combined_probe(const VictimTopology& topology, BlockProber& prober,
                            const Block& fresh_block) {
    ProbeVerdict tx = transaction_probe(topology);
    ProbeVerdict blk = prober.probe(topology, fresh_block);
    if (tx.kind == ProbeKind::LeakDetected) return tx;
    return blk;
}

}  // namespace tdsim
