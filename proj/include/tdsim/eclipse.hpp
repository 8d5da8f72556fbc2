#pragma once

// Sybil-pool eclipse model: closed-form eclipse probability, resolution of
// de-eclipse attempts, and the transaction/block probes an attacker uses to
// confirm that a victim is fully isolated.

#include <string>

#include "tdsim/chain.hpp"

namespace tdsim {

struct SybilPool {
    long attacker_nodes = 0;
    long honest_nodes = 0;
    int outbound_count = 8;
    /// Fraction of honest addresses displaced in the victim's address manager.
    double addrman_poisoning = 0.0;

    void validate() const;
    [[nodiscard]] double attacker_share() const;
};

/// (N_a / (N_h + N_a))^C: every one of the C outbound peers, drawn
/// independently and uniformly, is a sybil.
double eclipse_probability(const SybilPool& pool);

/// Comparison mode: C distinct peers drawn without replacement,
/// C(N_a, C) / C(N_a + N_h, C).
double eclipse_probability_without_replacement(const SybilPool& pool);

enum class TriggerMode : std::uint8_t {
    /// Every stale-tip trigger breaks the eclipse.
    Pessimistic,
    /// The extra outbound connection reaches an honest node with probability
    /// (1 - poisoning) * N_h / (N_h + N_a).
    Probabilistic,
};

enum class DeEclipseResult : std::uint8_t { DeEclipsed, StillEclipsed };

DeEclipseResult resolve_de_eclipse(const SybilPool& pool, RandomSource& rng, TriggerMode mode);

/// Links between the victim and the honest network that the attacker does
/// not control.
struct VictimTopology {
    bool hidden_tx_link = false;
    bool hidden_block_link = false;
};

enum class ProbeKind : std::uint8_t { Eclipsed, LeakDetected, Inconclusive };

struct ProbeVerdict {
    ProbeKind kind = ProbeKind::Inconclusive;
    std::string evidence;
};

std::string_view to_string(ProbeKind kind);

/// Sends a transaction to the victim over attacker links only and listens
/// for it coming back from the honest side. Blind to block-only links.
ProbeVerdict transaction_probe(const VictimTopology& topology);

/// Withholds a fresh block on every attacker link. Each probe consumes one
/// block, so probes are rate-limited to one per mined block.
class BlockProber {
public:
    ProbeVerdict probe(const VictimTopology& topology, const Block& fresh_block);

    /// Earliest height usable by the next probe.
    [[nodiscard]] Height next_probe_height() const { return last_height_ + 1; }

private:
    Height last_height_ = -1;
};

/// Both probes, LeakDetected dominating.
ProbeVerdict combined_probe(const VictimTopology& topology, BlockProber& prober,
                            const Block& fresh_block);

}  // namespace tdsim
