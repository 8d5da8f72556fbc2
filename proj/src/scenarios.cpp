#include "tdsim/scenarios.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace tdsim {

std::string_view to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::A1: return "a1";
        case AttackKind::A2: return "a2";
        case AttackKind::A3: return "a3";
    }
    return "?";
}

AttackKind attack_from_string(std::string_view name) {
    if (name == "a1" || name == "A1") return AttackKind::A1;
    if (name == "a2" || name == "A2") return AttackKind::A2;
    if (name == "a3" || name == "A3") return AttackKind::A3;
    throw std::invalid_argument("unknown attack '" + std::string(name) + "'");
}

std::string_view to_string(ScenarioFailure failure) {
    switch (failure) {
        case ScenarioFailure::StaleTipDeEclipse: return "StaleTipDeEclipse";
        case ScenarioFailure::IbdTriggered: return "IbdTriggered";
        case ScenarioFailure::HorizonExceeded: return "HorizonExceeded";
        case ScenarioFailure::JusticeConfirmed: return "JusticeConfirmed";
        case ScenarioFailure::VictimTimedOut: return "VictimTimedOut";
        case ScenarioFailure::PreimageConfirmed: return "PreimageConfirmed";
    }
    return "Unknown";
}

ScenarioConfig ScenarioConfig::make(AttackKind kind, const ImplementationPreset& preset, BackendKind backend) {
    ScenarioConfig c;
    c.kind = kind;
    c.preset = preset;
    c.backend = backend;
    if (backend == BackendKind::FullNode) c.per_block_delay = kDefaultPerBlockDelay;
    return c;
}

void ScenarioConfig::validate() const {
    preset.validate();
    policies.validate();
    if (channel_capacity <= 0) throw std::invalid_argument("channel capacity must be positive");
    if (final_delta < 1) throw std::invalid_argument("final delta must be >= 1");
    if (per_block_delay && *per_block_delay < 0) throw std::invalid_argument("per-block delay must be >= 0");
    if (reserve > channel_capacity) throw std::invalid_argument("reserve exceeds channel capacity");
    if (htlc_amount > channel_capacity) throw std::invalid_argument("HTLC amount exceeds channel capacity");
}

Height target_lead(const ScenarioConfig& config) {
    const Height extra = config.lead_convention == LeadConvention::AttackText ? 1 : 0;
    switch (config.kind) {
        case AttackKind::A1: return config.preset.csv_delta;
        case AttackKind::A2: return config.preset.cltv_delta + extra;
        case AttackKind::A3: return config.preset.timeout_policy + extra;
    }
    return 0;
}

namespace {

OnChainTx make_tx(TxKind kind, ChannelId channel, std::uint64_t state, Party owner,
                  std::optional<HtlcId> htlc = std::nullopt, std::optional<Preimage> preimage = std::nullopt) {
    OnChainTx tx;
    tx.kind = kind;
    tx.channel = channel;
    tx.state_number = state;
    tx.commitment_owner = owner;
    tx.htlc = htlc;
    tx.preimage = preimage;
    return tx;
}

struct Channels {
    Satoshi reserve;
    Satoshi max_inflight;
    Satoshi amount;
};

Channels channel_params(const ScenarioConfig& config) {
    const ChannelState probe = ChannelState::open(0, config.channel_capacity, Party::Local, config.reserve,
                                                  config.max_inflight);
    Satoshi amount = config.htlc_amount > 0 ? config.htlc_amount : probe.capacity - probe.reserve;
    return {probe.reserve, probe.max_inflight, amount};
}

class Timeline {
public:
    Timeline(Height lead, std::vector<ProtocolStep>& steps) : lead_(lead), steps_(steps) {}

    [[nodiscard]] Height victim_at(Height network) const { return network - lead_; }

    void note(int step, Height network, std::string text) {
        steps_.push_back(ProtocolStep{step, network, victim_at(network), std::move(text)});
    }

private:
    Height lead_;
    std::vector<ProtocolStep>& steps_;
};

std::string sat(Satoshi s) { return std::to_string(s) + " sat"; }

// A1: Mallory (local) funds a channel with Alice, pays her almost all of it,
// and then confirms the revoked opening state.
ProtocolOutcome protocol_a1(const ScenarioConfig& config, Height lead, Height H) {
    ProtocolOutcome out;
    Timeline tl(lead, out.steps);
    const Height C = config.preset.csv_delta;
    const auto params = channel_params(config);

    ChainLedger ledger;
    ChannelState chan = ChannelState::open(1, config.channel_capacity, Party::Local, config.reserve,
                                           config.max_inflight);
    ledger.track(chan, C);
    const ChannelState favorable = chan;
    tl.note(1, H, "Mallory dilates Alice to lead " + std::to_string(lead));

    chan = update_state(chan, StateUpdate{chan.balance_local - params.reserve, {}}, H);
    ledger.track(chan, C);
    tl.note(2, H, "Mallory pays Alice " + sat(favorable.balance_local - params.reserve) +
                      " off-chain; state " + std::to_string(favorable.state_number) + " revoked");

    OnChainTx commitment = make_tx(TxKind::Commitment, chan.id, favorable.state_number, Party::Local);
    if (!ledger.broadcast(commitment, H + 1).confirmed()) ++out.rejected_attacker_txs;
    tl.note(3, H + 1, "revoked commitment confirmed at " + std::to_string(H + 1));
    const JusticeWindow window = justice_window(H + 1, C);

    bool resolved = false;
    bool victim_reacted = false;
    for (Height n = H + 1; !resolved; ++n) {
        if (n >= window.sweep_height) {
            OnChainTx sweep = make_tx(TxKind::DelayedSweep, chan.id, favorable.state_number, Party::Local);
            const auto r = ledger.broadcast(sweep, n);
            if (r.confirmed()) {
                tl.note(4, n, "Mallory sweeps the revoked balance");
            } else {
                ++out.rejected_attacker_txs;
            }
            resolved = true;
        }
        if (!victim_reacted && tl.victim_at(n) >= H + 1) {
            victim_reacted = true;
            OnChainTx justice = make_tx(TxKind::Justice, chan.id, favorable.state_number, Party::Local);
            const auto r = ledger.broadcast(justice, n);
            if (r.confirmed()) {
                tl.note(5, n, "Alice sees the revoked commitment; justice confirmed");
                out.defender_tx = ledger.confirmed().back();
                resolved = true;
            } else {
                tl.note(5, n, std::string("Alice's justice rejected: ") + std::string(to_string(*r.rejected)));
            }
        }
    }

    out.holdings.total_capacity = chan.capacity;
    if (out.defender_tx) {
        out.holdings.victim = chan.capacity;
        out.failure = ScenarioFailure::JusticeConfirmed;
    } else {
        out.holdings.attacker = favorable.balance_local;
        out.holdings.victim = favorable.balance_remote;
        out.success = true;
        out.stolen = out.holdings.attacker - chan.balance_local;
    }
    return out;
}

// A2: Mallory -> Bob -> Mallet. Bob forwards with cltv_delta M; the attackers
// settle the downstream HTLC off-chain while timing out the upstream one.
ProtocolOutcome protocol_a2(const ScenarioConfig& config, Height lead, Height H) {
    ProtocolOutcome out;
    Timeline tl(lead, out.steps);
    const Height M = config.preset.cltv_delta;
    const Height N = config.final_delta;
    const Height csv = config.preset.csv_delta;
    const auto params = channel_params(config);
    const Preimage secret = make_preimage(0xA2);

    ChainLedger ledger;
    ChannelState mallory_bob = ChannelState::open(1, config.channel_capacity, Party::Local, config.reserve,
                                                  config.max_inflight);
    ChannelState bob_mallet = ChannelState::open(2, config.channel_capacity, Party::Local, config.reserve,
                                                 config.max_inflight);
    tl.note(1, H, "Mallory and Mallet dilate Bob to lead " + std::to_string(lead));

    const Forward bob{M, bob_mallet.id};
    const Route route = build_route(mallory_bob.id, std::span(&bob, 1), N, H);
    const Height upstream_expiry = route.legs[0].expiry_height;
    const Height downstream_expiry = route.legs[1].expiry_height;
    if (!forward_acceptable(upstream_expiry, downstream_expiry, M)) {
        throw ChannelError("Bob refuses the forward");
    }
    mallory_bob = update_state(
        mallory_bob, StateUpdate{0, {HtlcAdd{{1, params.amount, lock_for(secret), upstream_expiry, HtlcDirection::Offered}}}},
        H);
    bob_mallet = update_state(
        bob_mallet, StateUpdate{0, {HtlcAdd{{1, params.amount, lock_for(secret), downstream_expiry, HtlcDirection::Offered}}}},
        tl.victim_at(H));
    ledger.track(mallory_bob, csv);
    ledger.track(bob_mallet, csv);
    tl.note(2, H, "payment routed: Mallory-Bob expires at " + std::to_string(upstream_expiry) +
                      ", Bob-Mallet at " + std::to_string(downstream_expiry));

    // Under the table convention Bob only gives up on the HTLC one block after expiry.
    const Height tie_shift = config.lead_convention == LeadConvention::TableColumns ? 1 : 0;
    bool bob_timed_out = false;
    bool settled = false;
    for (Height n = H + 1; n <= upstream_expiry; ++n) {
        if (n == upstream_expiry) {
            // On-chain first, then the off-chain settlement at the same height.
            const OnChainTx commit = make_tx(TxKind::Commitment, mallory_bob.id, mallory_bob.state_number, Party::Local);
            OnChainTx timeout = make_tx(TxKind::HtlcTimeout, mallory_bob.id, mallory_bob.state_number, Party::Local, HtlcId{1});
            const bool ok = ledger.broadcast(commit, n).confirmed() && ledger.broadcast(timeout, n).confirmed();
            if (!ok) ++out.rejected_attacker_txs;
            tl.note(4, n, "Mallory confirms her commitment and HTLC-timeout");
        }
        if (!bob_timed_out && tl.victim_at(n) >= downstream_expiry + tie_shift) {
            bob_timed_out = true;
            const OnChainTx commit = make_tx(TxKind::Commitment, bob_mallet.id, bob_mallet.state_number, Party::Local);
            OnChainTx timeout = make_tx(TxKind::HtlcTimeout, bob_mallet.id, bob_mallet.state_number, Party::Local, HtlcId{1});
            ledger.broadcast(commit, n);
            const auto r = ledger.broadcast(timeout, n);
            if (r.confirmed()) out.defender_tx = ledger.confirmed().back();
            tl.note(3, n, "Bob's outgoing HTLC expired in his view; he times it out on-chain");
        }
        if (n == upstream_expiry && !bob_timed_out) {
            bob_mallet = update_state(bob_mallet, StateUpdate{0, {HtlcSettle{1, secret}}}, tl.victim_at(n));
            settled = true;
            tl.note(5, n, "Mallet reveals the preimage; Bob settles " + sat(params.amount) + " off-chain");
            OnChainTx claim = make_tx(TxKind::Preimage, mallory_bob.id, mallory_bob.state_number, Party::Local, HtlcId{1}, secret);
            const auto r = ledger.broadcast(claim, n);
            tl.note(6, n, std::string("Bob's preimage claim upstream: ") +
                              (r.confirmed() ? "confirmed" : std::string(to_string(*r.rejected))));
            if (r.confirmed()) {
                out.defender_tx = ledger.confirmed().back();
                settled = false;
            }
        }
    }

    out.holdings.total_capacity = 2 * config.channel_capacity;
    // Mallory's upstream HTLC always returns to her (timeout) unless Bob claimed it.
    if (settled) {
        out.holdings.attacker = config.channel_capacity + bob_mallet.balance_remote;
        out.holdings.victim = bob_mallet.balance_local;
        out.success = true;
        out.stolen = params.amount;
    } else {
        out.holdings.attacker = config.channel_capacity;
        out.holdings.victim = config.channel_capacity;
        out.failure = ScenarioFailure::VictimTimedOut;
    }
    return out;
}

// A3: Alice -> Mallory -> Bob (payee). Bob hands over the preimage, Mallory
// stalls and times the HTLC out, then collects from Alice.
ProtocolOutcome protocol_a3(const ScenarioConfig& config, Height lead, Height H) {
    ProtocolOutcome out;
    Timeline tl(lead, out.steps);
    const Height I = config.preset.timeout_policy;
    const Height M = config.preset.cltv_delta;
    const Height N = config.final_delta;
    const Height csv = config.preset.csv_delta;
    const auto params = channel_params(config);
    const Preimage secret = make_preimage(0xA3);

    ChainLedger ledger;
    ChannelState alice_mallory = ChannelState::open(1, config.channel_capacity, Party::Local, config.reserve,
                                                    config.max_inflight);
    ChannelState mallory_bob = ChannelState::open(2, config.channel_capacity, Party::Local, config.reserve,
                                                  config.max_inflight);
    tl.note(1, H, "Mallory dilates Bob to lead " + std::to_string(lead));

    const Forward mallory{M, mallory_bob.id};
    const Route route = build_route(alice_mallory.id, std::span(&mallory, 1), N, H);
    const Height upstream_expiry = route.legs[0].expiry_height;
    const Height expiry = route.legs[1].expiry_height;
    alice_mallory = update_state(
        alice_mallory, StateUpdate{0, {HtlcAdd{{1, params.amount, lock_for(secret), upstream_expiry, HtlcDirection::Offered}}}},
        H);
    mallory_bob = update_state(
        mallory_bob, StateUpdate{0, {HtlcAdd{{1, params.amount, lock_for(secret), expiry, HtlcDirection::Offered}}}}, H);
    ledger.track(alice_mallory, csv);
    ledger.track(mallory_bob, csv);
    tl.note(2, H, "Alice routes via Mallory to Bob; Mallory-Bob HTLC expires at " + std::to_string(expiry));
    tl.note(3, H, "Bob reveals the preimage; Mallory does not update the channel");

    const Height claim_view = expiry - I;
    bool bob_claimed = false;
    bool mallory_done = false;

    auto bob_step = [&](Height n) {
        if (bob_claimed || tl.victim_at(n) < claim_view) return;
        bob_claimed = true;
        BroadcastResult r;
        if (ledger.commitment_of(mallory_bob.id)) {
            OnChainTx claim = make_tx(TxKind::Preimage, mallory_bob.id, mallory_bob.state_number, Party::Local, HtlcId{1}, secret);
            r = ledger.broadcast(claim, n);
        } else {
            const OnChainTx commit = make_tx(TxKind::Commitment, mallory_bob.id, mallory_bob.state_number, Party::Remote);
            ledger.broadcast(commit, n);
            OnChainTx success = make_tx(TxKind::HtlcSuccess, mallory_bob.id, mallory_bob.state_number, Party::Remote,
                              HtlcId{1}, secret);
            r = ledger.broadcast(success, n);
        }
        if (r.confirmed()) out.defender_tx = ledger.confirmed().back();
        tl.note(5, n, std::string("Bob reaches ") + std::to_string(claim_view) + " and claims on-chain: " +
                          (r.confirmed() ? "confirmed" : std::string(to_string(*r.rejected))));
    };
    auto mallory_step = [&](Height n) {
        if (n != expiry) return;
        mallory_done = true;
        const OnChainTx commit = make_tx(TxKind::Commitment, mallory_bob.id, mallory_bob.state_number, Party::Local);
        OnChainTx timeout = make_tx(TxKind::HtlcTimeout, mallory_bob.id, mallory_bob.state_number, Party::Local, HtlcId{1});
        const auto rc = ledger.broadcast(commit, n);
        const auto rt = rc.confirmed() ? ledger.broadcast(timeout, n) : rc;
        if (!rt.confirmed()) ++out.rejected_attacker_txs;
        tl.note(4, n, std::string("Mallory broadcasts commitment and HTLC-timeout: ") +
                          (rt.confirmed() ? "confirmed" : std::string(to_string(*rt.rejected))));
    };

    // Same-height race: the victim's broadcast wins unless the table
    // convention hands the race to the attacker.
    const bool attacker_first = config.lead_convention == LeadConvention::TableColumns;
    for (Height n = H + 1; !(mallory_done && bob_claimed); ++n) {
        if (attacker_first) {
            mallory_step(n);
            bob_step(n);
        } else {
            bob_step(n);
            mallory_step(n);
        }
    }

    alice_mallory = update_state(alice_mallory, StateUpdate{0, {HtlcSettle{1, secret}}}, tl.victim_at(H));
    tl.note(6, expiry, "Mallory claims the upstream HTLC from Alice with Bob's preimage");

    out.holdings.total_capacity = 2 * config.channel_capacity;
    out.holdings.third_party = alice_mallory.balance_local;
    if (out.defender_tx) {
        out.holdings.attacker = alice_mallory.balance_remote + config.channel_capacity - params.amount;
        out.holdings.victim = params.amount;
        out.failure = ScenarioFailure::PreimageConfirmed;
    } else {
        out.holdings.attacker = alice_mallory.balance_remote + config.channel_capacity;
        out.holdings.victim = 0;
        out.success = true;
        out.stolen = params.amount;
    }
    return out;
}

std::optional<ScenarioFailure> from_dilation(std::optional<FailureCause> cause) {
    if (!cause) return std::nullopt;
    switch (*cause) {
        case FailureCause::StaleTipDeEclipse: return ScenarioFailure::StaleTipDeEclipse;
        case FailureCause::IbdTriggered: return ScenarioFailure::IbdTriggered;
        case FailureCause::HorizonExceeded: return ScenarioFailure::HorizonExceeded;
    }
    return std::nullopt;
}

}  // namespace

ProtocolOutcome run_protocol(const ScenarioConfig& config, Height lead, Height start_height) {
    config.validate();
    if (lead < 0) throw std::invalid_argument("lead must be >= 0");
    ProtocolOutcome out;
    switch (config.kind) {
        case AttackKind::A1: out = protocol_a1(config, lead, start_height); break;
        case AttackKind::A2: out = protocol_a2(config, lead, start_height); break;
        case AttackKind::A3: out = protocol_a3(config, lead, start_height); break;
    }
    // Steps are noted per actor; present them in chain order.
    std::stable_sort(out.steps.begin(), out.steps.end(),
                     [](const ProtocolStep& a, const ProtocolStep& b) { return a.network_height < b.network_height; });
    return out;
}

ScenarioResult run_scenario(const ScenarioConfig& config, RandomSource& rng,
                            std::vector<TraceRecord>* dilation_trace) {
    config.validate();
    const DilationStrategy strategy{config.per_block_delay, target_lead(config)};
    ScenarioResult result;
    result.dilation = run_dilation(strategy, config.backend, config.policies, rng, dilation_trace);
    result.eclipse_hours = static_cast<double>(result.dilation.elapsed) / static_cast<double>(kHour);
    if (!result.dilation.succeeded()) {
        result.failure_cause = from_dilation(result.dilation.failure);
        return result;
    }
    result.lead = result.dilation.achieved_lead;
    result.protocol = run_protocol(config, result.lead, result.dilation.network_height);
    result.success = result.protocol.success;
    result.stolen = result.protocol.stolen;
    result.failure_cause = result.protocol.failure;
    return result;
}

std::string describe(const ScenarioConfig& config, const ScenarioResult& result, bool with_trace) {
    std::ostringstream out;
    char hours[32];
    std::snprintf(hours, sizeof hours, "%.4f", result.eclipse_hours);
    out << "attack=" << to_string(config.kind) << " implementation=" << config.preset.name
        << " backend=" << to_string(config.backend) << " target_lead=" << target_lead(config) << '\n';
    out << "success=" << (result.success ? "true" : "false") << " stolen=" << result.stolen
        << " eclipse_hours=" << hours << " failure_cause="
        << (result.failure_cause ? to_string(*result.failure_cause) : std::string_view("none")) << '\n';
    if (with_trace) {
        for (const auto& s : result.protocol.steps) {
            out << "step " << s.step << " network=" << s.network_height << " victim=" << s.victim_height << "  "
                << s.text << '\n';
        }
    }
    return out.str();
}

}  // namespace tdsim
