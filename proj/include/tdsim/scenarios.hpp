#pragma once

// End-to-end attacks: time-dilate the victim to the attack's threshold
// lead, then play the channel protocol out block by block with the victim's
// view lagging the network by that lead.
//
//   A1  revoked-commitment broadcast; needs lead csv_delta
//   A2  per-hop cltv_delta bypass between two colluding nodes; needs cltv_delta + 1
//   A3  stalled preimage against a payee; needs timeout_policy + 1

#include <optional>
#include <string>
#include <vector>

#include "tdsim/channel.hpp"
#include "tdsim/dilation.hpp"

namespace tdsim {

enum class AttackKind : std::uint8_t { A1, A2, A3 };

std::string_view to_string(AttackKind kind);
AttackKind attack_from_string(std::string_view name);

/// Which lead A2 and A3 dilate to. AttackText follows the attack
/// descriptions (cltv_delta + 1, timeout_policy + 1); TableColumns drops the
/// extra block, which is what the published light-client timings reflect.
enum class LeadConvention : std::uint8_t { AttackText, TableColumns };

inline constexpr Height kDefaultFinalDelta = 18;
inline constexpr Satoshi kDefaultCapacity = 1'000'000;

struct ScenarioConfig {
    AttackKind kind = AttackKind::A1;
    ImplementationPreset preset = default_presets().front();
    BackendKind backend = BackendKind::LightClient;
    /// Empty: withhold every block (the light-client default).
    std::optional<SimTime> per_block_delay;
    DilationPolicies policies;
    Satoshi channel_capacity = kDefaultCapacity;
    /// Negative: kDefaultReserveFraction of capacity.
    Satoshi reserve = -1;
    /// Non-positive: full capacity.
    Satoshi max_inflight = 0;
    /// Non-positive: the largest amount the channel can carry (capacity - reserve).
    Satoshi htlc_amount = 0;
    Height final_delta = kDefaultFinalDelta;
    LeadConvention lead_convention = LeadConvention::AttackText;

    /// Preset defaults for the backend: 1770 s spacing for a full node,
    /// withholding for a light client.
    static ScenarioConfig make(AttackKind kind, const ImplementationPreset& preset, BackendKind backend);

    void validate() const;
};

/// A1 = csv_delta, A2 = cltv_delta + 1, A3 = timeout_policy + 1 (the +1
/// dropped under LeadConvention::TableColumns).
Height target_lead(const ScenarioConfig& config);

enum class ScenarioFailure : std::uint8_t {
    StaleTipDeEclipse,
    IbdTriggered,
    HorizonExceeded,
    JusticeConfirmed,   ///< A1: the victim punished the revoked commitment
    VictimTimedOut,     ///< A2: the victim timed its outgoing HTLC out first
    PreimageConfirmed,  ///< A3: the victim's preimage claim reached the chain
};

std::string_view to_string(ScenarioFailure failure);

/// One annotated step of the attack timeline, numbered as in the attack walkthroughs.
struct ProtocolStep {
    int step = 0;
    Height network_height = 0;
    Height victim_height = 0;
    std::string text;
};

struct Holdings {
    Satoshi attacker = 0;
    Satoshi victim = 0;
    Satoshi third_party = 0;
    Satoshi total_capacity = 0;

    [[nodiscard]] Satoshi sum() const { return attacker + victim + third_party; }
};

struct ProtocolOutcome {
    bool success = false;
    Satoshi stolen = 0;
    std::optional<ScenarioFailure> failure;
    Holdings holdings;
    std::vector<ProtocolStep> steps;
    /// Attacker transactions the network refused.
    int rejected_attacker_txs = 0;
    /// The defensive transaction (justice, HTLC timeout or preimage claim), if one confirmed.
    std::optional<OnChainTx> defender_tx;
};

/// Plays the channel protocol with the victim `lead` blocks behind a network
/// whose tip is `start_height` when the attack begins. Deterministic.
ProtocolOutcome run_protocol(const ScenarioConfig& config, Height lead, Height start_height = 1000);

struct ScenarioResult {
    bool success = false;
    Satoshi stolen = 0;
    double eclipse_hours = 0.0;
    std::optional<ScenarioFailure> failure_cause;
    Height lead = 0;
    DilationOutcome dilation;
    ProtocolOutcome protocol;
};

/// Dilates, then runs the protocol at the reached lead. A dilation failure
/// ends the trial without a protocol phase.
ScenarioResult run_scenario(const ScenarioConfig& config, RandomSource& rng,
                            std::vector<TraceRecord>* dilation_trace = nullptr);

inline ScenarioResult run_a1(ScenarioConfig config, RandomSource& rng) {
    config.kind = AttackKind::A1;
    return run_scenario(config, rng);
}
inline ScenarioResult run_a2(ScenarioConfig config, RandomSource& rng) {
    config.kind = AttackKind::A2;
    return run_scenario(config, rng);
}
inline ScenarioResult run_a3(ScenarioConfig config, RandomSource& rng) {
    config.kind = AttackKind::A3;
    return run_scenario(config, rng);
}

/// Human-readable summary and, with `with_trace`, the step timeline.
std::string describe(const ScenarioConfig& config, const ScenarioResult& result, bool with_trace);

}  // namespace tdsim
