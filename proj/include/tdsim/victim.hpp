#pragma once

// The victim's Bitcoin backend: block acceptance, stale-tip detection and
// the optional fall-back to initial block download.

#include <optional>
#include <stdexcept>

#include "tdsim/chain.hpp"

namespace tdsim {

enum class BackendKind : std::uint8_t { FullNode, LightClient };

std::string_view to_string(BackendKind kind);

struct StaleTipPolicy {
    SimTime threshold = 30 * kMinute;
    SimTime retry_interval = 10 * kMinute;
    bool enabled = true;

    void validate() const;
};

struct IbdPolicy {
    SimTime lag_threshold = 24 * kHour;
    bool enabled = false;

    void validate() const;
};

enum class TriggerOutcome : std::uint8_t { NoTrigger, DeEclipseAttempt };

/// Rejected block delivery (gap or out-of-order height, or delivery before mining).
class DeliveryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct VictimState {
    BackendKind backend = BackendKind::FullNode;
    ChainView view;
    SimTime tip_mined_at = 0;
    SimTime last_delivery_at = 0;
    /// Time of the next armed stale-tip check, if the backend runs one.
    std::optional<SimTime> pending_stale_check;
    int de_eclipse_attempts = 0;

    /// Fresh victim whose tip (height `height`, mined at `at`) was delivered at `at`.
    static VictimState start(BackendKind backend, const StaleTipPolicy& policy, Height height = 0,
                             SimTime at = 0);
};

/// Accepts the next block. The stale-tip timer is re-armed relative to `at`.
VictimState deliver_block(const VictimState& victim, const Block& block, SimTime at,
                          const StaleTipPolicy& policy);

/// DeEclipseAttempt iff the victim runs stale-tip detection and
/// now - last_delivery_at >= threshold.
TriggerOutcome check_stale_tip(const VictimState& victim, const StaleTipPolicy& policy, SimTime now);

/// Re-arms the timer after a fired check that did not break the eclipse.
VictimState record_stale_attempt(const VictimState& victim, const StaleTipPolicy& policy);

/// Number of de-eclipse attempts produced by one uninterrupted stale
/// period of `stale_length` seconds.
int stale_attempts_in(SimTime stale_length, const StaleTipPolicy& policy);

/// True iff the tip the victim holds is more than lag_threshold old.
bool check_ibd(const VictimState& victim, const IbdPolicy& policy, SimTime wall_clock);

}  // namespace tdsim
