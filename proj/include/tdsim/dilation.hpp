#pragma once

// Time-dilation: the attacker's block-delivery scheduler and the trial that
// runs it against an eclipsed victim until the target lead is reached or the
// victim breaks free.

#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tdsim/eclipse.hpp"
#include "tdsim/victim.hpp"

namespace tdsim {

/// 29.5 minutes: just under the stale-tip threshold.
inline constexpr SimTime kDefaultPerBlockDelay = 1770;

struct DilationStrategy {
    /// Minimum spacing between deliveries to the victim. Empty means the
    /// attacker withholds every block (no rate limit to respect).
    std::optional<SimTime> per_block_delay = kDefaultPerBlockDelay;
    Height target_lead = 144;

    void validate() const;

    static DilationStrategy withhold_all(Height target_lead) { return {std::nullopt, target_lead}; }
    static DilationStrategy spaced(SimTime delay, Height target_lead) { return {delay, target_lead}; }
};

/// Slowdown rate for eclipse_time_minutes(): minutes of delay per block.
inline constexpr double kUnboundedSlowdown = std::numeric_limits<double>::infinity();

/// Closed-form eclipse time in minutes assuming one block every ten minutes:
/// (TL + (10 / SR) * TL) * 10. An unbounded slowdown leaves TL * 10; a zero
/// slowdown returns +infinity.
double eclipse_time_minutes(Height target_lead, double slowdown_minutes);

enum class FailureCause : std::uint8_t { StaleTipDeEclipse, IbdTriggered, HorizonExceeded };

std::string_view to_string(FailureCause cause);

struct DilationState {
    std::deque<Block> withheld;
    SimTime last_delivery_at = 0;
    Height achieved_lead = 0;
    std::optional<FailureCause> failure;
};

/// Delivery time for the next withheld block:
/// max(block.mined_at, last_delivery_at + per_block_delay).
/// Empty when the strategy withholds everything.
std::optional<SimTime> schedule_delivery(const DilationState& state, const DilationStrategy& strategy,
                                         const Block& block);

struct DilationPolicies {
    StaleTipPolicy stale;
    IbdPolicy ibd;
    SybilPool pool{500, 50, 8, 0.0};
    TriggerMode mode = TriggerMode::Pessimistic;
    SimTime mean_block_interval = kDefaultBlockInterval;
    /// Mining stops after this many blocks; an unreached target is reported
    /// as HorizonExceeded.
    int max_blocks = 10'000;

    void validate() const;
};

struct TraceRecord {
    SimTime time = 0;
    std::string event;
    Height victim_height = 0;
    Height network_height = 0;
    Height lead = 0;
};

struct DilationOutcome {
    /// Time at which the target lead was reached, or the failure time.
    SimTime elapsed = 0;
    std::optional<FailureCause> failure;
    Height network_height = 0;
    Height victim_height = 0;
    Height achieved_lead = 0;
    int de_eclipse_attempts = 0;
    /// Largest gap between consecutive deliveries made while the next block
    /// was already withheld.
    SimTime max_backlogged_gap = 0;
    /// For a stale-tip failure: age of the victim's tip block when the
    /// eclipse broke, a lower bound on the natural gap to the next block.
    SimTime trigger_tip_age = 0;
    bool trigger_with_backlog = false;

    [[nodiscard]] bool succeeded() const { return !failure.has_value(); }
};

DilationOutcome run_dilation(const DilationStrategy& strategy, BackendKind backend,
                             const DilationPolicies& policies, RandomSource& rng,
                             std::vector<TraceRecord>* trace = nullptr);

/// One line per record: "time event victim_height network_height lead".
std::string format_trace(const std::vector<TraceRecord>& trace);

}  // namespace tdsim
