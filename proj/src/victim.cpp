#include "tdsim/victim.hpp"

#include <string>

namespace tdsim {

std::string_view to_string(BackendKind kind) {
    return kind == BackendKind::FullNode ? "full" : "light";
}

void StaleTipPolicy::validate() const {
    if (threshold <= 0) throw std::invalid_argument("stale-tip threshold must be positive");
    if (retry_interval <= 0) throw std::invalid_argument("stale-tip retry interval must be positive");
}

void IbdPolicy::validate() const {
    if (lag_threshold <= 0) throw std::invalid_argument("IBD lag threshold must be positive");
}

namespace {

bool runs_stale_check(BackendKind backend, const StaleTipPolicy& policy) {
    return backend == BackendKind::FullNode && policy.enabled;
}

}  // namespace

VictimState VictimState::start(BackendKind backend, const StaleTipPolicy& policy, Height height,
                               SimTime at) {
    VictimState v;
    v.backend = backend;
    v.view = ChainView{height, at};
    v.tip_mined_at = at;
    v.last_delivery_at = at;
    if (runs_stale_check(backend, policy)) v.pending_stale_check = at + policy.threshold;
    return v;
}

VictimState deliver_block(const VictimState& victim, const Block& block, SimTime at,
                          const StaleTipPolicy& policy) {
    if (block.height != victim.view.tip_height + 1) {
        throw DeliveryError("block " + std::to_string(block.height) + " delivered to victim at height " +
                            std::to_string(victim.view.tip_height));
    }
    if (at < block.mined_at) {
        throw DeliveryError("block " + std::to_string(block.height) + " delivered before it was mined");
    }
    VictimState next = victim;
    next.view = ChainView{block.height, at};
    next.tip_mined_at = block.mined_at;
    next.last_delivery_at = at;
    if (runs_stale_check(victim.backend, policy)) next.pending_stale_check = at + policy.threshold;
    return next;
}

TriggerOutcome check_stale_tip(const VictimState& victim, const StaleTipPolicy& policy, SimTime now) {
    if (!runs_stale_check(victim.backend, policy)) return TriggerOutcome::NoTrigger;
    return now - victim.last_delivery_at >= policy.threshold ? TriggerOutcome::DeEclipseAttempt
                                                             : TriggerOutcome::NoTrigger;
}

VictimState record_stale_attempt(const VictimState& victim, const StaleTipPolicy& policy) {
    VictimState next = victim;
    ++next.de_eclipse_attempts;
    // Retries are spaced from the previous firing, not from the last delivery.
    const SimTime fired = victim.pending_stale_check.value_or(victim.last_delivery_at + policy.threshold);
    next.pending_stale_check = fired + policy.retry_interval;
    return next;
}

int stale_attempts_in(SimTime stale_length, const StaleTipPolicy& policy) {
    if (!policy.enabled || stale_length < policy.threshold) return 0;
    return 1 + static_cast<int>((stale_length - policy.threshold) / policy.retry_interval);
}

bool check_ibd(const VictimState& victim, const IbdPolicy& policy, SimTime wall_clock) {
    if (!policy.enabled || victim.backend != BackendKind::FullNode) return false;
    return wall_clock - victim.tip_mined_at > policy.lag_threshold;
}

}  // namespace tdsim
