#include "tdsim/dilation.hpp"

#include <algorithm>
#include <sstream>

namespace tdsim {

void DilationStrategy::validate() const {
    if (per_block_delay && *per_block_delay < 0) throw std::invalid_argument("per-block delay must be >= 0");
    if (target_lead < 1) throw std::invalid_argument("target lead must be >= 1");
}

double eclipse_time_minutes(Height target_lead, double slowdown_minutes) {
    if (target_lead < 1) throw std::invalid_argument("target lead must be >= 1");
    if (!(slowdown_minutes >= 0.0)) throw std::invalid_argument("slowdown must be >= 0");
    const auto tl = static_cast<double>(target_lead);
    if (slowdown_minutes == kUnboundedSlowdown) return tl * 10.0;
    if (slowdown_minutes == 0.0) return std::numeric_limits<double>::infinity();
    return (tl + (10.0 / slowdown_minutes) * tl) * 10.0;
}

std::string_view to_string(FailureCause cause) {
    switch (cause) {
        case FailureCause::StaleTipDeEclipse: return "StaleTipDeEclipse";
        case FailureCause::IbdTriggered: return "IbdTriggered";
        case FailureCause::HorizonExceeded: return "HorizonExceeded";
    }
    return "Unknown";
}

std::optional<SimTime> schedule_delivery(const DilationState& state, const DilationStrategy& strategy,
                                         const Block& block) {
    if (!strategy.per_block_delay) return std::nullopt;
    return std::max(block.mined_at, state.last_delivery_at + *strategy.per_block_delay);
}

void DilationPolicies::validate() const {
    stale.validate();
    ibd.validate();
    pool.validate();
    if (mean_block_interval <= 0) throw std::invalid_argument("mean block interval must be positive");
    if (max_blocks < 1) throw std::invalid_argument("max_blocks must be >= 1");
}

namespace {

class DilationTrial {
public:
    DilationTrial(const DilationStrategy& strategy, BackendKind backend, const DilationPolicies& policies,
                  RandomSource& rng, std::vector<TraceRecord>* trace)
        : strategy_(strategy),
          policies_(policies),
          rng_(rng),
          trace_(trace),
          victim_(VictimState::start(backend, policies.stale)) {}

    DilationOutcome run() {
        schedule_next_mine();
        arm_stale_check();
        record("attack-start");

        while (!queue_.empty()) {
            const SimEvent ev = queue_.pop();
            switch (ev.kind) {
                case EventKind::BlockMined: on_mined(ev); break;
                case EventKind::BlockDelivered: on_delivered(); break;
                case EventKind::StaleTipCheck: on_stale_check(ev); break;
                default: break;
            }
            if (outcome_.failure) return finish();

            if (check_ibd(victim_, policies_.ibd, queue_.now())) {
                fail(FailureCause::IbdTriggered, "ibd");
                return finish();
            }
            // Lead is judged only once every event of this second has run.
            if (!queue_.empty() && queue_.peek().at == queue_.now()) continue;
            if (lead() >= strategy_.target_lead) {
                record("lead-reached");
                return finish();
            }
            if (mining_done_) {
                fail(FailureCause::HorizonExceeded, "horizon");
                return finish();
            }
        }
        fail(FailureCause::HorizonExceeded, "horizon");
        return finish();
    }

private:
    [[nodiscard]] Height lead() const { return network_height_ - victim_.view.tip_height; }

    void record(const char* event) {
        if (!trace_) return;
        trace_->push_back(TraceRecord{queue_.now(), event, victim_.view.tip_height, network_height_, lead()});
    }

    void fail(FailureCause cause, const char* event) {
        outcome_.failure = cause;
        record(event);
    }

    DilationOutcome finish() {
        outcome_.elapsed = queue_.now();
        outcome_.network_height = network_height_;
        outcome_.victim_height = victim_.view.tip_height;
        outcome_.achieved_lead = lead();
        outcome_.de_eclipse_attempts = victim_.de_eclipse_attempts;
        return outcome_;
    }

    void schedule_next_mine() {
        const SimTime at = last_mined_at_ + sample_exponential(rng_, policies_.mean_block_interval);
        queue_.schedule(SimEvent{at, EventKind::BlockMined, network_height_ + 1});
    }

    void arm_stale_check() {
        if (victim_.pending_stale_check) {
            queue_.schedule(SimEvent{*victim_.pending_stale_check, EventKind::StaleTipCheck, stale_generation_});
        }
    }

    void schedule_delivery_of_head() {
        if (delivery_pending_ || state_.withheld.empty()) return;
        if (auto at = schedule_delivery(state_, strategy_, state_.withheld.front())) {
            queue_.schedule(SimEvent{*at, EventKind::BlockDelivered, state_.withheld.front().height});
            delivery_pending_ = true;
        }
    }

    void on_mined(const SimEvent& ev) {
        network_height_ = ev.arg;
        last_mined_at_ = ev.at;
        state_.withheld.push_back(Block{network_height_, ev.at});
        state_.achieved_lead = lead();
        record("mined");
        if (network_height_ < policies_.max_blocks) {
            schedule_next_mine();
        } else {
            mining_done_ = true;
        }
        schedule_delivery_of_head();
    }

    void on_delivered() {
        const Block block = state_.withheld.front();
        state_.withheld.pop_front();
        delivery_pending_ = false;
        const SimTime now = queue_.now();
        if (had_backlog_at_last_delivery_) {
            outcome_.max_backlogged_gap = std::max(outcome_.max_backlogged_gap, now - state_.last_delivery_at);
        }
        victim_ = deliver_block(victim_, block, now, policies_.stale);
        state_.last_delivery_at = now;
        state_.achieved_lead = lead();
        had_backlog_at_last_delivery_ = !state_.withheld.empty();
        ++stale_generation_;
        arm_stale_check();
        record("delivered");
        schedule_delivery_of_head();
    }

    void on_stale_check(const SimEvent& ev) {
        if (ev.arg != stale_generation_) return;  // superseded by a later delivery
        const SimTime now = queue_.now();
        if (check_stale_tip(victim_, policies_.stale, now) != TriggerOutcome::DeEclipseAttempt) return;
        victim_ = record_stale_attempt(victim_, policies_.stale);
        record("de-eclipse-attempt");
        if (resolve_de_eclipse(policies_.pool, rng_, policies_.mode) == DeEclipseResult::DeEclipsed) {
            outcome_.trigger_tip_age = now - victim_.tip_mined_at;
            outcome_.trigger_with_backlog = !state_.withheld.empty();
            // Syncing with an honest peer brings the victim to the true tip at once.
            victim_.view = ChainView{network_height_, now};
            fail(FailureCause::StaleTipDeEclipse, "de-eclipsed");
            return;
        }
        arm_stale_check();
    }

    const DilationStrategy& strategy_;
    const DilationPolicies& policies_;
    RandomSource& rng_;
    std::vector<TraceRecord>* trace_;

    EventQueue queue_;
    VictimState victim_;
    DilationState state_;
    DilationOutcome outcome_;
    Height network_height_ = 0;
    SimTime last_mined_at_ = 0;
    std::int64_t stale_generation_ = 0;
    bool delivery_pending_ = false;
    bool had_backlog_at_last_delivery_ = false;
    bool mining_done_ = false;
};

}  // namespace

DilationOutcome run_dilation(const DilationStrategy& strategy, BackendKind backend,
                             const DilationPolicies& policies, RandomSource& rng,
                             std::vector<TraceRecord>* trace) {
    strategy.validate();
    policies.validate();
    return DilationTrial(strategy, backend, policies, rng, trace).run();
}

std::string format_trace(const std::vector<TraceRecord>& trace) {
    std::ostringstream out;
    for (const auto& r : trace) {
        out << r.time << ' ' << r.event << ' ' << r.victim_height << ' ' << r.network_height << ' ' << r.lead
            << '\n';
    }
    return out.str();
}

}  // namespace tdsim
