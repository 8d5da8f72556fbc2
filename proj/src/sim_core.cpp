#include "tdsim/sim_core.hpp"

#include <cmath>
#include <limits>

namespace tdsim {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::BlockMined: return "BlockMined";
        case EventKind::BlockDelivered: return "BlockDelivered";
        case EventKind::StaleTipCheck: return "StaleTipCheck";
        case EventKind::HtlcExpiry: return "HtlcExpiry";
        case EventKind::Broadcast: return "Broadcast";
    }
    return "Unknown";
}

EventQueue::EventQueue(SimTime horizon) : horizon_(horizon) {}

void EventQueue::schedule(const SimEvent& event) {
    if (event.at < now_) {
        throw ScheduleError("event " + std::string(to_string(event.kind)) + " scheduled at t=" +
                            std::to_string(event.at) + " before clock t=" + std::to_string(now_));
    }
    if (event.at > horizon_) {
        throw ScheduleError("event scheduled beyond horizon t=" + std::to_string(horizon_));
    }
    heap_.push(Entry{event, next_seq_++});
}

SimEvent EventQueue::pop() {
    if (heap_.empty()) throw ScheduleError("pop from empty event queue");
    SimEvent ev = heap_.top().event;
    heap_.pop();
    now_ = ev.at;
    return ev;
}

const SimEvent& EventQueue::peek() const {
    if (heap_.empty()) throw ScheduleError("peek at empty event queue");
    return heap_.top().event;
}

double RandomSource::uniform01() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t RandomSource::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RandomSource::below(0)");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t word = engine_();
        if (word < limit) return word % n;
    }
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SimTime sample_exponential(RandomSource& rng, SimTime mean_seconds) {
    if (mean_seconds <= 0) throw std::invalid_argument("sample_exponential: mean must be positive");
    const double x = -static_cast<double>(mean_seconds) * std::log(rng.uniform01());
    const auto rounded = static_cast<SimTime>(std::floor(x + 0.5));
    return rounded < 1 ? 1 : rounded;
}

}  // namespace tdsim
