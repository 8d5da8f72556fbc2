#pragma once

// Deterministic discrete-event engine shared by every stochastic module.
//
// Time is an integer count of simulated seconds. Events scheduled for the
// same second are delivered in insertion order, and all randomness flows
// through RandomSource so that a (seed, configuration) pair fully determines
// a trial's event trace.

#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tdsim {

/// Simulated seconds since scenario start.
using SimTime = std::int64_t;

/// Block height.
using Height = std::int64_t;

inline constexpr SimTime kMinute = 60;
inline constexpr SimTime kHour = 3600;

enum class EventKind : std::uint8_t {
    BlockMined,
    BlockDelivered,
    StaleTipCheck,
    HtlcExpiry,
    Broadcast,
};

std::string_view to_string(EventKind kind);

struct SimEvent {
    SimTime at = 0;
    EventKind kind = EventKind::BlockMined;
    /// Event-specific argument: a block height for block events, a timer
    /// generation for stale checks, a transaction index for broadcasts.
    std::int64_t arg = 0;
};

/// Thrown when an event is scheduled before the current clock or beyond the
/// configured horizon. Either one aborts the trial.
class ScheduleError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Future-event queue with a monotone clock and FIFO tiebreak.
class EventQueue {
public:
    explicit EventQueue(SimTime horizon = std::numeric_limits<SimTime>::max());

    void schedule(const SimEvent& event);

    /// Removes and returns the earliest event, advancing the clock to it.
    SimEvent pop();

    [[nodiscard]] const SimEvent& peek() const;
    [[nodiscard]] bool empty() const { return heap_.empty(); }
    [[nodiscard]] std::size_t size() const { return heap_.size(); }
    [[nodiscard]] SimTime now() const { return now_; }
    [[nodiscard]] SimTime horizon() const { return horizon_; }

private:
    struct Entry {
        SimEvent event;
        std::uint64_t seq;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.event.at != b.event.at) return a.event.at > b.event.at;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_seq_ = 0;
    SimTime now_ = 0;
    SimTime horizon_;
};

/// Seeded pseudo-random source.
///
/// The generator is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Derived variates use only the raw 64-bit words:
///   uniform01()  = ((word >> 11) + 1) * 2^-53, a value in (0, 1]
///   below(n)     = rejection sampling on word % n over the largest multiple of n
/// so that any language with an MT19937-64 implementation can replay a trace.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    double uniform01();
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform01() <= p; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent per-trial seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

/// Draws an exponential duration with the given mean by inverse CDF,
/// x = -mean * ln(u) with u from uniform01(), rounded half up to whole
/// seconds with a floor of one second.
SimTime sample_exponential(RandomSource& rng, SimTime mean_seconds);

}  // namespace tdsim
