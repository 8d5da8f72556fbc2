#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "tdsim/chain.hpp"
#include "tdsim/dilation.hpp"

using namespace tdsim;

namespace {

struct Expected {
    bool success = false;
    SimTime at = 0;
};

// Replays a pessimistic full-node trial from the mined block times alone:
// d_k = max(m_k, d_{k-1} + delay) with d_0 = 0; the eclipse breaks at
// d_{k-1} + threshold whenever the next delivery is not earlier; the lead
// after second t is #{m <= t} - #{d <= t}.
Expected replay(const std::vector<Block>& mined, SimTime delay, Height target, SimTime threshold) {
    std::vector<SimTime> d(mined.size() + 1, 0);
    SimTime fail_at = -1;
    for (std::size_t k = 1; k <= mined.size(); ++k) {
        d[k] = std::max(mined[k - 1].mined_at, d[k - 1] + delay);
        if (fail_at < 0 && d[k] >= d[k - 1] + threshold) fail_at = d[k - 1] + threshold;
    }
    for (std::size_t j = 1; j <= mined.size(); ++j) {
        const SimTime t = mined[j - 1].mined_at;
        if (fail_at >= 0 && fail_at <= t) return {false, fail_at};
        const auto delivered = std::upper_bound(d.begin() + 1, d.end(), t) - (d.begin() + 1);
        if (static_cast<Height>(j) - delivered >= target) return {true, t};
    }
    // Mining stopped before either happened.
    return {false, mined.back().mined_at};
}

}  // namespace

TEST_CASE("closed-form eclipse time") {
    CHECK(eclipse_time_minutes(144, kUnboundedSlowdown) == 1440.0);
    CHECK(std::isinf(eclipse_time_minutes(144, 0.0)));
    CHECK(eclipse_time_minutes(144, 29.5) == doctest::Approx((144 + 10.0 / 29.5 * 144) * 10));
    CHECK(eclipse_time_minutes(144, 29.5) / 60.0 == doctest::Approx(32.1).epsilon(0.01));
    for (Height tl = 1; tl <= 800; tl += 37) {
        double prev = eclipse_time_minutes(tl, 0.0);
        for (double sr = 0.25; sr <= 120.0; sr += 0.25) {
            const double cur = eclipse_time_minutes(tl, sr);
            REQUIRE(cur < prev);
            REQUIRE(cur > eclipse_time_minutes(tl, kUnboundedSlowdown));
            prev = cur;
        }
    }
    CHECK_THROWS(eclipse_time_minutes(0, 1.0));
    CHECK_THROWS(eclipse_time_minutes(10, -1.0));
}

TEST_CASE("delivery schedule honors spacing and mining time") {
    DilationState s;
    s.last_delivery_at = 1000;
    const auto spaced = DilationStrategy::spaced(1770, 144);
    CHECK(schedule_delivery(s, spaced, Block{5, 1500}) == 2770);
    CHECK(schedule_delivery(s, spaced, Block{5, 4000}) == 4000);
    CHECK_FALSE(schedule_delivery(s, DilationStrategy::withhold_all(144), Block{5, 1500}).has_value());
    CHECK_THROWS(DilationStrategy::spaced(-1, 5).validate());
    CHECK_THROWS(DilationStrategy::spaced(10, 0).validate());
}

TEST_CASE("light client: lead reached at the target-th mined block") {
    const DilationPolicies policies;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        for (Height tl : {1, 14, 144}) {
            RandomSource a(seed), b(seed);
            const auto out = run_dilation(DilationStrategy::withhold_all(tl), BackendKind::LightClient, policies, a);
            const auto blocks = mine_sequence(b, static_cast<int>(tl));
            REQUIRE(out.succeeded());
            REQUIRE(out.elapsed == blocks.back().mined_at);
            REQUIRE(out.achieved_lead == tl);
            REQUIRE(out.victim_height == 0);
        }
    }
}

TEST_CASE("full node trials agree with the closed-form replay") {
    DilationPolicies policies;
    policies.max_blocks = 2000;
    int failures = 0, trials = 0;
    for (SimTime delay : {0, 600, 1170, 1770}) {
        for (Height tl : {1, 6, 40, 144}) {
            for (std::uint64_t seed = 0; seed < 150; ++seed) {
                RandomSource a(mix_seed(seed, static_cast<std::uint64_t>(delay + tl))), b = a;
                const auto out = run_dilation(DilationStrategy::spaced(delay, tl), BackendKind::FullNode, policies, a);
                const auto expect = replay(mine_sequence(b, policies.max_blocks), delay, tl, policies.stale.threshold);
                INFO("delay " << delay << " lead " << tl << " seed " << seed);
                REQUIRE(out.succeeded() == expect.success);
                REQUIRE(out.elapsed == expect.at);
                failures += out.succeeded() ? 0 : 1;
                ++trials;
            }
        }
    }
    CHECK(failures > 0);
    CHECK(failures < trials);
}

TEST_CASE("no spacing means no lead") {
    // Delivering at mining time keeps the victim synced; a natural gap
    // eventually exposes the eclipse.
    const DilationPolicies policies;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        RandomSource rng(seed);
        const auto out = run_dilation(DilationStrategy::spaced(0, 6), BackendKind::FullNode, policies, rng);
        REQUIRE_FALSE(out.succeeded());
        REQUIRE(*out.failure == FailureCause::StaleTipDeEclipse);
    }
}

TEST_CASE("trace invariants over many trials") {
    DilationPolicies policies;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        const SimTime delay = seed % 2 ? 1770 : 1170;
        RandomSource rng(seed);
        std::vector<TraceRecord> trace;
        const auto out = run_dilation(DilationStrategy::spaced(delay, 144), BackendKind::FullNode, policies, rng, &trace);
        REQUIRE(trace.front().event == "attack-start");
        for (std::size_t i = 0; i < trace.size(); ++i) {
            const auto& r = trace[i];
            REQUIRE(r.lead == r.network_height - r.victim_height);
            if (r.event != "de-eclipsed") REQUIRE(r.lead >= 0);
            if (i > 0) {
                REQUIRE(r.time >= trace[i - 1].time);
                REQUIRE(r.network_height >= trace[i - 1].network_height);
                REQUIRE(r.victim_height >= trace[i - 1].victim_height);
            }
        }
        REQUIRE(out.max_backlogged_gap <= delay);
        if (out.succeeded()) {
            REQUIRE(trace.back().event == "lead-reached");
            REQUIRE(out.achieved_lead >= 144);
        } else {
            // Only a natural mining gap can expose the victim.
            REQUIRE(*out.failure == FailureCause::StaleTipDeEclipse);
            REQUIRE(out.trigger_tip_age >= policies.stale.threshold);
            REQUIRE_FALSE(out.trigger_with_backlog);
            REQUIRE(out.de_eclipse_attempts == 1);
        }
    }
}

TEST_CASE("same seed, same trace") {
    DilationPolicies policies;
    policies.mode = TriggerMode::Probabilistic;
    for (std::uint64_t seed : {1u, 2u, 77u}) {
        RandomSource a(seed), b(seed), c(seed + 1000);
        std::vector<TraceRecord> ta, tb, tc;
        run_dilation(DilationStrategy::spaced(1770, 144), BackendKind::FullNode, policies, a, &ta);
        run_dilation(DilationStrategy::spaced(1770, 144), BackendKind::FullNode, policies, b, &tb);
        run_dilation(DilationStrategy::spaced(1770, 144), BackendKind::FullNode, policies, c, &tc);
        CHECK(format_trace(ta) == format_trace(tb));
        CHECK(format_trace(ta) != format_trace(tc));
    }
}

TEST_CASE("probabilistic mode: attempts that fail keep the eclipse") {
    DilationPolicies policies;
    policies.mode = TriggerMode::Probabilistic;
    policies.pool.addrman_poisoning = 1.0;
    int attempts = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        RandomSource rng(seed);
        const auto out = run_dilation(DilationStrategy::spaced(1770, 144), BackendKind::FullNode, policies, rng);
        REQUIRE(out.succeeded());
        attempts += out.de_eclipse_attempts;
    }
    CHECK(attempts > 0);
}

TEST_CASE("stale checks off: a full node behaves like a light client") {
    DilationPolicies policies;
    policies.stale.enabled = false;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RandomSource a(seed), b(seed);
        const auto full = run_dilation(DilationStrategy::withhold_all(20), BackendKind::FullNode, policies, a);
        const auto light = run_dilation(DilationStrategy::withhold_all(20), BackendKind::LightClient, policies, b);
        REQUIRE(full.succeeded());
        REQUIRE(full.elapsed == light.elapsed);
    }
}

TEST_CASE("IBD fallback and horizon") {
    DilationPolicies policies;
    policies.stale.enabled = false;
    policies.ibd.enabled = true;
    policies.ibd.lag_threshold = kHour;
    RandomSource rng(5);
    auto out = run_dilation(DilationStrategy::withhold_all(144), BackendKind::FullNode, policies, rng);
    CHECK(out.failure == FailureCause::IbdTriggered);
    CHECK(out.elapsed > kHour);

    DilationPolicies small;
    small.max_blocks = 10;
    out = run_dilation(DilationStrategy::withhold_all(144), BackendKind::LightClient, small, rng);
    CHECK(out.failure == FailureCause::HorizonExceeded);
    CHECK(out.network_height == 10);
}
