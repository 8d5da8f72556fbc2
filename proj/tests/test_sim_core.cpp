#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "tdsim/chain.hpp"

using namespace tdsim;

TEST_CASE("event queue orders by time, then insertion") {
    EventQueue q;
    q.schedule({50, EventKind::BlockMined, 1});
    q.schedule({10, EventKind::StaleTipCheck, 2});
    q.schedule({50, EventKind::BlockDelivered, 3});
    q.schedule({10, EventKind::BlockMined, 4});
    std::vector<std::int64_t> args;
    while (!q.empty()) args.push_back(q.pop().arg);
    CHECK(args == std::vector<std::int64_t>{2, 4, 1, 3});
    CHECK(q.now() == 50);
}

TEST_CASE("event queue rejects the past and the horizon") {
    EventQueue q(100);
    q.schedule({40, EventKind::BlockMined, 0});
    q.pop();
    CHECK_THROWS_AS(q.schedule({39, EventKind::BlockMined, 0}), ScheduleError);
    CHECK_NOTHROW(q.schedule({40, EventKind::BlockMined, 0}));
    CHECK_NOTHROW(q.schedule({100, EventKind::BlockMined, 0}));
    CHECK_THROWS_AS(q.schedule({101, EventKind::BlockMined, 0}), ScheduleError);
    q.pop();
    q.pop();
    CHECK_THROWS_AS(q.pop(), ScheduleError);
    CHECK_THROWS_AS((void)q.peek(), ScheduleError);
}

TEST_CASE("generator is the standard 64-bit Mersenne Twister") {
    // The standard fixes the 10000th output for the default seed.
    RandomSource rng(5489u);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = rng.next_u64();
    CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("mix_seed matches splitmix64") {
    // First splitmix64 output from state 0.
    CHECK(mix_seed(0, 0) == 0xe220a8397b1dcdafULL);
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(mix_seed(42, i));
    CHECK(seen.size() == 1000);
}

TEST_CASE("derived variates stay in range") {
    RandomSource rng(7);
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
        REQUIRE(rng.below(7) < 7u);
    }
    CHECK_THROWS(rng.below(0));
    for (int i = 0; i < 1000; ++i) {
        CHECK(rng.bernoulli(1.0));
        CHECK_FALSE(rng.bernoulli(0.0));
    }
}

TEST_CASE("same seed, same stream") {
    RandomSource a(99), b(99), c(100);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differs = differs || x != c.next_u64();
    }
    CHECK(differs);
}

TEST_CASE("exponential sampler: mean and tail") {
    RandomSource rng(2024);
    const int n = 100000;
    double sum = 0.0;
    int tail = 0;
    SimTime lo = 1 << 30;
    for (int i = 0; i < n; ++i) {
        const SimTime x = sample_exponential(rng, 600);
        sum += static_cast<double>(x);
        tail += x > 1800 ? 1 : 0;
        lo = std::min(lo, x);
    }
    CHECK(lo >= 1);
    CHECK(std::abs(sum / n - 600.0) < 4.0 * 600.0 / std::sqrt(n));
    CHECK(std::abs(static_cast<double>(tail) / n - std::exp(-3.0)) <= 0.003);
    CHECK_THROWS(sample_exponential(rng, 0));
}

TEST_CASE("mined chains: heights, order and Erlang totals") {
    RandomSource rng(11);
    const int chains = 2000;
    const int len = 1000;
    double sum = 0.0, sumsq = 0.0;
    for (int c = 0; c < chains; ++c) {
        const auto blocks = mine_sequence(rng, len);
        REQUIRE(blocks.size() == static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) {
            REQUIRE(blocks[i].height == i + 1);
            if (i > 0) REQUIRE(blocks[i].mined_at > blocks[i - 1].mined_at);
        }
        const auto t = static_cast<double>(blocks.back().mined_at);
        sum += t;
        sumsq += t * t;
    }
    const double mean = sum / chains;
    const double sd = std::sqrt(sumsq / chains - mean * mean);
    const double expected_sd = 600.0 * std::sqrt(static_cast<double>(len));  // ~18974 s
    CHECK(std::abs(mean - 600.0 * len) < 4.0 * expected_sd / std::sqrt(chains));
    CHECK(sd == doctest::Approx(expected_sd).epsilon(0.1));
    CHECK_THROWS(mine_sequence(rng, 0));
}

TEST_CASE("lead is attacker tip minus victim tip") {
    static_assert(lead(ChainView{150, 0}, ChainView{6, 0}) == 144);
    CHECK(lead(ChainView{10, 5}, ChainView{10, 7}) == 0);
}
