#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tdsim/eclipse.hpp"
#include "tdsim/victim.hpp"

using namespace tdsim;

TEST_CASE("blocks must arrive in height order and after mining") {
    const StaleTipPolicy policy;
    auto v = VictimState::start(BackendKind::FullNode, policy);
    v = deliver_block(v, Block{1, 100}, 100, policy);
    CHECK(v.view.tip_height == 1);
    CHECK(v.pending_stale_check == 100 + policy.threshold);
    CHECK_THROWS_AS(deliver_block(v, Block{3, 200}, 300, policy), DeliveryError);
    CHECK_THROWS_AS(deliver_block(v, Block{1, 200}, 300, policy), DeliveryError);
    CHECK_THROWS_AS(deliver_block(v, Block{2, 500}, 400, policy), DeliveryError);
}

TEST_CASE("stale-tip check fires at the threshold, full nodes only") {
    const StaleTipPolicy policy;
    const auto full = VictimState::start(BackendKind::FullNode, policy, 10, 1000);
    CHECK(check_stale_tip(full, policy, 1000 + 1799) == TriggerOutcome::NoTrigger);
    CHECK(check_stale_tip(full, policy, 1000 + 1800) == TriggerOutcome::DeEclipseAttempt);

    const auto light = VictimState::start(BackendKind::LightClient, policy);
    CHECK_FALSE(light.pending_stale_check.has_value());
    CHECK(check_stale_tip(light, policy, 1'000'000) == TriggerOutcome::NoTrigger);

    StaleTipPolicy off = policy;
    off.enabled = false;
    CHECK(check_stale_tip(VictimState::start(BackendKind::FullNode, off), off, 1'000'000) ==
          TriggerOutcome::NoTrigger);
}

TEST_CASE("retries are spaced from the previous firing") {
    const StaleTipPolicy policy;
    auto v = VictimState::start(BackendKind::FullNode, policy);
    for (int k = 0; k < 5; ++k) {
        CHECK(*v.pending_stale_check == policy.threshold + k * policy.retry_interval);
        v = record_stale_attempt(v, policy);
    }
    CHECK(v.de_eclipse_attempts == 5);
}

TEST_CASE("attempt count over a stale period matches enumeration") {
    for (const StaleTipPolicy policy : {StaleTipPolicy{}, StaleTipPolicy{900, 300, true}, StaleTipPolicy{60, 7, true}}) {
        for (SimTime len = 0; len <= 20000; len += 13) {
            int fired = 0;
            for (SimTime t = policy.threshold; t <= len; t += policy.retry_interval) ++fired;
            REQUIRE(stale_attempts_in(len, policy) == fired);
        }
    }
    CHECK(stale_attempts_in(3600, StaleTipPolicy{1800, 600, false}) == 0);
    // One hour without a block: triggers at 30, 40, 50 and 60 minutes.
    CHECK(stale_attempts_in(3600, StaleTipPolicy{}) == 4);
}

TEST_CASE("IBD fallback only for enabled full nodes past the lag") {
    const StaleTipPolicy stale;
    IbdPolicy ibd;
    const auto v = VictimState::start(BackendKind::FullNode, stale, 5, 0);
    CHECK_FALSE(check_ibd(v, ibd, 10 * kHour * 24));
    ibd.enabled = true;
    CHECK_FALSE(check_ibd(v, ibd, ibd.lag_threshold));
    CHECK(check_ibd(v, ibd, ibd.lag_threshold + 1));
    CHECK_FALSE(check_ibd(VictimState::start(BackendKind::LightClient, stale), ibd, 100 * kHour));
}

TEST_CASE("eclipse probability, independent draws") {
    const SybilPool pool{500, 50, 8, 0.0};
    CHECK(std::abs(eclipse_probability(pool) - 0.4665) <= 0.0005);
    CHECK(std::abs(eclipse_probability(pool) - std::pow(500.0 / 550.0, 8)) < 1e-12);
    CHECK(eclipse_probability({0, 10, 3, 0.0}) == 0.0);
    CHECK(eclipse_probability({10, 0, 3, 0.0}) == 1.0);
}

TEST_CASE("eclipse probability is monotone in each parameter") {
    for (long na = 10; na <= 1000; na += 90) {
        for (long nh = 10; nh <= 200; nh += 38) {
            for (int c = 1; c <= 12; ++c) {
                const double p = eclipse_probability({na, nh, c, 0.0});
                REQUIRE(p <= eclipse_probability({na + 1, nh, c, 0.0}));
                REQUIRE(p >= eclipse_probability({na, nh + 1, c, 0.0}));
                REQUIRE(p >= eclipse_probability({na, nh, c + 1, 0.0}));
            }
        }
    }
}

TEST_CASE("without-replacement variant agrees with subset enumeration") {
    // Count all C-subsets of a small pool that contain only attacker nodes.
    for (int total = 1; total <= 14; ++total) {
        for (int na = 0; na <= total; ++na) {
            for (int c = 1; c <= total; ++c) {
                long all = 0, sybil_only = 0;
                for (unsigned mask = 0; mask < (1u << total); ++mask) {
                    if (__builtin_popcount(mask) != c) continue;
                    ++all;
                    // Nodes 0..na-1 are the attacker's.
                    if ((mask >> na) == 0) ++sybil_only;
                }
                const double expect = static_cast<double>(sybil_only) / static_cast<double>(all);
                REQUIRE(eclipse_probability_without_replacement({na, total - na, c, 0.0}) ==
                        doctest::Approx(expect).epsilon(1e-12));
            }
        }
    }
    CHECK_THROWS(eclipse_probability_without_replacement({2, 1, 4, 0.0}));
    CHECK(eclipse_probability_without_replacement({500, 50, 8, 0.0}) < eclipse_probability({500, 50, 8, 0.0}));
}

TEST_CASE("pool validation") {
    CHECK_THROWS(SybilPool{-1, 5, 8, 0.0}.validate());
    CHECK_THROWS(SybilPool{0, 0, 8, 0.0}.validate());
    CHECK_THROWS(SybilPool{5, 5, 0, 0.0}.validate());
    CHECK_THROWS(SybilPool{5, 5, 8, 1.5}.validate());
    CHECK_THROWS(eclipse_probability({5, 5, 0, 0.0}));
}

TEST_CASE("de-eclipse resolution") {
    RandomSource rng(3);
    const SybilPool pool{500, 50, 8, 0.0};
    for (int i = 0; i < 100; ++i) {
        CHECK(resolve_de_eclipse(pool, rng, TriggerMode::Pessimistic) == DeEclipseResult::DeEclipsed);
    }
    auto rate = [&](const SybilPool& p) {
        const int n = 100000;
        int hits = 0;
        for (int i = 0; i < n; ++i) hits += resolve_de_eclipse(p, rng, TriggerMode::Probabilistic) == DeEclipseResult::DeEclipsed;
        return static_cast<double>(hits) / n;
    };
    CHECK(std::abs(rate(pool) - 50.0 / 550.0) < 0.003);
    CHECK(std::abs(rate({500, 50, 8, 0.5}) - 25.0 / 550.0) < 0.003);
    CHECK(rate({500, 50, 8, 1.0}) == 0.0);
}

TEST_CASE("transaction probe sees only transaction links") {
    CHECK(transaction_probe({false, false}).kind == ProbeKind::Eclipsed);
    CHECK(transaction_probe({true, false}).kind == ProbeKind::LeakDetected);
    CHECK(transaction_probe({false, true}).kind == ProbeKind::Eclipsed);
}

TEST_CASE("block probe catches block-only links and is one per block") {
    BlockProber prober;
    CHECK(prober.probe({false, true}, Block{10, 0}).kind == ProbeKind::LeakDetected);
    CHECK(prober.next_probe_height() == 11);
    CHECK_THROWS(prober.probe({false, false}, Block{10, 0}));
    CHECK(prober.probe({false, false}, Block{11, 0}).kind == ProbeKind::Eclipsed);
}

TEST_CASE("combined probe: a leak on either path dominates") {
    Height h = 1;
    for (bool tx : {false, true}) {
        for (bool blk : {false, true}) {
            BlockProber prober;
            const auto v = combined_probe({tx, blk}, prober, Block{h++, 0});
            CHECK((v.kind == ProbeKind::LeakDetected) == (tx || blk));
            CHECK_FALSE(v.evidence.empty());
        }
    }
}
