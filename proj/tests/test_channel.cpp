#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <numeric>

#include "tdsim/channel.hpp"

using namespace tdsim;

namespace {

OnChainTx tx(TxKind kind, ChannelId ch, std::uint64_t state, Party owner, std::optional<HtlcId> htlc = std::nullopt,
             std::optional<Preimage> preimage = std::nullopt) {
    OnChainTx t;
    t.kind = kind;
    t.channel = ch;
    t.state_number = state;
    t.commitment_owner = owner;
    t.htlc = htlc;
    t.preimage = preimage;
    return t;
}

Htlc htlc(HtlcId id, Satoshi amount, Height expiry, HtlcDirection dir = HtlcDirection::Offered) {
    return Htlc{id, amount, lock_for(make_preimage(id)), expiry, dir};
}

}  // namespace

TEST_CASE("shipped presets") {
    const auto& p = default_presets();
    REQUIRE(p.size() == 4);
    CHECK(p[0].name == "c-lightning");
    CHECK(p[1].name == "lnd");
    CHECK(p[2].name == "eclair");
    CHECK(p[3].name == "rust-lightning");
    const auto cl = preset_by_name("c-lightning");
    CHECK((cl.csv_delta == 144 && cl.cltv_delta == 14 && cl.timeout_policy == 7));
    const auto lnd = preset_by_name("lnd");
    CHECK((lnd.csv_delta == 144 && lnd.cltv_delta == 40 && lnd.timeout_policy == 10));
    CHECK(lnd.csv_delta_max == 2016);
    const auto ecl = preset_by_name("eclair");
    CHECK((ecl.csv_delta == 720 && ecl.cltv_delta == 144 && ecl.timeout_policy == 11));
    const auto rl = preset_by_name("rust-lightning");
    CHECK((rl.csv_delta == 144 && rl.cltv_delta == 72 && rl.timeout_policy == 6));
    CHECK_THROWS_AS(preset_by_name("bitcoin-core"), std::invalid_argument);
}

TEST_CASE("preimages unlock only their own lock") {
    for (std::uint64_t i = 0; i < 200; ++i) {
        CHECK(unlocks(make_preimage(i), lock_for(make_preimage(i))));
        CHECK_FALSE(unlocks(make_preimage(i), lock_for(make_preimage(i + 1))));
    }
}

TEST_CASE("opening a channel") {
    const auto c = ChannelState::open(7, 1'000'000);
    CHECK(c.balance_local == 1'000'000);
    CHECK(c.balance_remote == 0);
    CHECK(c.reserve == 10'000);
    CHECK(c.max_inflight == 1'000'000);
    CHECK(c.local_reserve_active);
    CHECK_FALSE(c.remote_reserve_active);
    CHECK_THROWS_AS(ChannelState::open(1, 0), ChannelError);
    CHECK_THROWS_AS(ChannelState::open(1, 100, Party::Local, 200), ChannelError);
}

TEST_CASE("state updates revoke the previous state") {
    auto c = ChannelState::open(1, 1'000'000);
    c = update_state(c, StateUpdate{400'000, {}}, 100);
    CHECK(c.state_number == 1);
    CHECK(c.revoked_states.count(0) == 1);
    CHECK(c.remote_reserve_active);
    CHECK_THROWS_AS(update_state(c, StateUpdate{595'000, {}}, 100), ChannelError);  // local below reserve
    CHECK_THROWS_AS(update_state(c, StateUpdate{-395'000, {}}, 100), ChannelError); // remote below reserve

    c = update_state(c, StateUpdate{0, {HtlcAdd{htlc(1, 50'000, 150)}}}, 100);
    CHECK(c.inflight() == 50'000);
    CHECK_THROWS_AS(update_state(c, StateUpdate{0, {HtlcSettle{1, make_preimage(2)}}}, 101), ChannelError);
    CHECK_THROWS_AS(update_state(c, StateUpdate{0, {HtlcAdd{htlc(1, 5, 150)}}}, 101), ChannelError);
    CHECK_THROWS_AS(update_state(c, StateUpdate{0, {HtlcAdd{htlc(2, 5, 100)}}}, 100), ChannelError);
    c = update_state(c, StateUpdate{0, {HtlcSettle{1, make_preimage(1)}}}, 101);
    CHECK(c.balance_remote == 450'000);
    CHECK(c.htlcs.empty());
}

TEST_CASE("max in-flight caps concurrent HTLCs") {
    auto c = ChannelState::open(1, 1'000'000, Party::Local, -1, 100'000);
    c = update_state(c, StateUpdate{0, {HtlcAdd{htlc(1, 60'000, 10)}}}, 0);
    CHECK_THROWS_AS(update_state(c, StateUpdate{0, {HtlcAdd{htlc(2, 50'000, 10)}}}, 0), ChannelError);
    c = update_state(c, StateUpdate{0, {HtlcFail{1}, HtlcAdd{htlc(2, 100'000, 10)}}}, 0);
    CHECK(c.inflight() == 100'000);
}

TEST_CASE("random operation sequences keep the channel sound") {
    RandomSource rng(1234);
    long applied = 0, rejected = 0;
    for (int seq = 0; seq < 10'000; ++seq) {
        const Satoshi cap = 1000 + static_cast<Satoshi>(rng.below(1'000'000));
        const Satoshi reserve = static_cast<Satoshi>(rng.below(static_cast<std::uint64_t>(cap / 10 + 1)));
        const Satoshi max_inflight = rng.bernoulli(0.5) ? 0 : 1 + static_cast<Satoshi>(rng.below(cap));
        auto c = ChannelState::open(1, cap, rng.bernoulli(0.5) ? Party::Local : Party::Remote, reserve, max_inflight);
        bool local_held = c.balance_local >= c.reserve, remote_held = c.balance_remote >= c.reserve;
        HtlcId next_id = 1;
        Height height = 100;
        for (int step = 0; step < 20; ++step) {
            StateUpdate up;
            const auto r = rng.below(4);
            if (r == 0) {
                up.local_to_remote = static_cast<Satoshi>(rng.below(static_cast<std::uint64_t>(cap))) - cap / 2;
            } else if (r == 1) {
                const auto dir = rng.bernoulli(0.5) ? HtlcDirection::Offered : HtlcDirection::Received;
                up.htlc_ops.push_back(HtlcAdd{htlc(next_id++, 1 + static_cast<Satoshi>(rng.below(static_cast<std::uint64_t>(cap / 3))),
                                                   height + static_cast<Height>(rng.below(50)), dir)});
            } else if (!c.htlcs.empty()) {
                const auto& h = c.htlcs[rng.below(c.htlcs.size())];
                if (r == 2) {
                    const bool good = rng.bernoulli(0.9);
                    up.htlc_ops.push_back(HtlcSettle{h.id, make_preimage(good ? h.id : h.id + 1)});
                } else {
                    up.htlc_ops.push_back(HtlcFail{h.id});
                }
            }
            const ChannelState before = c;
            try {
                c = update_state(c, up, height);
                ++applied;
            } catch (const ChannelError&) {
                ++rejected;
                REQUIRE(c.state_number == before.state_number);
                continue;
            }
            const Satoshi locked = std::accumulate(c.htlcs.begin(), c.htlcs.end(), Satoshi{0},
                                                   [](Satoshi s, const Htlc& h) { return s + h.amount; });
            REQUIRE(c.balance_local + c.balance_remote + locked == cap);
            REQUIRE(c.balance_local >= 0);
            REQUIRE(c.balance_remote >= 0);
            if (local_held) REQUIRE(c.balance_local >= reserve);
            if (remote_held) REQUIRE(c.balance_remote >= reserve);
            REQUIRE(locked <= (max_inflight > 0 ? max_inflight : cap));
            REQUIRE(c.state_number == before.state_number + 1);
            REQUIRE(c.revoked_states.count(before.state_number) == 1);
            local_held = local_held || c.balance_local >= reserve;
            remote_held = remote_held || c.balance_remote >= reserve;
            height += static_cast<Height>(rng.below(3));
        }
    }
    CHECK(applied > 50'000);
    CHECK(rejected > 1'000);
}

TEST_CASE("route expiries are assigned from the payee backwards") {
    const Forward bob{40, 2};
    const Route r = build_route(1, std::span(&bob, 1), 9, 1000);
    REQUIRE(r.legs.size() == 2);
    CHECK(r.legs[0].expiry_height == 1049);
    CHECK(r.legs[1].expiry_height == 1009);
    CHECK_FALSE(forward_acceptable(1048, 1009, 40));
    CHECK(forward_acceptable(1049, 1009, 40));
    CHECK_FALSE(forward_acceptable(1049, 1009, 0));
}

TEST_CASE("random routes never violate a forwarder's delta") {
    RandomSource rng(8);
    for (int i = 0; i < 5000; ++i) {
        std::vector<Forward> hops(rng.below(7));
        for (std::size_t k = 0; k < hops.size(); ++k) {
            hops[k] = Forward{1 + static_cast<Height>(rng.below(200)), k + 2};
        }
        const Height final_delta = 1 + static_cast<Height>(rng.below(50));
        const Height h = static_cast<Height>(rng.below(800'000));
        const Route r = build_route(1, hops, final_delta, h);
        REQUIRE(r.legs.size() == hops.size() + 1);
        REQUIRE(r.legs.back().expiry_height == h + final_delta);
        Height expect = h + final_delta;
        for (std::size_t k = hops.size(); k-- > 0;) {
            expect += hops[k].cltv_delta;
            REQUIRE(r.legs[k].expiry_height == expect);
            REQUIRE(r.legs[k].expiry_height >= r.legs[k + 1].expiry_height + hops[k].cltv_delta);
        }
        if (!hops.empty()) {
            Route broken = r;
            broken.legs[0].expiry_height -= 1;
            REQUIRE_THROWS_AS(validate_route(broken), ChannelError);
        }
    }
    const Forward zero{0, 2};
    CHECK_THROWS_AS(build_route(1, std::span(&zero, 1), 9, 0), ChannelError);
    CHECK_THROWS_AS(build_route(1, {}, 0, 0), ChannelError);
}

TEST_CASE("justice window") {
    const auto w = justice_window(1000, 144);
    CHECK(w.first == 1000);
    CHECK(w.last == 1143);
    CHECK(w.sweep_height == 1144);
    CHECK_THROWS(justice_window(1000, 0));
}

TEST_CASE("justice and delayed sweep exclude each other") {
    RandomSource rng(31);
    for (int i = 0; i < 5000; ++i) {
        const Height csv = 1 + static_cast<Height>(rng.below(1000));
        auto chan = ChannelState::open(1, 1'000'000);
        ChainLedger ledger;
        ledger.track(chan, csv);
        const auto old_state = chan.state_number;
        chan = update_state(chan, StateUpdate{500'000, {}}, 0);
        ledger.track(chan, csv);
        const Height c = 10 + static_cast<Height>(rng.below(1000));
        REQUIRE(ledger.broadcast(tx(TxKind::Commitment, 1, old_state, Party::Local), c).confirmed());

        Height h = c - 2;
        std::optional<TxKind> winner;
        for (int a = 0; a < 6; ++a) {
            h += static_cast<Height>(rng.below(static_cast<std::uint64_t>(csv) / 2 + 2));
            const TxKind kind = rng.bernoulli(0.5) ? TxKind::Justice : TxKind::DelayedSweep;
            const auto res = ledger.broadcast(tx(kind, 1, old_state, Party::Local), h);
            const bool valid = kind == TxKind::Justice ? (h >= c && h <= c + csv - 1) : h >= c + csv;
            REQUIRE(res.confirmed() == (valid && !winner));
            if (res.confirmed()) winner = kind;
        }
        const int spends = ledger.any_confirmed(TxKind::Justice, 1) + ledger.any_confirmed(TxKind::DelayedSweep, 1);
        REQUIRE(spends <= 1);
    }
}

TEST_CASE("justice needs a revoked commitment") {
    auto chan = ChannelState::open(1, 1'000'000);
    chan = update_state(chan, StateUpdate{500'000, {}}, 0);
    ChainLedger ledger;
    ledger.track(chan, 144);
    REQUIRE(ledger.broadcast(tx(TxKind::Commitment, 1, chan.state_number, Party::Local), 10).confirmed());
    CHECK(ledger.broadcast(tx(TxKind::Justice, 1, chan.state_number, Party::Local), 11).rejected == RejectReason::NotRevoked);
    CHECK(ledger.broadcast(tx(TxKind::Justice, 2, chan.state_number, Party::Local), 11).rejected == RejectReason::UnknownChannel);
    CHECK(ledger.broadcast(tx(TxKind::Commitment, 1, chan.state_number, Party::Local), 12).rejected ==
          RejectReason::ConflictingSpend);
    CHECK(ledger.commitment_of(1)->confirmed_at_height == 10);
}

TEST_CASE("HTLC outputs: timeout after expiry, preimage any time, never both") {
    auto chan = ChannelState::open(1, 1'000'000);
    chan = update_state(chan, StateUpdate{0, {HtlcAdd{htlc(1, 10'000, 120)}, HtlcAdd{htlc(2, 10'000, 120)}}}, 100);
    ChainLedger ledger;
    ledger.track(chan, 144);
    const auto s = chan.state_number;
    REQUIRE(ledger.broadcast(tx(TxKind::Commitment, 1, s, Party::Local), 101).confirmed());
    CHECK(ledger.broadcast(tx(TxKind::HtlcTimeout, 1, s, Party::Local, 1), 119).rejected == RejectReason::NotYetValid);
    CHECK(ledger.broadcast(tx(TxKind::Preimage, 1, s, Party::Local, 1, make_preimage(9)), 105).rejected ==
          RejectReason::BadPreimage);
    // Local offered these, so on local's commitment HtlcSuccess is the wrong path.
    CHECK(ledger.broadcast(tx(TxKind::HtlcSuccess, 1, s, Party::Local, 1, make_preimage(1)), 105).rejected ==
          RejectReason::UnknownHtlc);
    CHECK(ledger.broadcast(tx(TxKind::Preimage, 1, s, Party::Local, 1, make_preimage(1)), 105).confirmed());
    CHECK(ledger.broadcast(tx(TxKind::HtlcTimeout, 1, s, Party::Local, 1), 125).rejected == RejectReason::ConflictingSpend);
    CHECK(ledger.broadcast(tx(TxKind::HtlcTimeout, 1, s, Party::Local, 2), 120).confirmed());
    CHECK(ledger.broadcast(tx(TxKind::HtlcTimeout, 1, s, Party::Local, 7), 130).rejected == RejectReason::UnknownHtlc);
    CHECK(ledger.broadcast(tx(TxKind::Timeout, 1, s, Party::Remote, 2), 130).rejected == RejectReason::MissingCommitment);
}
