#include "tdsim/channel.hpp"

#include <algorithm>
#include <cmath>

namespace tdsim {

// ---------------------------------------------------------------------------
// Presets

void ImplementationPreset::validate() const {
    if (csv_delta < 1 || cltv_delta < 1 || timeout_policy < 1) {
        throw std::invalid_argument("preset " + name + ": timelocks must be positive");
    }
    if (csv_delta_max && *csv_delta_max < csv_delta) {
        throw std::invalid_argument("preset " + name + ": csv_delta range is inverted");
    }
}

const std::vector<ImplementationPreset>& default_presets() {
    static const std::vector<ImplementationPreset> presets = {
        {"c-lightning", 144, 14, 7, std::nullopt},
        {"lnd", 144, 40, 10, 2016},
        {"eclair", 720, 144, 11, std::nullopt},
        {"rust-lightning", 144, 72, 6, std::nullopt},
    };
    return presets;
}

ImplementationPreset preset_by_name(std::string_view name) {
    for (const auto& p : default_presets()) {
        if (p.name == name) return p;
    }
    throw std::invalid_argument("unknown implementation preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Tokens

Preimage make_preimage(std::uint64_t payment_id) {
    Preimage p;
    std::uint64_t z = payment_id;
    for (std::size_t i = 0; i < p.bytes.size(); i += 8) {
        z = mix_seed(z, i);
        for (std::size_t b = 0; b < 8; ++b) p.bytes[i + b] = static_cast<std::uint8_t>(z >> (8 * b));
    }
    return p;
}

PaymentHash lock_for(const Preimage& preimage) {
    PaymentHash h;
    for (std::size_t i = 0; i < h.bytes.size(); ++i) {
        h.bytes[i] = static_cast<std::uint8_t>(preimage.bytes[h.bytes.size() - 1 - i] ^ 0x5c);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Channel state

ChannelState ChannelState::open(ChannelId id, Satoshi capacity, Party funder, Satoshi reserve,
                                Satoshi max_inflight) {
    if (capacity <= 0) throw ChannelError("channel capacity must be positive");
    ChannelState c;
    c.id = id;
    c.capacity = capacity;
    c.reserve = reserve < 0 ? static_cast<Satoshi>(std::llround(static_cast<double>(capacity) *
                                                                kDefaultReserveFraction))
                            : reserve;
    c.max_inflight = max_inflight > 0 ? max_inflight : capacity;
    if (c.reserve > capacity) throw ChannelError("reserve exceeds capacity");
    (funder == Party::Local ? c.balance_local : c.balance_remote) = capacity;
    c.local_reserve_active = c.balance_local >= c.reserve;
    c.remote_reserve_active = c.balance_remote >= c.reserve;
    return c;
}

Satoshi ChannelState::inflight() const {
    Satoshi total = 0;
    for (const auto& h : htlcs) total += h.amount;
    return total;
}

const Htlc* ChannelState::find_htlc(HtlcId htlc_id) const {
    auto it = std::find_if(htlcs.begin(), htlcs.end(), [&](const Htlc& h) { return h.id == htlc_id; });
    return it == htlcs.end() ? nullptr : &*it;
}

void ChannelState::check_invariants() const {
    if (balance_local < 0 || balance_remote < 0) throw ChannelError("negative balance");
    if (balance_local + balance_remote + inflight() != capacity) throw ChannelError("capacity not conserved");
    if (local_reserve_active && balance_local < reserve) throw ChannelError("local balance below reserve");
    if (remote_reserve_active && balance_remote < reserve) throw ChannelError("remote balance below reserve");
    if (inflight() > max_inflight) throw ChannelError("in-flight total exceeds max_inflight");
}

namespace {

Satoshi& payer_balance(ChannelState& c, HtlcDirection d) {
    return d == HtlcDirection::Offered ? c.balance_local : c.balance_remote;
}
Satoshi& payee_balance(ChannelState& c, HtlcDirection d) {
    return d == HtlcDirection::Offered ? c.balance_remote : c.balance_local;
}

}  // namespace

ChannelState update_state(const ChannelState& channel, const StateUpdate& update, Height current_height) {
    ChannelState next = channel;
    next.balance_local -= update.local_to_remote;
    next.balance_remote += update.local_to_remote;

    for (const auto& op : update.htlc_ops) {
        if (const auto* add = std::get_if<HtlcAdd>(&op)) {
            const Htlc& h = add->htlc;
            if (h.amount <= 0) throw ChannelError("HTLC amount must be positive");
            if (h.expiry_height <= current_height) throw ChannelError("HTLC expiry must lie in the future");
            if (next.find_htlc(h.id)) throw ChannelError("duplicate HTLC id " + std::to_string(h.id));
            if (next.inflight() + h.amount > next.max_inflight) {
                throw ChannelError("HTLC of " + std::to_string(h.amount) + " exceeds max_inflight");
            }
            payer_balance(next, h.direction) -= h.amount;
            next.htlcs.push_back(h);
        } else if (const auto* settle = std::get_if<HtlcSettle>(&op)) {
            const Htlc* h = next.find_htlc(settle->id);
            if (!h) throw ChannelError("settle of unknown HTLC " + std::to_string(settle->id));
            if (!unlocks(settle->preimage, h->payment_hash)) throw ChannelError("preimage does not unlock HTLC");
            payee_balance(next, h->direction) += h->amount;
            next.htlcs.erase(next.htlcs.begin() + (h - next.htlcs.data()));
        } else {
            const auto& fail = std::get<HtlcFail>(op);
            const Htlc* h = next.find_htlc(fail.id);
            if (!h) throw ChannelError("fail of unknown HTLC " + std::to_string(fail.id));
            payer_balance(next, h->direction) += h->amount;
            next.htlcs.erase(next.htlcs.begin() + (h - next.htlcs.data()));
        }
    }

    next.check_invariants();
    next.local_reserve_active = next.local_reserve_active || next.balance_local >= next.reserve;
    next.remote_reserve_active = next.remote_reserve_active || next.balance_remote >= next.reserve;
    next.revoked_states.insert(channel.state_number);
    ++next.state_number;
    return next;
}

// ---------------------------------------------------------------------------
// Routing

bool forward_acceptable(Height incoming_expiry, Height outgoing_expiry, Height cltv_delta) {
    return cltv_delta > 0 && incoming_expiry >= outgoing_expiry + cltv_delta;
}

Route build_route(ChannelId first_channel, std::span<const Forward> forwards, Height final_delta,
                  Height current_height) {
    if (final_delta < 1) throw ChannelError("final delta must be positive");
    for (const auto& f : forwards) {
        if (f.cltv_delta < 1) throw ChannelError("forwarding node requires a positive cltv_delta");
    }
    Route route;
    route.final_delta = final_delta;
    route.legs.resize(forwards.size() + 1);
    route.legs[0].channel = first_channel;
    for (std::size_t i = 0; i < forwards.size(); ++i) {
        route.legs[i].forward_delta = forwards[i].cltv_delta;
        route.legs[i + 1].channel = forwards[i].outgoing_channel;
    }
    Height expiry = current_height + final_delta;
    for (std::size_t i = route.legs.size(); i-- > 0;) {
        route.legs[i].expiry_height = expiry;
        expiry += route.legs[i > 0 ? i - 1 : 0].forward_delta;
    }
    validate_route(route);
    return route;
}

void validate_route(const Route& route) {
    for (std::size_t i = 0; i + 1 < route.legs.size(); ++i) {
        const auto& in = route.legs[i];
        const auto& out = route.legs[i + 1];
        if (!forward_acceptable(in.expiry_height, out.expiry_height, in.forward_delta)) {
            throw ChannelError("hop " + std::to_string(i) + " rejects route: incoming expiry " +
                               std::to_string(in.expiry_height) + " < outgoing " +
                               std::to_string(out.expiry_height) + " + delta " +
                               std::to_string(in.forward_delta));
        }
    }
}

// ---------------------------------------------------------------------------
// On-chain

std::string_view to_string(TxKind kind) {
    switch (kind) {
        case TxKind::Commitment: return "Commitment";
        case TxKind::HtlcTimeout: return "HtlcTimeout";
        case TxKind::HtlcSuccess: return "HtlcSuccess";
        case TxKind::Preimage: return "Preimage";
        case TxKind::Timeout: return "Timeout";
        case TxKind::Justice: return "Justice";
        case TxKind::DelayedSweep: return "DelayedSweep";
    }
    return "Unknown";
}

std::string_view to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::UnknownChannel: return "UnknownChannel";
        case RejectReason::UnknownState: return "UnknownState";
        case RejectReason::MissingCommitment: return "MissingCommitment";
        case RejectReason::UnknownHtlc: return "UnknownHtlc";
        case RejectReason::NotYetValid: return "NotYetValid";
        case RejectReason::BadPreimage: return "BadPreimage";
        case RejectReason::NotRevoked: return "NotRevoked";
        case RejectReason::WindowClosed: return "WindowClosed";
        case RejectReason::ConflictingSpend: return "ConflictingSpend";
    }
    return "Unknown";
}

JusticeWindow justice_window(Height commitment_confirmed_at, Height csv_delta) {
    if (csv_delta < 1) throw std::invalid_argument("csv_delta must be >= 1");
    return {commitment_confirmed_at, commitment_confirmed_at + csv_delta - 1, commitment_confirmed_at + csv_delta};
}

void ChainLedger::track(const ChannelState& channel, Height csv_delta) {
    auto& t = channels_[channel.id];
    t.csv_delta = csv_delta;
    t.latest = channel.state_number;
    t.revoked = channel.revoked_states;
    t.snapshots[channel.state_number] = channel;
}

std::optional<OnChainTx> ChainLedger::commitment_of(ChannelId channel) const {
    auto it = spent_.find("F:" + std::to_string(channel));
    if (it == spent_.end()) return std::nullopt;
    return confirmed_[it->second];
}

bool ChainLedger::any_confirmed(TxKind kind, ChannelId channel) const {
    return std::any_of(confirmed_.begin(), confirmed_.end(),
                       [&](const OnChainTx& tx) { return tx.kind == kind && tx.channel == channel; });
}

std::string ChainLedger::outpoint(const OnChainTx& tx) const {
    const std::string ch = std::to_string(tx.channel);
    switch (tx.kind) {
        case TxKind::Commitment: return "F:" + ch;
        case TxKind::Justice:
        case TxKind::DelayedSweep: return "L:" + ch;
        default: return "H:" + ch + ":" + std::to_string(tx.htlc.value_or(0));
    }
}

std::optional<RejectReason> ChainLedger::check(const OnChainTx& tx, Height at_height) const {
    auto ch = channels_.find(tx.channel);
    if (ch == channels_.end()) return RejectReason::UnknownChannel;
    const Tracked& t = ch->second;
    if (at_height < tx.valid_from_height) return RejectReason::NotYetValid;

    if (tx.kind == TxKind::Commitment) {
        if (!t.snapshots.count(tx.state_number)) return RejectReason::UnknownState;
        return std::nullopt;
    }

    const auto commitment = commitment_of(tx.channel);
    if (!commitment || commitment->state_number != tx.state_number ||
        commitment->commitment_owner != tx.commitment_owner) {
        return RejectReason::MissingCommitment;
    }
    const Height c = *commitment->confirmed_at_height;
    if (at_height < c) return RejectReason::NotYetValid;

    if (tx.kind == TxKind::Justice) {
        if (!t.revoked.count(tx.state_number)) return RejectReason::NotRevoked;
        if (at_height > justice_window(c, t.csv_delta).last) return RejectReason::WindowClosed;
        return std::nullopt;
    }
    if (tx.kind == TxKind::DelayedSweep) {
        if (at_height < justice_window(c, t.csv_delta).sweep_height) return RejectReason::NotYetValid;
        return std::nullopt;
    }

    const ChannelState& snapshot = t.snapshots.at(tx.state_number);
    const Htlc* h = tx.htlc ? snapshot.find_htlc(*tx.htlc) : nullptr;
    if (!h) return RejectReason::UnknownHtlc;
    // Direction as seen from the commitment owner.
    const bool owner_offered = (h->direction == HtlcDirection::Offered) == (tx.commitment_owner == Party::Local);
    switch (tx.kind) {
        case TxKind::HtlcTimeout:
        case TxKind::Timeout:
            if (owner_offered != (tx.kind == TxKind::HtlcTimeout)) return RejectReason::UnknownHtlc;
            if (at_height < h->expiry_height) return RejectReason::NotYetValid;
            return std::nullopt;
        case TxKind::HtlcSuccess:
        case TxKind::Preimage:
            if (owner_offered != (tx.kind == TxKind::Preimage)) return RejectReason::UnknownHtlc;
            if (!tx.preimage || !unlocks(*tx.preimage, h->payment_hash)) return RejectReason::BadPreimage;
            return std::nullopt;
        default: return RejectReason::UnknownHtlc;
    }
}

BroadcastResult ChainLedger::broadcast(OnChainTx tx, Height at_height) {
    if (auto reason = check(tx, at_height)) return {reason, at_height};
    const std::string op = outpoint(tx);
    if (spent_.count(op)) return {RejectReason::ConflictingSpend, at_height};

    if (tx.kind == TxKind::HtlcTimeout || tx.kind == TxKind::Timeout) {
        tx.valid_from_height = channels_.at(tx.channel).snapshots.at(tx.state_number).find_htlc(*tx.htlc)->expiry_height;
    } else if (tx.kind == TxKind::DelayedSweep) {
        tx.valid_from_height = justice_window(*commitment_of(tx.channel)->confirmed_at_height,
                                              channels_.at(tx.channel).csv_delta)
                                   .sweep_height;
    }
    tx.confirmed_at_height = at_height;
    spent_.emplace(op, confirmed_.size());
    confirmed_.push_back(tx);
    return {std::nullopt, at_height};
}

}  // namespace tdsim
