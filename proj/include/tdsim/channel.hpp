#pragma once

// Payment-channel state machine and the on-chain transactions that enforce it.
//
// Hashes and preimages are opaque 32-byte tokens compared for equality, and
// the chain is reduced to "which transaction spent which output at which
// height". That is all the timelock attacks exercise.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tdsim/sim_core.hpp"

namespace tdsim {

using Satoshi = std::int64_t;
using ChannelId = std::uint64_t;
using HtlcId = std::uint64_t;

// ---------------------------------------------------------------------------
// Implementation presets

struct ImplementationPreset {
    std::string name;
    Height csv_delta = 0;
    Height cltv_delta = 0;
    Height timeout_policy = 0;
    /// Upper end of a ranged csv_delta; csv_delta holds the lower end.
    std::optional<Height> csv_delta_max;

    void validate() const;
};

/// The four shipped presets, in table order: c-lightning, lnd, eclair, rust-lightning.
const std::vector<ImplementationPreset>& default_presets();

/// Looks up a preset by name. Throws std::invalid_argument for unknown names.
ImplementationPreset preset_by_name(std::string_view name);

// ---------------------------------------------------------------------------
// HTLCs

struct PaymentHash {
    std::array<std::uint8_t, 32> bytes{};
    bool operator==(const PaymentHash&) const = default;
};

struct Preimage {
    std::array<std::uint8_t, 32> bytes{};
    bool operator==(const Preimage&) const = default;
};

/// Deterministic preimage token derived from a payment identifier.
Preimage make_preimage(std::uint64_t payment_id);

/// Opaque lock derived from a preimage. Not a cryptographic hash.
PaymentHash lock_for(const Preimage& preimage);

inline bool unlocks(const Preimage& preimage, const PaymentHash& hash) { return lock_for(preimage) == hash; }

/// Offered: flows from the local party to the remote. Received: the reverse.
enum class HtlcDirection : std::uint8_t { Offered, Received };

struct Htlc {
    HtlcId id = 0;
    Satoshi amount = 0;
    PaymentHash payment_hash;
    Height expiry_height = 0;
    HtlcDirection direction = HtlcDirection::Offered;
};

// ---------------------------------------------------------------------------
// Channel state

enum class Party : std::uint8_t { Local, Remote };

constexpr Party other(Party p) { return p == Party::Local ? Party::Remote : Party::Local; }

class ChannelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Reserve as a fraction of capacity when none is given: 1%.
inline constexpr double kDefaultReserveFraction = 0.01;

struct ChannelState {
    ChannelId id = 0;
    Satoshi capacity = 0;
    Satoshi balance_local = 0;
    Satoshi balance_remote = 0;
    Satoshi reserve = 0;
    Satoshi max_inflight = 0;
    std::vector<Htlc> htlcs;
    std::uint64_t state_number = 0;
    std::set<std::uint64_t> revoked_states;
    /// A side is held to the reserve once its balance has reached it.
    bool local_reserve_active = false;
    bool remote_reserve_active = false;

    /// Opens a channel where `funder` holds the whole capacity.
    /// A negative reserve selects kDefaultReserveFraction; a non-positive
    /// max_inflight selects the full capacity.
    static ChannelState open(ChannelId id, Satoshi capacity, Party funder = Party::Local, Satoshi reserve = -1,
                             Satoshi max_inflight = 0);

    [[nodiscard]] Satoshi balance(Party p) const { return p == Party::Local ? balance_local : balance_remote; }
    [[nodiscard]] Satoshi inflight() const;
    [[nodiscard]] const Htlc* find_htlc(HtlcId id) const;

    /// Throws ChannelError when conservation, reserve or in-flight limits fail.
    void check_invariants() const;
};

struct HtlcAdd {
    Htlc htlc;
};
struct HtlcSettle {
    HtlcId id = 0;
    Preimage preimage;
};
struct HtlcFail {
    HtlcId id = 0;
};
using HtlcOp = std::variant<HtlcAdd, HtlcSettle, HtlcFail>;

struct StateUpdate {
    /// Settled amount moved from local to remote; negative moves the other way.
    Satoshi local_to_remote = 0;
    std::vector<HtlcOp> htlc_ops;
};

/// Applies an update and revokes the previous state. On any violation the
/// input channel is left untouched and ChannelError is thrown.
ChannelState update_state(const ChannelState& channel, const StateUpdate& update, Height current_height);

// ---------------------------------------------------------------------------
// Routing

/// One forwarding node on a route: the delta it enforces between its
/// incoming and outgoing HTLC, and the channel it forwards on.
struct Forward {
    Height cltv_delta = 0;
    ChannelId outgoing_channel = 0;
};

struct RouteLeg {
    ChannelId channel = 0;
    Height expiry_height = 0;
    /// Delta enforced by the node receiving this leg; zero for the payee.
    Height forward_delta = 0;
};

struct Route {
    std::vector<RouteLeg> legs;
    Height final_delta = 0;
};

/// Checked by a forwarding node at route setup.
bool forward_acceptable(Height incoming_expiry, Height outgoing_expiry, Height cltv_delta);

/// Assigns expiries from the payee backwards: the last leg expires at
/// current_height + final_delta and every forwarder adds its cltv_delta.
Route build_route(ChannelId first_channel, std::span<const Forward> forwards, Height final_delta,
                  Height current_height);

/// Throws ChannelError if any forwarder's delta is not honored.
void validate_route(const Route& route);

// ---------------------------------------------------------------------------
// On-chain transactions

enum class TxKind : std::uint8_t {
    Commitment,
    HtlcTimeout,  ///< commitment owner refunds an offered HTLC after expiry
    HtlcSuccess,  ///< commitment owner claims a received HTLC with the preimage
    Preimage,     ///< counterparty claims an HTLC on the owner's commitment with the preimage
    Timeout,      ///< counterparty refunds an HTLC on the owner's commitment after expiry
    Justice,      ///< counterparty confiscates the owner's output of a revoked commitment
    DelayedSweep, ///< commitment owner claims their own output once csv_delta has passed
};

std::string_view to_string(TxKind kind);

struct OnChainTx {
    TxKind kind = TxKind::Commitment;
    ChannelId channel = 0;
    std::uint64_t state_number = 0;
    /// Owner of the commitment this transaction is, or spends from.
    Party commitment_owner = Party::Local;
    std::optional<HtlcId> htlc;
    std::optional<Preimage> preimage;
    Height valid_from_height = 0;
    std::optional<Height> confirmed_at_height;
};

struct JusticeWindow {
    Height first = 0;
    Height last = 0;
    /// The cheater's delayed output confirms here if no justice landed.
    Height sweep_height = 0;
};

/// Justice is confirmable on [confirmed_at, confirmed_at + csv_delta - 1].
JusticeWindow justice_window(Height commitment_confirmed_at, Height csv_delta);

enum class RejectReason : std::uint8_t {
    UnknownChannel,
    UnknownState,
    MissingCommitment,
    UnknownHtlc,
    NotYetValid,
    BadPreimage,
    NotRevoked,
    WindowClosed,
    ConflictingSpend,
};

std::string_view to_string(RejectReason reason);

struct BroadcastResult {
    std::optional<RejectReason> rejected;
    Height height = 0;

    [[nodiscard]] bool confirmed() const { return !rejected.has_value(); }
};

/// Confirmed transactions, indexed by the output each one spends.
class ChainLedger {
public:
    /// Records a channel state (and its revocations) so transactions can
    /// reference it. Call again after every update.
    void track(const ChannelState& channel, Height csv_delta);

    /// Confirms `tx` at `at_height` if it is valid there and its output is unspent.
    BroadcastResult broadcast(OnChainTx tx, Height at_height);

    [[nodiscard]] const std::vector<OnChainTx>& confirmed() const { return confirmed_; }
    [[nodiscard]] std::optional<OnChainTx> commitment_of(ChannelId channel) const;
    [[nodiscard]] bool any_confirmed(TxKind kind, ChannelId channel) const;

private:
    struct Tracked {
        Height csv_delta = 0;
        std::uint64_t latest = 0;
        std::set<std::uint64_t> revoked;
        std::map<std::uint64_t, ChannelState> snapshots;
    };

    std::optional<RejectReason> check(const OnChainTx& tx, Height at_height) const;
    [[nodiscard]] std::string outpoint(const OnChainTx& tx) const;

    std::map<ChannelId, Tracked> channels_;
    std::map<std::string, std::size_t> spent_;
    std::vector<OnChainTx> confirmed_;
};

}  // namespace tdsim
