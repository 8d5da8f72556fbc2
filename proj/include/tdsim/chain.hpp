#pragma once

#include <vector>

#include "tdsim/sim_core.hpp"

namespace tdsim {

inline constexpr SimTime kDefaultBlockInterval = 600;

struct Block {
    Height height = 0;
    SimTime mined_at = 0;
};

/// A node's knowledge of the chain tip.
struct ChainView {
    Height tip_height = 0;
    SimTime tip_seen_at = 0;
};

/// Mines blocks 1..count with i.i.d. exponential inter-arrival times,
/// starting from a genesis at t=0.
std::vector<Block> mine_sequence(RandomSource& rng, int count,
                                 SimTime mean_interval = kDefaultBlockInterval);

/// Attacker tip height minus victim tip height.
constexpr Height lead(const ChainView& attacker, const ChainView& victim) {
    return attacker.tip_height - victim.tip_height;
}

}  // namespace tdsim
