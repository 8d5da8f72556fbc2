#include "tdsim/chain.hpp"

#include <stdexcept>

namespace tdsim {

std::vector<Block> mine_sequence(RandomSource& rng, int count, SimTime mean_interval) {
    if (count < 1) throw std::invalid_argument("mine_sequence: count must be >= 1");
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(count));
    SimTime t = 0;
    for (int h = 1; h <= count; ++h) {
        t += sample_exponential(rng, mean_interval);
        blocks.push_back(Block{h, t});
    }
    return blocks;
}

}  // namespace tdsim
