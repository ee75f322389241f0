#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace gossipguard {

using Rng = std::mt19937_64;

// Seed splitting: a trial's seed is root + trial index; the stream tag keeps
// distinct families (H0 calibration, attacked runs, instances) apart.
enum class Stream : std::uint32_t {
    Attacked = 1,
    Null = 2,
    CalibrationNull = 3,
    CalibrationAttacked = 4,
    Trust = 5,
    Topology = 6,
    Isolation = 7,
};

inline Rng derive_rng(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> path = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(3 + 2 * path.size());
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    words.push_back(static_cast<std::uint32_t>(stream));
    for (auto p : path) {
        words.push_back(static_cast<std::uint32_t>(p));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

inline std::uint64_t trial_seed(std::uint64_t root, std::uint64_t trial) { return root + trial; }

}  // namespace gossipguard
