#pragma once

#include <cstdint>

#include "railforge/instance.hpp"

namespace railforge {

struct GenParams {
    int yards = 6;
    double line_density = 0.15;     // extra lines beyond the spanning tree, as a fraction of the remaining pairs
    double demand_density = 0.5;    // probability an ordered pair ships cars
    double capacity_factor = 1.5;   // capacities as a multiple of initial-solution usage
    std::uint64_t seed = 1;
};

// Connected random instance with parameter ranges bracketing the shipped
// six-yard fixture (c in [8,12] h, tau in [2,5], m in {40,50,60}).
// Deterministic per seed. Throws ConfigError for parameters that cannot
// yield a connected network.
Instance generate_instance(const GenParams& params);

}  // namespace railforge
