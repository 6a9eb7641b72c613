#pragma once

#include "railforge/flow_routing.hpp"

namespace railforge {

struct OracleLimits {
    long long max_designs = 1'000'000;      // evaluated (y, xi) combinations
    long long max_assignments = 1'000'000;  // evaluated x combinations per design
};

struct OracleResult {
    ServiceDesign design;
    FlowState assignment;
    EnergyBreakdown energy;
    long long designs_evaluated = 0;
    long long assignments_evaluated = 0;  // maximum over designs
};

// Global minimum of the energy over every service design (subsets of the
// potential services times candidate-path choices, forced/forbidden/
// prescribed sets respected) and every acyclic per-destination assignment
// over the provided services. Subtrees that provably cannot beat the
// incumbent are skipped, which does not affect the returned optimum.
// Ties resolve to the lexicographically smallest (design, assignment).
// Throws SizeLimitError when a limit is exceeded.
OracleResult enumerate_optimum(const Instance& inst, const PathCatalog& catalog, const OracleLimits& limits,
                               const PenaltyConfig& penalties);

}  // namespace railforge
