#pragma once

#include "railforge/path_catalog.hpp"

namespace railforge {

struct FlowState;  // flow_routing.hpp

struct PenaltyConfig {
    double beta_link = 1e3;   // per overflowing train on a link
    double beta_yard = 1e3;   // per overflowing reclassified car at a yard
    double beta_track = 1e3;  // per overflowing classification track
};

struct PlanCost {
    double accumulation = 0.0;
    double transportation = 0.0;
    double reclassification = 0.0;
    double z = 0.0;  // sum of the three
};

struct EnergyBreakdown {
    double accumulation = 0.0;
    double transportation = 0.0;
    double reclassification = 0.0;
    double link_overflow = 0.0;   // trains beyond usable link capacity
    double yard_overflow = 0.0;   // cars beyond usable reclassification capacity
    double track_overflow = 0.0;  // tracks beyond the available count
    double z = 0.0;
    double e = 0.0;  // z + beta-weighted overflows
};

struct CapacityUsage {
    std::vector<double> link_trains;          // per link index
    std::vector<double> yard_reclass_cars;    // per yard
    std::vector<long long> yard_tracks;       // per yard
};

struct ServiceDesign;  // flow_routing.hpp

// Classification tracks a service flow occupies: 0 when idle, else the number
// of breakpoint steps it spans.
long long track_demand(long long cars, long long step);

PlanCost plan_cost(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design,
                   const FlowState& state);

CapacityUsage capacity_usage(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design,
                             const FlowState& state);

EnergyBreakdown energy(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design,
                       const FlowState& state, const PenaltyConfig& penalties);

// Penalties sized from the instance: 10 * Z(initial solution) / total usable
// link capacity in trains, clamped to >= 1e3 (see sa_solver::initial_solution).
PenaltyConfig default_penalties(const Instance& inst, const PathCatalog& catalog);

}  // namespace railforge
