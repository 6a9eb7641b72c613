#pragma once

#include "railforge/flow_routing.hpp"
#include "railforge/rng.hpp"

namespace railforge {

struct SaConfig {
    std::uint64_t seed = 0;
    double h1 = 5.0;                  // generated-moves inner-loop multiplier
    double h2 = 2.0;                  // accepted-moves inner-loop multiplier
    double h3 = 0.97;                 // geometric cooling rate
    double delta = 0.4;               // statistical-cooling distance parameter
    int stat_cooling_iters = 70;      // cooling steps using the statistical rule
    double accept_floor = 1e-3;       // outer-loop acceptance-rate threshold
    int stall_coolings = 30;          // stable cooling steps before stopping
    double init_accept_ratio = 0.95;  // target acceptance ratio for sigma_0
    double path_reselect_prob = 0.2;  // chance a move re-draws a service path
};

void validate_config(const SaConfig& cfg);  // throws ConfigError

struct TraceRow {
    int step = 0;
    double sigma = 0.0;
    double mean_energy = 0.0;
    double stderr_energy = 0.0;  // sample standard deviation of chain energies
    double accept_rate = 0.0;
    double best_energy = 0.0;
};

enum class StopReason { accept_floor, stalled, no_moves };
const char* to_string(StopReason reason);

struct SaRun {
    ServiceDesign best_design;
    FlowState best_state;
    EnergyBreakdown best_energy;
    std::vector<TraceRow> trace;
    long long iterations = 0;  // total moves generated
    StopReason stop_reason = StopReason::stalled;
    SaConfig config;
    PenaltyConfig penalties;
    std::string rng_name;
};

// Adjacent-pair services plus forced services, each on its rank-1 candidate
// path (or its prescribed path). Throws InfeasibleError when a forced service
// has no candidate path. Penalties default to a provisional configuration
// when not supplied (used while computing default_penalties itself).
std::pair<ServiceDesign, FlowState> initial_solution(const Instance& inst, const PathCatalog& catalog,
                                                     const PenaltyConfig* penalties = nullptr);

// Toggleable services: every ordered pair with a candidate path, minus
// forbidden, adjacent and forced pairs.
std::set<YardPair> potential_services(const Instance& inst, const PathCatalog& catalog);

// One neighborhood move: toggle a potential service (drawing a path on add)
// or re-draw the path of an existing multi-path service. Throws ConfigError
// when no legal move exists.
std::pair<ServiceDesign, FlowState> neighbor(Rng& rng, const Instance& inst, const PathCatalog& catalog,
                                             const ServiceDesign& design, const SaConfig& cfg,
                                             const PenaltyConfig& penalties);

// sigma_0 = mean positive delta / ln(1 / init_accept_ratio), from >= 100
// sampled moves; falls back to 1.0 when no sampled move worsens the energy.
double initial_temperature(Rng& rng, const Instance& inst, const PathCatalog& catalog,
                           const ServiceDesign& design0, const SaConfig& cfg,
                           const PenaltyConfig& penalties);
double initial_temperature_from_deltas(const std::vector<double>& positive_deltas, double init_accept_ratio);

// Mixed cooling: statistical rule while step <= stat_cooling_iters (falling
// back to geometric when the spread is zero), geometric afterwards.
double update_temperature(int step, double sigma, double stderr_energy, const SaConfig& cfg);

// Metropolis rule: accept iff delta <= 0, else with probability exp(-delta/sigma).
bool metropolis_accept(Rng& rng, double delta_e, double sigma);

SaRun anneal(const Instance& inst, const PathCatalog& catalog, const SaConfig& cfg,
             const PenaltyConfig& penalties);

}  // namespace railforge
