#include "railforge/cost_energy.hpp"

#include <algorithm>

#include "railforge/flow_routing.hpp"
#include "railforge/sa_solver.hpp"

namespace railforge {

long long track_demand(long long cars, long long step) {
    if (cars <= 0) return 0;
    return (cars + step - 1) / step;
}

namespace {

detail::Evaluation evaluate_state(const Instance& inst, const PathCatalog& catalog,
                                  const ServiceDesign& design, const FlowState& state,
                                  const PenaltyConfig& penalties) {
    const int n = inst.yard_count();
    std::vector<detail::Service> services = detail::resolve_services(inst, catalog, design, false);

    std::vector<int> next(static_cast<size_t>(n) * n, -1);
    std::vector<long long> car_flow(static_cast<size_t>(n) * n, 0);
    for (const auto& [pair, hop] : state.next_service) next[static_cast<size_t>(pair.first) * n + pair.second] = hop;
    for (const auto& [pair, f] : state.car_flow) car_flow[static_cast<size_t>(pair.first) * n + pair.second] = f;

    detail::EvaluationInput in;
    in.services = &services;
    in.next = &next;
    in.car_flow = &car_flow;
    return detail::evaluate(inst, in, penalties);
}

}  // namespace

PlanCost plan_cost(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design,
                   const FlowState& state) {
    return evaluate_state(inst, catalog, design, state, PenaltyConfig{}).cost;
}

CapacityUsage capacity_usage(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design,
                             const FlowState& state) {
    return evaluate_state(inst, catalog, design, state, PenaltyConfig{}).usage;
}

EnergyBreakdown energy(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design,
                       const FlowState& state, const PenaltyConfig& penalties) {
    return evaluate_state(inst, catalog, design, state, penalties).breakdown;
}

PenaltyConfig default_penalties(const Instance& inst, const PathCatalog& catalog) {
    const PenaltyConfig provisional{1e3, 1e3, 1e3};
    auto [design, state] = initial_solution(inst, catalog, &provisional);
    const double z0 = plan_cost(inst, catalog, design, state).z;

    double total_usable_trains = 0.0;
    for (const Link& link : inst.links) total_usable_trains += link.remaining_capacity_rate * link.capacity_trains;

    const double raw = total_usable_trains > 0 ? 10.0 * z0 / total_usable_trains : 10.0 * z0;
    const double beta = std::max(1e3, raw);
    return PenaltyConfig{beta, beta, beta};
}

}  // namespace railforge
