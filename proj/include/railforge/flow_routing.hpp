#pragma once

#include <map>

#include "railforge/cost_energy.hpp"

namespace railforge {

// The y / xi decision variables: which services run and on which physical path.
struct ServiceDesign {
    std::map<YardPair, int> services;  // provided pair -> candidate path index

    bool provides(int origin, int destination) const {
        return services.count({origin, destination}) > 0;
    }
    int path_index(int origin, int destination) const {
        auto it = services.find({origin, destination});
        return it == services.end() ? -1 : it->second;
    }

    bool operator==(const ServiceDesign&) const = default;
    bool operator<(const ServiceDesign& other) const { return services < other.services; }
};

// Routing result. next_service maps (yard, destination) to the yard whose
// service the flow boards next; next == destination encodes direct delivery.
struct FlowState {
    std::map<YardPair, int> next_service;
    std::map<YardPair, long long> car_flow;      // f, positive entries only
    std::map<YardPair, long long> service_flow;  // D, one entry per provided service

    int next_of(int at, int dest) const {
        auto it = next_service.find({at, dest});
        return it == next_service.end() ? -1 : it->second;
    }
};

// Assigns every demand to a service itinerary and propagates car and service
// flows. Deterministic; throws InfeasibleError when a demand cannot reach its
// destination over the provided services, and IntegrityError when the design
// violates the forced/forbidden/prescribed sets or references a bad path.
FlowState route_all(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design,
                    const PenaltyConfig& penalties);

// Unique fixed point of the flow recursion over an acyclic assignment:
// f_ij = N_ij + sum of upstream flows routed through i, and D from f.
// Throws CycleError (listing the cycle) or InfeasibleError for stranded flow.
std::pair<std::map<YardPair, long long>, std::map<YardPair, long long>> propagate_flows(
    const Instance& inst, const std::map<YardPair, int>& assignment);

// Reclassification sequence origin, k1, ..., dest followed by the flow.
std::vector<int> itinerary_of(const FlowState& state, int origin, int dest);

namespace detail {

// Resolved service table + reusable buffers for the hot solver loop. The
// public route_all wraps this; sa_solver and exact_oracle use it directly.
struct Service {
    int origin = -1;
    int target = -1;
    const CandidatePath* path = nullptr;
    long long train_size = 0;
    double leg_cost = 0.0;  // transport_weight * path cost
};

struct RoutingResult {
    std::vector<Service> services;        // sorted by (origin, target)
    std::vector<int> service_at;          // origin*V+target -> index into services, -1 absent
    std::vector<int> next;                // at*V+dest -> next yard, -1 unset
    std::vector<long long> car_flow;      // at*V+dest -> f
    std::vector<long long> service_flow;  // per service index -> D
};

class Router {
public:
    enum class Mode { automatic, force_careful, force_fast };

    Router(const Instance& inst, const PathCatalog& catalog);

    // Routes the design; the returned reference stays valid until the next
    // call. Throws like route_all (but performs no design validation).
    const RoutingResult& route(const ServiceDesign& design, const PenaltyConfig& penalties,
                               Mode mode = Mode::automatic);

    FlowState to_flow_state(const RoutingResult& result) const;

private:
    struct DestinationPlan;
    void build_services(const ServiceDesign& design);
    bool fast_eligible(int dest, long long remaining_volume) const;
    void route_destination_fast(int dest);
    void route_destination_careful(int dest);
    void commit_chain(int start, int dest);
    double marginal_penalty(const Service& svc, bool reclass_at_target, long long volume) const;

    const Instance& inst_;
    const PathCatalog& catalog_;
    const PenaltyConfig* penalties_ = nullptr;
    int yard_count_ = 0;

    RoutingResult result_;
    std::vector<std::vector<int>> services_from_;  // yard -> service indices (sorted by target)

    // Running aggregates used to price marginal capacity penalties.
    std::vector<double> link_trains_;
    std::vector<long long> yard_reclass_;
    std::vector<long long> yard_tracks_;

    // Per-destination scratch.
    std::vector<long long> unrouted_;
    std::vector<double> dist_;
    std::vector<long long> vol_;
    std::vector<int> parent_service_;
    std::vector<char> done_;
};

// Shared evaluation core: derives D, capacity usage and the full breakdown
// from an assignment + car flows. Used by the public cost_energy operations
// and by the solver on its flat routing result.
struct EvaluationInput {
    const std::vector<Service>* services = nullptr;
    const std::vector<int>* next = nullptr;           // at*V+dest
    const std::vector<long long>* car_flow = nullptr; // at*V+dest
};

struct Evaluation {
    PlanCost cost;
    CapacityUsage usage;
    EnergyBreakdown breakdown;
    std::vector<long long> service_flow;  // per service
};

Evaluation evaluate(const Instance& inst, const EvaluationInput& in, const PenaltyConfig& penalties);

// Resolves a design against the catalog (validating path indices and the
// forced/forbidden/prescribed sets when validate is set).
std::vector<Service> resolve_services(const Instance& inst, const PathCatalog& catalog,
                                      const ServiceDesign& design, bool validate);

}  // namespace detail

}  // namespace railforge
