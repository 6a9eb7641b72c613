#include "railforge/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "railforge/sa_solver.hpp"

namespace railforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One candidate in-tree for a destination: the next-hop choices of every
// flow-carrying yard, with the separable cost share and the resource loads
// the tree adds.
struct DestOption {
    double cost = 0.0;
    std::vector<int> next;                                // per yard, -1 where unused
    std::vector<std::pair<int, long long>> service_load;  // (service index, cars boarding)
    std::vector<std::pair<int, long long>> reclass_load;  // (yard, cars reclassified)
};

struct Searcher {
    const Instance& inst;
    const PathCatalog& catalog;
    const OracleLimits& limits;
    const PenaltyConfig& penalties;

    int n = 0;
    std::vector<YardPair> toggles;
    std::vector<int> dests;  // ascending id

    long long designs_evaluated = 0;
    long long max_assignments = 0;

    double best_e = kInf;
    ServiceDesign best_design;
    std::vector<int> best_assignment;  // dest-major flat next map, -1 unused
    bool have_best = false;

    // --- per-design state ---
    std::vector<detail::Service> services;
    std::vector<std::vector<int>> services_from;
    double design_accumulation = 0.0;
    long long design_assignments = 0;

    explicit Searcher(const Instance& inst, const PathCatalog& catalog, const OracleLimits& limits,
                      const PenaltyConfig& penalties)
        : inst(inst), catalog(catalog), limits(limits), penalties(penalties), n(inst.yard_count()) {
        auto potential = potential_services(inst, catalog);
        toggles.assign(potential.begin(), potential.end());
        std::vector<long long> total(n, 0);
        for (const Demand& d : inst.demands) total[d.destination] += d.volume;
        for (int y = 0; y < n; ++y)
            if (total[y] > 0) dests.push_back(y);
    }

    double accumulation_of(YardPair pair) const {
        return inst.service_params.accumulation_conversion * inst.yards[pair.first].accumulation_param *
               static_cast<double>(inst.train_size(pair.first, pair.second));
    }

    // Every candidate in-tree toward dest over the current service table.
    std::vector<DestOption> enumerate_dest_options(int dest) {
        std::vector<DestOption> options;
        std::vector<int> next(n, -1);
        std::vector<char> carrying(n, 0);
        std::vector<long long> demand(n, 0);
        for (const Demand& d : inst.demands)
            if (d.destination == dest && d.volume > 0) {
                demand[d.origin] = d.volume;
                carrying[d.origin] = 1;
            }

        auto finalize = [&]() {
            if (++design_assignments > limits.max_assignments)
                throw SizeLimitError(design_assignments,
                                     "oracle assignment enumeration exceeded max_assignments (" +
                                         std::to_string(limits.max_assignments) + ")");
            DestOption opt;
            opt.next = next;
            // Depth-ordered accumulation of the flow recursion.
            std::vector<int> depth(n, -1);
            depth[dest] = 0;
            std::vector<int> chain;
            for (int y = 0; y < n; ++y) {
                if (!carrying[y] || depth[y] >= 0) continue;
                chain.clear();
                int at = y;
                while (depth[at] < 0) {
                    chain.push_back(at);
                    at = next[at];
                }
                int base = depth[at];
                for (auto it = chain.rbegin(); it != chain.rend(); ++it) depth[*it] = ++base;
            }
            std::vector<int> order;
            for (int y = 0; y < n; ++y)
                if (carrying[y]) order.push_back(y);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (depth[a] != depth[b]) return depth[a] > depth[b];
                return a < b;
            });
            std::vector<long long> flow(n, 0);
            for (int y : order) flow[y] += demand[y];
            for (int y : order) {
                const long long f = flow[y];
                if (f <= 0) continue;
                const int k = next[y];
                const detail::Service& svc = services[service_index(y, k)];
                opt.cost += static_cast<double>(f) *
                            (svc.leg_cost + (k != dest ? inst.yards[k].relative_delay : 0.0));
                opt.service_load.push_back({service_index(y, k), f});
                if (k != dest) {
                    opt.reclass_load.push_back({k, f});
                    flow[k] += f;
                }
            }
            options.push_back(std::move(opt));
        };

        auto creates_cycle = [&](int from, int to) {
            int at = to;
            while (at != dest && next[at] >= 0) {
                if (at == from) return true;
                at = next[at];
            }
            return at == from;
        };

        auto rec = [&](auto&& self) -> void {
            int u = -1;
            for (int y = 0; y < n; ++y) {
                if (y != dest && carrying[y] && next[y] < 0) {
                    u = y;
                    break;
                }
            }
            if (u < 0) {
                finalize();
                return;
            }
            for (int s : services_from[u]) {
                const int k = services[s].target;
                if (k != dest && creates_cycle(u, k)) continue;
                next[u] = k;
                const bool added = k != dest && !carrying[k];
                if (added) carrying[k] = 1;
                self(self);
                next[u] = -1;
                if (added) carrying[k] = 0;
            }
        };
        rec(rec);
        return options;
    }

    int service_index(int origin, int target) const {
        for (int s : services_from[origin])
            if (services[s].target == target) return s;
        return -1;
    }

    double combined_penalty(const std::vector<long long>& service_flow,
                            const std::vector<long long>& reclass) const {
        std::vector<double> link_trains(inst.links.size(), 0.0);
        std::vector<long long> tracks(n, 0);
        for (size_t s = 0; s < services.size(); ++s) {
            const detail::Service& svc = services[s];
            const double trains =
                static_cast<double>(service_flow[s]) / static_cast<double>(svc.train_size);
            for (int li : svc.path->link_indices) link_trains[li] += trains;
            tracks[svc.origin] += track_demand(service_flow[s], inst.track_breakpoint_step);
        }
        double pen = 0.0;
        for (size_t li = 0; li < inst.links.size(); ++li) {
            const Link& link = inst.links[li];
            pen += penalties.beta_link *
                   std::max(0.0, link_trains[li] - link.remaining_capacity_rate * link.capacity_trains);
        }
        for (int y = 0; y < n; ++y) {
            const Yard& yard = inst.yards[y];
            pen += penalties.beta_yard *
                   std::max(0.0, static_cast<double>(reclass[y]) -
                                     yard.reclass_capacity_factor * yard.reclass_capacity);
            pen += penalties.beta_track *
                   std::max(0.0, static_cast<double>(tracks[y] - yard.track_count));
        }
        return pen;
    }

    void evaluate_design(const ServiceDesign& design) {
        if (++designs_evaluated > limits.max_designs)
            throw SizeLimitError(designs_evaluated, "oracle design enumeration exceeded max_designs (" +
                                                        std::to_string(limits.max_designs) + ")");
        services = detail::resolve_services(inst, catalog, design, false);
        services_from.assign(n, {});
        for (int s = 0; s < static_cast<int>(services.size()); ++s)
            services_from[services[s].origin].push_back(s);

        design_accumulation = 0.0;
        for (const auto& [pair, idx] : design.services) {
            (void)idx;
            design_accumulation += accumulation_of(pair);
        }
        design_assignments = 0;

        std::vector<std::vector<DestOption>> options;
        options.reserve(dests.size());
        for (int dest : dests) {
            auto opts = enumerate_dest_options(dest);
            if (opts.empty()) return;  // destination unreachable under this design
            std::sort(opts.begin(), opts.end(), [](const DestOption& a, const DestOption& b) {
                if (a.cost != b.cost) return a.cost < b.cost;
                return a.next < b.next;
            });
            options.push_back(std::move(opts));
        }

        std::vector<double> suffix_min(dests.size() + 1, 0.0);
        for (int d = static_cast<int>(dests.size()) - 1; d >= 0; --d)
            suffix_min[d] = suffix_min[d + 1] + options[d][0].cost;

        std::vector<long long> service_flow(services.size(), 0);
        std::vector<long long> reclass(n, 0);
        std::vector<const DestOption*> chosen(dests.size(), nullptr);

        auto rec = [&](auto&& self, size_t d, double partial_cost) -> void {
            if (d == dests.size()) {
                if (++design_assignments > limits.max_assignments)
                    throw SizeLimitError(design_assignments,
                                         "oracle assignment enumeration exceeded max_assignments (" +
                                             std::to_string(limits.max_assignments) + ")");
                const double e = design_accumulation + partial_cost + combined_penalty(service_flow, reclass);
                if (e > best_e) return;
                std::vector<int> assignment(static_cast<size_t>(n) * n, -1);
                for (size_t i = 0; i < dests.size(); ++i)
                    for (int y = 0; y < n; ++y)
                        if (chosen[i]->next[y] >= 0)
                            assignment[static_cast<size_t>(dests[i]) * n + y] = chosen[i]->next[y];
                if (!have_best || e < best_e ||
                    (e == best_e && std::tie(design.services, assignment) <
                                        std::tie(best_design.services, best_assignment))) {
                    have_best = true;
                    best_e = e;
                    best_design = design;
                    best_assignment = std::move(assignment);
                }
                return;
            }
            for (const DestOption& opt : options[d]) {
                const double lower = design_accumulation + partial_cost + opt.cost + suffix_min[d + 1] +
                                     combined_penalty(service_flow, reclass);
                if (lower > best_e) {
                    // Options are cost-sorted, but the penalty term is not
                    // monotone across them, so keep scanning the list.
                    continue;
                }
                for (auto [s, f] : opt.service_load) service_flow[s] += f;
                for (auto [y, f] : opt.reclass_load) reclass[y] += f;
                chosen[d] = &opt;
                self(self, d + 1, partial_cost + opt.cost);
                for (auto [s, f] : opt.service_load) service_flow[s] -= f;
                for (auto [y, f] : opt.reclass_load) reclass[y] -= f;
            }
        };
        rec(rec, 0, 0.0);
        max_assignments = std::max(max_assignments, design_assignments);
    }

    // Path-choice product over the provided pairs, then evaluate.
    void enumerate_paths(ServiceDesign& design, const std::vector<YardPair>& pairs, size_t idx) {
        if (idx == pairs.size()) {
            evaluate_design(design);
            return;
        }
        const YardPair pair = pairs[idx];
        const int mandatory = catalog.mandatory_index(pair.first, pair.second);
        if (mandatory >= 0) {
            design.services[pair] = mandatory;
            enumerate_paths(design, pairs, idx + 1);
            return;
        }
        const int count = static_cast<int>(catalog.paths(pair.first, pair.second).size());
        for (int p = 0; p < count; ++p) {
            design.services[pair] = p;
            enumerate_paths(design, pairs, idx + 1);
        }
    }

    void search() {
        std::vector<YardPair> base;
        for (const Link& link : inst.links) {
            const YardPair pair{link.from, link.to};
            if (std::find(base.begin(), base.end(), pair) == base.end()) base.push_back(pair);
        }
        for (const YardPair& pair : inst.operational_sets.forced_services) {
            if (!catalog.has_path(pair.first, pair.second))
                throw InfeasibleError(inst.yard_name(pair.first), inst.yard_name(pair.second),
                                      "forced service has no candidate path");
            if (std::find(base.begin(), base.end(), pair) == base.end()) base.push_back(pair);
        }
        std::sort(base.begin(), base.end());

        double base_accumulation = 0.0;
        for (const YardPair& pair : base) base_accumulation += accumulation_of(pair);

        std::vector<YardPair> provided = base;
        auto rec = [&](auto&& self, size_t idx, double accumulation_lower) -> void {
            // Every completion provides at least the current set, so its
            // energy is at least the accumulated fixed cost.
            if (have_best && accumulation_lower > best_e) return;
            if (idx == toggles.size()) {
                std::vector<YardPair> pairs = provided;
                std::sort(pairs.begin(), pairs.end());
                ServiceDesign design;
                enumerate_paths(design, pairs, 0);
                return;
            }
            self(self, idx + 1, accumulation_lower);  // exclude toggles[idx]
            provided.push_back(toggles[idx]);
            self(self, idx + 1, accumulation_lower + accumulation_of(toggles[idx]));
            provided.pop_back();
        };
        rec(rec, 0, base_accumulation);
    }
};

}  // namespace

OracleResult enumerate_optimum(const Instance& inst, const PathCatalog& catalog, const OracleLimits& limits,
                               const PenaltyConfig& penalties) {
    if (limits.max_designs <= 0 || limits.max_assignments <= 0)
        throw ConfigError("oracle limits must be positive");

    Searcher searcher(inst, catalog, limits, penalties);
    searcher.search();

    OracleResult result;
    result.design = searcher.best_design;
    result.designs_evaluated = searcher.designs_evaluated;
    result.assignments_evaluated = searcher.max_assignments;

    const int n = inst.yard_count();
    std::map<YardPair, int> assignment;
    for (int dest = 0; dest < n; ++dest)
        for (int y = 0; y < n; ++y) {
            const int next = searcher.best_assignment.empty()
                                 ? -1
                                 : searcher.best_assignment[static_cast<size_t>(dest) * n + y];
            if (next >= 0) assignment[{y, dest}] = next;
        }
    auto [car_flow, service_flow] = propagate_flows(inst, assignment);
    FlowState state;
    state.next_service = std::move(assignment);
    state.car_flow = std::move(car_flow);
    state.service_flow = std::move(service_flow);
    for (const auto& [pair, idx] : result.design.services) {
        (void)idx;
        state.service_flow.emplace(pair, 0);  // keeps zero-flow services present
    }
    result.energy = energy(inst, catalog, result.design, state, penalties);
    result.assignment = std::move(state);
    return result;
}

}  // namespace railforge
