#include "railforge/flow_routing.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace railforge {

namespace detail {

std::vector<Service> resolve_services(const Instance& inst, const PathCatalog& catalog,
                                      const ServiceDesign& design, bool validate) {
    const OperationalSets& ops = inst.operational_sets;
    if (validate) {
        for (const YardPair& p : ops.forced_services) {
            if (!design.provides(p.first, p.second))
                throw IntegrityError("design omits forced service " + inst.yard_name(p.first) + " -> " +
                                     inst.yard_name(p.second) + " (forced_services)");
        }
    }

    std::vector<Service> services;
    services.reserve(design.services.size());
    for (const auto& [pair, path_idx] : design.services) {
        const auto [i, j] = pair;
        const std::string tag = inst.yard_name(i) + " -> " + inst.yard_name(j);
        if (validate) {
            if (ops.forbidden_services.count(pair))
                throw IntegrityError("design provides forbidden service " + tag + " (forbidden_services)");
            const int mandatory = catalog.mandatory_index(i, j);
            if (mandatory >= 0 && path_idx != mandatory)
                throw IntegrityError("service " + tag + " must use its prescribed path (prescribed_paths)");
        }
        const auto& paths = catalog.paths(i, j);
        if (path_idx < 0 || path_idx >= static_cast<int>(paths.size()))
            throw IntegrityError("service " + tag + " has no candidate path with index " +
                                 std::to_string(path_idx));
        Service svc;
        svc.origin = i;
        svc.target = j;
        svc.path = &paths[path_idx];
        svc.train_size = inst.train_size(i, j);
        svc.leg_cost = inst.service_params.transport_weight * svc.path->transport_cost;
        services.push_back(svc);
    }
    return services;  // design.services is an ordered map, so sorted by (origin, target)
}

Evaluation evaluate(const Instance& inst, const EvaluationInput& in, const PenaltyConfig& penalties) {
    const int n = inst.yard_count();
    const std::vector<Service>& services = *in.services;
    const std::vector<int>& next = *in.next;
    const std::vector<long long>& car_flow = *in.car_flow;

    Evaluation ev;
    ev.service_flow.assign(services.size(), 0);
    ev.usage.link_trains.assign(inst.links.size(), 0.0);
    ev.usage.yard_reclass_cars.assign(n, 0.0);
    ev.usage.yard_tracks.assign(n, 0);

    std::vector<int> service_at(static_cast<size_t>(n) * n, -1);
    for (int s = 0; s < static_cast<int>(services.size()); ++s)
        service_at[static_cast<size_t>(services[s].origin) * n + services[s].target] = s;

    double reclassification = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const long long f = car_flow[static_cast<size_t>(i) * n + j];
            if (f <= 0) continue;
            const int k = next[static_cast<size_t>(i) * n + j];
            if (k < 0) continue;
            const int s = service_at[static_cast<size_t>(i) * n + k];
            if (s < 0) continue;
            ev.service_flow[s] += f;
            if (k != j) {
                reclassification += static_cast<double>(f) * inst.yards[k].relative_delay;
                ev.usage.yard_reclass_cars[k] += static_cast<double>(f);
            }
        }
    }

    double accumulation = 0.0;
    double transportation = 0.0;
    for (size_t s = 0; s < services.size(); ++s) {
        const Service& svc = services[s];
        accumulation += inst.service_params.accumulation_conversion *
                        inst.yards[svc.origin].accumulation_param * static_cast<double>(svc.train_size);
        const long long d = ev.service_flow[s];
        transportation += svc.leg_cost * static_cast<double>(d);
        const double trains = static_cast<double>(d) / static_cast<double>(svc.train_size);
        for (int li : svc.path->link_indices) ev.usage.link_trains[li] += trains;
        ev.usage.yard_tracks[svc.origin] += track_demand(d, inst.track_breakpoint_step);
    }

    double link_overflow = 0.0;
    for (size_t li = 0; li < inst.links.size(); ++li) {
        const Link& link = inst.links[li];
        const double usable = link.remaining_capacity_rate * link.capacity_trains;
        link_overflow += std::max(0.0, ev.usage.link_trains[li] - usable);
    }
    double yard_overflow = 0.0;
    double track_overflow = 0.0;
    for (int y = 0; y < n; ++y) {
        const Yard& yard = inst.yards[y];
        yard_overflow += std::max(0.0, ev.usage.yard_reclass_cars[y] -
                                           yard.reclass_capacity_factor * yard.reclass_capacity);
        track_overflow +=
            std::max(0.0, static_cast<double>(ev.usage.yard_tracks[y] - yard.track_count));
    }

    ev.cost.accumulation = accumulation;
    ev.cost.transportation = transportation;
    ev.cost.reclassification = reclassification;
    ev.cost.z = accumulation + transportation + reclassification;

    ev.breakdown.accumulation = accumulation;
    ev.breakdown.transportation = transportation;
    ev.breakdown.reclassification = reclassification;
    ev.breakdown.link_overflow = link_overflow;
    ev.breakdown.yard_overflow = yard_overflow;
    ev.breakdown.track_overflow = track_overflow;
    ev.breakdown.z = ev.cost.z;
    ev.breakdown.e = ev.cost.z + penalties.beta_link * link_overflow + penalties.beta_yard * yard_overflow +
                     penalties.beta_track * track_overflow;
    return ev;
}

Router::Router(const Instance& inst, const PathCatalog& catalog)
    : inst_(inst), catalog_(catalog), yard_count_(inst.yard_count()) {}

void Router::build_services(const ServiceDesign& design) {
    result_.services = resolve_services(inst_, catalog_, design, false);
    const int n = yard_count_;
    result_.service_at.assign(static_cast<size_t>(n) * n, -1);
    services_from_.assign(n, {});
    for (int s = 0; s < static_cast<int>(result_.services.size()); ++s) {
        const Service& svc = result_.services[s];
        result_.service_at[static_cast<size_t>(svc.origin) * n + svc.target] = s;
        services_from_[svc.origin].push_back(s);  // services sorted, so targets ascend
    }
}

double Router::marginal_penalty(const Service& svc, bool reclass_at_target, long long volume) const {
    const PenaltyConfig& p = *penalties_;
    double pen = 0.0;
    const double added_trains = static_cast<double>(volume) / static_cast<double>(svc.train_size);
    for (int li : svc.path->link_indices) {
        const Link& link = inst_.links[li];
        const double usable = link.remaining_capacity_rate * link.capacity_trains;
        const double before = link_trains_[li];
        pen += p.beta_link *
               (std::max(0.0, before + added_trains - usable) - std::max(0.0, before - usable));
    }
    if (reclass_at_target) {
        const Yard& yard = inst_.yards[svc.target];
        const double usable = yard.reclass_capacity_factor * yard.reclass_capacity;
        const double before = static_cast<double>(yard_reclass_[svc.target]);
        pen += p.beta_yard * (std::max(0.0, before + static_cast<double>(volume) - usable) -
                              std::max(0.0, before - usable));
    }
    const long long d0 = result_.service_flow[&svc - result_.services.data()];
    const long long tracks_before = track_demand(d0, inst_.track_breakpoint_step);
    const long long tracks_after = track_demand(d0 + volume, inst_.track_breakpoint_step);
    if (tracks_after != tracks_before) {
        const Yard& yard = inst_.yards[svc.origin];
        const double t0 = static_cast<double>(yard_tracks_[svc.origin]);
        const double cap = static_cast<double>(yard.track_count);
        pen += p.beta_track *
               (std::max(0.0, t0 + static_cast<double>(tracks_after - tracks_before) - cap) -
                std::max(0.0, t0 - cap));
    }
    return pen;
}

bool Router::fast_eligible(int dest, long long remaining_volume) const {
    // The single-tree shortcut is exact only when no arc can carry a marginal
    // penalty and every arc cost is strictly positive (so the backward tree
    // with smallest-next-yard ties equals the lexicographic-minimum paths).
    long long min_train = std::numeric_limits<long long>::max();
    for (const Service& svc : result_.services) {
        const double cost =
            svc.leg_cost + (svc.target == dest ? 0.0 : inst_.yards[svc.target].relative_delay);
        if (cost <= 0.0) return false;
        min_train = std::min(min_train, svc.train_size);
    }
    if (result_.services.empty()) return true;
    const double added = static_cast<double>(remaining_volume) / static_cast<double>(min_train);
    for (size_t li = 0; li < inst_.links.size(); ++li) {
        const Link& link = inst_.links[li];
        const double usable = link.remaining_capacity_rate * link.capacity_trains;
        if (link_trains_[li] + added > usable) return false;
    }
    for (int y = 0; y < yard_count_; ++y) {
        const Yard& yard = inst_.yards[y];
        const double usable = yard.reclass_capacity_factor * yard.reclass_capacity;
        if (static_cast<double>(yard_reclass_[y] + remaining_volume) > usable) return false;
    }
    std::vector<long long> extra_tracks(yard_count_, 0);
    for (size_t s = 0; s < result_.services.size(); ++s) {
        const Service& svc = result_.services[s];
        extra_tracks[svc.origin] +=
            track_demand(result_.service_flow[s] + remaining_volume, inst_.track_breakpoint_step) -
            track_demand(result_.service_flow[s], inst_.track_breakpoint_step);
    }
    for (int y = 0; y < yard_count_; ++y)
        if (yard_tracks_[y] + extra_tracks[y] > inst_.yards[y].track_count) return false;
    return true;
}

void Router::commit_chain(int start, int dest) {
    const int n = yard_count_;
    long long volume = 0;
    int at = start;
    while (at != dest) {
        volume += unrouted_[at];
        unrouted_[at] = 0;
        const int k = result_.next[static_cast<size_t>(at) * n + dest];
        assert(k >= 0);
        const int s = result_.service_at[static_cast<size_t>(at) * n + k];
        assert(s >= 0);
        Service& svc = result_.services[s];

        const long long d0 = result_.service_flow[s];
        result_.service_flow[s] = d0 + volume;
        yard_tracks_[svc.origin] += track_demand(d0 + volume, inst_.track_breakpoint_step) -
                                    track_demand(d0, inst_.track_breakpoint_step);
        const double trains = static_cast<double>(volume) / static_cast<double>(svc.train_size);
        for (int li : svc.path->link_indices) link_trains_[li] += trains;
        if (k != dest) yard_reclass_[k] += volume;
        result_.car_flow[static_cast<size_t>(at) * n + dest] += volume;
        at = k;
    }
}

void Router::route_destination_fast(int dest) {
    const int n = yard_count_;
    const double inf = std::numeric_limits<double>::infinity();
    dist_.assign(n, inf);
    done_.assign(n, 0);
    dist_[dest] = 0.0;

    // Backward Dijkstra; every recorded next hop points at an already-settled
    // yard, so the tree is acyclic by construction. Ties prefer the smaller
    // next yard id, which yields the lexicographically smallest itinerary.
    for (;;) {
        int u = -1;
        for (int v = 0; v < n; ++v) {
            if (done_[v] || dist_[v] == inf) continue;
            if (u == -1 || dist_[v] < dist_[u]) u = v;
        }
        if (u == -1) break;
        done_[u] = 1;
        for (const Service& svc : result_.services) {
            if (svc.target != u) continue;
            const int s = svc.origin;
            if (done_[s]) continue;
            const double cost = svc.leg_cost + (u == dest ? 0.0 : inst_.yards[u].relative_delay);
            const double cand = dist_[u] + cost;
            int& next_ref = result_.next[static_cast<size_t>(s) * n + dest];
            if (cand < dist_[s]) {
                dist_[s] = cand;
                next_ref = u;
            } else if (cand == dist_[s] && next_ref >= 0 && u < next_ref) {
                next_ref = u;
            }
        }
    }

    // Clear tree entries for yards that end up carrying no flow after the
    // commits below; first route the parcels (largest volume, then id).
    std::vector<int> order;
    for (int y = 0; y < n; ++y)
        if (unrouted_[y] > 0) order.push_back(y);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (unrouted_[a] != unrouted_[b]) return unrouted_[a] > unrouted_[b];
        return a < b;
    });
    for (int u : order) {
        if (unrouted_[u] == 0) continue;  // absorbed by an earlier chain
        if (dist_[u] == inf)
            throw InfeasibleError(inst_.yard_name(u), inst_.yard_name(dest),
                                  "demand " + inst_.yard_name(u) + " -> " + inst_.yard_name(dest) +
                                      " cannot reach its destination over the provided services");
        commit_chain(u, dest);
    }
    for (int y = 0; y < n; ++y)
        if (result_.car_flow[static_cast<size_t>(y) * n + dest] == 0)
            result_.next[static_cast<size_t>(y) * n + dest] = -1;
}

void Router::route_destination_careful(int dest) {
    const int n = yard_count_;
    const double inf = std::numeric_limits<double>::infinity();

    auto sequence_from = [&](int v) {
        // Yard sequence from the parcel origin to v, via parent services.
        std::vector<int> seq;
        int at = v;
        while (at != -1) {
            seq.push_back(at);
            const int ps = parent_service_[at];
            at = ps < 0 ? -1 : result_.services[ps].origin;
        }
        std::reverse(seq.begin(), seq.end());
        return seq;
    };

    for (;;) {
        int origin = -1;
        for (int y = 0; y < n; ++y) {
            if (unrouted_[y] <= 0) continue;
            if (origin == -1 || unrouted_[y] > unrouted_[origin] ||
                (unrouted_[y] == unrouted_[origin] && y < origin))
                origin = y;
        }
        if (origin == -1) break;

        if (result_.next[static_cast<size_t>(origin) * n + dest] >= 0) {
            commit_chain(origin, dest);
            continue;
        }

        dist_.assign(n, inf);
        done_.assign(n, 0);
        parent_service_.assign(n, -1);
        vol_.assign(n, 0);
        dist_[origin] = 0.0;
        vol_[origin] = unrouted_[origin];

        // Forward Dijkstra ordered by (cost, yard sequence). Labels carry the
        // volume the parcel would have at each yard: local unrouted demand is
        // absorbed on the way, and that merged volume prices the marginal
        // capacity penalty of each boarding.
        bool reached = false;
        for (;;) {
            int u = -1;
            std::vector<int> u_seq;
            for (int v = 0; v < n; ++v) {
                if (done_[v] || dist_[v] == inf) continue;
                if (u == -1 || dist_[v] < dist_[u]) {
                    u = v;
                    u_seq = sequence_from(v);
                } else if (dist_[v] == dist_[u]) {
                    std::vector<int> seq = sequence_from(v);
                    if (seq < u_seq) {
                        u = v;
                        u_seq = std::move(seq);
                    }
                }
            }
            if (u == -1) break;
            if (u == dest) {
                reached = true;
                break;
            }
            done_[u] = 1;

            const int fixed = result_.next[static_cast<size_t>(u) * n + dest];
            for (int s : services_from_[u]) {
                const Service& svc = result_.services[s];
                const int k = svc.target;
                if (fixed >= 0 && k != fixed) continue;
                if (done_[k]) continue;
                const bool reclass = k != dest;
                const double cost = svc.leg_cost + (reclass ? inst_.yards[k].relative_delay : 0.0) +
                                    marginal_penalty(svc, reclass, vol_[u]);
                const double cand = dist_[u] + cost;
                if (cand < dist_[k]) {
                    dist_[k] = cand;
                    parent_service_[k] = s;
                    vol_[k] = vol_[u] + (reclass ? unrouted_[k] : 0);
                } else if (cand == dist_[k]) {
                    std::vector<int> candidate = u_seq;
                    candidate.push_back(k);
                    if (candidate < sequence_from(k)) {
                        parent_service_[k] = s;
                        vol_[k] = vol_[u] + (reclass ? unrouted_[k] : 0);
                    }
                }
            }
        }
        if (!reached)
            throw InfeasibleError(inst_.yard_name(origin), inst_.yard_name(dest),
                                  "demand " + inst_.yard_name(origin) + " -> " + inst_.yard_name(dest) +
                                      " cannot reach its destination over the provided services");

        // Fix the itinerary along the found path, then commit its volumes.
        std::vector<int> path_services;
        for (int at = dest; parent_service_[at] >= 0; at = result_.services[parent_service_[at]].origin)
            path_services.push_back(parent_service_[at]);
        std::reverse(path_services.begin(), path_services.end());
        for (int s : path_services) {
            const Service& svc = result_.services[s];
            int& next_ref = result_.next[static_cast<size_t>(svc.origin) * n + dest];
            assert(next_ref < 0 || next_ref == svc.target);
            next_ref = svc.target;
        }
        commit_chain(origin, dest);
    }
}

const RoutingResult& Router::route(const ServiceDesign& design, const PenaltyConfig& penalties, Mode mode) {
    penalties_ = &penalties;
    build_services(design);
    const int n = yard_count_;
    result_.next.assign(static_cast<size_t>(n) * n, -1);
    result_.car_flow.assign(static_cast<size_t>(n) * n, 0);
    result_.service_flow.assign(result_.services.size(), 0);
    link_trains_.assign(inst_.links.size(), 0.0);
    yard_reclass_.assign(n, 0);
    yard_tracks_.assign(n, 0);
    unrouted_.assign(n, 0);

    std::vector<long long> total(n, 0);
    for (const Demand& d : inst_.demands) total[d.destination] += d.volume;
    std::vector<int> dests;
    for (int y = 0; y < n; ++y)
        if (total[y] > 0) dests.push_back(y);
    std::sort(dests.begin(), dests.end(), [&](int a, int b) {
        if (total[a] != total[b]) return total[a] > total[b];
        return a < b;
    });

    for (int dest : dests) {
        std::fill(unrouted_.begin(), unrouted_.end(), 0);
        for (const Demand& d : inst_.demands)
            if (d.destination == dest && d.volume > 0) unrouted_[d.origin] = d.volume;

        bool fast;
        switch (mode) {
            case Mode::force_fast: fast = true; break;
            case Mode::force_careful: fast = false; break;
            default: fast = fast_eligible(dest, total[dest]); break;
        }
        if (fast)
            route_destination_fast(dest);
        else
            route_destination_careful(dest);
    }
    return result_;
}

FlowState Router::to_flow_state(const RoutingResult& result) const {
    const int n = yard_count_;
    FlowState state;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const size_t idx = static_cast<size_t>(i) * n + j;
            if (result.next[idx] >= 0) state.next_service[{i, j}] = result.next[idx];
            if (result.car_flow[idx] > 0) state.car_flow[{i, j}] = result.car_flow[idx];
        }
    }
    for (size_t s = 0; s < result.services.size(); ++s) {
        const Service& svc = result.services[s];
        state.service_flow[{svc.origin, svc.target}] = result.service_flow[s];
    }
    return state;
}

}  // namespace detail

FlowState route_all(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design,
                    const PenaltyConfig& penalties) {
    detail::resolve_services(inst, catalog, design, /*validate=*/true);
    detail::Router router(inst, catalog);
    const detail::RoutingResult& result = router.route(design, penalties);
    return router.to_flow_state(result);
}

std::pair<std::map<YardPair, long long>, std::map<YardPair, long long>> propagate_flows(
    const Instance& inst, const std::map<YardPair, int>& assignment) {
    const int n = inst.yard_count();

    std::map<YardPair, long long> car_flow;
    std::map<YardPair, long long> service_flow;

    std::set<int> dests;
    for (const auto& [pair, next] : assignment) {
        (void)next;
        dests.insert(pair.second);
    }
    for (const Demand& d : inst.demands)
        if (d.volume > 0) dests.insert(d.destination);

    for (int dest : dests) {
        std::vector<int> next(n, -1);
        for (const auto& [pair, hop] : assignment)
            if (pair.second == dest) next[pair.first] = hop;

        std::vector<long long> demand(n, 0);
        for (const Demand& d : inst.demands)
            if (d.destination == dest) demand[d.origin] = d.volume;

        // Depth of each yard along its chain to dest; also validates the
        // chains (cycle -> CycleError, dead end with flow -> InfeasibleError).
        std::vector<int> depth(n, -1);
        depth[dest] = 0;
        std::vector<int> stack;
        std::vector<char> on_stack(n, 0);
        for (int start = 0; start < n; ++start) {
            if (start == dest || (demand[start] <= 0 && next[start] < 0)) continue;
            if (depth[start] >= 0) continue;
            stack.clear();
            int at = start;
            while (at != dest && depth[at] < 0) {
                if (on_stack[at]) {
                    auto cycle_start = std::find(stack.begin(), stack.end(), at);
                    std::vector<int> cycle(cycle_start, stack.end());
                    std::string text = "cyclic assignment for destination " + inst.yard_name(dest) + ":";
                    for (int y : cycle) text += " " + inst.yard_name(y);
                    throw CycleError(cycle, text);
                }
                if (next[at] < 0)
                    throw InfeasibleError(inst.yard_name(at), inst.yard_name(dest),
                                          "flow stranded at " + inst.yard_name(at) + " destined " +
                                              inst.yard_name(dest) + ": no next service assigned");
                on_stack[at] = 1;
                stack.push_back(at);
                at = next[at];
            }
            int base = depth[at];
            for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
                depth[*it] = ++base;
                on_stack[*it] = 0;
            }
        }

        // Accumulate deepest-first so upstream flows are final before they join.
        std::vector<int> order;
        for (int y = 0; y < n; ++y)
            if (y != dest && depth[y] > 0) order.push_back(y);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (depth[a] != depth[b]) return depth[a] > depth[b];
            return a < b;
        });
        std::vector<long long> flow(n, 0);
        for (int y : order) flow[y] += demand[y];
        for (int y : order) {
            if (flow[y] <= 0) continue;
            car_flow[{y, dest}] = flow[y];
            service_flow[{y, next[y]}] += flow[y];
            if (next[y] != dest) flow[next[y]] += flow[y];
        }
    }
    return {std::move(car_flow), std::move(service_flow)};
}

std::vector<int> itinerary_of(const FlowState& state, int origin, int dest) {
    std::vector<int> seq{origin};
    int at = origin;
    while (at != dest) {
        const int next = state.next_of(at, dest);
        if (next < 0)
            throw InfeasibleError(std::to_string(origin), std::to_string(dest),
                                  "no itinerary recorded for this origin/destination");
        seq.push_back(next);
        if (seq.size() > state.next_service.size() + 2)
            throw CycleError(seq, "next_service chain does not terminate");
        at = next;
    }
    return seq;
}

}  // namespace railforge
