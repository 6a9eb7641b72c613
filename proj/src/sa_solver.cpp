#include "railforge/sa_solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace railforge {

void validate_config(const SaConfig& cfg) {
    if (!(cfg.h3 > 0.0 && cfg.h3 < 1.0)) throw ConfigError("h3 must be in (0,1)");
    if (!(cfg.delta > 0.0)) throw ConfigError("delta must be > 0");
    if (!(cfg.init_accept_ratio > 0.0 && cfg.init_accept_ratio < 1.0))
        throw ConfigError("init_accept_ratio must be in (0,1)");
    if (!(cfg.h2 > 0.0 && cfg.h1 >= cfg.h2)) throw ConfigError("h1 >= h2 > 0 required");
    if (cfg.stat_cooling_iters < 0) throw ConfigError("stat_cooling_iters must be >= 0");
    if (cfg.accept_floor < 0.0) throw ConfigError("accept_floor must be >= 0");
    if (cfg.stall_coolings < 1) throw ConfigError("stall_coolings must be >= 1");
    if (cfg.path_reselect_prob < 0.0 || cfg.path_reselect_prob > 1.0)
        throw ConfigError("path_reselect_prob must be in [0,1]");
}

const char* to_string(StopReason reason) {
    switch (reason) {
        case StopReason::accept_floor: return "accept_floor";
        case StopReason::stalled: return "stalled";
        case StopReason::no_moves: return "no_moves";
    }
    return "unknown";
}

std::pair<ServiceDesign, FlowState> initial_solution(const Instance& inst, const PathCatalog& catalog,
                                                     const PenaltyConfig* penalties) {
    ServiceDesign design;
    for (const Link& link : inst.links) {
        const YardPair pair{link.from, link.to};
        if (design.services.count(pair)) continue;
        const int mandatory = catalog.mandatory_index(pair.first, pair.second);
        design.services[pair] = mandatory >= 0 ? mandatory : 0;
    }
    for (const YardPair& pair : inst.operational_sets.forced_services) {
        if (!catalog.has_path(pair.first, pair.second))
            throw InfeasibleError(inst.yard_name(pair.first), inst.yard_name(pair.second),
                                  "forced service " + inst.yard_name(pair.first) + " -> " +
                                      inst.yard_name(pair.second) + " has no candidate path");
        const int mandatory = catalog.mandatory_index(pair.first, pair.second);
        design.services[pair] = mandatory >= 0 ? mandatory : 0;
    }

    const PenaltyConfig provisional{1e3, 1e3, 1e3};
    FlowState state = route_all(inst, catalog, design, penalties ? *penalties : provisional);
    return {std::move(design), std::move(state)};
}

std::set<YardPair> potential_services(const Instance& inst, const PathCatalog& catalog) {
    std::set<YardPair> out;
    const int n = inst.yard_count();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (!catalog.has_path(i, j)) continue;
            if (inst.link_index(i, j) >= 0) continue;  // adjacent, always provided
            if (inst.operational_sets.forced_services.count({i, j})) continue;
            if (inst.operational_sets.forbidden_services.count({i, j})) continue;
            out.insert({i, j});
        }
    }
    return out;
}

namespace {

struct Move {
    enum class Kind { add, remove, reselect };
    Kind kind = Kind::add;
    YardPair pair{-1, -1};
    int path_index = -1;  // add/reselect: the new path
    int prev_index = -1;  // remove/reselect: the previous path, for undo
};

// Services whose path can be re-drawn: provided, several candidates, not
// pinned by a prescribed path.
std::vector<YardPair> reselect_targets(const PathCatalog& catalog, const ServiceDesign& design) {
    std::vector<YardPair> out;
    for (const auto& [pair, idx] : design.services) {
        (void)idx;
        if (catalog.paths(pair.first, pair.second).size() < 2) continue;
        if (catalog.mandatory_index(pair.first, pair.second) >= 0) continue;
        out.push_back(pair);
    }
    return out;
}

// Draw one legal move. RNG use, in order: one real for the move kind, then
// one index draw for the target, then one index draw for the path when the
// move needs one. A kind with no legal target falls through to the other.
std::optional<Move> draw_move(Rng& rng, const PathCatalog& catalog, const ServiceDesign& design,
                              const std::vector<YardPair>& toggleable, double path_reselect_prob) {
    const std::vector<YardPair> reselectable = reselect_targets(catalog, design);
    bool want_reselect = rng.uniform_real() < path_reselect_prob;
    if (want_reselect && reselectable.empty()) want_reselect = false;
    if (!want_reselect && toggleable.empty()) want_reselect = !reselectable.empty();
    if (!want_reselect && toggleable.empty()) return std::nullopt;

    Move move;
    if (want_reselect) {
        move.kind = Move::Kind::reselect;
        move.pair = reselectable[rng.uniform_index(reselectable.size())];
        const auto& paths = catalog.paths(move.pair.first, move.pair.second);
        move.prev_index = design.services.at(move.pair);
        int draw = static_cast<int>(rng.uniform_index(paths.size() - 1));
        move.path_index = draw >= move.prev_index ? draw + 1 : draw;
        return move;
    }

    move.pair = toggleable[rng.uniform_index(toggleable.size())];
    auto it = design.services.find(move.pair);
    if (it != design.services.end()) {
        move.kind = Move::Kind::remove;
        move.prev_index = it->second;
    } else {
        move.kind = Move::Kind::add;
        const int mandatory = catalog.mandatory_index(move.pair.first, move.pair.second);
        const auto& paths = catalog.paths(move.pair.first, move.pair.second);
        if (mandatory >= 0)
            move.path_index = mandatory;
        else if (paths.size() == 1)
            move.path_index = 0;
        else
            move.path_index = static_cast<int>(rng.uniform_index(paths.size()));
    }
    return move;
}

void apply_move(ServiceDesign& design, const Move& move) {
    switch (move.kind) {
        case Move::Kind::add: design.services[move.pair] = move.path_index; break;
        case Move::Kind::remove: design.services.erase(move.pair); break;
        case Move::Kind::reselect: design.services[move.pair] = move.path_index; break;
    }
}

void revert_move(ServiceDesign& design, const Move& move) {
    switch (move.kind) {
        case Move::Kind::add: design.services.erase(move.pair); break;
        case Move::Kind::remove: design.services[move.pair] = move.prev_index; break;
        case Move::Kind::reselect: design.services[move.pair] = move.prev_index; break;
    }
}

std::vector<YardPair> toggleable_list(const Instance& inst, const PathCatalog& catalog) {
    std::set<YardPair> set = potential_services(inst, catalog);
    return {set.begin(), set.end()};
}

}  // namespace

std::pair<ServiceDesign, FlowState> neighbor(Rng& rng, const Instance& inst, const PathCatalog& catalog,
                                             const ServiceDesign& design, const SaConfig& cfg,
                                             const PenaltyConfig& penalties) {
    const std::vector<YardPair> toggleable = toggleable_list(inst, catalog);
    std::optional<Move> move = draw_move(rng, catalog, design, toggleable, cfg.path_reselect_prob);
    if (!move) throw ConfigError("no legal neighborhood move exists for this instance");
    ServiceDesign next = design;
    apply_move(next, *move);
    FlowState state = route_all(inst, catalog, next, penalties);
    return {std::move(next), std::move(state)};
}

double initial_temperature_from_deltas(const std::vector<double>& positive_deltas, double init_accept_ratio) {
    if (positive_deltas.empty()) return 1.0;
    double sum = 0.0;
    for (double d : positive_deltas) sum += d;
    const double mean = sum / static_cast<double>(positive_deltas.size());
    return mean / std::log(1.0 / init_accept_ratio);
}

double initial_temperature(Rng& rng, const Instance& inst, const PathCatalog& catalog,
                           const ServiceDesign& design0, const SaConfig& cfg,
                           const PenaltyConfig& penalties) {
    const std::vector<YardPair> toggleable = toggleable_list(inst, catalog);
    detail::Router router(inst, catalog);

    auto energy_of = [&](const ServiceDesign& d) {
        const detail::RoutingResult& r = router.route(d, penalties);
        detail::EvaluationInput in{&r.services, &r.next, &r.car_flow};
        return detail::evaluate(inst, in, penalties).breakdown.e;
    };
    const double e0 = energy_of(design0);

    constexpr int kSamples = 200;
    std::vector<double> positive;
    ServiceDesign scratch = design0;
    for (int i = 0; i < kSamples; ++i) {
        std::optional<Move> move = draw_move(rng, catalog, scratch, toggleable, cfg.path_reselect_prob);
        if (!move) break;
        apply_move(scratch, *move);
        const double delta = energy_of(scratch) - e0;
        revert_move(scratch, *move);
        if (delta > 0) positive.push_back(delta);
    }
    return initial_temperature_from_deltas(positive, cfg.init_accept_ratio);
}

double update_temperature(int step, double sigma, double stderr_energy, const SaConfig& cfg) {
    if (step <= cfg.stat_cooling_iters && stderr_energy > 0.0)
        return sigma / (1.0 + sigma * std::log1p(cfg.delta) / (3.0 * stderr_energy));
    return cfg.h3 * sigma;
}

bool metropolis_accept(Rng& rng, double delta_e, double sigma) {
    if (delta_e <= 0.0) return true;
    if (sigma <= 0.0) return false;
    return rng.uniform_real() < std::exp(-delta_e / sigma);
}

SaRun anneal(const Instance& inst, const PathCatalog& catalog, const SaConfig& cfg,
             const PenaltyConfig& penalties) {
    validate_config(cfg);

    SaRun run;
    run.config = cfg;
    run.penalties = penalties;
    run.rng_name = Rng::name();

    auto [design0, state0] = initial_solution(inst, catalog, &penalties);
    const std::vector<YardPair> toggleable = toggleable_list(inst, catalog);

    detail::Router router(inst, catalog);
    auto evaluate_result = [&](const detail::RoutingResult& r) {
        detail::EvaluationInput in{&r.services, &r.next, &r.car_flow};
        return detail::evaluate(inst, in, penalties).breakdown;
    };

    ServiceDesign current = design0;
    EnergyBreakdown current_energy = evaluate_result(router.route(current, penalties));

    run.best_design = current;
    run.best_state = std::move(state0);
    run.best_energy = current_energy;

    if (toggleable.empty() && reselect_targets(catalog, current).empty()) {
        run.stop_reason = StopReason::no_moves;
        return run;
    }

    Rng sampler(cfg.seed, 1);
    double sigma = initial_temperature(sampler, inst, catalog, design0, cfg, penalties);
    Rng chain(cfg.seed, 2);

    double prev_mean = 0.0;
    bool has_prev_mean = false;
    int stall_count = 0;

    for (int step = 1;; ++step) {
        const double x_size =
            static_cast<double>(toggleable.size()) + static_cast<double>(current.services.size());
        const double generated_cap = cfg.h1 * x_size;
        const double accepted_cap = cfg.h2 * x_size;

        long long generated = 0;
        long long accepted = 0;
        // Welford accumulation of the chain-state energies at this temperature.
        double mean = 0.0;
        double m2 = 0.0;

        while (static_cast<double>(generated) < generated_cap &&
               static_cast<double>(accepted) < accepted_cap) {
            std::optional<Move> move = draw_move(chain, catalog, current, toggleable, cfg.path_reselect_prob);
            if (!move) {
                run.stop_reason = StopReason::no_moves;
                run.iterations += generated;
                return run;
            }
            apply_move(current, *move);
            const detail::RoutingResult& routed = router.route(current, penalties);
            const EnergyBreakdown candidate = evaluate_result(routed);
            ++generated;

            if (metropolis_accept(chain, candidate.e - current_energy.e, sigma)) {
                ++accepted;
                current_energy = candidate;
                if (candidate.e < run.best_energy.e) {
                    run.best_design = current;
                    run.best_state = router.to_flow_state(routed);
                    run.best_energy = candidate;
                }
            } else {
                revert_move(current, *move);
            }

            const double sample = current_energy.e;
            const double d1 = sample - mean;
            mean += d1 / static_cast<double>(generated);
            m2 += d1 * (sample - mean);
        }
        run.iterations += generated;

        const double spread =
            generated > 1 ? std::sqrt(m2 / static_cast<double>(generated - 1)) : 0.0;
        const double accept_rate =
            generated > 0 ? static_cast<double>(accepted) / static_cast<double>(generated) : 0.0;
        run.trace.push_back({step, sigma, mean, spread, accept_rate, run.best_energy.e});

        if (accept_rate < cfg.accept_floor) {
            run.stop_reason = StopReason::accept_floor;
            break;
        }
        if (has_prev_mean) {
            const double rel = std::abs(mean - prev_mean) / std::max(std::abs(prev_mean), 1e-12);
            if (rel < 1e-4) {
                if (++stall_count >= cfg.stall_coolings) {
                    run.stop_reason = StopReason::stalled;
                    break;
                }
            } else {
                stall_count = 0;
            }
        }
        prev_mean = mean;
        has_prev_mean = true;

        sigma = update_temperature(step, sigma, spread, cfg);
    }
    return run;
}

}  // namespace railforge
