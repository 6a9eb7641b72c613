#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "railforge/exact_oracle.hpp"
#include "railforge/generator.hpp"
#include "railforge/io.hpp"

namespace {

using namespace railforge;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

struct LoadedInstance {
    Instance inst;
    std::string digest;
};

LoadedInstance load(const std::string& path) {
    const std::string bytes = read_file(path);
    LoadedInstance out{parse_instance(bytes), content_digest(bytes)};
    return out;
}

void print_breakdown(const EnergyBreakdown& e) {
    std::printf("energy breakdown\n");
    std::printf("  accumulation      %14.3f\n", e.accumulation);
    std::printf("  transportation    %14.3f\n", e.transportation);
    std::printf("  reclassification  %14.3f\n", e.reclassification);
    std::printf("  Z                 %14.3f\n", e.z);
    std::printf("  link overflow     %14.3f trains\n", e.link_overflow);
    std::printf("  yard overflow     %14.3f cars\n", e.yard_overflow);
    std::printf("  track overflow    %14.3f tracks\n", e.track_overflow);
    std::printf("  E                 %14.3f\n", e.e);
}

void print_utilization(const Instance& inst, const CapacityUsage& usage) {
    std::printf("capacity utilization\n");
    for (size_t li = 0; li < inst.links.size(); ++li) {
        const Link& link = inst.links[li];
        const double usable = link.remaining_capacity_rate * link.capacity_trains;
        if (usage.link_trains[li] <= 0 && usable >= 1e11) continue;  // idle uncapacitated link
        const double pct = usable > 0 ? 100.0 * usage.link_trains[li] / usable : 0.0;
        std::printf("  link %s -> %s: %.3f / %.3f trains (%.1f%%)\n", inst.yard_name(link.from).c_str(),
                    inst.yard_name(link.to).c_str(), usage.link_trains[li], usable, pct);
    }
    for (int y = 0; y < inst.yard_count(); ++y) {
        const Yard& yard = inst.yards[y];
        const double usable = yard.reclass_capacity_factor * yard.reclass_capacity;
        const double pct = usable > 0 ? 100.0 * usage.yard_reclass_cars[y] / usable : 0.0;
        std::printf("  yard %s: reclass %.0f / %.0f cars (%.1f%%), tracks %lld / %lld\n",
                    yard.name.c_str(), usage.yard_reclass_cars[y], usable, pct,
                    static_cast<long long>(usage.yard_tracks[y]), yard.track_count);
    }
}

bool print_diagnostics(const std::vector<Diagnostic>& diagnostics, bool as_json) {
    bool has_error = false;
    if (as_json) {
        nlohmann::json out = nlohmann::json::array();
        for (const Diagnostic& d : diagnostics) {
            out.push_back({{"severity", d.severity == Diagnostic::Severity::error ? "error" : "warning"},
                           {"code", d.code},
                           {"message", d.message}});
            has_error |= d.severity == Diagnostic::Severity::error;
        }
        std::printf("%s\n", out.dump(2).c_str());
    } else {
        for (const Diagnostic& d : diagnostics) {
            std::printf("%s: %s [%s]\n", d.severity == Diagnostic::Severity::error ? "error" : "warning",
                        d.message.c_str(), d.code.c_str());
            has_error |= d.severity == Diagnostic::Severity::error;
        }
        if (diagnostics.empty()) std::printf("instance is valid\n");
    }
    return has_error;
}

int run_validate(const std::string& instance_path, bool as_json, const std::string& catalog_path) {
    LoadedInstance loaded = load(instance_path);
    const bool has_error = print_diagnostics(validate_instance(loaded.inst), as_json);
    if (!catalog_path.empty())
        write_file(catalog_path, catalog_to_json(loaded.inst, build_catalog(loaded.inst)));
    return has_error ? kExitDomain : kExitOk;
}

int require_valid(const Instance& inst) {
    const auto diagnostics = validate_instance(inst);
    for (const Diagnostic& d : diagnostics) {
        if (d.severity == Diagnostic::Severity::error) {
            std::fprintf(stderr, "invalid instance: %s\n", d.message.c_str());
            return kExitDomain;
        }
    }
    return kExitOk;
}

int run_solve(const std::string& instance_path, std::uint64_t seed, bool seed_given,
              const std::string& config_path, const std::string& out_path, const std::string& trace_path,
              int multistart, bool as_json) {
    LoadedInstance loaded = load(instance_path);
    if (int rc = require_valid(loaded.inst); rc != kExitOk) return rc;

    SaConfig cfg;
    PenaltyConfig penalties;
    bool penalties_given = false;
    if (!config_path.empty()) apply_config_json(read_file(config_path), cfg, penalties, penalties_given);
    if (seed_given) cfg.seed = seed;

    PathCatalog catalog = build_catalog(loaded.inst);
    std::vector<TraceRow> trace;
    const auto start = std::chrono::steady_clock::now();
    SolutionDocument doc = railforge::run_solve(loaded.inst, catalog, cfg,
                                                penalties_given ? &penalties : nullptr, multistart,
                                                loaded.digest, &trace);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!out_path.empty()) write_file(out_path, solution_to_json(loaded.inst, doc));
    if (!trace_path.empty()) write_file(trace_path, trace_to_csv(trace));

    if (as_json) {
        std::printf("%s", solution_to_json(loaded.inst, doc).c_str());
    } else {
        std::printf("instance: %s (%s)\n", instance_path.c_str(), loaded.digest.c_str());
        std::printf("solver: sa seed=%llu multistart=%d iterations=%lld stop=%s wall=%.2fs\n",
                    static_cast<unsigned long long>(doc.solver.seed), multistart, doc.solver.iterations,
                    doc.solver.stop_reason.c_str(), wall);
        std::printf("penalties: beta_link=%.3f beta_yard=%.3f beta_track=%.3f\n",
                    doc.solver.penalties.beta_link, doc.solver.penalties.beta_yard,
                    doc.solver.penalties.beta_track);
        print_breakdown(doc.energy);
        print_utilization(loaded.inst,
                          capacity_usage(loaded.inst, catalog, doc.design, doc.flows));
    }
    const bool feasible =
        doc.energy.link_overflow == 0 && doc.energy.yard_overflow == 0 && doc.energy.track_overflow == 0;
    return feasible ? kExitOk : kExitInfeasible;
}

int run_oracle(const std::string& instance_path, const std::string& config_path, const std::string& out_path,
               long long max_designs, long long max_assignments, bool as_json) {
    LoadedInstance loaded = load(instance_path);
    if (int rc = require_valid(loaded.inst); rc != kExitOk) return rc;

    SaConfig unused;
    PenaltyConfig penalties;
    bool penalties_given = false;
    if (!config_path.empty()) apply_config_json(read_file(config_path), unused, penalties, penalties_given);

    PathCatalog catalog = build_catalog(loaded.inst);
    OracleLimits limits;
    limits.max_designs = max_designs;
    limits.max_assignments = max_assignments;
    SolutionDocument doc = railforge::run_oracle(loaded.inst, catalog, limits,
                                                 penalties_given ? &penalties : nullptr, loaded.digest);

    if (!out_path.empty()) write_file(out_path, solution_to_json(loaded.inst, doc));
    if (as_json) {
        std::printf("%s", solution_to_json(loaded.inst, doc).c_str());
    } else {
        std::printf("instance: %s (%s)\n", instance_path.c_str(), loaded.digest.c_str());
        std::printf("oracle: designs=%lld\n", doc.solver.iterations);
        print_breakdown(doc.energy);
        print_utilization(loaded.inst, capacity_usage(loaded.inst, catalog, doc.design, doc.flows));
    }
    const bool feasible =
        doc.energy.link_overflow == 0 && doc.energy.yard_overflow == 0 && doc.energy.track_overflow == 0;
    return feasible ? kExitOk : kExitInfeasible;
}

int run_evaluate(const std::string& instance_path, const std::string& plan_path,
                 const std::string& config_path, bool as_json) {
    LoadedInstance loaded = load(instance_path);
    if (int rc = require_valid(loaded.inst); rc != kExitOk) return rc;
    PathCatalog catalog = build_catalog(loaded.inst);

    SaConfig unused;
    PenaltyConfig penalties;
    bool penalties_given = false;
    if (!config_path.empty()) apply_config_json(read_file(config_path), unused, penalties, penalties_given);

    const std::string plan_bytes = read_file(plan_path);
    nlohmann::json plan = nlohmann::json::parse(plan_bytes, nullptr, false);
    const bool is_solution = plan.is_object() && plan.value("schema", "") == "railforge-solution/1";

    ServiceDesign design;
    FlowState state;
    PenaltyConfig used = penalties_given ? penalties : default_penalties(loaded.inst, catalog);
    std::optional<double> stored_energy;

    if (is_solution) {
        SolutionDocument doc = solution_from_json(loaded.inst, plan_bytes);
        if (doc.instance_digest != loaded.digest) {
            std::fprintf(stderr, "solution document was produced from a different instance (digest mismatch)\n");
            return kExitDomain;
        }
        design = doc.design;
        if (!penalties_given) used = doc.solver.penalties;
        stored_energy = doc.energy.e;
        // Rebuild the flows from the stored assignment; they must agree.
        auto [car_flow, service_flow] = propagate_flows(loaded.inst, doc.flows.next_service);
        state.next_service = doc.flows.next_service;
        state.car_flow = std::move(car_flow);
        state.service_flow = std::move(service_flow);
        for (const auto& [pair, idx] : design.services) {
            (void)idx;
            state.service_flow.emplace(pair, 0);
        }
        if (state.car_flow != doc.flows.car_flow) {
            std::fprintf(stderr, "stored car flows are inconsistent with the stored assignment\n");
            return kExitDomain;
        }
    } else {
        design = design_from_json(loaded.inst, catalog, plan_bytes);
        state = route_all(loaded.inst, catalog, design, used);
    }

    const EnergyBreakdown breakdown = energy(loaded.inst, catalog, design, state, used);
    const CapacityUsage usage = capacity_usage(loaded.inst, catalog, design, state);

    if (as_json) {
        nlohmann::json out;
        out["energy"] = nlohmann::json::parse(energy_to_json(breakdown));
        out["flows"] = nlohmann::json::parse(flow_state_to_json(loaded.inst, state));
        if (stored_energy) out["stored_E"] = *stored_energy;
        std::printf("%s\n", out.dump(2).c_str());
    } else {
        print_breakdown(breakdown);
        print_utilization(loaded.inst, usage);
        if (stored_energy) std::printf("stored E: %.6f, recomputed E: %.6f\n", *stored_energy, breakdown.e);
    }
    if (stored_energy && *stored_energy != breakdown.e) {
        std::fprintf(stderr, "stored energy does not match the recomputed energy\n");
        return kExitDomain;
    }
    return kExitOk;
}

int run_gen(int yards, double line_density, double demand_density, double capacity_factor,
            std::uint64_t seed, const std::string& out_path) {
    GenParams params;
    params.yards = yards;
    params.line_density = line_density;
    params.demand_density = demand_density;
    params.capacity_factor = capacity_factor;
    params.seed = seed;
    const Instance inst = generate_instance(params);
    const std::string text = serialize_instance(inst);
    if (out_path.empty())
        std::printf("%s", text.c_str());
    else
        write_file(out_path, text);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"railforge: joint railcar itinerary and train formation plan optimization"};
    app.require_subcommand(1);

    std::string instance_path, plan_path, config_path, out_path, trace_path, catalog_path;
    bool as_json = false;
    std::uint64_t seed = 0;
    int multistart = 1;
    long long max_designs = 1'000'000, max_assignments = 1'000'000;
    int gen_yards = 6;
    double line_density = 0.15, demand_density = 0.5, capacity_factor = 1.5;

    CLI::App* validate = app.add_subcommand("validate", "check an instance file");
    validate->add_option("instance", instance_path)->required();
    validate->add_flag("--json", as_json, "machine-readable report");
    validate->add_option("--catalog", catalog_path, "also dump the candidate-path catalog to this file");

    CLI::App* solve = app.add_subcommand("solve", "run the simulated-annealing solver");
    solve->add_option("instance", instance_path)->required();
    CLI::Option* seed_opt = solve->add_option("--seed", seed, "RNG seed");
    solve->add_option("--config", config_path, "SA + penalty parameters (JSON)");
    solve->add_option("--out", out_path, "write the solution document here");
    solve->add_option("--trace", trace_path, "write the cooling trace as CSV");
    solve->add_option("--multistart", multistart, "independent seeds run concurrently")
        ->check(CLI::PositiveNumber);
    solve->add_flag("--json", as_json);

    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a design or solution document");
    evaluate->add_option("instance", instance_path)->required();
    evaluate->add_option("plan", plan_path, "design or solution document")->required();
    evaluate->add_option("--config", config_path);
    evaluate->add_flag("--json", as_json);

    CLI::App* oracle = app.add_subcommand("oracle", "exhaustive optimum on a tiny instance");
    oracle->add_option("instance", instance_path)->required();
    oracle->add_option("--config", config_path, "penalty parameters (JSON)");
    oracle->add_option("--out", out_path);
    oracle->add_option("--max-designs", max_designs);
    oracle->add_option("--max-assignments", max_assignments);
    oracle->add_flag("--json", as_json);

    CLI::App* gen = app.add_subcommand("gen", "generate a random connected instance");
    gen->add_option("--yards", gen_yards);
    gen->add_option("--line-density", line_density);
    gen->add_option("--demand-density", demand_density);
    gen->add_option("--capacity-factor", capacity_factor);
    gen->add_option("--seed", seed);
    gen->add_option("--out", out_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand(validate)) return run_validate(instance_path, as_json, catalog_path);
        if (app.got_subcommand(solve))
            return run_solve(instance_path, seed, seed_opt->count() > 0, config_path, out_path, trace_path,
                             multistart, as_json);
        if (app.got_subcommand(evaluate)) return run_evaluate(instance_path, plan_path, config_path, as_json);
        if (app.got_subcommand(oracle))
            return run_oracle(instance_path, config_path, out_path, max_designs, max_assignments, as_json);
        if (app.got_subcommand(gen))
            return run_gen(gen_yards, line_density, demand_density, capacity_factor, seed, out_path);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
    } catch (const SizeLimitError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
    } catch (const IntegrityError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitDomain;
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitDomain;
    } catch (const CycleError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitDomain;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
