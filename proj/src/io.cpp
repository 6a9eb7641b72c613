#include "railforge/io.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "railforge/exact_oracle.hpp"

namespace railforge {

using nlohmann::json;

std::string content_digest(const std::string& bytes) {
    unsigned char hash[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(bytes.data(), bytes.size(), hash, &length, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out = "sha256:";
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[hash[i] >> 4]);
        out.push_back(hex[hash[i] & 0xf]);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    out << contents;
}

namespace {

json design_json(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design) {
    json services = json::array();
    for (const auto& [pair, idx] : design.services) {
        const CandidatePath& path = catalog.paths(pair.first, pair.second)[idx];
        json yards = json::array();
        for (int y : path.yards) yards.push_back(inst.yard_name(y));
        services.push_back({{"origin", inst.yard_name(pair.first)},
                            {"destination", inst.yard_name(pair.second)},
                            {"path_index", idx},
                            {"path", std::move(yards)}});
    }
    return json{{"schema", "railforge-design/1"}, {"services", std::move(services)}};
}

json flows_json(const Instance& inst, const FlowState& state) {
    json assignment = json::array();
    for (const auto& [pair, next] : state.next_service)
        assignment.push_back({{"at", inst.yard_name(pair.first)},
                              {"dest", inst.yard_name(pair.second)},
                              {"next", inst.yard_name(next)}});
    json car_flows = json::array();
    for (const auto& [pair, cars] : state.car_flow)
        car_flows.push_back({{"origin", inst.yard_name(pair.first)},
                             {"destination", inst.yard_name(pair.second)},
                             {"cars", cars}});
    json service_flows = json::array();
    for (const auto& [pair, cars] : state.service_flow)
        service_flows.push_back({{"origin", inst.yard_name(pair.first)},
                                 {"destination", inst.yard_name(pair.second)},
                                 {"cars", cars}});
    return json{{"assignment", std::move(assignment)},
                {"car_flows", std::move(car_flows)},
                {"service_flows", std::move(service_flows)}};
}

json energy_json(const EnergyBreakdown& e) {
    return json{{"accumulation", e.accumulation},
                {"transportation", e.transportation},
                {"reclassification", e.reclassification},
                {"link_overflow", e.link_overflow},
                {"yard_overflow", e.yard_overflow},
                {"track_overflow", e.track_overflow},
                {"Z", e.z},
                {"E", e.e}};
}

json sa_config_json(const SaConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"h1", cfg.h1},
                {"h2", cfg.h2},
                {"h3", cfg.h3},
                {"delta", cfg.delta},
                {"stat_cooling_iters", cfg.stat_cooling_iters},
                {"accept_floor", cfg.accept_floor},
                {"stall_coolings", cfg.stall_coolings},
                {"init_accept_ratio", cfg.init_accept_ratio},
                {"path_reselect_prob", cfg.path_reselect_prob}};
}

json penalties_json(const PenaltyConfig& p) {
    return json{{"beta_link", p.beta_link}, {"beta_yard", p.beta_yard}, {"beta_track", p.beta_track}};
}

int resolve_yard(const Instance& inst, const std::string& name, const std::string& where) {
    const int id = inst.yard_id(name);
    if (id < 0) throw IntegrityError(where + ": unknown yard '" + name + "'");
    return id;
}

}  // namespace

std::string flow_state_to_json(const Instance& inst, const FlowState& state) {
    return flows_json(inst, state).dump(2) + "\n";
}

std::string energy_to_json(const EnergyBreakdown& breakdown) { return energy_json(breakdown).dump(2) + "\n"; }

std::string solution_to_json(const Instance& inst, const SolutionDocument& doc) {
    // The path catalog is reproducible from the instance, so the design
    // section stores both the chosen index and the resolved yard sequence.
    PathCatalog catalog = build_catalog(inst);
    json out;
    out["schema"] = "railforge-solution/1";
    out["instance_digest"] = doc.instance_digest;
    out["design"] = design_json(inst, catalog, doc.design);
    out["flows"] = flows_json(inst, doc.flows);
    out["energy"] = energy_json(doc.energy);
    json solver;
    solver["method"] = doc.solver.method;
    solver["seed"] = doc.solver.seed;
    solver["iterations"] = doc.solver.iterations;
    solver["stop_reason"] = doc.solver.stop_reason;
    solver["rng"] = doc.solver.rng_name;
    if (doc.solver.sa_config) solver["config"] = sa_config_json(*doc.solver.sa_config);
    solver["penalties"] = penalties_json(doc.solver.penalties);
    out["solver"] = std::move(solver);
    return out.dump(2) + "\n";
}

SolutionDocument solution_from_json(const Instance& inst, const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("solution: not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("schema", "") != "railforge-solution/1")
        throw ParseError("solution: expected schema \"railforge-solution/1\"");

    SolutionDocument out;
    out.instance_digest = doc.value("instance_digest", "");

    for (const json& s : doc.at("design").at("services")) {
        const int o = resolve_yard(inst, s.at("origin").get<std::string>(), "solution design");
        const int d = resolve_yard(inst, s.at("destination").get<std::string>(), "solution design");
        out.design.services[{o, d}] = s.at("path_index").get<int>();
    }
    const json& flows = doc.at("flows");
    for (const json& a : flows.at("assignment")) {
        const int at = resolve_yard(inst, a.at("at").get<std::string>(), "solution assignment");
        const int dest = resolve_yard(inst, a.at("dest").get<std::string>(), "solution assignment");
        const int next = resolve_yard(inst, a.at("next").get<std::string>(), "solution assignment");
        out.flows.next_service[{at, dest}] = next;
    }
    for (const json& f : flows.at("car_flows")) {
        const int o = resolve_yard(inst, f.at("origin").get<std::string>(), "solution car_flows");
        const int d = resolve_yard(inst, f.at("destination").get<std::string>(), "solution car_flows");
        out.flows.car_flow[{o, d}] = f.at("cars").get<long long>();
    }
    for (const json& f : flows.at("service_flows")) {
        const int o = resolve_yard(inst, f.at("origin").get<std::string>(), "solution service_flows");
        const int d = resolve_yard(inst, f.at("destination").get<std::string>(), "solution service_flows");
        out.flows.service_flow[{o, d}] = f.at("cars").get<long long>();
    }
    const json& e = doc.at("energy");
    out.energy.accumulation = e.at("accumulation").get<double>();
    out.energy.transportation = e.at("transportation").get<double>();
    out.energy.reclassification = e.at("reclassification").get<double>();
    out.energy.link_overflow = e.at("link_overflow").get<double>();
    out.energy.yard_overflow = e.at("yard_overflow").get<double>();
    out.energy.track_overflow = e.at("track_overflow").get<double>();
    out.energy.z = e.at("Z").get<double>();
    out.energy.e = e.at("E").get<double>();

    const json& solver = doc.at("solver");
    out.solver.method = solver.value("method", "");
    out.solver.seed = solver.value("seed", 0ULL);
    out.solver.iterations = solver.value("iterations", 0LL);
    out.solver.stop_reason = solver.value("stop_reason", "");
    out.solver.rng_name = solver.value("rng", "");
    if (solver.contains("penalties")) {
        const json& p = solver["penalties"];
        out.solver.penalties.beta_link = p.value("beta_link", 1e3);
        out.solver.penalties.beta_yard = p.value("beta_yard", 1e3);
        out.solver.penalties.beta_track = p.value("beta_track", 1e3);
    }
    return out;
}

ServiceDesign design_from_json(const Instance& inst, const PathCatalog& catalog, const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("design: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("design: expected a JSON object");
    const std::string schema = doc.value("schema", "");
    if (schema == "railforge-solution/1") {
        return solution_from_json(inst, text).design;
    }
    if (schema != "railforge-design/1") throw ParseError("design: expected schema \"railforge-design/1\"");

    ServiceDesign design;
    for (const json& s : doc.at("services")) {
        const std::string where = "design service";
        const int o = resolve_yard(inst, s.at("origin").get<std::string>(), where);
        const int d = resolve_yard(inst, s.at("destination").get<std::string>(), where);
        const auto& candidates = catalog.paths(o, d);
        int index = -1;
        if (s.contains("path_index")) {
            index = s.at("path_index").get<int>();
        } else if (s.contains("path")) {
            std::vector<int> yards;
            for (const json& name : s.at("path"))
                yards.push_back(resolve_yard(inst, name.get<std::string>(), where));
            for (const CandidatePath& cand : candidates)
                if (cand.yards == yards) {
                    index = cand.index;
                    break;
                }
            if (index < 0)
                throw IntegrityError("design: path for " + inst.yard_name(o) + " -> " + inst.yard_name(d) +
                                     " is not among the candidate paths");
        } else {
            const int mandatory = catalog.mandatory_index(o, d);
            index = mandatory >= 0 ? mandatory : 0;
        }
        if (index < 0 || index >= static_cast<int>(candidates.size()))
            throw IntegrityError("design: service " + inst.yard_name(o) + " -> " + inst.yard_name(d) +
                                 " has no candidate path with index " + std::to_string(index));
        design.services[{o, d}] = index;
    }
    return design;
}

std::string design_to_json(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design) {
    return design_json(inst, catalog, design).dump(2) + "\n";
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream out;
    out << "step,sigma,mean_E,stderr_E,accept_rate,best_E\n";
    out.precision(17);
    for (const TraceRow& row : trace) {
        out << row.step << ',' << row.sigma << ',' << row.mean_energy << ',' << row.stderr_energy << ','
            << row.accept_rate << ',' << row.best_energy << '\n';
    }
    return out.str();
}

void apply_config_json(const std::string& text, SaConfig& sa, PenaltyConfig& penalties,
                       bool& penalties_given) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    penalties_given = false;
    for (const auto& [key, value] : doc.items()) {
        if (key == "seed") sa.seed = value.get<std::uint64_t>();
        else if (key == "h1") sa.h1 = value.get<double>();
        else if (key == "h2") sa.h2 = value.get<double>();
        else if (key == "h3") sa.h3 = value.get<double>();
        else if (key == "delta") sa.delta = value.get<double>();
        else if (key == "stat_cooling_iters") sa.stat_cooling_iters = value.get<int>();
        else if (key == "accept_floor") sa.accept_floor = value.get<double>();
        else if (key == "stall_coolings") sa.stall_coolings = value.get<int>();
        else if (key == "init_accept_ratio") sa.init_accept_ratio = value.get<double>();
        else if (key == "path_reselect_prob") sa.path_reselect_prob = value.get<double>();
        else if (key == "beta_link") { penalties.beta_link = value.get<double>(); penalties_given = true; }
        else if (key == "beta_yard") { penalties.beta_yard = value.get<double>(); penalties_given = true; }
        else if (key == "beta_track") { penalties.beta_track = value.get<double>(); penalties_given = true; }
        else throw ConfigError("config: unknown field '" + key + "'");
    }
}

SolutionDocument run_solve(const Instance& inst, const PathCatalog& catalog, const SaConfig& sa,
                           const PenaltyConfig* penalties, int multistart, const std::string& digest,
                           std::vector<TraceRow>* trace_out) {
    if (multistart < 1) throw ConfigError("multistart count must be >= 1");
    const PenaltyConfig resolved = penalties ? *penalties : default_penalties(inst, catalog);

    std::vector<SaRun> runs(multistart);
    if (multistart == 1) {
        runs[0] = anneal(inst, catalog, sa, resolved);
    } else {
        std::vector<std::future<SaRun>> futures;
        futures.reserve(multistart);
        for (int i = 0; i < multistart; ++i) {
            SaConfig cfg = sa;
            cfg.seed = sa.seed + static_cast<std::uint64_t>(i);
            futures.push_back(std::async(std::launch::async,
                                         [&inst, &catalog, cfg, resolved] { return anneal(inst, catalog, cfg, resolved); }));
        }
        for (int i = 0; i < multistart; ++i) runs[i] = futures[i].get();
    }

    int best = 0;
    for (int i = 1; i < multistart; ++i)
        if (runs[i].best_energy.e < runs[best].best_energy.e) best = i;
    SaRun& run = runs[best];

    if (trace_out) *trace_out = run.trace;

    SolutionDocument doc;
    doc.instance_digest = digest;
    doc.design = std::move(run.best_design);
    doc.flows = std::move(run.best_state);
    doc.energy = run.best_energy;
    doc.solver.method = "sa";
    doc.solver.seed = run.config.seed;
    doc.solver.iterations = run.iterations;
    doc.solver.stop_reason = to_string(run.stop_reason);
    doc.solver.sa_config = run.config;
    doc.solver.penalties = run.penalties;
    doc.solver.rng_name = run.rng_name;
    return doc;
}

SolutionDocument run_oracle(const Instance& inst, const PathCatalog& catalog, const OracleLimits& limits,
                            const PenaltyConfig* penalties, const std::string& digest) {
    const PenaltyConfig resolved = penalties ? *penalties : default_penalties(inst, catalog);
    OracleResult result = enumerate_optimum(inst, catalog, limits, resolved);

    SolutionDocument doc;
    doc.instance_digest = digest;
    doc.design = std::move(result.design);
    doc.flows = std::move(result.assignment);
    doc.energy = result.energy;
    doc.solver.method = "oracle";
    doc.solver.seed = 0;
    doc.solver.iterations = result.designs_evaluated;
    doc.solver.stop_reason = "exhausted";
    doc.solver.penalties = resolved;
    doc.solver.rng_name = "";
    return doc;
}

}  // namespace railforge
