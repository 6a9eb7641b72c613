#include <pybind11/pybind11.h>

#include <json.hpp>

#include "railforge/exact_oracle.hpp"
#include "railforge/generator.hpp"
#include "railforge/io.hpp"

namespace py = pybind11;
using namespace railforge;

namespace {

// The module exchanges JSON text; the python package wraps it with dicts.

Instance instance_of(const std::string& text) { return parse_instance(text); }

std::string py_validate(const std::string& instance_json) {
    Instance inst = instance_of(instance_json);
    nlohmann::json out = nlohmann::json::array();
    for (const Diagnostic& d : validate_instance(inst))
        out.push_back({{"severity", d.severity == Diagnostic::Severity::error ? "error" : "warning"},
                       {"code", d.code},
                       {"message", d.message}});
    return out.dump();
}

std::string py_solve(const std::string& instance_json, std::uint64_t seed, const std::string& config_json,
                     int multistart) {
    Instance inst = instance_of(instance_json);
    SaConfig cfg;
    PenaltyConfig penalties;
    bool penalties_given = false;
    if (!config_json.empty()) apply_config_json(config_json, cfg, penalties, penalties_given);
    cfg.seed = seed;
    PathCatalog catalog = build_catalog(inst);
    SolutionDocument doc = run_solve(inst, catalog, cfg, penalties_given ? &penalties : nullptr, multistart,
                                     content_digest(instance_json));
    return solution_to_json(inst, doc);
}

std::string py_oracle(const std::string& instance_json, long long max_designs, long long max_assignments,
                      const std::string& config_json) {
    Instance inst = instance_of(instance_json);
    SaConfig unused;
    PenaltyConfig penalties;
    bool penalties_given = false;
    if (!config_json.empty()) apply_config_json(config_json, unused, penalties, penalties_given);
    PathCatalog catalog = build_catalog(inst);
    OracleLimits limits{max_designs, max_assignments};
    SolutionDocument doc =
        run_oracle(inst, catalog, limits, penalties_given ? &penalties : nullptr, content_digest(instance_json));
    return solution_to_json(inst, doc);
}

std::string py_evaluate(const std::string& instance_json, const std::string& design_json,
                        const std::string& config_json) {
    Instance inst = instance_of(instance_json);
    PathCatalog catalog = build_catalog(inst);
    SaConfig unused;
    PenaltyConfig penalties;
    bool penalties_given = false;
    if (!config_json.empty()) apply_config_json(config_json, unused, penalties, penalties_given);
    const PenaltyConfig used = penalties_given ? penalties : default_penalties(inst, catalog);
    ServiceDesign design = design_from_json(inst, catalog, design_json);
    FlowState state = route_all(inst, catalog, design, used);
    nlohmann::json out;
    out["energy"] = nlohmann::json::parse(energy_to_json(energy(inst, catalog, design, state, used)));
    out["flows"] = nlohmann::json::parse(flow_state_to_json(inst, state));
    return out.dump();
}

std::string py_generate(int yards, double line_density, double demand_density, double capacity_factor,
                        std::uint64_t seed) {
    GenParams params;
    params.yards = yards;
    params.line_density = line_density;
    params.demand_density = demand_density;
    params.capacity_factor = capacity_factor;
    params.seed = seed;
    return serialize_instance(generate_instance(params));
}

std::string py_sufficient_services(const std::string& instance_json) {
    Instance inst = instance_of(instance_json);
    nlohmann::json out = nlohmann::json::array();
    for (const YardPair& pair : sufficient_condition_services(inst))
        out.push_back({inst.yard_name(pair.first), inst.yard_name(pair.second)});
    return out.dump();
}

}  // namespace

PYBIND11_MODULE(_railforge, m) {
    m.doc() = "railcar itinerary + train formation plan solver core";
    m.def("validate", &py_validate, py::arg("instance_json"));
    m.def("solve", &py_solve, py::arg("instance_json"), py::arg("seed") = 0,
          py::arg("config_json") = std::string(), py::arg("multistart") = 1);
    m.def("oracle", &py_oracle, py::arg("instance_json"), py::arg("max_designs") = 1'000'000,
          py::arg("max_assignments") = 1'000'000, py::arg("config_json") = std::string());
    m.def("evaluate", &py_evaluate, py::arg("instance_json"), py::arg("design_json"),
          py::arg("config_json") = std::string());
    m.def("generate", &py_generate, py::arg("yards") = 6, py::arg("line_density") = 0.15,
          py::arg("demand_density") = 0.5, py::arg("capacity_factor") = 1.5, py::arg("seed") = 1);
    m.def("sufficient_services", &py_sufficient_services, py::arg("instance_json"));
}
