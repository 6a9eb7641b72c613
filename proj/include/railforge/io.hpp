#pragma once

#include <optional>
#include <string>

#include "railforge/sa_solver.hpp"

namespace railforge {

// "sha256:<hex>" over raw bytes.
std::string content_digest(const std::string& bytes);

struct SolverMeta {
    std::string method;  // "sa" or "oracle"
    std::uint64_t seed = 0;
    long long iterations = 0;
    std::string stop_reason;
    std::optional<SaConfig> sa_config;
    PenaltyConfig penalties;
    std::string rng_name;
};

struct SolutionDocument {
    std::string instance_digest;
    ServiceDesign design;
    FlowState flows;
    EnergyBreakdown energy;
    SolverMeta solver;
};

// Serialization is canonical: equal documents produce byte-identical text.
std::string solution_to_json(const Instance& inst, const SolutionDocument& doc);
SolutionDocument solution_from_json(const Instance& inst, const std::string& text);

// Design documents ("railforge-design/1"): bare service lists with paths
// given by yard sequence or candidate index. Also accepts a full solution
// document, extracting its design.
ServiceDesign design_from_json(const Instance& inst, const PathCatalog& catalog, const std::string& text);
std::string design_to_json(const Instance& inst, const PathCatalog& catalog, const ServiceDesign& design);

// FlowState <-> the documented {assignment, car_flows, service_flows} form.
std::string flow_state_to_json(const Instance& inst, const FlowState& state);

std::string energy_to_json(const EnergyBreakdown& breakdown);

// Trace CSV: step,sigma,mean_E,stderr_E,accept_rate,best_E
std::string trace_to_csv(const std::vector<TraceRow>& trace);

// Flat {SaConfig + PenaltyConfig} JSON, same field names as the structs.
// Missing fields keep their defaults; unknown fields are an error.
void apply_config_json(const std::string& text, SaConfig& sa, PenaltyConfig& penalties,
                       bool& penalties_given);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

struct OracleLimits;

// Shared drivers behind `solve` / `oracle` (CLI and python bindings).
// Multistart runs seeds seed..seed+count-1 concurrently and keeps the
// minimum-energy result (ties to the smallest seed).
SolutionDocument run_solve(const Instance& inst, const PathCatalog& catalog, const SaConfig& sa,
                           const PenaltyConfig* penalties, int multistart, const std::string& digest,
                           std::vector<TraceRow>* trace_out = nullptr);
SolutionDocument run_oracle(const Instance& inst, const PathCatalog& catalog, const OracleLimits& limits,
                            const PenaltyConfig* penalties, const std::string& digest);

}  // namespace railforge
