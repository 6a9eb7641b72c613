#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "railforge/errors.hpp"

namespace railforge {

using YardPair = std::pair<int, int>;  // ordered (origin, destination), dense yard ids

struct Yard {
    std::string name;
    double accumulation_param = 0.0;        // c_i, hours per train formed here
    double relative_delay = 0.0;            // converted cost per reclassified car
    double reclass_capacity = 0.0;          // cars/day the hump can process
    double reclass_capacity_factor = 1.0;   // usable fraction of reclass_capacity
    long long track_count = 0;              // classification tracks available

    bool operator==(const Yard&) const = default;
};

// Directed link. Instance files declare undirected lines; the loader expands
// each into two directed links with the declared per-direction capacity.
struct Link {
    int from = -1;
    int to = -1;
    double length = 0.0;                    // km
    double transport_cost_per_car = 0.0;    // defaults to length
    double capacity_trains = 0.0;           // trains/day in this direction
    double remaining_capacity_rate = 1.0;   // usable fraction after passenger/local traffic

    bool operator==(const Link&) const = default;
};

struct Demand {
    int origin = -1;
    int destination = -1;
    long long volume = 0;  // cars/day

    bool operator==(const Demand&) const = default;
};

struct ServiceParams {
    long long default_train_size = 50;                   // cars per dispatched train
    std::map<YardPair, long long> train_size_overrides;  // per ordered pair
    double accumulation_conversion = 1.0;                // multiplies the accumulation term
    double transport_weight = 1.0;                       // multiplies the transportation term

    bool operator==(const ServiceParams&) const = default;
};

struct OperationalSets {
    std::set<YardPair> forced_services;                  // always provided
    std::set<YardPair> forbidden_services;               // never provided
    std::map<YardPair, std::vector<int>> prescribed_paths;  // fixed physical path per pair

    bool operator==(const OperationalSets&) const = default;
};

struct Instance {
    std::vector<Yard> yards;
    std::vector<Link> links;      // directed, kept sorted by (from, to)
    std::vector<Demand> demands;  // kept sorted by (origin, destination)
    ServiceParams service_params;
    OperationalSets operational_sets;
    long long track_breakpoint_step = 200;  // spacing of the track-demand breakpoints
    int path_count_k = 3;                   // candidate paths per ordered pair

    // Derived lookups; call rebuild_index() after mutating the fields above.
    void rebuild_index();

    int yard_count() const { return static_cast<int>(yards.size()); }
    int yard_id(const std::string& name) const;           // -1 when unknown
    const std::string& yard_name(int id) const { return yards[id].name; }
    int link_index(int from, int to) const;                // -1 when absent
    const std::vector<int>& links_from(int yard) const { return links_from_[yard]; }
    long long train_size(int origin, int destination) const;
    long long demand_volume(int origin, int destination) const;

    bool operator==(const Instance& other) const {
        return yards == other.yards && links == other.links && demands == other.demands &&
               service_params == other.service_params && operational_sets == other.operational_sets &&
               track_breakpoint_step == other.track_breakpoint_step && path_count_k == other.path_count_k;
    }

private:
    std::map<std::string, int> yard_ids_;
    std::map<YardPair, int> link_ids_;
    std::vector<std::vector<int>> links_from_;  // outgoing link indices, sorted by target
};

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string code;     // stable machine-readable tag
    std::string message;  // human-readable detail
};

// Loads an instance document ("railforge/1" schema). Throws ParseError on
// schema violations and IntegrityError on dangling references or prescribed
// paths that do not exist in the network.
Instance parse_instance(const std::string& text);
Instance load_instance(const std::filesystem::path& path);

// Canonical serialization; parse(serialize(parse(text))) == parse(text).
std::string serialize_instance(const Instance& inst);

// One diagnostic per violated invariant; empty means the instance is valid.
std::vector<Diagnostic> validate_instance(const Instance& inst);

// Ordered pairs whose demand alone justifies a direct service under the
// conservative test N_ij * min(relative delay over candidate-path interior
// yards) >= lambda * c_i * m_ij. Pairs whose candidate paths have no interior
// yards are skipped. The caller may union the result into forced_services.
class PathCatalog;
std::set<YardPair> sufficient_condition_services(const Instance& inst);
std::set<YardPair> sufficient_condition_services(const Instance& inst, const PathCatalog& catalog);

}  // namespace railforge
