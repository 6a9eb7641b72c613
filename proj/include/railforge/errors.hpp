#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace railforge {

// Instance file does not conform to the schema (bad type, missing key, ...).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally valid file with dangling references or an impossible path.
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A shipment cannot reach its destination over the provided services.
struct InfeasibleError : std::runtime_error {
    InfeasibleError(std::string origin, std::string destination, const std::string& what)
        : std::runtime_error(what), origin(std::move(origin)), destination(std::move(destination)) {}
    std::string origin;
    std::string destination;
};

// A next-service assignment contains a cycle.
struct CycleError : std::runtime_error {
    CycleError(std::vector<int> cycle, const std::string& what)
        : std::runtime_error(what), cycle(std::move(cycle)) {}
    std::vector<int> cycle;
};

// Oracle enumeration exceeded its configured limits.
struct SizeLimitError : std::runtime_error {
    SizeLimitError(long long counted, const std::string& what)
        : std::runtime_error(what), counted(counted) {}
    long long counted;
};

// Bad solver configuration or flag combination.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace railforge
