#include "railforge/generator.hpp"

#include <algorithm>
#include <cmath>

#include "railforge/cost_energy.hpp"
#include "railforge/flow_routing.hpp"
#include "railforge/rng.hpp"
#include "railforge/sa_solver.hpp"

namespace railforge {

namespace {

double round_to(double x, double step) { return std::round(x / step) * step; }

}  // namespace

Instance generate_instance(const GenParams& params) {
    if (params.yards < 2) throw ConfigError("generator: yard count must be >= 2");
    if (params.line_density < 0.0 || params.line_density > 1.0)
        throw ConfigError("generator: line_density must be in [0,1]");
    if (params.demand_density < 0.0 || params.demand_density > 1.0)
        throw ConfigError("generator: demand_density must be in [0,1]");
    if (params.capacity_factor <= 0.0) throw ConfigError("generator: capacity_factor must be > 0");

    Rng rng(params.seed, 7);
    const int n = params.yards;

    Instance inst;
    inst.yards.reserve(n);
    for (int i = 0; i < n; ++i) {
        Yard yard;
        yard.name = std::to_string(i + 1);
        yard.accumulation_param = round_to(8.0 + 4.0 * rng.uniform_real(), 0.01);
        yard.relative_delay = round_to(2.0 + 3.0 * rng.uniform_real(), 0.01);
        yard.reclass_capacity = 1e15;
        yard.reclass_capacity_factor = 1.0;
        yard.track_count = 1'000'000;
        inst.yards.push_back(std::move(yard));
    }
    static const long long train_sizes[3] = {40, 50, 60};
    inst.service_params.default_train_size = train_sizes[rng.uniform_index(3)];
    inst.service_params.accumulation_conversion = 1.0;
    inst.service_params.transport_weight = 1.0;

    auto add_line = [&](int a, int b) {
        const double length = round_to(50.0 + 450.0 * rng.uniform_real(), 0.1);
        for (auto [from, to] : {YardPair{a, b}, YardPair{b, a}})
            inst.links.push_back(Link{from, to, length, length, 1e12, 1.0});
    };

    // Random spanning tree keeps the network connected; extra lines follow
    // the requested density over the remaining pairs.
    std::set<YardPair> lines;
    for (int i = 1; i < n; ++i) {
        const int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i)));
        lines.insert({std::min(i, j), std::max(i, j)});
        add_line(j, i);
    }
    const long long all_pairs = static_cast<long long>(n) * (n - 1) / 2;
    long long extra = std::llround(params.line_density * static_cast<double>(all_pairs - (n - 1)));
    extra = std::min(extra, all_pairs - static_cast<long long>(lines.size()));
    while (extra > 0) {
        const int a = static_cast<int>(rng.uniform_index(n));
        const int b = static_cast<int>(rng.uniform_index(n));
        if (a == b) continue;
        const YardPair key{std::min(a, b), std::max(a, b)};
        if (!lines.insert(key).second) continue;
        add_line(key.first, key.second);
        --extra;
    }

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (rng.uniform_real() < params.demand_density) {
                const long long volume = 5 + static_cast<long long>(rng.uniform_index(56));
                inst.demands.push_back(Demand{i, j, volume});
            }
        }
    }
    inst.rebuild_index();

    // Size the capacities from the initial solution's usage.
    PathCatalog catalog = build_catalog(inst);
    const PenaltyConfig provisional{1e3, 1e3, 1e3};
    auto [design, state] = initial_solution(inst, catalog, &provisional);
    CapacityUsage usage = capacity_usage(inst, catalog, design, state);

    for (Link& link : inst.links) {
        const int forward = inst.link_index(link.from, link.to);
        const int reverse = inst.link_index(link.to, link.from);
        const double used = std::max(usage.link_trains[forward], usage.link_trains[reverse]);
        link.capacity_trains = std::max(1.0, std::ceil(params.capacity_factor * used));
    }
    for (int y = 0; y < n; ++y) {
        inst.yards[y].reclass_capacity =
            std::max(50.0, std::ceil(params.capacity_factor * usage.yard_reclass_cars[y]));
        inst.yards[y].track_count = std::max<long long>(
            2, static_cast<long long>(
                   std::ceil(params.capacity_factor * static_cast<double>(usage.yard_tracks[y]))));
    }
    inst.rebuild_index();
    return inst;
}

}  // namespace railforge
