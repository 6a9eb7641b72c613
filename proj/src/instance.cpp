#include "railforge/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "railforge/path_catalog.hpp"

namespace railforge {

using nlohmann::json;

void Instance::rebuild_index() {
    yard_ids_.clear();
    for (int i = 0; i < yard_count(); ++i) yard_ids_[yards[i].name] = i;

    std::sort(links.begin(), links.end(),
              [](const Link& a, const Link& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
    std::sort(demands.begin(), demands.end(), [](const Demand& a, const Demand& b) {
        return std::tie(a.origin, a.destination) < std::tie(b.origin, b.destination);
    });

    link_ids_.clear();
    links_from_.assign(yards.size(), {});
    for (int i = 0; i < static_cast<int>(links.size()); ++i) {
        const Link& l = links[i];
        link_ids_[{l.from, l.to}] = i;
        if (l.from >= 0 && l.from < yard_count()) links_from_[l.from].push_back(i);
    }
}

int Instance::yard_id(const std::string& name) const {
    auto it = yard_ids_.find(name);
    return it == yard_ids_.end() ? -1 : it->second;
}

int Instance::link_index(int from, int to) const {
    auto it = link_ids_.find({from, to});
    return it == link_ids_.end() ? -1 : it->second;
}

long long Instance::train_size(int origin, int destination) const {
    auto it = service_params.train_size_overrides.find({origin, destination});
    return it == service_params.train_size_overrides.end() ? service_params.default_train_size : it->second;
}

long long Instance::demand_volume(int origin, int destination) const {
    Demand key{origin, destination, 0};
    auto it = std::lower_bound(demands.begin(), demands.end(), key, [](const Demand& a, const Demand& b) {
        return std::tie(a.origin, a.destination) < std::tie(b.origin, b.destination);
    });
    if (it != demands.end() && it->origin == origin && it->destination == destination) return it->volume;
    return 0;
}

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& why) {
    throw ParseError("instance: " + where + ": " + why);
}

const json& require_key(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) parse_fail(where, std::string("missing key '") + key + "'");
    return *it;
}

double require_number(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_number()) parse_fail(where + "." + key, "expected a number");
    return v.get<double>();
}

double optional_number(const json& obj, const char* key, double fallback, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) parse_fail(where + "." + key, "expected a number");
    return it->get<double>();
}

long long require_integer(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<long long>(d);
    }
    parse_fail(where + "." + key, "expected an integer");
}

long long optional_integer(const json& obj, const char* key, long long fallback, const std::string& where) {
    if (obj.find(key) == obj.end()) return fallback;
    return require_integer(obj, key, where);
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_string()) parse_fail(where + "." + key, "expected a string");
    return v.get<std::string>();
}

const json& require_array(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_array()) parse_fail(where + "." + key, "expected an array");
    return v;
}

int resolve_yard(const Instance& inst, const std::string& name, const std::string& where) {
    int id = inst.yard_id(name);
    if (id < 0) throw IntegrityError("instance: " + where + ": unknown yard '" + name + "'");
    return id;
}

}  // namespace

Instance parse_instance(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("instance: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) parse_fail("document", "expected a JSON object");
    if (require_string(doc, "schema", "document") != "railforge/1")
        parse_fail("schema", "expected \"railforge/1\"");

    Instance inst;

    const json& yards = require_array(doc, "yards", "document");
    for (size_t i = 0; i < yards.size(); ++i) {
        const std::string where = "yards[" + std::to_string(i) + "]";
        const json& y = yards[i];
        if (!y.is_object()) parse_fail(where, "expected an object");
        Yard yard;
        yard.name = require_string(y, "id", where);
        yard.accumulation_param = require_number(y, "accumulation_param", where);
        yard.relative_delay = require_number(y, "relative_delay", where);
        yard.reclass_capacity = optional_number(y, "reclass_capacity", 1e15, where);
        yard.reclass_capacity_factor = optional_number(y, "reclass_capacity_factor", 1.0, where);
        yard.track_count = optional_integer(y, "track_count", 1'000'000, where);
        for (const Yard& other : inst.yards)
            if (other.name == yard.name) parse_fail(where, "duplicate yard id '" + yard.name + "'");
        inst.yards.push_back(std::move(yard));
    }
    inst.rebuild_index();

    const json& params = require_key(doc, "service_params", "document");
    if (!params.is_object()) parse_fail("service_params", "expected an object");
    inst.service_params.default_train_size =
        optional_integer(params, "default_train_size", 50, "service_params");
    inst.service_params.accumulation_conversion =
        optional_number(params, "accumulation_conversion", 1.0, "service_params");
    inst.service_params.transport_weight = optional_number(params, "transport_weight", 1.0, "service_params");
    if (params.contains("train_sizes")) {
        const json& sizes = require_array(params, "train_sizes", "service_params");
        for (size_t i = 0; i < sizes.size(); ++i) {
            const std::string where = "service_params.train_sizes[" + std::to_string(i) + "]";
            const json& s = sizes[i];
            if (!s.is_object()) parse_fail(where, "expected an object");
            int o = resolve_yard(inst, require_string(s, "origin", where), where);
            int d = resolve_yard(inst, require_string(s, "destination", where), where);
            inst.service_params.train_size_overrides[{o, d}] = require_integer(s, "size", where);
        }
    }

    const json& lines = require_array(doc, "lines", "document");
    std::set<YardPair> seen_lines;
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string where = "lines[" + std::to_string(i) + "]";
        const json& l = lines[i];
        if (!l.is_object()) parse_fail(where, "expected an object");
        const json& between = require_array(l, "between", where);
        if (between.size() != 2 || !between[0].is_string() || !between[1].is_string())
            parse_fail(where + ".between", "expected two yard ids");
        int a = resolve_yard(inst, between[0].get<std::string>(), where);
        int b = resolve_yard(inst, between[1].get<std::string>(), where);
        if (a == b) parse_fail(where, "self-loop line");
        YardPair key{std::min(a, b), std::max(a, b)};
        if (!seen_lines.insert(key).second) parse_fail(where, "duplicate line between the same yards");

        double length = require_number(l, "length", where);
        double cost = optional_number(l, "transport_cost_per_car", length, where);
        double rate = optional_number(l, "remaining_capacity_rate", 1.0, where);

        double capacity_trains;
        const bool has_cars = l.contains("capacity_cars");
        const bool has_trains = l.contains("capacity_trains");
        if (has_cars && has_trains) parse_fail(where, "give capacity_cars or capacity_trains, not both");
        if (has_trains) {
            capacity_trains = require_number(l, "capacity_trains", where);
        } else if (has_cars) {
            double cars = require_number(l, "capacity_cars", where);
            capacity_trains = std::floor(cars / static_cast<double>(inst.service_params.default_train_size));
        } else {
            capacity_trains = 1e12;  // effectively uncapacitated
        }

        for (auto [from, to] : {YardPair{a, b}, YardPair{b, a}})
            inst.links.push_back(Link{from, to, length, cost, capacity_trains, rate});
    }

    const json& demands = require_array(doc, "demands", "document");
    std::set<YardPair> seen_demands;
    for (size_t i = 0; i < demands.size(); ++i) {
        const std::string where = "demands[" + std::to_string(i) + "]";
        const json& d = demands[i];
        if (!d.is_object()) parse_fail(where, "expected an object");
        Demand demand;
        demand.origin = resolve_yard(inst, require_string(d, "origin", where), where);
        demand.destination = resolve_yard(inst, require_string(d, "destination", where), where);
        demand.volume = require_integer(d, "volume", where);
        if (!seen_demands.insert({demand.origin, demand.destination}).second)
            parse_fail(where, "duplicate demand for the same ordered pair");
        inst.demands.push_back(demand);
    }

    auto parse_pair_list = [&](const char* key) {
        std::set<YardPair> out;
        const json& arr = require_array(doc, key, "document");
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
            const json& p = arr[i];
            if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
                parse_fail(where, "expected a pair of yard ids");
            out.insert({resolve_yard(inst, p[0].get<std::string>(), where),
                        resolve_yard(inst, p[1].get<std::string>(), where)});
        }
        return out;
    };
    inst.operational_sets.forced_services = parse_pair_list("forced_services");
    inst.operational_sets.forbidden_services = parse_pair_list("forbidden_services");

    inst.rebuild_index();

    const json& prescribed = require_array(doc, "prescribed_paths", "document");
    for (size_t i = 0; i < prescribed.size(); ++i) {
        const std::string where = "prescribed_paths[" + std::to_string(i) + "]";
        const json& p = prescribed[i];
        if (!p.is_object()) parse_fail(where, "expected an object");
        int origin = resolve_yard(inst, require_string(p, "origin", where), where);
        int destination = resolve_yard(inst, require_string(p, "destination", where), where);
        const json& yards_arr = require_array(p, "yards", where);
        std::vector<int> seq;
        for (const json& name : yards_arr) {
            if (!name.is_string()) parse_fail(where + ".yards", "expected yard ids");
            seq.push_back(resolve_yard(inst, name.get<std::string>(), where));
        }
        if (seq.size() < 2 || seq.front() != origin || seq.back() != destination)
            throw IntegrityError("instance: " + where + ": path must run from origin to destination");
        std::set<int> unique(seq.begin(), seq.end());
        if (unique.size() != seq.size())
            throw IntegrityError("instance: " + where + ": path repeats a yard");
        for (size_t s = 0; s + 1 < seq.size(); ++s) {
            if (inst.link_index(seq[s], seq[s + 1]) < 0)
                throw IntegrityError("instance: " + where + ": no link " + inst.yard_name(seq[s]) + " -> " +
                                     inst.yard_name(seq[s + 1]));
        }
        inst.operational_sets.prescribed_paths[{origin, destination}] = std::move(seq);
    }

    if (doc.contains("options")) {
        const json& options = doc["options"];
        if (!options.is_object()) parse_fail("options", "expected an object");
        inst.track_breakpoint_step = optional_integer(options, "track_breakpoint_step", 200, "options");
        inst.path_count_k = static_cast<int>(optional_integer(options, "path_count_k", 3, "options"));
    }

    inst.rebuild_index();
    return inst;
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("instance: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str());
}

std::string serialize_instance(const Instance& inst) {
    json doc;
    doc["schema"] = "railforge/1";

    json yards = json::array();
    for (const Yard& y : inst.yards) {
        yards.push_back({{"id", y.name},
                         {"accumulation_param", y.accumulation_param},
                         {"relative_delay", y.relative_delay},
                         {"reclass_capacity", y.reclass_capacity},
                         {"reclass_capacity_factor", y.reclass_capacity_factor},
                         {"track_count", y.track_count}});
    }
    doc["yards"] = std::move(yards);

    json lines = json::array();
    for (const Link& l : inst.links) {
        if (l.from > l.to) continue;  // one line per direction pair; reverse is identical
        lines.push_back({{"between", {inst.yard_name(l.from), inst.yard_name(l.to)}},
                         {"length", l.length},
                         {"transport_cost_per_car", l.transport_cost_per_car},
                         {"capacity_trains", l.capacity_trains},
                         {"remaining_capacity_rate", l.remaining_capacity_rate}});
    }
    doc["lines"] = std::move(lines);

    json demands = json::array();
    for (const Demand& d : inst.demands) {
        demands.push_back({{"origin", inst.yard_name(d.origin)},
                           {"destination", inst.yard_name(d.destination)},
                           {"volume", d.volume}});
    }
    doc["demands"] = std::move(demands);

    json params;
    params["default_train_size"] = inst.service_params.default_train_size;
    params["accumulation_conversion"] = inst.service_params.accumulation_conversion;
    params["transport_weight"] = inst.service_params.transport_weight;
    if (!inst.service_params.train_size_overrides.empty()) {
        json sizes = json::array();
        for (const auto& [pair, size] : inst.service_params.train_size_overrides) {
            sizes.push_back({{"origin", inst.yard_name(pair.first)},
                             {"destination", inst.yard_name(pair.second)},
                             {"size", size}});
        }
        params["train_sizes"] = std::move(sizes);
    }
    doc["service_params"] = std::move(params);

    auto pair_list = [&](const std::set<YardPair>& pairs) {
        json out = json::array();
        for (const YardPair& p : pairs) out.push_back({inst.yard_name(p.first), inst.yard_name(p.second)});
        return out;
    };
    doc["forced_services"] = pair_list(inst.operational_sets.forced_services);
    doc["forbidden_services"] = pair_list(inst.operational_sets.forbidden_services);

    json prescribed = json::array();
    for (const auto& [pair, seq] : inst.operational_sets.prescribed_paths) {
        json yards_arr = json::array();
        for (int y : seq) yards_arr.push_back(inst.yard_name(y));
        prescribed.push_back({{"origin", inst.yard_name(pair.first)},
                              {"destination", inst.yard_name(pair.second)},
                              {"yards", std::move(yards_arr)}});
    }
    doc["prescribed_paths"] = std::move(prescribed);

    doc["options"] = {{"track_breakpoint_step", inst.track_breakpoint_step},
                      {"path_count_k", inst.path_count_k}};

    return doc.dump(2) + "\n";
}

namespace {

void check(std::vector<Diagnostic>& out, bool ok, const std::string& code, const std::string& message) {
    if (!ok) out.push_back({Diagnostic::Severity::error, code, message});
}

}  // namespace

std::vector<Diagnostic> validate_instance(const Instance& inst) {
    std::vector<Diagnostic> out;
    const int n = inst.yard_count();

    std::set<std::string> names;
    for (int i = 0; i < n; ++i) {
        const Yard& y = inst.yards[i];
        check(out, names.insert(y.name).second, "yard.duplicate", "duplicate yard id '" + y.name + "'");
        check(out, y.accumulation_param > 0, "yard.accumulation_param",
              "yard '" + y.name + "': accumulation_param must be > 0");
        check(out, y.relative_delay >= 0, "yard.relative_delay",
              "yard '" + y.name + "': relative_delay must be >= 0");
        check(out, y.reclass_capacity >= 0, "yard.reclass_capacity",
              "yard '" + y.name + "': reclass_capacity must be >= 0");
        check(out, y.reclass_capacity_factor >= 0 && y.reclass_capacity_factor <= 1, "yard.reclass_capacity_factor",
              "yard '" + y.name + "': reclass_capacity_factor must be in [0,1]");
        check(out, y.track_count >= 0, "yard.track_count", "yard '" + y.name + "': track_count must be >= 0");
    }

    auto yard_ok = [&](int id) { return id >= 0 && id < n; };
    std::set<YardPair> seen_links;
    for (const Link& l : inst.links) {
        std::string tag = yard_ok(l.from) && yard_ok(l.to)
                              ? inst.yard_name(l.from) + " -> " + inst.yard_name(l.to)
                              : "with invalid endpoints";
        if (!yard_ok(l.from) || !yard_ok(l.to)) {
            check(out, false, "link.endpoints", "link " + tag + " references a missing yard");
            continue;
        }
        check(out, l.from != l.to, "link.self_loop", "link " + tag + " is a self-loop");
        check(out, seen_links.insert({l.from, l.to}).second, "link.duplicate", "duplicate link " + tag);
        check(out, l.length > 0, "link.length", "link " + tag + ": length must be > 0");
        check(out, l.transport_cost_per_car >= 0, "link.transport_cost",
              "link " + tag + ": transport_cost_per_car must be >= 0");
        check(out, l.capacity_trains >= 0, "link.capacity", "link " + tag + ": capacity must be >= 0");
        check(out, l.remaining_capacity_rate >= 0 && l.remaining_capacity_rate <= 1, "link.remaining_capacity_rate",
              "link " + tag + ": remaining_capacity_rate must be in [0,1]");
    }

    std::set<YardPair> seen_demands;
    for (const Demand& d : inst.demands) {
        if (!yard_ok(d.origin) || !yard_ok(d.destination)) {
            check(out, false, "demand.endpoints", "demand references a missing yard");
            continue;
        }
        std::string tag = inst.yard_name(d.origin) + " -> " + inst.yard_name(d.destination);
        check(out, d.origin != d.destination, "demand.self", "demand " + tag + " to itself");
        check(out, d.volume >= 0, "demand.volume", "demand " + tag + ": volume must be >= 0");
        check(out, seen_demands.insert({d.origin, d.destination}).second, "demand.duplicate",
              "duplicate demand " + tag);
    }

    check(out, inst.service_params.default_train_size > 0, "service_params.train_size",
          "default_train_size must be > 0");
    for (const auto& [pair, size] : inst.service_params.train_size_overrides) {
        check(out, yard_ok(pair.first) && yard_ok(pair.second), "service_params.train_size",
              "train size override references a missing yard");
        check(out, size > 0, "service_params.train_size", "train size override must be > 0");
    }
    check(out, inst.service_params.accumulation_conversion > 0, "service_params.accumulation_conversion",
          "accumulation_conversion must be > 0");
    check(out, inst.service_params.transport_weight >= 0, "service_params.transport_weight",
          "transport_weight must be >= 0");
    check(out, inst.track_breakpoint_step > 0, "options.track_breakpoint_step",
          "track_breakpoint_step must be > 0");
    check(out, inst.path_count_k >= 1, "options.path_count_k", "path_count_k must be >= 1");

    const OperationalSets& ops = inst.operational_sets;
    for (const YardPair& p : ops.forced_services) {
        check(out, !ops.forbidden_services.count(p), "sets.forced_forbidden",
              "service " + (yard_ok(p.first) ? inst.yard_name(p.first) : "?") + " -> " +
                  (yard_ok(p.second) ? inst.yard_name(p.second) : "?") + " is both forced and forbidden");
    }
    for (const std::set<YardPair>* pairs : {&ops.forced_services, &ops.forbidden_services}) {
        for (const YardPair& p : *pairs) {
            check(out, yard_ok(p.first) && yard_ok(p.second), "sets.endpoints",
                  "operational set references a missing yard");
            if (yard_ok(p.first) && p.first == p.second)
                check(out, false, "sets.self", "operational set contains a self-pair");
        }
    }
    for (const auto& [pair, seq] : ops.prescribed_paths) {
        bool ok = yard_ok(pair.first) && yard_ok(pair.second) && seq.size() >= 2 &&
                  seq.front() == pair.first && seq.back() == pair.second;
        std::set<int> unique(seq.begin(), seq.end());
        ok = ok && unique.size() == seq.size();
        if (ok) {
            for (size_t i = 0; i + 1 < seq.size(); ++i)
                ok = ok && inst.link_index(seq[i], seq[i + 1]) >= 0;
        }
        check(out, ok, "sets.prescribed_path",
              "prescribed path for " + (yard_ok(pair.first) ? inst.yard_name(pair.first) : "?") + " -> " +
                  (yard_ok(pair.second) ? inst.yard_name(pair.second) : "?") +
                  " is not a simple path in the network");
    }

    // Every demand must be routable over the directed links.
    std::map<int, std::vector<char>> reachable;
    for (const Demand& d : inst.demands) {
        if (!yard_ok(d.origin) || !yard_ok(d.destination) || d.origin == d.destination) continue;
        auto it = reachable.find(d.origin);
        if (it == reachable.end()) {
            std::vector<char> seen(n, 0);
            std::queue<int> queue;
            queue.push(d.origin);
            seen[d.origin] = 1;
            while (!queue.empty()) {
                int at = queue.front();
                queue.pop();
                for (int li : inst.links_from(at)) {
                    int to = inst.links[li].to;
                    if (!seen[to]) {
                        seen[to] = 1;
                        queue.push(to);
                    }
                }
            }
            it = reachable.emplace(d.origin, std::move(seen)).first;
        }
        check(out, it->second[d.destination] != 0, "network.connectivity",
              "demand " + inst.yard_name(d.origin) + " -> " + inst.yard_name(d.destination) +
                  " has no route in the network");
    }

    return out;
}

std::set<YardPair> sufficient_condition_services(const Instance& inst) {
    return sufficient_condition_services(inst, build_catalog(inst));
}

std::set<YardPair> sufficient_condition_services(const Instance& inst, const PathCatalog& catalog) {
    std::set<YardPair> out;
    for (const Demand& d : inst.demands) {
        if (d.volume <= 0) continue;
        const auto& candidates = catalog.paths(d.origin, d.destination);
        double min_delay = -1.0;
        for (const CandidatePath& path : candidates) {
            for (size_t i = 1; i + 1 < path.yards.size(); ++i) {
                double tau = inst.yards[path.yards[i]].relative_delay;
                if (min_delay < 0 || tau < min_delay) min_delay = tau;
            }
        }
        if (min_delay < 0) continue;  // adjacent pairs are trivially direct
        double direct_cost = inst.service_params.accumulation_conversion *
                             inst.yards[d.origin].accumulation_param *
                             static_cast<double>(inst.train_size(d.origin, d.destination));
        if (static_cast<double>(d.volume) * min_delay >= direct_cost) out.insert({d.origin, d.destination});
    }
    return out;
}

}  // namespace railforge
