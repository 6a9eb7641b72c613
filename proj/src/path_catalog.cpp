#include "railforge/path_catalog.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <json.hpp>

namespace railforge {

namespace {

// Cost of a yard sequence, folded in path order so identical sequences always
// produce identical doubles.
double sequence_cost(const Instance& inst, const std::vector<int>& yards) {
    double cost = 0.0;
    for (size_t i = 0; i + 1 < yards.size(); ++i) {
        int li = inst.link_index(yards[i], yards[i + 1]);
        cost += inst.links[li].transport_cost_per_car;
    }
    return cost;
}

struct PathOrder {
    bool operator()(const std::pair<double, std::vector<int>>& a,
                    const std::pair<double, std::vector<int>>& b) const {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    }
};

// Shortest path by (cost, lexicographic yard sequence). The secondary key is
// monotone under extension (appending a yard makes a sequence lex-greater),
// so Dijkstra's greedy settling stays exact even across zero-cost links.
std::vector<int> lex_shortest(const Instance& inst, int src, int dst,
                              const std::vector<char>& banned_node,
                              const std::set<YardPair>& banned_arc) {
    const int n = inst.yard_count();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    std::vector<int> parent(n, -1);
    std::vector<char> done(n, 0);
    dist[src] = 0.0;

    auto sequence_to = [&](int v) {
        std::vector<int> seq;
        for (int at = v; at != -1; at = parent[at]) seq.push_back(at);
        std::reverse(seq.begin(), seq.end());
        return seq;
    };

    for (;;) {
        int best = -1;
        std::vector<int> best_seq;
        for (int v = 0; v < n; ++v) {
            if (done[v] || dist[v] == inf) continue;
            if (best == -1 || dist[v] < dist[best]) {
                best = v;
                best_seq = sequence_to(v);
            } else if (dist[v] == dist[best]) {
                std::vector<int> seq = sequence_to(v);
                if (seq < best_seq) {
                    best = v;
                    best_seq = std::move(seq);
                }
            }
        }
        if (best == -1) return {};
        if (best == dst) return best_seq;
        done[best] = 1;

        for (int li : inst.links_from(best)) {
            const Link& link = inst.links[li];
            int to = link.to;
            if (done[to] || banned_node[to]) continue;
            if (banned_arc.count({best, to})) continue;
            double nd = dist[best] + link.transport_cost_per_car;
            if (nd < dist[to]) {
                dist[to] = nd;
                parent[to] = best;
            } else if (nd == dist[to] && parent[to] != best) {
                std::vector<int> candidate = sequence_to(best);
                candidate.push_back(to);
                if (candidate < sequence_to(to)) parent[to] = best;
            }
        }
    }
}

CandidatePath make_path(const Instance& inst, std::vector<int> yards) {
    CandidatePath path;
    path.origin = yards.front();
    path.destination = yards.back();
    path.yards = std::move(yards);
    for (size_t i = 0; i + 1 < path.yards.size(); ++i)
        path.link_indices.push_back(inst.link_index(path.yards[i], path.yards[i + 1]));
    path.transport_cost = sequence_cost(inst, path.yards);
    return path;
}

}  // namespace

std::vector<CandidatePath> enumerate_candidate_paths(const Instance& inst, YardPair pair, int k) {
    const auto [src, dst] = pair;
    const int n = inst.yard_count();
    std::vector<char> no_ban(n, 0);

    std::vector<std::vector<int>> found;
    std::vector<int> first = lex_shortest(inst, src, dst, no_ban, {});
    if (first.empty()) return {};
    found.push_back(std::move(first));

    std::set<std::pair<double, std::vector<int>>, PathOrder> candidates;
    std::set<std::vector<int>> seen;
    seen.insert(found[0]);

    // Yen's loopless k-shortest paths; candidates ordered by (cost, sequence).
    while (static_cast<int>(found.size()) < k) {
        const std::vector<int>& prev = found.back();
        for (size_t spur_idx = 0; spur_idx + 1 < prev.size(); ++spur_idx) {
            const int spur = prev[spur_idx];
            std::vector<char> banned_node(n, 0);
            for (size_t i = 0; i < spur_idx; ++i) banned_node[prev[i]] = 1;
            std::set<YardPair> banned_arc;
            for (const std::vector<int>& p : found) {
                if (p.size() > spur_idx + 1 &&
                    std::equal(p.begin(), p.begin() + spur_idx + 1, prev.begin()))
                    banned_arc.insert({p[spur_idx], p[spur_idx + 1]});
            }
            std::vector<int> spur_path = lex_shortest(inst, spur, dst, banned_node, banned_arc);
            if (spur_path.empty()) continue;
            std::vector<int> full(prev.begin(), prev.begin() + spur_idx);
            full.insert(full.end(), spur_path.begin(), spur_path.end());
            if (seen.count(full)) continue;
            double cost = sequence_cost(inst, full);
            candidates.insert({cost, std::move(full)});
        }
        if (candidates.empty()) break;
        auto it = candidates.begin();
        seen.insert(it->second);
        found.push_back(it->second);
        candidates.erase(it);
    }

    std::vector<CandidatePath> out;
    out.reserve(found.size());
    for (std::vector<int>& yards : found) out.push_back(make_path(inst, std::move(yards)));
    for (int i = 0; i < static_cast<int>(out.size()); ++i) out[i].index = i;
    return out;
}

PathCatalog build_catalog(const Instance& inst) {
    const int n = inst.yard_count();
    PathCatalog catalog(n, inst.path_count_k);

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            auto paths = enumerate_candidate_paths(inst, {i, j}, inst.path_count_k);

            auto prescribed = inst.operational_sets.prescribed_paths.find({i, j});
            if (prescribed != inst.operational_sets.prescribed_paths.end()) {
                const std::vector<int>& seq = prescribed->second;
                for (size_t s = 0; s + 1 < seq.size(); ++s) {
                    if (inst.link_index(seq[s], seq[s + 1]) < 0)
                        throw IntegrityError("prescribed path for " + inst.yard_name(i) + " -> " +
                                             inst.yard_name(j) + " uses a missing link");
                }
                auto match = std::find_if(paths.begin(), paths.end(),
                                          [&](const CandidatePath& p) { return p.yards == seq; });
                if (match != paths.end()) {
                    match->mandatory = true;
                } else {
                    CandidatePath extra = make_path(inst, seq);
                    extra.mandatory = true;
                    paths.push_back(std::move(extra));
                    std::sort(paths.begin(), paths.end(), [](const CandidatePath& a, const CandidatePath& b) {
                        if (a.transport_cost != b.transport_cost) return a.transport_cost < b.transport_cost;
                        return a.yards < b.yards;
                    });
                    for (int idx = 0; idx < static_cast<int>(paths.size()); ++idx) paths[idx].index = idx;
                }
            }
            catalog.mutable_paths(i, j) = std::move(paths);
        }
    }
    return catalog;
}

int PathCatalog::mandatory_index(int origin, int destination) const {
    for (const CandidatePath& p : paths(origin, destination))
        if (p.mandatory) return p.index;
    return -1;
}

std::string catalog_to_json(const Instance& inst, const PathCatalog& catalog) {
    nlohmann::json out = nlohmann::json::array();
    const int n = inst.yard_count();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            for (const CandidatePath& p : catalog.paths(i, j)) {
                nlohmann::json yards = nlohmann::json::array();
                for (int y : p.yards) yards.push_back(inst.yard_name(y));
                out.push_back({{"pair", {inst.yard_name(i), inst.yard_name(j)}},
                               {"index", p.index},
                               {"yards", std::move(yards)},
                               {"cost", p.transport_cost},
                               {"mandatory", p.mandatory}});
            }
        }
    }
    return out.dump(2) + "\n";
}

}  // namespace railforge
