#pragma once

#include <string>
#include <vector>

#include "railforge/instance.hpp"

namespace railforge {

struct CandidatePath {
    int origin = -1;
    int destination = -1;
    int index = 0;                 // ordinal within the pair's candidate list
    std::vector<int> yards;        // simple path origin ... destination
    std::vector<int> link_indices; // consecutive-pair links, in path order
    double transport_cost = 0.0;   // sum of member links' transport_cost_per_car
    bool mandatory = false;        // prescribed path; service must use it
};

// Candidate physical paths for every ordered yard pair: the k shortest simple
// paths by transport_cost (ties broken by lexicographic yard sequence), plus
// the prescribed path when one exists, flagged mandatory.
class PathCatalog {
public:
    PathCatalog() = default;
    PathCatalog(int yard_count, int k) : yard_count_(yard_count), k_(k), paths_(static_cast<size_t>(yard_count) * yard_count) {}

    const std::vector<CandidatePath>& paths(int origin, int destination) const {
        return paths_[static_cast<size_t>(origin) * yard_count_ + destination];
    }
    std::vector<CandidatePath>& mutable_paths(int origin, int destination) {
        return paths_[static_cast<size_t>(origin) * yard_count_ + destination];
    }
    bool has_path(int origin, int destination) const { return !paths(origin, destination).empty(); }
    // Index the service (origin, destination) is pinned to, or -1 when free.
    int mandatory_index(int origin, int destination) const;
    int k() const { return k_; }
    int yard_count() const { return yard_count_; }

private:
    int yard_count_ = 0;
    int k_ = 0;
    std::vector<std::vector<CandidatePath>> paths_;
};

// Up to k shortest loopless paths (Yen), deterministic under the
// (cost, lexicographic yard sequence) order. Empty when no path exists.
std::vector<CandidatePath> enumerate_candidate_paths(const Instance& inst, YardPair pair, int k);

// Catalog over all ordered yard pairs; prescribed paths inserted and flagged.
// Throws IntegrityError when a prescribed path is invalid in the network.
PathCatalog build_catalog(const Instance& inst);

inline const std::vector<int>& links_of(const CandidatePath& path) { return path.link_indices; }

// Inspection dump: JSON list of {pair, index, yards, cost}.
std::string catalog_to_json(const Instance& inst, const PathCatalog& catalog);

}  // namespace railforge
