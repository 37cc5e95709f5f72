#ifndef LFMIX_NEIGHBORHOOD_HPP
#define LFMIX_NEIGHBORHOOD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lfmix/core.hpp"
#include "lfmix/parallel.hpp"
#include "lfmix/scenario.hpp"

namespace lfmix {

/// Per-agent epsilon-neighborhoods split by group.
///
/// Slot 0 holds N_i^F, slot k + 1 holds N_i^{L_k}. Followers get every slot;
/// a leader of group k gets slot k + 1 only (other slots stay empty). Each
/// set is sorted ascending.
class NeighborSets {
public:
    NeighborSets() = default;
    NeighborSets(std::size_t agents, std::size_t slots) : agents_(agents), slots_(slots), sets_(agents * slots) {}

    std::size_t agent_count() const noexcept { return agents_; }
    std::size_t slot_count() const noexcept { return slots_; }

    const std::vector<AgentId>& at(AgentId i, std::size_t slot) const { return sets_[i * slots_ + slot]; }
    std::vector<AgentId>& at(AgentId i, std::size_t slot) { return sets_[i * slots_ + slot]; }

    const std::vector<AgentId>& follower_neighbors(AgentId i) const { return at(i, 0); }
    const std::vector<AgentId>& leader_neighbors(AgentId i, std::size_t k) const { return at(i, k + 1); }

    friend bool operator==(const NeighborSets&, const NeighborSets&) = default;

private:
    std::size_t agents_ = 0;
    std::size_t slots_ = 0;
    std::vector<std::vector<AgentId>> sets_;
};

namespace detail {

/// Slots that agent i must be given.
inline void slots_for(const Scenario& sc, AgentId i, std::vector<std::size_t>& out) {
    out.clear();
    const GroupId g = sc.partition.assignment[i];
    if (g.is_leader()) {
        out.push_back(g.slot());
    } else {
        for (std::size_t s = 0; s <= sc.group_count(); ++s) out.push_back(s);
    }
}

inline void check_state(const SystemState& state, const Scenario& sc) {
    if (state.agent_count() != sc.agent_count() || state.dim() != sc.dimension) {
        throw DimensionMismatch("state does not match scenario shape");
    }
}

}  // namespace detail

/// Exact O(N^2) reference: {j in group : ||x_i - x_j||^2 <= eps^2}.
inline NeighborSets neighbors_naive(const SystemState& state, const Scenario& sc, std::size_t threads = 1) {
    detail::check_state(state, sc);
    const std::size_t n = sc.agent_count();
    const std::size_t slots = sc.group_count() + 1;
    const double eps2 = sc.epsilon * sc.epsilon;
    NeighborSets out(n, slots);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> wanted;
        for (AgentId i = begin; i < end; ++i) {
            detail::slots_for(sc, i, wanted);
            const auto xi = state.row(i);
            for (std::size_t s : wanted) {
                auto& set = out.at(i, s);
                for (AgentId j : sc.partition.members(s)) {
                    if (squared_distance(xi, state.row(j)) <= eps2) set.push_back(j);
                }
            }
        }
    });
    return out;
}

/// Total pairs the naive search compares.
inline std::size_t naive_candidate_count(const Scenario& sc) {
    std::size_t total = 0;
    const std::size_t nf = sc.partition.followers.size();
    std::size_t nl = 0;
    for (const auto& g : sc.partition.leaders) {
        nl += g.size();
        total += g.size() * g.size();
    }
    total += nf * (nf + nl);
    return total;
}

/// Uniform grid over a subset of agents. Cells are left-closed boxes indexed
/// by floor(x / side).
class GridIndex {
public:
    static constexpr std::size_t kMaxDim = 8;
    using Key = std::array<std::int64_t, kMaxDim>;

    /// Largest |x / side| for which cell indices stay exact.
    static constexpr double kMaxCellCoord = 1073741824.0;  // 2^30

    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            std::uint64_t h = 0x9e3779b97f4a7c15ULL;
            for (std::int64_t v : k) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
            return static_cast<std::size_t>(h);
        }
    };

    /// Returns nullopt when d is too large or some coordinate is too far from
    /// the origin for exact cell arithmetic.
    static std::optional<GridIndex> build(const SystemState& state, std::span<const AgentId> members, double side) {
        if (state.dim() == 0 || state.dim() > kMaxDim || !(side > 0.0)) return std::nullopt;
        GridIndex g;
        g.dim_ = state.dim();
        g.side_ = side;
        g.cells_.reserve(members.size());
        for (AgentId i : members) {
            auto key = g.key_of(state.row(i));
            if (!key) return std::nullopt;
            g.cells_[*key].push_back(i);
        }
        g.build_offsets();
        return g;
    }

    std::optional<Key> key_of(std::span<const double> x) const {
        Key k{};
        for (std::size_t c = 0; c < dim_; ++c) {
            const double q = std::floor(x[c] / side_);
            if (!(std::fabs(q) < kMaxCellCoord)) return std::nullopt;
            k[c] = static_cast<std::int64_t>(q);
        }
        return k;
    }

    /// Calls fn(id) for every member in the 3^d cells around x.
    template <typename Fn>
    void for_each_candidate(std::span<const double> x, Fn&& fn) const {
        auto center = key_of(x);
        if (!center) return;
        Key probe{};
        for (const auto& off : offsets_) {
            for (std::size_t c = 0; c < dim_; ++c) probe[c] = (*center)[c] + off[c];
            auto it = cells_.find(probe);
            if (it == cells_.end()) continue;
            for (AgentId j : it->second) fn(j);
        }
    }

    std::size_t cell_count() const noexcept { return cells_.size(); }

    const std::vector<AgentId>* cell(const Key& k) const {
        auto it = cells_.find(k);
        return it == cells_.end() ? nullptr : &it->second;
    }

    std::size_t member_count() const {
        std::size_t total = 0;
        for (const auto& [k, v] : cells_) total += v.size();
        return total;
    }

private:
    void build_offsets() {
        offsets_.clear();
        Key off{};
        for (std::size_t c = 0; c < dim_; ++c) off[c] = -1;
        while (true) {
            offsets_.push_back(off);
            std::size_t c = 0;
            while (c < dim_ && off[c] == 1) off[c++] = -1;
            if (c == dim_) break;
            ++off[c];
        }
    }

    std::size_t dim_ = 0;
    double side_ = 1.0;
    std::unordered_map<Key, std::vector<AgentId>, KeyHash> cells_;
    std::vector<Key> offsets_;
};

/// Cell side used by the grid search: epsilon widened by 2^-20 relative so
/// that rounding in floor(x / side) can never push a true neighbor two cells away.
inline double grid_cell_side(double epsilon) { return epsilon * (1.0 + 0x1.0p-20); }

struct GridNeighborResult {
    NeighborSets sets;
    bool fell_back = false;           // naive search was used instead
    std::size_t candidates_examined = 0;
};

/// Grid-accelerated search; output is identical to neighbors_naive.
inline GridNeighborResult neighbors_grid(const SystemState& state, const Scenario& sc, std::size_t threads = 1) {
    detail::check_state(state, sc);
    GridNeighborResult result;
    const std::size_t cap = std::min(sc.engine.grid_dim_cap, GridIndex::kMaxDim);
    const std::size_t slots = sc.group_count() + 1;

    std::vector<GridIndex> grids;
    bool usable = sc.dimension <= cap;
    if (usable) {
        const double side = grid_cell_side(sc.epsilon);
        grids.reserve(slots);
        for (std::size_t s = 0; s < slots && usable; ++s) {
            auto g = GridIndex::build(state, sc.partition.members(s), side);
            if (g) grids.push_back(std::move(*g));
            else usable = false;
        }
    }
    if (!usable) {
        result.sets = neighbors_naive(state, sc, threads);
        result.fell_back = true;
        result.candidates_examined = naive_candidate_count(sc);
        return result;
    }

    const std::size_t n = sc.agent_count();
    const double eps2 = sc.epsilon * sc.epsilon;
    NeighborSets out(n, slots);
    std::vector<std::size_t> examined(n, 0);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> wanted;
        for (AgentId i = begin; i < end; ++i) {
            detail::slots_for(sc, i, wanted);
            const auto xi = state.row(i);
            std::size_t count = 0;
            for (std::size_t s : wanted) {
                auto& set = out.at(i, s);
                grids[s].for_each_candidate(xi, [&](AgentId j) {
                    ++count;
                    if (squared_distance(xi, state.row(j)) <= eps2) set.push_back(j);
                });
                std::sort(set.begin(), set.end());
            }
            examined[i] = count;
        }
    });
    result.sets = std::move(out);
    for (std::size_t c : examined) result.candidates_examined += c;
    return result;
}

/// Dispatches on the strategy; `automatic` uses the grid when d fits the cap
/// and N is large enough for it to pay off.
inline NeighborSets compute_neighbors(const SystemState& state, const Scenario& sc, NeighborStrategy strategy,
                                      std::size_t threads = 1) {
    if (strategy == NeighborStrategy::automatic) {
        strategy = (sc.dimension <= sc.engine.grid_dim_cap && sc.agent_count() >= 64) ? NeighborStrategy::grid
                                                                                       : NeighborStrategy::naive;
    }
    if (strategy == NeighborStrategy::grid) return neighbors_grid(state, sc, threads).sets;
    return neighbors_naive(state, sc, threads);
}

}  // namespace lfmix

#endif
