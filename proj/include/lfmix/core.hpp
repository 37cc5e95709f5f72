#ifndef LFMIX_CORE_HPP
#define LFMIX_CORE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lfmix {

using AgentId = std::size_t;

/// Thrown when two opinion vectors (or a state and a scenario) disagree on d.
class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A point in R^d. Coordinates are always finite.
class OpinionVec {
public:
    OpinionVec() = default;

    explicit OpinionVec(std::vector<double> coords) : coords_(std::move(coords)) {
        for (double c : coords_) {
            if (!std::isfinite(c)) throw std::invalid_argument("opinion coordinate is not finite");
        }
    }

    OpinionVec(std::initializer_list<double> coords) : OpinionVec(std::vector<double>(coords)) {}

    std::size_t dim() const noexcept { return coords_.size(); }
    std::span<const double> coords() const noexcept { return coords_; }
    double operator[](std::size_t i) const { return coords_[i]; }

    friend bool operator==(const OpinionVec&, const OpinionVec&) = default;

private:
    std::vector<double> coords_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatch("distance between vectors of different dimension");
    double sum = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double diff = a[c] - b[c];
        sum += diff * diff;
    }
    return sum;
}

/// Euclidean distance; coordinates are accumulated in ascending order.
inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

inline double distance(const OpinionVec& a, const OpinionVec& b) {
    return distance(a.coords(), b.coords());
}

/// Opinions of all agents at one time step, stored row-major (N x d).
class SystemState {
public:
    SystemState() = default;

    SystemState(std::size_t t, std::size_t agents, std::size_t dim)
        : t_(t), agents_(agents), dim_(dim), values_(agents * dim, 0.0) {}

    SystemState(std::size_t t, std::size_t dim, std::vector<double> values)
        : t_(t), dim_(dim), values_(std::move(values)) {
        if (dim_ == 0 || values_.size() % dim_ != 0) {
            throw DimensionMismatch("state matrix size is not a multiple of the dimension");
        }
        agents_ = values_.size() / dim_;
    }

    std::size_t t() const noexcept { return t_; }
    void set_t(std::size_t t) noexcept { t_ = t; }
    std::size_t agent_count() const noexcept { return agents_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const double> row(AgentId i) const { return {values_.data() + i * dim_, dim_}; }
    std::span<double> row(AgentId i) { return {values_.data() + i * dim_, dim_}; }
    OpinionVec opinion(AgentId i) const {
        auto r = row(i);
        return OpinionVec(std::vector<double>(r.begin(), r.end()));
    }

    std::span<const double> values() const noexcept { return values_; }

    bool all_finite() const {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    /// Bitwise equality of opinions (time is ignored).
    bool same_opinions(const SystemState& other) const {
        return dim_ == other.dim_ && agents_ == other.agents_ && values_ == other.values_;
    }

private:
    std::size_t t_ = 0;
    std::size_t agents_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

enum class GroupKind { follower, leader };

struct GroupId {
    GroupKind kind = GroupKind::follower;
    std::size_t leader = 0;  // 0-based leader group index, meaningful for leaders only

    static GroupId follower() { return {GroupKind::follower, 0}; }
    static GroupId leader_group(std::size_t k) { return {GroupKind::leader, k}; }
    bool is_leader() const noexcept { return kind == GroupKind::leader; }

    /// Slot 0 is the follower group, slot k + 1 is leader group k.
    std::size_t slot() const noexcept { return is_leader() ? leader + 1 : 0; }

    friend bool operator==(const GroupId&, const GroupId&) = default;
};

inline constexpr std::size_t kNoSubsystem = static_cast<std::size_t>(-1);

struct Partition {
    std::vector<GroupId> assignment;               // indexed by agent
    std::vector<AgentId> followers;                // ascending
    std::vector<std::vector<AgentId>> leaders;     // per leader group, ascending
    std::vector<std::string> leader_names;
    // F may be declared as several named blocks; they form one follower group.
    std::vector<std::string> follower_block_names;
    std::vector<std::size_t> follower_block;       // per agent; block index for followers
    std::vector<std::size_t> follower_subsystem;   // per agent; kNoSubsystem if unassigned

    std::size_t agent_count() const noexcept { return assignment.size(); }
    std::size_t leader_group_count() const noexcept { return leaders.size(); }

    const std::vector<AgentId>& members(std::size_t slot) const {
        return slot == 0 ? followers : leaders.at(slot - 1);
    }

    const std::string& group_name(AgentId i) const {
        const GroupId& g = assignment.at(i);
        return g.is_leader() ? leader_names.at(g.leader) : follower_block_names.at(follower_block.at(i));
    }
};

}  // namespace lfmix

#endif
