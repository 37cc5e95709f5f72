#ifndef LFMIX_SCHEDULE_HPP
#define LFMIX_SCHEDULE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "lfmix/core.hpp"

namespace lfmix {

// Counter-based randomness: every draw is a pure function of its key, so
// adding agents or time steps never reshuffles existing draws.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_uniform(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

struct ConstantDegree {
    double value = 0.0;
    friend bool operator==(const ConstantDegree&, const ConstantDegree&) = default;
};

/// Explicit per-step values; the last value holds for every later step.
struct TableDegree {
    std::vector<double> values;
    friend bool operator==(const TableDegree&, const TableDegree&) = default;
};

/// value * rate^t, clamped to [0, 1].
struct GeometricDecayDegree {
    double value = 1.0;
    double rate = 1.0;
    friend bool operator==(const GeometricDecayDegree&, const GeometricDecayDegree&) = default;
};

/// Uniform draws in [low, high] keyed by (seed, agent, t, stream).
struct SeededRandomDegree {
    std::uint64_t seed = 0;
    double low = 0.0;
    double high = 1.0;
    friend bool operator==(const SeededRandomDegree&, const SeededRandomDegree&) = default;
};

using DegreeSpec = std::variant<ConstantDegree, TableDegree, GeometricDecayDegree, SeededRandomDegree>;

/// A scalar degree as a pure function of (agent, t).
///
/// Built-in kinds are fully inspectable, which lets validation bound them
/// over all t. Custom schedules are opaque and only checked at step time.
class DegreeSchedule {
public:
    using CustomFn = std::function<double(AgentId, std::uint64_t)>;

    DegreeSchedule() : spec_(ConstantDegree{0.0}) {}
    DegreeSchedule(DegreeSpec spec, std::uint64_t stream = 0) : spec_(std::move(spec)), stream_(stream) {}

    static DegreeSchedule constant(double v) { return DegreeSchedule(ConstantDegree{v}); }

    static DegreeSchedule custom(CustomFn fn) {
        DegreeSchedule s;
        s.custom_ = std::move(fn);
        return s;
    }

    /// Copy that evaluates as if queried for `agent`, whatever id it is called with.
    DegreeSchedule pinned_to(AgentId agent) const {
        DegreeSchedule s = *this;
        s.pinned_ = agent;
        return s;
    }

    double operator()(AgentId agent, std::uint64_t t) const {
        if (pinned_) agent = *pinned_;
        if (custom_) return custom_(agent, t);
        return std::visit([&](const auto& s) { return eval(s, agent, t); }, spec_);
    }

    bool is_custom() const noexcept { return static_cast<bool>(custom_); }
    const DegreeSpec& spec() const noexcept { return spec_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// True when the value never depends on t.
    bool time_invariant() const {
        if (custom_) return false;
        if (const auto* c = std::get_if<ConstantDegree>(&spec_)) return std::isfinite(c->value);
        if (const auto* tb = std::get_if<TableDegree>(&spec_)) {
            return std::all_of(tb->values.begin(), tb->values.end(),
                               [&](double v) { return v == tb->values.front(); });
        }
        if (const auto* g = std::get_if<GeometricDecayDegree>(&spec_)) return g->rate == 1.0 || g->value == 0.0;
        return false;
    }

    /// Problems that make the schedule able to leave [0, 1].
    std::vector<std::string> range_errors() const {
        std::vector<std::string> errs;
        if (custom_) return errs;
        auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, ConstantDegree>) {
                    if (!in_unit(s.value)) errs.push_back("constant degree outside [0,1]");
                } else if constexpr (std::is_same_v<T, TableDegree>) {
                    if (s.values.empty()) errs.push_back("table schedule has no values");
                    for (double v : s.values) {
                        if (!in_unit(v)) {
                            errs.push_back("table degree outside [0,1]");
                            break;
                        }
                    }
                } else if constexpr (std::is_same_v<T, GeometricDecayDegree>) {
                    if (!in_unit(s.value)) errs.push_back("geometric_decay value outside [0,1]");
                    if (!std::isfinite(s.rate) || s.rate < 0.0) errs.push_back("geometric_decay rate must be >= 0");
                } else {
                    if (!in_unit(s.low) || !in_unit(s.high)) errs.push_back("seeded_random range outside [0,1]");
                    else if (s.low > s.high) errs.push_back("seeded_random low exceeds high");
                }
            },
            spec_);
        return errs;
    }

    /// Largest value the schedule can take at step t (exact for deterministic kinds).
    double upper_at(std::uint64_t t) const {
        if (const auto* r = std::get_if<SeededRandomDegree>(&spec_)) return r->high;
        return eval_deterministic(t);
    }

    /// sup over s >= t of the schedule.
    double tail_sup(std::uint64_t t) const {
        return std::visit(
            [&](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, ConstantDegree>) {
                    return s.value;
                } else if constexpr (std::is_same_v<T, TableDegree>) {
                    if (s.values.empty()) return 0.0;
                    const std::size_t from = std::min<std::size_t>(t, s.values.size() - 1);
                    return *std::max_element(s.values.begin() + static_cast<std::ptrdiff_t>(from), s.values.end());
                } else if constexpr (std::is_same_v<T, GeometricDecayDegree>) {
                    if (s.rate > 1.0) return s.value > 0.0 ? 1.0 : 0.0;
                    return eval(s, 0, t);
                } else {
                    return s.high;
                }
            },
            spec_);
    }

    /// Number of leading steps during which the schedule is not yet in its tail regime.
    std::uint64_t transient_length() const {
        if (const auto* tb = std::get_if<TableDegree>(&spec_)) return tb->values.size();
        return 0;
    }

    friend bool operator==(const DegreeSchedule& a, const DegreeSchedule& b) {
        return !a.custom_ && !b.custom_ && a.spec_ == b.spec_ && a.stream_ == b.stream_ && a.pinned_ == b.pinned_;
    }

private:
    double eval_deterministic(std::uint64_t t) const {
        return std::visit([&](const auto& s) { return eval(s, 0, t); }, spec_);
    }

    static double eval(const ConstantDegree& s, AgentId, std::uint64_t) { return s.value; }

    static double eval(const TableDegree& s, AgentId, std::uint64_t t) {
        if (s.values.empty()) return 0.0;
        return t < s.values.size() ? s.values[t] : s.values.back();
    }

    static double eval(const GeometricDecayDegree& s, AgentId, std::uint64_t t) {
        const double v = s.value * std::pow(s.rate, static_cast<double>(t));
        return std::clamp(v, 0.0, 1.0);
    }

    double eval(const SeededRandomDegree& s, AgentId agent, std::uint64_t t) const {
        const double u = unit_uniform(hash_key({s.seed, agent, t, stream_}));
        return std::min(s.high, s.low + (s.high - s.low) * u);
    }

    DegreeSpec spec_;
    std::uint64_t stream_ = 0;
    std::optional<AgentId> pinned_;
    CustomFn custom_;
};

}  // namespace lfmix

#endif
