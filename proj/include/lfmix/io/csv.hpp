#ifndef LFMIX_IO_CSV_HPP
#define LFMIX_IO_CSV_HPP

#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lfmix/analysis.hpp"
#include "lfmix/core.hpp"
#include "lfmix/scenario.hpp"

namespace lfmix::io {

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
    return v;
}

/// RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Reads one record; returns false at end of input.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string cur;
    bool quoted = false;
    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    cur += '"';
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            break;
        } else if (c == '\n') {
            break;
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return true;
}

/// t,agent,group,x0,...,x{d-1}; one row per agent per recorded state.
class TrajectoryCsvWriter {
public:
    TrajectoryCsvWriter(std::ostream& out, const Scenario& sc) : out_(out), sc_(sc) {
        out_ << "t,agent,group";
        for (std::size_t c = 0; c < sc.dimension; ++c) out_ << ",x" << c;
        out_ << "\r\n";
    }

    void write(const SystemState& state) {
        for (AgentId i = 0; i < state.agent_count(); ++i) {
            out_ << state.t() << ',' << i << ',' << csv_field(sc_.partition.group_name(i));
            for (double v : state.row(i)) out_ << ',' << format_double(v);
            out_ << "\r\n";
        }
    }

private:
    std::ostream& out_;
    const Scenario& sc_;
};

/// t,group,metric,value. Metric names: C (per leader group), A, diameter,
/// max_alpha, max_one_minus_beta_sum.
class MetricsCsvWriter {
public:
    MetricsCsvWriter(std::ostream& out, const Scenario& sc) : out_(out), sc_(sc) { out_ << "t,group,metric,value\r\n"; }

    void write(const MetricsRow& row) {
        for (std::size_t k = 0; k < row.target_distance.size(); ++k) {
            line(row.t, sc_.partition.leader_names[k], "C", row.target_distance[k]);
        }
        if (row.follower_distance) line(row.t, "followers", "A", *row.follower_distance);
        line(row.t, "all", "diameter", row.diameter);
        if (row.max_alpha) line(row.t, "leaders", "max_alpha", *row.max_alpha);
        if (row.max_one_minus_beta_sum) line(row.t, "followers", "max_one_minus_beta_sum", *row.max_one_minus_beta_sum);
    }

private:
    void line(std::size_t t, std::string_view group, std::string_view metric, double v) {
        out_ << t << ',' << csv_field(group) << ',' << metric << ',' << format_double(v) << "\r\n";
    }

    std::ostream& out_;
    const Scenario& sc_;
};

struct MetricsEntry {
    std::size_t t = 0;
    std::string group;
    std::string metric;
    double value = 0.0;
};

/// Parses a metrics CSV. Returns nullopt on a bad header or malformed row.
inline std::optional<std::vector<MetricsEntry>> read_metrics_csv(std::istream& in, std::string* error = nullptr) {
    auto fail = [&](std::string msg) -> std::optional<std::vector<MetricsEntry>> {
        if (error) *error = std::move(msg);
        return std::nullopt;
    };
    std::vector<std::string> f;
    if (!read_csv_record(in, f)) return fail("metrics file is empty");
    if (f != std::vector<std::string>{"t", "group", "metric", "value"}) return fail("unexpected metrics header");
    std::vector<MetricsEntry> rows;
    std::size_t line = 1;
    while (read_csv_record(in, f)) {
        ++line;
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != 4) return fail("line " + std::to_string(line) + ": expected 4 fields");
        MetricsEntry e;
        auto t = parse_double(f[0]);
        auto v = parse_double(f[3]);
        if (!t || *t < 0 || !v) return fail("line " + std::to_string(line) + ": bad number");
        e.t = static_cast<std::size_t>(*t);
        e.group = f[1];
        e.metric = f[2];
        e.value = *v;
        rows.push_back(std::move(e));
    }
    return rows;
}

}  // namespace lfmix::io

#endif
