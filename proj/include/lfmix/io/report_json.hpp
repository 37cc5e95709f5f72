#ifndef LFMIX_IO_REPORT_JSON_HPP
#define LFMIX_IO_REPORT_JSON_HPP

#include <cmath>
#include <string>

#include <json.hpp>

#include "lfmix/analysis.hpp"

namespace lfmix::io {

inline nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json record_to_json(const SlackRecord& r) {
    nlohmann::json j = {{"t", r.t},
                        {"clause", std::string(r.clause)},
                        {"lhs", number_or_null(r.lhs)},
                        {"rhs", number_or_null(r.rhs)},
                        {"slack", number_or_null(r.slack)},
                        {"tolerance", r.tolerance},
                        {"pass", r.pass}};
    if (r.agent != kNoAgent) j["agent"] = r.agent;
    return j;
}

/// Summary plus the first `max_failures` failing records.
inline nlohmann::json report_to_json(const TheoremReport& rep, std::size_t max_failures = 20) {
    nlohmann::json j;
    j["name"] = rep.name;
    j["status"] = rep.status == CheckStatus::inapplicable ? "skipped (hypothesis unmet)" : to_string(rep.status);
    j["pass"] = rep.passed();
    if (rep.error != CheckError::none) j["error"] = to_string(rep.error);
    if (!rep.note.empty()) j["note"] = rep.note;
    j["records_checked"] = rep.records.size();
    j["failures"] = rep.failure_count();
    j["worst_slack"] = number_or_null(rep.worst_slack());
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : rep.parameters) params[k] = number_or_null(v);
    j["parameters"] = std::move(params);
    nlohmann::json failing = nlohmann::json::array();
    for (const auto& r : rep.records) {
        if (failing.size() >= max_failures) break;
        if (!r.pass) failing.push_back(record_to_json(r));
    }
    j["first_failures"] = std::move(failing);
    return j;
}

}  // namespace lfmix::io

#endif
