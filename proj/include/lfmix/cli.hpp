#ifndef LFMIX_CLI_HPP
#define LFMIX_CLI_HPP

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfmix/analysis.hpp"
#include "lfmix/dynamics.hpp"
#include "lfmix/io/csv.hpp"
#include "lfmix/io/report_json.hpp"
#include "lfmix/io/scenario_json.hpp"
#include "lfmix/io/svg.hpp"
#include "lfmix/scenario.hpp"

namespace lfmix::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
    kOk = 0,
    kUnexpected = 1,
    kInvalidInput = 2,
    kScheduleViolation = 3,
    kCheckFailed = 4,
};

struct RunFlags {
    std::string scenario;
    std::optional<std::size_t> horizon;
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;
    std::string fault = "none";
};

struct SimulateFlags : RunFlags {
    std::string out;
    std::optional<std::size_t> record_every;
};

struct CheckFlags : RunFlags {
    std::string checks = "lemma1,thm2,lemma3,thm4,cor1,cor2";
    std::string report;
    std::optional<double> ball_radius;
};

struct PlotFlags {
    std::string metrics;
    std::string out;
    std::string series;
    std::string title;
    bool log_y = false;
};

struct SweepFlags : RunFlags {
    std::vector<std::string> vary;
    std::string out;
};

inline std::optional<Fault> parse_fault(const std::string& s) {
    if (s == "none") return Fault::none;
    if (s == "mean-shift") return Fault::mean_shift;
    if (s == "degree-overflow") return Fault::degree_overflow;
    return std::nullopt;
}

/// --threads, else LFMIX_THREADS, else the scenario's engine setting.
inline std::size_t resolve_threads(const std::optional<std::size_t>& flag, std::size_t scenario_default) {
    if (flag) return std::max<std::size_t>(1, *flag);
    if (const char* env = std::getenv("LFMIX_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return v;
    }
    return std::max<std::size_t>(1, scenario_default);
}

inline void print_errors(const std::vector<ValidationError>& errors) {
    for (const auto& e : errors) std::cerr << "error: " << to_string(e.code) << ": " << e.message << "\n";
}

/// Reads a scenario file into a RawConfig, printing diagnostics on failure.
inline std::optional<RawConfig> read_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: scenario file not found: " << path << "\n";
        return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    auto parsed = io::parse_scenario_text(buf.str());
    if (!parsed.config) {
        print_errors(parsed.errors);
        return std::nullopt;
    }
    return parsed.config;
}

inline void apply_overrides(RawConfig& raw, const RunFlags& flags) {
    if (flags.horizon) raw.engine.horizon = *flags.horizon;
    if (flags.seed) {
        if (auto* box = std::get_if<RandomBoxInit>(&raw.initial)) box->seed = *flags.seed;
    }
}

inline std::optional<Scenario> build_or_report(const RawConfig& raw) {
    BuildResult built = build_scenario(raw);
    if (!built.ok()) {
        print_errors(built.errors);
        return std::nullopt;
    }
    return std::move(*built.scenario);
}

struct SimulationSummary {
    StopReason stop_reason = StopReason::horizon;
    std::size_t steps = 0;
    double wall_time_s = 0.0;
    std::optional<double> max_alpha;
    std::optional<double> max_one_minus_beta;
    SystemState final_state;
};

/// Runs a scenario and streams trajectory.csv, metrics.csv,
/// scenario.canonical.json and run.json into `dir`.
inline SimulationSummary simulate_to_directory(const Scenario& sc, const fs::path& dir, std::size_t record_every,
                                               std::size_t threads, Fault fault, std::uint64_t seed_used) {
    fs::create_directories(dir);
    std::ofstream traj_out(dir / "trajectory.csv", std::ios::binary);
    std::ofstream metrics_out(dir / "metrics.csv", std::ios::binary);
    if (!traj_out || !metrics_out) throw std::runtime_error("cannot write into " + dir.string());
    {
        std::ofstream canon(dir / "scenario.canonical.json", std::ios::binary);
        canon << io::canonical_scenario_text(sc);
    }
    io::TrajectoryCsvWriter traj_csv(traj_out, sc);
    io::MetricsCsvWriter metrics_csv(metrics_out, sc);

    SimulationSummary summary;
    RunOptions opts = RunOptions::from(sc);
    opts.record_every = opts.horizon + 1;  // states are streamed, not retained
    opts.step.threads = threads;
    opts.step.fault = fault;
    record_every = std::max<std::size_t>(1, record_every);
    const std::size_t m = sc.group_count();
    opts.observer = [&](const SystemState& state, const StepResult& r) {
        if (state.t() % record_every == 0) traj_csv.write(state);
        metrics_csv.write(compute_metrics(state, sc, threads));
        for (AgentId i = 0; i < sc.agent_count(); ++i) {
            if (sc.partition.assignment[i].is_leader()) {
                summary.max_alpha = std::max(summary.max_alpha.value_or(0.0), r.degrees.alpha[i]);
            } else if (m > 0) {
                double sum = 0.0;
                for (double b : r.degrees.betas(i)) sum += b;
                summary.max_one_minus_beta = std::max(summary.max_one_minus_beta.value_or(0.0), 1.0 - sum);
            }
        }
    };
    const auto start = std::chrono::steady_clock::now();
    Trajectory traj = run(sc, opts);
    const auto stop = std::chrono::steady_clock::now();
    const SystemState& last = traj.final_state();
    traj_csv.write(last);  // the observer never sees the final state
    metrics_csv.write(compute_metrics(last, sc, threads));

    summary.stop_reason = traj.stop_reason;
    summary.steps = traj.final_t;
    summary.wall_time_s = std::chrono::duration<double>(stop - start).count();
    summary.final_state = last;

    nlohmann::json run_json;
    run_json["stop_reason"] = to_string(traj.stop_reason);
    run_json["steps"] = traj.final_t;
    run_json["wall_time_s"] = summary.wall_time_s;
    run_json["threads"] = threads;
    run_json["record_every"] = record_every;
    run_json["seed"] = seed_used;
    run_json["fault"] = fault == Fault::none ? "none" : fault == Fault::mean_shift ? "mean-shift" : "degree-overflow";
    nlohmann::json measured;
    measured["delta"] = summary.max_alpha ? nlohmann::json(*summary.max_alpha) : nlohmann::json(nullptr);
    const double gamma = std::max(summary.max_alpha.value_or(0.0), summary.max_one_minus_beta.value_or(0.0));
    measured["gamma"] = (summary.max_alpha || summary.max_one_minus_beta) ? nlohmann::json(gamma) : nlohmann::json(nullptr);
    measured["note"] = "sup over the simulated steps";
    run_json["measured"] = measured;
    std::ofstream(dir / "run.json", std::ios::binary) << run_json.dump(2) << "\n";
    return summary;
}

inline std::uint64_t seed_of(const RawConfig& raw) {
    if (const auto* box = std::get_if<RandomBoxInit>(&raw.initial)) return box->seed;
    return 0;
}

inline int cmd_simulate(const SimulateFlags& flags) {
    auto fault = parse_fault(flags.fault);
    if (!fault) {
        std::cerr << "error: unknown fault '" << flags.fault << "'\n";
        return kInvalidInput;
    }
    auto raw = read_raw(flags.scenario);
    if (!raw) return kInvalidInput;
    apply_overrides(*raw, flags);
    auto sc = build_or_report(*raw);
    if (!sc) return kInvalidInput;
    const std::size_t threads = resolve_threads(flags.threads, sc->engine.threads);
    const std::size_t record_every = flags.record_every.value_or(sc->engine.record_every);
    if (record_every == 0) {
        std::cerr << "error: --record-every must be >= 1\n";
        return kInvalidInput;
    }
    try {
        simulate_to_directory(*sc, flags.out, record_every, threads, *fault, seed_of(*raw));
    } catch (const ScheduleViolation& e) {
        std::cerr << "error: ScheduleViolation: " << e.what() << "\n";
        return kScheduleViolation;
    }
    return kOk;
}

// ---------------------------------------------------------------------------

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

/// Runs the selected theorem checks on a full trajectory.
inline std::vector<TheoremReport> run_checks(const Scenario& sc, const Trajectory& traj,
                                             const std::vector<std::string>& names,
                                             std::optional<double> ball_radius) {
    std::vector<TheoremReport> out;
    const std::size_t m = sc.group_count();
    for (const auto& name : names) {
        TheoremReport rep;
        rep.name = name;
        if (name == "lemma1") {
            if (m == 0) rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "no leader groups");
            else rep = check_lemma_contraction(traj, sc);
        } else if (name == "thm2") {
            if (m == 0) rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "no leader groups");
            for (std::size_t k = 0; k < m; ++k) {
                double delta = 0.0;
                for (std::size_t t = 0; t < std::max<std::size_t>(traj.final_t, 1); ++t) {
                    for (AgentId i : sc.partition.leaders[k]) delta = std::max(delta, sc.alpha(i, t));
                }
                TheoremReport part = check_theorem_target(traj, sc, k, delta);
                rep.merge(part, sc.partition.leader_names[k] + ".");
            }
            rep.finalize();
        } else if (name == "lemma3") {
            if (m != 1) {
                rep.mark_inapplicable(CheckError::inapplicable_hypothesis, "needs exactly one leader group");
            } else {
                const double radius =
                    ball_radius.value_or(detail::max_distance_all(traj.states.front(), sc.targets[0].coords()));
                rep = check_ball_invariance(traj, sc.targets[0], radius);
            }
        } else if (name == "thm4") {
            rep = check_theorem_consensus(traj, sc);
        } else if (name == "cor1") {
            rep = check_corollary_mixture(traj, sc);
        } else if (name == "cor2") {
            rep = check_corollary_subsystems(traj, sc);
        } else {
            throw std::invalid_argument("unknown check '" + name + "'");
        }
        rep.name = name;
        out.push_back(std::move(rep));
    }
    return out;
}

inline int cmd_check(const CheckFlags& flags) {
    static const std::set<std::string> known = {"lemma1", "thm2", "lemma3", "thm4", "cor1", "cor2"};
    const auto names = split(flags.checks, ',');
    for (const auto& n : names) {
        if (!known.count(n)) {
            std::cerr << "error: unknown check '" << n << "'\n";
            return kInvalidInput;
        }
    }
    auto fault = parse_fault(flags.fault);
    if (!fault) {
        std::cerr << "error: unknown fault '" << flags.fault << "'\n";
        return kInvalidInput;
    }
    auto raw = read_raw(flags.scenario);
    if (!raw) return kInvalidInput;
    apply_overrides(*raw, flags);
    auto sc = build_or_report(*raw);
    if (!sc) return kInvalidInput;

    RunOptions opts = RunOptions::from(*sc);
    opts.record_every = 1;
    opts.step.threads = resolve_threads(flags.threads, sc->engine.threads);
    opts.step.fault = *fault;
    Trajectory traj;
    try {
        traj = run(*sc, opts);
    } catch (const ScheduleViolation& e) {
        std::cerr << "error: ScheduleViolation: " << e.what() << "\n";
        return kScheduleViolation;
    }
    const auto reports = run_checks(*sc, traj, names, flags.ball_radius);

    nlohmann::json doc;
    doc["scenario"] = flags.scenario;
    doc["steps"] = traj.final_t;
    doc["stop_reason"] = to_string(traj.stop_reason);
    doc["fault"] = flags.fault;
    doc["checks"] = nlohmann::json::object();
    bool all_ok = true;
    for (const auto& rep : reports) {
        doc["checks"][rep.name] = io::report_to_json(rep);
        const bool failed = rep.status == CheckStatus::failed;
        all_ok = all_ok && !failed;
        std::cerr << rep.name << ": " << (rep.applicable() ? to_string(rep.status) : "skipped (hypothesis unmet)");
        if (!rep.note.empty()) std::cerr << " [" << rep.note << "]";
        std::cerr << "\n";
    }
    doc["all_passed"] = all_ok;
    const std::string text = doc.dump(2) + "\n";
    if (!flags.report.empty()) {
        std::ofstream out(flags.report, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write report " << flags.report << "\n";
            return kInvalidInput;
        }
        out << text;
    } else {
        std::cout << text;
    }
    return all_ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

inline int cmd_plot(const PlotFlags& flags) {
    std::ifstream in(flags.metrics, std::ios::binary);
    if (!in) {
        std::cerr << "error: metrics file not found: " << flags.metrics << "\n";
        return kInvalidInput;
    }
    std::string err;
    auto rows = io::read_metrics_csv(in, &err);
    if (!rows) {
        std::cerr << "error: " << err << "\n";
        return kInvalidInput;
    }
    if (rows->empty()) {
        std::cerr << "error: metrics file has no data rows\n";
        return kInvalidInput;
    }
    std::set<std::string> wanted;
    for (const auto& s : split(flags.series.empty() ? "C,A,diameter" : flags.series, ',')) wanted.insert(s);

    std::vector<io::ChartSeries> series;
    std::map<std::string, std::size_t> index;
    for (const auto& r : *rows) {
        if (!wanted.count(r.metric)) continue;
        const std::string key = r.metric == "C" ? "C[" + r.group + "]" : r.metric;
        auto [it, inserted] = index.emplace(key, series.size());
        if (inserted) series.push_back({key, {}});
        series[it->second].points.emplace_back(static_cast<double>(r.t), r.value);
    }
    if (series.empty()) {
        std::cerr << "error: none of the requested series are present\n";
        return kInvalidInput;
    }
    io::ChartOptions opt;
    opt.title = flags.title.empty() ? "opinion metrics" : flags.title;
    opt.log_y = flags.log_y;
    opt.y_label = "distance";
    std::ofstream out(flags.out, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << flags.out << "\n";
        return kInvalidInput;
    }
    out << io::render_line_chart(series, opt);
    return kOk;
}

// ---------------------------------------------------------------------------

struct VarySpec {
    std::string param;  // epsilon, alpha, beta, N
    double low = 0.0;
    double high = 0.0;
    std::size_t steps = 1;

    double value(std::size_t i) const {
        if (steps <= 1) return low;
        return low + (high - low) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
};

inline std::optional<VarySpec> parse_vary(const std::string& text, std::string& err) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
        err = "expected param=lo:hi:steps, got '" + text + "'";
        return std::nullopt;
    }
    VarySpec v;
    v.param = text.substr(0, eq);
    if (v.param == "eps" || v.param == "ε") v.param = "epsilon";
    if (v.param != "epsilon" && v.param != "alpha" && v.param != "beta" && v.param != "N") {
        err = "unknown sweep parameter '" + v.param + "' (epsilon, alpha, beta, N)";
        return std::nullopt;
    }
    const auto parts = split(text.substr(eq + 1), ':');
    if (parts.size() != 3) {
        err = "expected lo:hi:steps in '" + text + "'";
        return std::nullopt;
    }
    auto lo = io::parse_double(parts[0]);
    auto hi = io::parse_double(parts[1]);
    auto st = io::parse_double(parts[2]);
    if (!lo || !hi || !st || *st < 1 || *st != std::floor(*st)) {
        err = "bad numbers in '" + text + "'";
        return std::nullopt;
    }
    v.low = *lo;
    v.high = *hi;
    v.steps = static_cast<std::size_t>(*st);
    return v;
}

/// Applies one sweep coordinate to a raw config; `base` classifies agents.
inline bool apply_vary(RawConfig& raw, const Scenario& base, const std::string& param, double value, std::string& err) {
    const auto& part = base.partition;
    auto is_leader_group = [&](const std::string& g) {
        return std::find(part.leader_names.begin(), part.leader_names.end(), g) != part.leader_names.end();
    };
    auto agent_is_leader = [&](std::int64_t a) {
        return a >= 0 && static_cast<std::size_t>(a) < part.agent_count() &&
               part.assignment[static_cast<std::size_t>(a)].is_leader();
    };
    if (param == "epsilon") {
        raw.epsilon = value;
    } else if (param == "alpha") {
        std::erase_if(raw.schedules, [&](const RawScheduleEntry& e) {
            return (e.group && is_leader_group(*e.group)) || (e.agent && agent_is_leader(*e.agent));
        });
        for (const auto& name : part.leader_names) raw.schedules.push_back({name, std::nullopt, std::nullopt, ConstantDegree{value}});
    } else if (param == "beta") {
        std::erase_if(raw.schedules, [&](const RawScheduleEntry& e) {
            return (e.group && !is_leader_group(*e.group)) || (e.agent && !agent_is_leader(*e.agent));
        });
        for (const auto& block : part.follower_block_names) {
            for (const auto& leader : part.leader_names) {
                raw.schedules.push_back({block, std::nullopt, leader, ConstantDegree{value}});
            }
        }
    } else if (param == "N") {
        if (!std::holds_alternative<RandomBoxInit>(raw.initial)) {
            err = "varying N needs random initial opinions";
            return false;
        }
        auto it = std::find_if(raw.groups.begin(), raw.groups.end(),
                               [](const RawGroup& g) { return g.kind == GroupKind::follower && g.count; });
        if (it == raw.groups.end()) {
            err = "varying N needs a follower group with a member count";
            return false;
        }
        std::size_t others = 0;
        for (const auto& g : raw.groups) {
            if (&g != &*it) others += g.count ? *g.count : g.ids.size();
        }
        const double n = std::round(value);
        if (n < static_cast<double>(others)) {
            err = "N = " + std::to_string(n) + " is smaller than the non-varying groups";
            return false;
        }
        it->count = static_cast<std::size_t>(n) - others;
    }
    return true;
}

inline int cmd_sweep(const SweepFlags& flags) {
    if (flags.vary.empty()) {
        std::cerr << "error: at least one --vary is required\n";
        return kInvalidInput;
    }
    std::vector<VarySpec> specs;
    for (const auto& v : flags.vary) {
        std::string err;
        auto spec = parse_vary(v, err);
        if (!spec) {
            std::cerr << "error: " << err << "\n";
            return kInvalidInput;
        }
        specs.push_back(*spec);
    }
    auto fault = parse_fault(flags.fault);
    if (!fault) {
        std::cerr << "error: unknown fault '" << flags.fault << "'\n";
        return kInvalidInput;
    }
    auto raw = read_raw(flags.scenario);
    if (!raw) return kInvalidInput;
    apply_overrides(*raw, flags);
    auto base = build_or_report(*raw);
    if (!base) return kInvalidInput;
    const std::uint64_t base_seed = seed_of(*raw);

    std::size_t total = 1;
    for (const auto& s : specs) total *= s.steps;
    struct Point {
        std::vector<double> values;
        Scenario scenario;
        std::uint64_t seed = 0;
    };
    std::vector<Point> points;
    points.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        RawConfig cfg = *raw;
        Point p;
        std::size_t rem = idx;
        for (std::size_t s = specs.size(); s-- > 0;) {
            const std::size_t i = rem % specs[s].steps;
            rem /= specs[s].steps;
            p.values.insert(p.values.begin(), specs[s].value(i));
        }
        for (std::size_t s = 0; s < specs.size(); ++s) {
            std::string err;
            if (!apply_vary(cfg, *base, specs[s].param, p.values[s], err)) {
                std::cerr << "error: point " << idx << ": " << err << "\n";
                return kInvalidInput;
            }
        }
        p.seed = base_seed + idx;
        if (auto* box = std::get_if<RandomBoxInit>(&cfg.initial)) box->seed = p.seed;
        BuildResult built = build_scenario(cfg);
        if (!built.ok()) {
            std::cerr << "error: point " << idx << " is invalid\n";
            print_errors(built.errors);
            return kInvalidInput;
        }
        p.scenario = std::move(*built.scenario);
        points.push_back(std::move(p));
    }

    struct Outcome {
        SimulationSummary summary;
        double final_max_distance = 0.0;
        bool violation = false;
        std::string message;
    };
    std::vector<Outcome> outcomes(points.size());
    const fs::path out_dir(flags.out);
    fs::create_directories(out_dir);
    const std::size_t threads = resolve_threads(flags.threads, base->engine.threads);
    parallel_for(points.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            char name[32];
            std::snprintf(name, sizeof name, "point_%04zu", idx);
            const Scenario& sc = points[idx].scenario;
            try {
                outcomes[idx].summary = simulate_to_directory(sc, out_dir / name, sc.engine.record_every, 1, *fault,
                                                              points[idx].seed);
                const MetricsRow row = compute_metrics(outcomes[idx].summary.final_state, sc);
                double worst = row.follower_distance.value_or(0.0);
                for (double c : row.target_distance) worst = std::max(worst, c);
                if (sc.group_count() == 0) worst = row.diameter;
                outcomes[idx].final_max_distance = worst;
            } catch (const ScheduleViolation& e) {
                outcomes[idx].violation = true;
                outcomes[idx].message = e.what();
            }
        }
    });

    std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
    summary << "point";
    for (const auto& s : specs) summary << ',' << s.param;
    summary << ",converged,final_max_distance,steps_to_convergence,stop_reason\r\n";
    int code = kOk;
    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        const auto& o = outcomes[idx];
        if (o.violation) {
            std::cerr << "error: ScheduleViolation at point " << idx << ": " << o.message << "\n";
            code = kScheduleViolation;
            continue;
        }
        summary << idx;
        for (double v : points[idx].values) summary << ',' << io::format_double(v);
        const bool converged = o.summary.stop_reason != StopReason::horizon;
        summary << ',' << (converged ? "true" : "false") << ',' << io::format_double(o.final_max_distance) << ','
                << (converged ? std::to_string(o.summary.steps) : std::string()) << ','
                << to_string(o.summary.stop_reason) << "\r\n";
    }
    return code;
}

// ---------------------------------------------------------------------------

inline void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--scenario", f.scenario, "Scenario JSON file")->required();
    cmd->add_option("--horizon", f.horizon, "Override the step horizon");
    cmd->add_option("--threads", f.threads, "Worker threads (default: LFMIX_THREADS or the scenario's engine.threads)");
    cmd->add_option("--seed", f.seed, "Override the random initial-opinion seed");
    cmd->add_option("--inject-fault", f.fault, "Corrupt the engine on purpose: none, mean-shift, degree-overflow");
}

/// Entry point shared by the lfmix binary and the tests.
inline int main(int argc, char** argv) {
    CLI::App app{"lfmix: mixed leader-follower opinion dynamics engine and convergence checker"};
    app.require_subcommand(1);

    SimulateFlags sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario and write trajectory/metrics files");
    add_run_flags(sim_cmd, sim);
    sim_cmd->add_option("--out", sim.out, "Output directory")->required();
    sim_cmd->add_option("--record-every", sim.record_every, "Write opinions every K steps (metrics every step)");

    CheckFlags chk;
    auto* chk_cmd = app.add_subcommand("check", "Run a scenario and certify the convergence results on it");
    add_run_flags(chk_cmd, chk);
    chk_cmd->add_option("--checks", chk.checks, "Comma list of lemma1,thm2,lemma3,thm4,cor1,cor2");
    chk_cmd->add_option("--report", chk.report, "Write the JSON report here (default: standard output)");
    chk_cmd->add_option("--ball-radius", chk.ball_radius, "Radius for lemma3 (default: initial max distance to g)");

    PlotFlags plot;
    auto* plot_cmd = app.add_subcommand("plot", "Render metrics.csv as a standalone SVG line chart");
    plot_cmd->add_option("--metrics", plot.metrics, "metrics.csv from simulate")->required();
    plot_cmd->add_option("--out", plot.out, "SVG output path")->required();
    plot_cmd->add_option("--series", plot.series, "Comma list of metrics to draw (default C,A,diameter)");
    plot_cmd->add_option("--title", plot.title, "Chart title");
    plot_cmd->add_flag("--log", plot.log_y, "Logarithmic y axis");

    SweepFlags sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a Cartesian parameter sweep");
    add_run_flags(sweep_cmd, sweep);
    sweep_cmd->add_option("--vary", sweep.vary, "param=lo:hi:steps with param in epsilon, alpha, beta, N")->required();
    sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalidInput;
    }

    try {
        if (*sim_cmd) return cmd_simulate(sim);
        if (*chk_cmd) return cmd_check(chk);
        if (*plot_cmd) return cmd_plot(plot);
        if (*sweep_cmd) return cmd_sweep(sweep);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUnexpected;
    }
    return kUnexpected;
}

}  // namespace lfmix::cli

#endif
