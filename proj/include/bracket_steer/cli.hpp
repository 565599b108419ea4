#pragma once

// Command-line front end: run / sweep / validate / list / show.
//
// Exit codes: 0 success, 2 invalid input, 3 numeric failure (rank degeneracy,
// divergence), 4 I/O failure. Failures print one line to stderr:
//   error: class=<error_class> message=<text>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bracket_steer/error.hpp"
#include "bracket_steer/multiagent.hpp"
#include "bracket_steer/scenarios.hpp"
#include "bracket_steer/simulation.hpp"
#include "bracket_steer/synthesis.hpp"

namespace bracket_steer::cli {

using nlohmann::json;

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

/// BRACKET_STEER_LOG = debug | info | warn | error | off (default warn). Diagnostics only.
[[nodiscard]] inline LogLevel log_level_from_env() {
    const char* v = std::getenv("BRACKET_STEER_LOG");
    if (v == nullptr) return LogLevel::Warn;
    const std::string s(v);
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    if (s == "error") return LogLevel::Error;
    if (s == "off") return LogLevel::Off;
    return LogLevel::Warn;
}

class Logger {
public:
    Logger(std::ostream& err, LogLevel level) : err_(&err), level_(level) {}
    void log(LogLevel lvl, const std::string& msg) const {
        static constexpr const char* names[] = {"debug", "info", "warn", "error"};
        if (lvl >= level_ && lvl != LogLevel::Off) *err_ << "[" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
    }

private:
    std::ostream* err_;
    LogLevel level_;
};

/// 17 significant digits, the round-trip precision of a double.
[[nodiscard]] inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RunPlan {
    std::string command;
    std::string scenario;
    std::string out;
    std::string format = "csv";
    std::optional<double> epsilon;
    std::optional<double> gamma;
    std::optional<double> t_final;
    std::optional<int> substeps;
    std::optional<double> rho;
    std::vector<double> eps_list;
    int probes = 0;
};

/// Built-in name, otherwise a scenario file path.
[[nodiscard]] inline ScenarioBundle resolve_scenario(const std::string& source) {
    for (const auto& n : builtin_names()) {
        if (n == source) return builtin_scenario(source);
    }
    if (!std::filesystem::exists(source)) {
        throw Error(ErrorClass::Lookup, "unknown scenario '" + source + "' (not a built-in and no such file)");
    }
    return load_scenario(source);
}

inline void apply_overrides(ScenarioBundle& b, const RunPlan& plan) {
    if (plan.epsilon) b.gains.epsilon = *plan.epsilon;
    if (plan.gamma) {
        b.gains.gamma = *plan.gamma;
        for (auto& a : b.agents) a.gamma = *plan.gamma;
    }
    if (plan.t_final) b.sim.t_final = *plan.t_final;
    if (plan.substeps) {
        if (*plan.substeps < 1) throw Error(ErrorClass::InvalidInput, "--substeps must be >= 1");
        b.sim.substeps_per_period = *plan.substeps;
    }
    if (plan.rho) b.expect.rho = *plan.rho;
    try {
        validate_bundle(b);
    } catch (const Error& e) {
        throw Error(ErrorClass::InvalidInput, std::string("invalid override: ") + e.what());
    }
}

[[nodiscard]] inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

[[nodiscard]] inline json certificate_json(const RankCertificate& c) {
    return json{{"rank_ok", c.rank_ok},
                {"worst_condition", nullable(c.worst_condition)},
                {"alpha_estimate", nullable(c.alpha_estimate)},
                {"probe_count", c.sampled_states.size()},
                {"worst_state", detail::vector_json(c.worst_state)}};
}

[[nodiscard]] inline json report_json(const DecayReport& r) {
    return json{{"rho", r.rho},
                {"t1", nullable(r.t1)},
                {"lambda_fit", r.lambda_fit ? json(*r.lambda_fit) : json(nullptr)},
                {"zeta_fit", r.zeta_fit ? json(*r.zeta_fit) : json(nullptr)},
                {"fit_samples", r.fit_samples},
                {"monotone_fraction", r.monotone_fraction}};
}

/// Column table shared by the CSV and JSON writers.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

[[nodiscard]] inline Table single_table(const SampledTrajectory& traj) {
    Table t;
    const auto n = traj.dense_states.empty() ? 0 : traj.dense_states.front().size();
    const auto m = traj.dense_controls.empty() ? 0 : traj.dense_controls.front().size();
    t.columns.push_back("t");
    for (Eigen::Index i = 1; i <= n; ++i) t.columns.push_back("x" + std::to_string(i));
    for (Eigen::Index i = 1; i <= m; ++i) t.columns.push_back("u" + std::to_string(i));
    t.columns.push_back("err_y");
    for (std::size_t r = 0; r < traj.dense_times.size(); ++r) {
        std::vector<double> row{traj.dense_times[r]};
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(traj.dense_states[r][i]);
        for (Eigen::Index i = 0; i < m; ++i) row.push_back(traj.dense_controls[r][i]);
        row.push_back(traj.y_error[r]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Stacked follower states and controls, then leader columns and per-agent errors.
/// Rows stop at the shortest agent trajectory.
[[nodiscard]] inline Table formation_table(const FormationTrajectory& ft) {
    Table t;
    std::size_t rows = ft.dense_times.size();
    for (const auto& a : ft.agents) rows = std::min(rows, a.trajectory.dense_times.size());
    int n = 0, m = 0;
    for (const auto& a : ft.agents) {
        if (!a.trajectory.dense_states.empty()) {
            n += static_cast<int>(a.trajectory.dense_states.front().size());
            m += static_cast<int>(a.trajectory.dense_controls.front().size());
        }
    }
    const auto p = ft.leader_states.empty() ? 0 : ft.leader_states.front().size();
    t.columns.push_back("t");
    for (int i = 1; i <= n; ++i) t.columns.push_back("x" + std::to_string(i));
    for (int i = 1; i <= m; ++i) t.columns.push_back("u" + std::to_string(i));
    t.columns.push_back("err_y");
    for (Eigen::Index i = 1; i <= p; ++i) t.columns.push_back("xL" + std::to_string(i));
    for (std::size_t l = 1; l <= ft.agents.size(); ++l) t.columns.push_back("err" + std::to_string(l));
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> row{ft.dense_times[r]};
        for (const auto& a : ft.agents) {
            for (Eigen::Index i = 0; i < a.trajectory.dense_states[r].size(); ++i) row.push_back(a.trajectory.dense_states[r][i]);
        }
        for (const auto& a : ft.agents) {
            for (Eigen::Index i = 0; i < a.trajectory.dense_controls[r].size(); ++i) {
                row.push_back(a.trajectory.dense_controls[r][i]);
            }
        }
        double sq = 0.0;
        for (const auto& a : ft.agents) sq += a.trajectory.y_error[r] * a.trajectory.y_error[r];
        row.push_back(std::sqrt(sq));
        for (Eigen::Index i = 0; i < p; ++i) row.push_back(ft.leader_states[r][i]);
        for (const auto& a : ft.agents) row.push_back(a.trajectory.y_error[r]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

[[nodiscard]] inline std::string render_csv(const Table& t) {
    std::string s;
    for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
    s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) s += ',';
            s += fmt17(row[i]);
        }
        s += "\n";
    }
    return s;
}

[[nodiscard]] inline std::string render_json(const Table& t) {
    json rows = json::array();
    for (const auto& r : t.rows) rows.push_back(r);
    return json{{"columns", t.columns}, {"rows", rows}}.dump() + "\n";
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorClass::Io, "cannot write '" + path + "'");
    f << content;
    f.flush();
    if (!f) throw Error(ErrorClass::Io, "write to '" + path + "' failed");
}

/// Sidecar next to the trajectory: traj.csv -> traj.report.json.
[[nodiscard]] inline std::string sidecar_path(const std::string& out) {
    std::filesystem::path p(out);
    p.replace_extension(".report.json");
    return p.string();
}

[[nodiscard]] inline std::string default_out(const ScenarioBundle& b, const std::string& format) {
    std::string stem = std::filesystem::path(b.name).filename().string();
    if (stem.empty()) stem = "trajectory";
    return stem + "." + format;
}

inline void require_rank(const std::vector<RankCertificate>& certs) {
    for (const auto& c : certs) {
        if (!c.rank_ok) {
            throw RankDegeneracyError("selection fails the rank certificate over the probe box (worst condition " +
                                          fmt17(c.worst_condition) + ")",
                                      c.worst_state, c.worst_condition);
        }
    }
}

/// Writes the trajectory and its sidecar. A halted simulation still writes its
/// partial data before the error propagates.
inline void command_run(const RunPlan& plan, std::ostream& out, const Logger& log) {
    ScenarioBundle b = resolve_scenario(plan.scenario);
    apply_overrides(b, plan);
    const auto certs = certify(b);
    require_rank(certs);
    const std::string out_path = plan.out.empty() ? default_out(b, plan.format) : plan.out;
    auto render = [&](const Table& t) { return plan.format == "json" ? render_json(t) : render_csv(t); };

    json sidecar{{"scenario", b.name}, {"epsilon", b.gains.epsilon}, {"t_final", b.sim.t_final}};
    json certs_json = json::array();
    for (const auto& c : certs) certs_json.push_back(certificate_json(c));
    sidecar["rank_certificate"] = certs.size() == 1 ? certs_json[0] : certs_json;

    std::optional<Error> failure;
    if (b.kind == ScenarioKind::SingleSystem) {
        sidecar["gamma"] = b.gains.gamma;
        const PartitionedSystem sys = b.system();
        for (const auto& w : b.sim.warnings(b.selection.kappa_max())) log.log(LogLevel::Warn, w);
        SampledTrajectory traj;
        try {
            traj = simulate_pi_epsilon(sys, b.selection, b.gains, b.x0, b.sim);
        } catch (const SimulationHalted& e) {
            traj = e.partial();
            failure = Error(e.error_class(), e.what());
            sidecar["status"] = json{{"error_class", error_class_name(e.error_class())}, {"message", e.what()}};
        }
        write_file(out_path, render(single_table(traj)));
        if (traj.sample_times.size() >= 2) sidecar["decay_report"] = report_json(decay_report(traj, b.expect.rho));
    } else {
        FormationTrajectory ft = simulate_formation(b.followers(), b.leader(), b.follower_x0s(), b.gains, b.sim);
        write_file(out_path, render(formation_table(ft)));
        json reports = json::array();
        for (std::size_t i = 0; i < ft.agents.size(); ++i) {
            const auto& run = ft.agents[i];
            json r{{"agent", i + 1}, {"gamma", b.agents[i].gamma}};
            if (run.trajectory.sample_times.size() >= 2) r["decay_report"] = report_json(decay_report(run.trajectory, b.expect.rho));
            const GainCondition g = check_gain_condition(ft, b.leader(), b.agents[i].gamma, b.expect.rho);
            r["gain_condition"] = json{{"sup_leader_speed", g.sup_leader_speed},
                                       {"required_gamma", g.required_gamma},
                                       {"satisfied", g.satisfied}};
            if (run.failure) {
                r["status"] = json{{"error_class", error_class_name(*run.failure)}, {"message", run.failure_message}};
                if (!failure) failure = Error(*run.failure, "agent " + std::to_string(i + 1) + ": " + run.failure_message);
            }
            reports.push_back(r);
        }
        sidecar["agents"] = reports;
    }
    if (!sidecar.contains("status")) sidecar["status"] = failure ? json("error") : json("ok");
    write_file(sidecar_path(out_path), sidecar.dump(2) + "\n");
    log.log(LogLevel::Info, "wrote " + out_path + " and " + sidecar_path(out_path));
    out << out_path << "\n";
    if (failure) throw *failure;
}

inline void command_sweep(const RunPlan& plan, std::ostream& out, const Logger& log) {
    ScenarioBundle b = resolve_scenario(plan.scenario);
    apply_overrides(b, plan);
    if (b.kind != ScenarioKind::SingleSystem) {
        throw Error(ErrorClass::InvalidInput, "sweep supports single-system scenarios only");
    }
    require_rank(certify(b));
    std::vector<double> eps = plan.eps_list;
    if (eps.empty()) eps = {b.gains.epsilon, b.gains.epsilon / 2.0, b.gains.epsilon / 4.0};
    log.log(LogLevel::Info, "sweeping " + std::to_string(eps.size()) + " values of epsilon");
    const auto rows = epsilon_sweep(b.system(), b.selection, b.gains, b.x0, b.sim.t_final, eps,
                                    b.sim.substeps_per_period);
    Table t{{"epsilon", "max_deviation"}, {}};
    for (const auto& r : rows) t.rows.push_back({r.epsilon, r.max_deviation});
    const std::string text = plan.format == "json" ? render_json(t) : render_csv(t);
    if (plan.out.empty()) {
        out << text;
    } else {
        write_file(plan.out, text);
        out << plan.out << "\n";
    }
}

/// Prints the rank certificate(s); exit status 3 when any certificate fails.
inline void command_validate(const RunPlan& plan, std::ostream& out, const Logger&) {
    ScenarioBundle b = resolve_scenario(plan.scenario);
    apply_overrides(b, plan);
    if (plan.probes > 0) b.probe_count = plan.probes;
    const auto certs = certify(b);
    json j{{"scenario", b.name}};
    json arr = json::array();
    for (const auto& c : certs) arr.push_back(certificate_json(c));
    j["certificates"] = arr;
    const std::string text = j.dump(2) + "\n";
    if (plan.out.empty()) {
        out << text;
    } else {
        write_file(plan.out, text);
    }
    require_rank(certs);
}

inline void command_list(std::ostream& out) {
    out << "scenarios:\n";
    for (const auto& n : builtin_names()) out << "  " << n << "\n";
    out << "system models:\n";
    for (const auto& m : models::system_models()) out << "  " << m.name << " (n = " << m.state_dim << ")  " << m.description << "\n";
    out << "leader models:\n";
    for (const auto& m : models::leader_models()) out << "  " << m.name << "  " << m.description << "\n";
}

inline void command_show(const RunPlan& plan, std::ostream& out) {
    ScenarioBundle b = resolve_scenario(plan.scenario);
    apply_overrides(b, plan);
    const std::string text = serialize_scenario(b);
    if (plan.out.empty()) {
        out << text;
    } else {
        write_file(plan.out, text);
    }
}

inline void print_error(std::ostream& err, ErrorClass cls, std::string msg) {
    for (char& c : msg) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    err << "error: class=" << error_class_name(cls) << " message=" << msg << "\n";
}

/// Entry point; args excludes the program name.
[[nodiscard]] inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Oscillatory Lie-bracket steering: synthesis, sample-and-hold simulation, verification",
                 "bracket-steer"};
    app.require_subcommand(1);
    RunPlan plan;

    auto add_overrides = [&plan](CLI::App* sub) {
        sub->add_option("scenario", plan.scenario, "built-in scenario name or scenario file")->required();
        sub->add_option("--epsilon", plan.epsilon, "sampling period / oscillation period");
        sub->add_option("--gamma", plan.gamma, "steering gain (all agents for formations)");
        sub->add_option("--t-final", plan.t_final, "simulation horizon");
        sub->add_option("--substeps", plan.substeps, "RK4 sub-steps per sampling period");
        sub->add_option("--rho", plan.rho, "floor radius for the decay report");
        sub->add_option("--format", plan.format, "output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--out", plan.out, "output path");
    };

    auto* run = app.add_subcommand("run", "simulate a scenario and write trajectory + report");
    add_overrides(run);
    auto* sweep = app.add_subcommand("sweep", "deviation from the averaged flow over decreasing epsilon");
    add_overrides(sweep);
    sweep->add_option("--eps-list", plan.eps_list, "strictly decreasing epsilon values")->delimiter(',');
    auto* validate = app.add_subcommand("validate", "rank certificate over the scenario probe box");
    add_overrides(validate);
    validate->add_option("--probes", plan.probes, "number of probe states");
    auto* list = app.add_subcommand("list", "list built-in scenarios and models");
    auto* show = app.add_subcommand("show", "print a scenario as a scenario file");
    add_overrides(show);

    std::vector<std::string> argv_store;
    argv_store.push_back("bracket-steer");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        print_error(err, ErrorClass::InvalidInput, e.what());
        return exit_code_for(ErrorClass::InvalidInput);
    }

    const Logger log(err, log_level_from_env());
    try {
        if (*run) {
            command_run(plan, out, log);
        } else if (*sweep) {
            command_sweep(plan, out, log);
        } else if (*validate) {
            command_validate(plan, out, log);
        } else if (*list) {
            command_list(out);
        } else if (*show) {
            command_show(plan, out);
        }
    } catch (const Error& e) {
        print_error(err, e.error_class(), e.what());
        return exit_code_for(e.error_class());
    } catch (const std::exception& e) {
        print_error(err, ErrorClass::InvalidInput, e.what());
        return exit_code_for(ErrorClass::InvalidInput);
    }
    return 0;
}

}  // namespace bracket_steer::cli
