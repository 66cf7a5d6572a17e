#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "squeeze/config.hpp"
#include "squeeze/crab_optimizer.hpp"
#include "squeeze/ground_state.hpp"
#include "squeeze/lindblad.hpp"
#include "squeeze/power_law.hpp"
#include "squeeze/propagator.hpp"
#include "squeeze/telegraph.hpp"

namespace squeeze {

using Json = nlohmann::json;

namespace detail {

inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Ordered map over [0, n); results land by index, so worker count never
/// affects the output.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::future<void>> pool;
    const int count = std::min(workers, n);
    pool.reserve(count);
    for (int w = 0; w < count; ++w)
        pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
}

}  // namespace detail

/// Tabular sink: CSV with a fixed column order, or a JSON array of objects.
class TableWriter {
  public:
    TableWriter(std::filesystem::path path, std::vector<std::string> columns,
                const std::string& format)
        : path_(std::move(path)), columns_(std::move(columns)), json_(format == "json") {
        if (json_) path_.replace_extension(".json");
    }

    void add_row(const std::vector<double>& numeric_prefix,
                 const std::vector<std::string>& string_suffix = {}) {
        std::vector<std::string> row;
        row.reserve(columns_.size());
        for (double v : numeric_prefix) row.push_back(detail::fmt_num(v));
        for (const auto& s : string_suffix) row.push_back(s);
        if (row.size() != columns_.size())
            throw std::logic_error("row width does not match columns");
        rows_.push_back(std::move(row));
    }

    void add_mixed_row(const std::vector<std::string>& row) {
        if (row.size() != columns_.size())
            throw std::logic_error("row width does not match columns");
        rows_.push_back(row);
    }

    std::string write() const {
        std::ofstream out(path_);
        if (!out) throw std::runtime_error("cannot write " + path_.string());
        if (json_) {
            Json arr = Json::array();
            for (const auto& row : rows_) {
                Json obj;
                for (std::size_t c = 0; c < columns_.size(); ++c) obj[columns_[c]] = row[c];
                arr.push_back(std::move(obj));
            }
            out << arr.dump(2) << "\n";
        } else {
            for (std::size_t c = 0; c < columns_.size(); ++c)
                out << (c ? "," : "") << columns_[c];
            out << "\n";
            for (const auto& row : rows_) {
                for (std::size_t c = 0; c < row.size(); ++c)
                    out << (c ? "," : "") << row[c];
                out << "\n";
            }
        }
        return path_.string();
    }

  private:
    std::filesystem::path path_;
    std::vector<std::string> columns_;
    bool json_;
    std::vector<std::vector<std::string>> rows_;
};

struct ExperimentOutcome {
    Json summary;
    std::vector<std::string> files;
    bool partial_failure = false;
};

namespace detail {

struct TargetState {
    double chi = 0.0;
    StateVector goal;
    double xi_squared = 0.0;
    double mean_jz = 0.0;
    double energy = 0.0;
    double gap = 0.0;
};

inline TargetState solve_target(const SpinOperators& ops, double signal_fraction) {
    TargetState t;
    t.chi = find_chi_for_signal(ops, signal_fraction * ops.j());
    const GroundState gs = ground_state(ops, {-1.0, t.chi});
    const Observables obs = observables(ops, gs.state);
    t.goal = gs.state;
    t.xi_squared = obs.xi_squared;
    t.mean_jz = obs.mean_jz;
    t.energy = gs.energy;
    t.gap = gs.gap;
    return t;
}

inline Json fit_json(const PowerLawFit& fit) {
    return Json{{"amplitude", fit.amplitude},
                {"exponent", fit.exponent},
                {"r_squared", fit.r_squared},
                {"n_points", fit.n_points}};
}

inline Json base_summary(const ExperimentConfig& config) {
    Json meta;
    meta["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
    Json j;
    j["experiment"] = to_string(config.experiment);
    j["seed"] = config.master_seed;
    j["config_hash"] = config.config_hash();
    j["config"] = config.raw;
    j["meta"] = std::move(meta);
    j["errors"] = Json::array();
    return j;
}

class StopWatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

  private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

/// Optimized CRAB protocol for size n at the fitted optimal-time schedule.
inline std::pair<ControlProtocol, OptimizationReport> optimized_protocol(
    const SpinOperators& ops, const ExperimentConfig& config, const TargetState& target,
    std::uint64_t seed_index) {
    const double t_opt = config.t_opt_schedule(ops.n_atoms());
    OptimizerSettings settings = config.optimizer;
    settings.seed = derive_seed(config.master_seed, seed_index);
    settings.step_size = config.step_size;
    OptimizationReport report = optimize(ops, t_opt, target.chi, target.goal, settings);
    ControlProtocol protocol = ControlProtocol::crab_field(
        t_opt, target.chi, report.best_ansatz, settings.clamp_factor);
    return {std::move(protocol), std::move(report)};
}

}  // namespace detail

/// Ground-state squeezing versus size, with the xi^2 = A/N^B fit.
inline ExperimentOutcome run_ground_scaling(const ExperimentConfig& config) {
    detail::StopWatch watch;
    const int n_points = static_cast<int>(config.n_grid.size());
    struct Row {
        int n = 0;
        detail::TargetState target;
        double seconds = 0.0;
        std::string error;
    };
    std::vector<Row> rows(n_points);
    detail::parallel_for(n_points, config.workers, [&](int i) {
        detail::StopWatch point_watch;
        rows[i].n = config.n_grid[i];
        try {
            const SpinOperators ops = build_operators(config.n_grid[i]);
            rows[i].target = detail::solve_target(ops, config.signal_fraction);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
        rows[i].seconds = point_watch.seconds();
    });

    std::filesystem::create_directories(config.out_dir);
    TableWriter table(std::filesystem::path(config.out_dir) / "ground_scaling.csv",
                      {"n", "chi", "xi2", "mean_jz", "energy", "gap"}, config.format);
    ExperimentOutcome outcome;
    outcome.summary = detail::base_summary(config);
    std::vector<std::pair<double, double>> fit_points;
    for (const Row& r : rows) {
        if (!r.error.empty()) {
            outcome.partial_failure = true;
            outcome.summary["errors"].push_back({{"n", r.n}, {"error", r.error}});
            continue;
        }
        table.add_row({static_cast<double>(r.n), r.target.chi, r.target.xi_squared,
                       r.target.mean_jz, r.target.energy, r.target.gap});
        fit_points.emplace_back(r.n, r.target.xi_squared);
    }
    outcome.files.push_back(table.write());
    if (fit_points.size() >= 3)
        outcome.summary["fit"] = detail::fit_json(fit_power_law(fit_points));
    outcome.summary["runtime_seconds"] = watch.seconds();
    return outcome;
}

/// Duration needed to reach the target infidelity versus size, adiabatic
/// (linear-ramp scan) or crab (optimizer bisection), with the T = A N^B fit.
inline ExperimentOutcome run_time_scaling(const ExperimentConfig& config,
                                          const std::string& protocol_name) {
    detail::StopWatch watch;
    std::vector<int> grid;
    for (int n : config.n_grid)
        if (protocol_name == "crab" || n <= config.time_scaling_n_cap) grid.push_back(n);

    struct Row {
        int n = 0;
        double chi = 0.0;
        double time = 0.0;
        double infidelity = 0.0;
        int evaluations = 0;
        double seconds = 0.0;
        std::string error;
    };
    std::vector<Row> rows(grid.size());
    detail::parallel_for(static_cast<int>(grid.size()), config.workers, [&](int i) {
        detail::StopWatch point_watch;
        rows[i].n = grid[i];
        try {
            const SpinOperators ops = build_operators(grid[i]);
            const detail::TargetState target = detail::solve_target(ops, config.signal_fraction);
            rows[i].chi = target.chi;
            if (protocol_name == "adiabatic") {
                PropagationConfig prop;
                prop.method = Integrator::PiecewiseExponential;
                prop.step_size = config.step_size;
                const TimeSearchResult res = time_to_reach(
                    ops, target.chi, target.goal, config.infidelity_ad, prop);
                rows[i].time = res.time;
                rows[i].infidelity = res.infidelity;
                rows[i].evaluations = res.evaluations;
            } else {
                OptimizerSettings settings = config.optimizer;
                settings.seed = derive_seed(config.master_seed, 100 + i);
                settings.step_size = config.step_size;
                const QslSearchResult res =
                    qsl_time(ops, target.chi, target.goal, config.infidelity_opt,
                             settings, 2.0 * config.t_ad_schedule(grid[i]));
                rows[i].time = res.time;
                rows[i].infidelity = res.report.best_infidelity;
                rows[i].evaluations = res.report.evaluations * res.probes;
            }
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
        rows[i].seconds = point_watch.seconds();
    });

    std::filesystem::create_directories(config.out_dir);
    TableWriter table(std::filesystem::path(config.out_dir) /
                          ("time_scaling_" + protocol_name + ".csv"),
                      {"n", "chi", "time", "infidelity", "evaluations", "seconds"},
                      config.format);
    ExperimentOutcome outcome;
    outcome.summary = detail::base_summary(config);
    outcome.summary["protocol"] = protocol_name;
    std::vector<std::pair<double, double>> fit_points;
    for (const Row& r : rows) {
        if (!r.error.empty()) {
            outcome.partial_failure = true;
            outcome.summary["errors"].push_back({{"n", r.n}, {"error", r.error}});
            continue;
        }
        table.add_row({static_cast<double>(r.n), r.chi, r.time, r.infidelity,
                       static_cast<double>(r.evaluations), r.seconds});
        fit_points.emplace_back(r.n, r.time);
    }
    outcome.files.push_back(table.write());
    if (fit_points.size() >= 3)
        outcome.summary["fit"] = detail::fit_json(fit_power_law(fit_points));
    outcome.summary["runtime_seconds"] = watch.seconds();
    return outcome;
}

/// Telegraph-noise ensembles for the adiabatic and optimized protocols.
inline ExperimentOutcome run_noise_sweep(const ExperimentConfig& config) {
    detail::StopWatch watch;
    struct Row {
        int n = 0;
        Json summary;
        std::vector<std::pair<std::string, EnsembleResult>> ensembles;
        std::string error;
    };
    std::vector<Row> rows(config.n_grid.size());

    detail::parallel_for(static_cast<int>(config.n_grid.size()), 1, [&](int i) {
        const int n = config.n_grid[i];
        rows[i].n = n;
        try {
            const SpinOperators ops = build_operators(n);
            const detail::TargetState target = detail::solve_target(ops, config.signal_fraction);

            const ControlProtocol adiabatic =
                ControlProtocol::linear_ramp(config.t_ad_schedule(n), target.chi);
            auto [optimal, report] = detail::optimized_protocol(ops, config, target, 200 + i);

            Json per_n;
            per_n["n"] = n;
            per_n["chi"] = target.chi;
            per_n["goal_xi2"] = target.xi_squared;
            per_n["optimizer"] = {{"best_infidelity", report.best_infidelity},
                                  {"evaluations", report.evaluations},
                                  {"t_opt", optimal.total_time}};

            const std::array<std::pair<std::string, const ControlProtocol*>, 2> variants{
                {{"adiabatic", &adiabatic}, {"optimal", &optimal}}};
            for (const auto& [name, protocol_ptr] : variants) {
                const ControlProtocol& protocol = *protocol_ptr;
                // exact steps for the smooth ramp; split-step for the
                // oscillatory optimized field and for all noisy runs, where
                // switches force one step per noise segment
                PropagationConfig clean_prop;
                clean_prop.step_size = config.step_size;
                clean_prop.method = protocol.kind == ControlProtocol::Kind::Crab
                                        ? Integrator::SplitStep
                                        : Integrator::PiecewiseExponential;
                const PropagationResult clean =
                    propagate(ops, protocol, clean_prop, ops.coherent_up_state());
                const Observables clean_obs = observables(ops, clean.final_state);

                PropagationConfig noisy_prop;
                noisy_prop.step_size = config.step_size;
                noisy_prop.method = Integrator::SplitStep;
                TelegraphConfig noise = config.noise;
                noise.seed = derive_seed(config.master_seed,
                                         300 + 2 * i + (name == "optimal" ? 1 : 0));
                const EnsembleResult ens = ensemble_squeezing(
                    ops, protocol, noise, target.goal, noisy_prop, -1.0, config.workers);
                rows[i].ensembles.emplace_back(name, ens);
                per_n[name] = {{"total_time", protocol.total_time},
                               {"noiseless_xi2", clean_obs.xi_squared},
                               {"mean_xi2", ens.mean_xi2},
                               {"stderr_xi2", ens.stderr_xi2},
                               {"mean_infidelity", ens.mean_infidelity}};
            }
            rows[i].summary = std::move(per_n);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });

    std::filesystem::create_directories(config.out_dir);
    TableWriter table(std::filesystem::path(config.out_dir) / "noise_sweep.csv",
                      {"n", "protocol", "realization", "xi2", "infidelity"},
                      config.format);
    ExperimentOutcome outcome;
    outcome.summary = detail::base_summary(config);
    outcome.summary["points"] = Json::array();
    for (const Row& r : rows) {
        if (!r.error.empty()) {
            outcome.partial_failure = true;
            outcome.summary["errors"].push_back({{"n", r.n}, {"error", r.error}});
            continue;
        }
        for (const auto& [name, ens] : r.ensembles)
            for (const RealizationRecord& rec : ens.records)
                table.add_mixed_row({std::to_string(r.n), name,
                                     std::to_string(rec.realization),
                                     detail::fmt_num(rec.xi_squared),
                                     detail::fmt_num(rec.infidelity)});
        outcome.summary["points"].push_back(r.summary);
    }
    outcome.files.push_back(table.write());
    outcome.summary["runtime_seconds"] = watch.seconds();
    return outcome;
}

/// Squeezing versus cooperativity for both protocols (open-system runs).
inline ExperimentOutcome run_coop_sweep(const ExperimentConfig& config) {
    detail::StopWatch watch;
    ExperimentOutcome outcome;
    outcome.summary = detail::base_summary(config);

    const SpinOperators ops = build_operators(config.coop_n_atoms);
    const detail::TargetState target = detail::solve_target(ops, config.signal_fraction);
    const ControlProtocol adiabatic =
        ControlProtocol::linear_ramp(config.t_ad_schedule(config.coop_n_atoms), target.chi);
    auto [optimal, report] = detail::optimized_protocol(ops, config, target, 400);
    outcome.summary["optimizer"] = {{"best_infidelity", report.best_infidelity},
                                    {"evaluations", report.evaluations},
                                    {"t_opt", optimal.total_time}};
    outcome.summary["goal_xi2"] = target.xi_squared;

    PropagationConfig prop;
    prop.step_size = config.density_step_size;
    const std::vector<SweepPoint> points = cooperativity_sweep(
        ops, config.eta_grid(), {{"adiabatic", adiabatic}, {"optimal", optimal}},
        config.kappa_over_delta_ratio, prop, config.include_omega_term, -1.0,
        config.workers);

    std::filesystem::create_directories(config.out_dir);
    TableWriter table(std::filesystem::path(config.out_dir) / "coop_sweep.csv",
                      {"eta", "protocol", "time", "xi2", "mean_jz", "trace_drift",
                       "positivity_min_eigenvalue"},
                      config.format);
    for (const SweepPoint& pt : points) {
        if (pt.failed) {
            outcome.partial_failure = true;
            outcome.summary["errors"].push_back(
                {{"eta", pt.eta}, {"protocol", pt.protocol}, {"error", pt.error}});
            continue;
        }
        table.add_mixed_row({detail::fmt_num(pt.eta), pt.protocol,
                             detail::fmt_num(pt.total_time), detail::fmt_num(pt.xi_squared),
                             detail::fmt_num(pt.mean_jz), detail::fmt_num(pt.trace_drift),
                             detail::fmt_num(pt.min_eigenvalue)});
    }
    outcome.files.push_back(table.write());
    outcome.summary["runtime_seconds"] = watch.seconds();
    return outcome;
}

/// One seeded run of a single protocol at a single size, with an optional
/// telegraph-noise ensemble and a recorded trajectory.
inline ExperimentOutcome run_single(const ExperimentConfig& config) {
    detail::StopWatch watch;
    ExperimentOutcome outcome;
    outcome.summary = detail::base_summary(config);

    const int n = config.single_n_atoms;
    const SpinOperators ops = build_operators(n);
    const detail::TargetState target = detail::solve_target(ops, config.signal_fraction);

    ControlProtocol protocol = ControlProtocol::linear_ramp(
        config.single_total_time > 0.0 ? config.single_total_time
                                       : config.t_ad_schedule(n),
        target.chi);
    if (config.single_protocol == "crab") {
        ExperimentConfig crab_config = config;
        if (config.single_total_time > 0.0) {
            crab_config.t_opt_amplitude = config.single_total_time;
            crab_config.t_opt_exponent = 0.0;
        }
        auto [opt, report] = detail::optimized_protocol(ops, crab_config, target, 500);
        protocol = std::move(opt);
        outcome.summary["optimizer"] = {{"best_infidelity", report.best_infidelity},
                                        {"evaluations", report.evaluations}};
    }

    std::filesystem::create_directories(config.out_dir);
    TableWriter trajectory(std::filesystem::path(config.out_dir) / "trajectory.csv",
                           {"t", "chi", "mean_jz", "var_jx", "xi_squared", "norm_drift"},
                           config.format);
    PropagationConfig prop;
    prop.step_size = config.step_size;
    prop.method = protocol.kind == ControlProtocol::Kind::Crab
                      ? Integrator::SplitStep
                      : Integrator::PiecewiseExponential;
    prop.record_stride = config.record_stride > 0 ? config.record_stride : 1000;
    const PropagationResult run =
        propagate(ops, protocol, prop, ops.coherent_up_state(), -1.0,
                  [&](const TrajectorySample& s) {
                      trajectory.add_row({s.t, s.chi, s.mean_jz, s.var_jx,
                                          s.xi_squared, s.norm_drift});
                  });
    outcome.files.push_back(trajectory.write());

    const Observables obs = observables(ops, run.final_state);
    outcome.summary["record"] = {
        {"n", n},
        {"protocol", config.single_protocol},
        {"total_time", protocol.total_time},
        {"chi", target.chi},
        {"goal_xi2", target.xi_squared},
        {"xi2", obs.xi_squared},
        {"mean_jz", obs.mean_jz},
        {"infidelity", infidelity(run.final_state, target.goal)},
        {"norm_drift", run.norm_drift},
        {"steps", run.steps}};

    if (config.single_with_noise) {
        TelegraphConfig noise = config.noise;
        noise.seed = derive_seed(config.master_seed, 600);
        PropagationConfig noisy_prop;
        noisy_prop.step_size = config.step_size;
        noisy_prop.method = Integrator::SplitStep;
        const EnsembleResult ens = ensemble_squeezing(ops, protocol, noise, target.goal,
                                                      noisy_prop, -1.0, config.workers);
        outcome.summary["noise"] = {{"mean_xi2", ens.mean_xi2},
                                    {"stderr_xi2", ens.stderr_xi2},
                                    {"mean_infidelity", ens.mean_infidelity}};
        TableWriter ens_table(std::filesystem::path(config.out_dir) / "single_noise.csv",
                              {"n", "protocol", "realization", "xi2", "infidelity"},
                              config.format);
        for (const RealizationRecord& rec : ens.records)
            ens_table.add_mixed_row({std::to_string(n), config.single_protocol,
                                     std::to_string(rec.realization),
                                     detail::fmt_num(rec.xi_squared),
                                     detail::fmt_num(rec.infidelity)});
        outcome.files.push_back(ens_table.write());
    }
    outcome.summary["runtime_seconds"] = watch.seconds();
    return outcome;
}

inline ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                        const std::string& protocol_name = "adiabatic") {
    switch (config.experiment) {
        case ExperimentKind::GroundScaling: return run_ground_scaling(config);
        case ExperimentKind::TimeScaling: return run_time_scaling(config, protocol_name);
        case ExperimentKind::NoiseRobustness: return run_noise_sweep(config);
        case ExperimentKind::CooperativitySweep: return run_coop_sweep(config);
        case ExperimentKind::SingleRun: return run_single(config);
    }
    throw std::logic_error("unknown experiment");
}

/// Writes the run summary next to the tables; returns the path.
inline std::string write_summary(const ExperimentConfig& config,
                                 const ExperimentOutcome& outcome) {
    std::filesystem::create_directories(config.out_dir);
    const std::filesystem::path path =
        std::filesystem::path(config.out_dir) /
        (to_string(config.experiment) + "_summary.json");
    Json j = outcome.summary;
    j["files"] = outcome.files;
    j["complete"] = !outcome.partial_failure;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
    return path.string();
}

}  // namespace squeeze
