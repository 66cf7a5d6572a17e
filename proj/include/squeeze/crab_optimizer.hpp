#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <utility>
#include <vector>

#include "squeeze/control.hpp"
#include "squeeze/nelder_mead.hpp"
#include "squeeze/propagator.hpp"
#include "squeeze/spin_ops.hpp"

namespace squeeze {

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 over the pair; decorrelates per-restart generators
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct OptimizerSettings {
    int n_frequencies = 10;
    int budget = 20000;  // total objective evaluations across restarts
    int n_restarts = 4;
    double simplex_edge = 0.1;
    double clamp_factor = 5.0;
    std::uint64_t seed = 1;
    double step_size = 0.0;  // <= 0: split-step default, see run_restart
    Integrator method = Integrator::SplitStep;
    bool parallel_restarts = true;
};

struct OptimizationReport {
    CrabAnsatz best_ansatz;
    double best_infidelity = 1.0;
    double linear_ramp_infidelity = 1.0;
    int evaluations = 0;
    int best_restart = 0;
    long clamp_events = 0;
    std::vector<std::pair<int, double>> history;  // (evaluation index, best so far)
    std::uint64_t seed = 0;
    double total_time = 0.0;
    int n_atoms = 0;
};

namespace detail {

struct RestartOutcome {
    CrabAnsatz ansatz;
    double best_infidelity = 1.0;
    double start_infidelity = 1.0;  // zero-correction vertex = plain linear ramp
    int evaluations = 0;
    long clamp_events = 0;
    std::vector<std::pair<int, double>> history;
};

inline RestartOutcome run_restart(const SpinOperators& ops, double total_time,
                                  double chi_final, const StateVector& goal,
                                  const OptimizerSettings& settings,
                                  std::uint64_t restart_seed, int restart_budget) {
    RestartOutcome out;
    CrabAnsatz ansatz = CrabAnsatz::with_random_frequencies(
        settings.n_frequencies, total_time, restart_seed);

    PropagationConfig prop;
    prop.method = settings.method;
    prop.step_size = settings.step_size;
    if (prop.step_size <= 0.0 && prop.method == Integrator::SplitStep) {
        // hold the per-evaluation cost flat across durations: at least 2000
        // and at most 8000 steps, aiming for dt = 1e-3 in between
        const double steps =
            std::clamp(std::ceil(total_time / 1e-3), 2000.0, 8000.0);
        prop.step_size = total_time / steps;
    }
    const StateVector initial = ops.coherent_up_state();

    const int n_f = settings.n_frequencies;
    double running_best = std::numeric_limits<double>::infinity();
    bool first = true;
    auto objective = [&](const std::vector<double>& x) {
        CrabAnsatz trial = ansatz;
        trial.coeffs_a.assign(x.begin(), x.begin() + n_f);
        trial.coeffs_b.assign(x.begin() + n_f, x.end());
        const ControlProtocol field = ControlProtocol::crab_field(
            total_time, chi_final, std::move(trial), settings.clamp_factor);
        double cost;
        try {
            const PropagationResult run = propagate(ops, field, prop, initial);
            out.clamp_events += run.clamp_events;
            cost = infidelity(run.final_state, goal);
        } catch (const NormDriftError&) {
            cost = std::numeric_limits<double>::infinity();
        }
        ++out.evaluations;
        if (first) {
            out.start_infidelity = cost;
            first = false;
        }
        if (cost < running_best) {
            running_best = cost;
            out.history.emplace_back(out.evaluations, cost);
        }
        return cost;
    };

    NelderMeadOptions nm;
    nm.initial_edge = settings.simplex_edge;
    nm.max_evaluations = restart_budget;
    const std::vector<double> zero(2 * static_cast<std::size_t>(n_f), 0.0);
    const NelderMeadResult nm_result = nelder_mead(objective, zero, nm);

    out.ansatz = ansatz;
    out.ansatz.coeffs_a.assign(nm_result.best_point.begin(),
                               nm_result.best_point.begin() + n_f);
    out.ansatz.coeffs_b.assign(nm_result.best_point.begin() + n_f,
                               nm_result.best_point.end());
    out.best_infidelity = nm_result.best_value;
    return out;
}

}  // namespace detail

/// CRAB optimization of the infidelity at fixed duration: Nelder-Mead over
/// the 2 n_f coefficients, one restart from the zero correction per fresh
/// frequency draw. The zero correction is always evaluated, so the result
/// never exceeds the plain linear ramp's infidelity at the same T.
inline OptimizationReport optimize(const SpinOperators& ops, double total_time,
                                   double chi_final, const StateVector& goal,
                                   const OptimizerSettings& settings) {
    if (!(total_time > 0.0)) throw std::invalid_argument("total_time must be > 0");
    if (settings.budget < 100) throw std::invalid_argument("budget must be >= 100");
    if (settings.n_restarts < 1) throw std::invalid_argument("n_restarts must be >= 1");

    const int restart_budget = settings.budget / settings.n_restarts;
    std::vector<detail::RestartOutcome> outcomes(settings.n_restarts);

    auto run_one = [&](int r) {
        return detail::run_restart(ops, total_time, chi_final, goal, settings,
                                   derive_seed(settings.seed, r), restart_budget);
    };
    if (settings.parallel_restarts && settings.n_restarts > 1) {
        std::vector<std::future<detail::RestartOutcome>> futures;
        futures.reserve(settings.n_restarts);
        for (int r = 0; r < settings.n_restarts; ++r)
            futures.push_back(std::async(std::launch::async, run_one, r));
        for (int r = 0; r < settings.n_restarts; ++r) outcomes[r] = futures[r].get();
    } else {
        for (int r = 0; r < settings.n_restarts; ++r) outcomes[r] = run_one(r);
    }

    OptimizationReport report;
    report.seed = settings.seed;
    report.total_time = total_time;
    report.n_atoms = ops.n_atoms();
    report.linear_ramp_infidelity = outcomes[0].start_infidelity;

    // Merge per-restart histories in restart-major order so the report is
    // identical whether restarts ran sequentially or concurrently.
    int offset = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < settings.n_restarts; ++r) {
        const auto& oc = outcomes[r];
        for (const auto& [idx, value] : oc.history) {
            if (value < best) {
                best = value;
                report.history.emplace_back(offset + idx, value);
            }
        }
        if (oc.best_infidelity < outcomes[report.best_restart].best_infidelity)
            report.best_restart = r;
        report.evaluations += oc.evaluations;
        report.clamp_events += oc.clamp_events;
        offset += oc.evaluations;
    }
    report.best_infidelity = outcomes[report.best_restart].best_infidelity;
    report.best_ansatz = outcomes[report.best_restart].ansatz;
    return report;
}

struct QslSearchResult {
    double time = 0.0;
    OptimizationReport report;
    int probes = 0;
};

struct QslSearchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Smallest duration at which the optimizer reaches the target infidelity,
/// bisected to 5% relative width. The upper bracket is typically 2 * T_ad.
inline QslSearchResult qsl_time(const SpinOperators& ops, double chi_final,
                                const StateVector& goal, double target_infidelity,
                                const OptimizerSettings& settings, double upper_bracket) {
    if (!(target_infidelity > 0.0 && target_infidelity < 1.0))
        throw std::invalid_argument("target_infidelity must lie in (0, 1)");

    QslSearchResult result;
    auto probe = [&](double T) {
        OptimizerSettings s = settings;
        s.seed = derive_seed(settings.seed, 1000 + result.probes);
        ++result.probes;
        return optimize(ops, T, chi_final, goal, s);
    };

    double hi = upper_bracket;
    OptimizationReport hi_report = probe(hi);
    if (hi_report.best_infidelity > target_infidelity)
        throw QslSearchError("optimizer failed at the upper bracket duration");

    double lo = 0.0;
    while (hi - lo > 0.05 * hi) {
        const double mid = 0.5 * (lo + hi);
        OptimizationReport mid_report = probe(mid);
        if (mid_report.best_infidelity <= target_infidelity) {
            hi = mid;
            hi_report = std::move(mid_report);
        } else {
            lo = mid;
        }
    }
    result.time = hi;
    result.report = std::move(hi_report);
    return result;
}

}  // namespace squeeze
