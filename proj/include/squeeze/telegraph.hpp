#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <memory>
#include <random>
#include <vector>

#include "squeeze/crab_optimizer.hpp"
#include "squeeze/propagator.hpp"

namespace squeeze {

struct TelegraphConfig {
    double k_alpha = 0.05;
    double k_beta = 0.05;
    double switch_rate = 500.0;  // nu, mean switches per unit time
    int n_realizations = 24;
    std::uint64_t seed = 1;

    void validate() const {
        if (k_alpha < 0.0 || k_beta < 0.0)
            throw std::invalid_argument("noise amplitudes must be >= 0");
        if (!(switch_rate > 0.0)) throw std::invalid_argument("switch_rate must be > 0");
        if (n_realizations < 1) throw std::invalid_argument("n_realizations must be >= 1");
    }
};

/// Piecewise-constant noise on [0, T]: values[k] holds on
/// [switch_times[k-1], switch_times[k]) with the obvious end segments.
struct TelegraphTrajectory {
    double total_time = 0.0;
    std::vector<double> switch_times;  // strictly increasing, inside (0, T)
    std::vector<double> values;        // size switch_times.size() + 1, in [-1, 1]

    double value_at(double t) const {
        const auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
        return values[static_cast<std::size_t>(it - switch_times.begin())];
    }
};

/// Telegraph process: exponential waiting times with mean 1/nu, each segment
/// value uniform on [-1, 1].
inline TelegraphTrajectory sample_trajectory(double nu, double total_time,
                                             std::uint64_t seed) {
    if (!(nu > 0.0) || !(total_time > 0.0))
        throw std::invalid_argument("nu and total_time must be > 0");
    TelegraphTrajectory traj;
    traj.total_time = total_time;
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> wait(nu);
    std::uniform_real_distribution<double> level(-1.0, 1.0);
    traj.values.push_back(level(rng));
    double t = wait(rng);
    while (t < total_time) {
        traj.switch_times.push_back(t);
        traj.values.push_back(level(rng));
        t += wait(rng);
    }
    return traj;
}

/// Evolution under chi(t)[1 + K_a alpha(t)] Jx^2 + omega[1 + K_b beta(t)] Jz.
///
/// Integration substeps never straddle a switch of an active noise channel;
/// with both amplitudes zero the step sequence reduces to the noiseless
/// propagator's, bit for bit, for every integrator choice.
inline PropagationResult propagate_noisy(const SpinOperators& ops,
                                         const ControlProtocol& protocol,
                                         const TelegraphConfig& config,
                                         const TelegraphTrajectory& traj_alpha,
                                         const TelegraphTrajectory& traj_beta,
                                         const StateVector& initial,
                                         PropagationConfig prop = {},
                                         double omega = -1.0) {
    config.validate();
    if (initial.dim() != ops.dim())
        throw std::invalid_argument("dimension mismatch");
    if (std::abs(initial.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("initial state not normalized");
    const double T = protocol.total_time;
    if ((config.k_alpha > 0.0 && traj_alpha.total_time < T) ||
        (config.k_beta > 0.0 && traj_beta.total_time < T))
        throw std::invalid_argument("noise trajectories must cover [0, T]");

    double dt = prop.step_size;
    if (dt <= 0.0) {
        const double j = ops.j();
        double chi_max = std::abs(protocol.chi_final);
        if (protocol.kind == ControlProtocol::Kind::Crab) chi_max *= protocol.clamp_factor;
        const double w = std::abs(omega) * (1.0 + config.k_beta);
        const double c = chi_max * (1.0 + config.k_alpha);
        if (prop.method == Integrator::RK4)
            dt = std::min(1e-2, 0.1 / (w * j + c * j * j + 1e-30));
        else if (prop.method == Integrator::SplitStep)
            dt = std::min(1e-3, 1.5 / (w * j + c * std::pow(j, 0.9) + 1e-30));
        else
            dt = std::min(0.05, T / 50.0);
    }

    std::vector<double> boundaries{0.0};
    if (config.k_alpha > 0.0)
        for (double s : traj_alpha.switch_times)
            if (s < T) boundaries.push_back(s);
    if (config.k_beta > 0.0)
        for (double s : traj_beta.switch_times)
            if (s < T) boundaries.push_back(s);
    boundaries.push_back(T);
    std::sort(boundaries.begin(), boundaries.end());
    boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());

    PropagationResult result;
    result.final_state = initial;
    CVector& psi = result.final_state.amplitudes;
    detail::Rk4Workspace work(ops.dim());
    std::unique_ptr<detail::SplitStepWorkspace> split;
    if (prop.method == Integrator::SplitStep)
        split = std::make_unique<detail::SplitStepWorkspace>(ops);

    for (std::size_t seg = 0; seg + 1 < boundaries.size(); ++seg) {
        const double s0 = boundaries[seg];
        const double s1 = boundaries[seg + 1];
        const double tmid_seg = 0.5 * (s0 + s1);
        const double alpha = config.k_alpha > 0.0 ? traj_alpha.value_at(tmid_seg) : 0.0;
        const double beta = config.k_beta > 0.0 ? traj_beta.value_at(tmid_seg) : 0.0;
        const double chi_scale = 1.0 + config.k_alpha * alpha;
        const double omega_eff = omega * (1.0 + config.k_beta * beta);

        const long n_steps =
            std::max<long>(1, static_cast<long>(std::ceil((s1 - s0) / dt)));
        const double h = (s1 - s0) / static_cast<double>(n_steps);
        for (long step = 0; step < n_steps; ++step) {
            const double t0 = s0 + step * h;
            const double t1 = std::min(t0 + h, s1);
            const double tm = 0.5 * (t0 + t1);
            if (prop.method == Integrator::RK4) {
                const double c0 = chi_scale * protocol.value(t0, &result.clamp_events);
                const double cm = chi_scale * protocol.value(tm, &result.clamp_events);
                const double c1 = chi_scale * protocol.value(t1, &result.clamp_events);
                work.step(ops, omega_eff, c0, cm, c1, t1 - t0, psi);
            } else if (prop.method == Integrator::SplitStep) {
                const double cm = chi_scale * protocol.value(tm, &result.clamp_events);
                split->step(ops, omega_eff, cm, t1 - t0, psi);
            } else {
                const double cm = chi_scale * protocol.value(tm, &result.clamp_events);
                detail::exponential_step(ops, omega_eff, cm, t1 - t0, psi);
            }
            const double nrm = psi.norm();
            result.norm_drift += std::abs(nrm - 1.0);
            if (!(nrm > 0.0) || result.norm_drift > 1e-6)
                throw NormDriftError("norm drift exceeded 1e-6 in noisy propagation");
            psi /= nrm;
            ++result.steps;
        }
    }
    return result;
}

struct RealizationRecord {
    int realization = 0;
    double xi_squared = 0.0;
    double infidelity = 0.0;
    double mean_jz = 0.0;
};

struct EnsembleResult {
    double mean_xi2 = 0.0;
    double stderr_xi2 = 0.0;
    double mean_infidelity = 0.0;
    std::vector<RealizationRecord> records;
};

/// Disorder average: independent (alpha, beta) trajectories per realization,
/// xi^2 computed per final state and then averaged. Pure function of the
/// inputs and the master seed regardless of scheduling.
inline EnsembleResult ensemble_squeezing(const SpinOperators& ops,
                                         const ControlProtocol& protocol,
                                         const TelegraphConfig& config,
                                         const StateVector& goal,
                                         PropagationConfig prop = {},
                                         double omega = -1.0, int workers = 1) {
    config.validate();
    const int n = config.n_realizations;
    EnsembleResult out;
    out.records.resize(n);

    auto run_one = [&](int i) {
        const TelegraphTrajectory alpha = sample_trajectory(
            config.switch_rate, protocol.total_time, derive_seed(config.seed, 2 * i));
        const TelegraphTrajectory beta = sample_trajectory(
            config.switch_rate, protocol.total_time, derive_seed(config.seed, 2 * i + 1));
        const PropagationResult run = propagate_noisy(
            ops, protocol, config, alpha, beta, ops.coherent_up_state(), prop, omega);
        RealizationRecord rec;
        rec.realization = i;
        const Observables obs = observables(ops, run.final_state);
        rec.xi_squared = obs.xi_squared;
        rec.mean_jz = obs.mean_jz;
        rec.infidelity = infidelity(run.final_state, goal);
        return rec;
    };

    if (workers > 1) {
        std::vector<std::future<RealizationRecord>> futures;
        futures.reserve(n);
        for (int i = 0; i < n; ++i)
            futures.push_back(std::async(std::launch::async, run_one, i));
        for (int i = 0; i < n; ++i) out.records[i] = futures[i].get();
    } else {
        for (int i = 0; i < n; ++i) out.records[i] = run_one(i);
    }

    double sum = 0.0, sum_inf = 0.0;
    for (const auto& r : out.records) {
        sum += r.xi_squared;
        sum_inf += r.infidelity;
    }
    out.mean_xi2 = sum / n;
    out.mean_infidelity = sum_inf / n;
    double ss = 0.0;
    for (const auto& r : out.records) {
        const double d = r.xi_squared - out.mean_xi2;
        ss += d * d;
    }
    out.stderr_xi2 = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return out;
}

}  // namespace squeeze
