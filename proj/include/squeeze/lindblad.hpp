#pragma once

#include <cmath>
#include <future>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "squeeze/control.hpp"
#include "squeeze/propagator.hpp"
#include "squeeze/spin_ops.hpp"

namespace squeeze {

using CMatrix = Eigen::MatrixXcd;

struct DensityMatrix {
    CMatrix elements;
    int n_atoms = 0;

    int dim() const { return static_cast<int>(elements.rows()); }
    double trace_real() const { return elements.trace().real(); }

    static DensityMatrix from_pure(const StateVector& psi) {
        DensityMatrix rho;
        rho.n_atoms = psi.n_atoms;
        rho.elements = psi.amplitudes * psi.amplitudes.adjoint();
        return rho;
    }

    double hermiticity_defect() const {
        return (elements - elements.adjoint()).cwiseAbs().maxCoeff();
    }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(elements);
        return solver.eigenvalues().minCoeff();
    }

    void validate() const {
        if (hermiticity_defect() > 1e-10)
            throw std::invalid_argument("density matrix not Hermitian within 1e-10");
        if (std::abs(trace_real() - 1.0) > 1e-9)
            throw std::invalid_argument("density matrix trace not 1 within 1e-9");
    }
};

struct DissipationConfig {
    double cooperativity = 1.0;               // eta = g^2 / (gamma kappa)
    double kappa_over_delta_ratio = 1e-3;     // 2 kappa / delta

    void validate() const {
        if (!(cooperativity > 0.0)) throw std::invalid_argument("cooperativity must be > 0");
        if (!(kappa_over_delta_ratio > 0.0))
            throw std::invalid_argument("2 kappa / delta must be > 0");
    }

    /// gamma_tilde(t) = chi(t) * delta / (2 kappa eta)
    double rate(double chi) const {
        return chi / (kappa_over_delta_ratio * cooperativity);
    }
};

/// Microscopic cavity-QED preset: gamma_tilde = chi * gamma delta / |g|^2
/// with the quoted atomic-clock experiment numbers, gamma delta / |g|^2 ~ 1e5.
/// Equivalent cooperativity form: eta = g^2/(gamma kappa) = 32, 2 kappa/delta
/// = 2/3000 (delta = 2pi*3 GHz, gamma = 2pi*5 MHz, g = 2pi*0.4 MHz,
/// kappa = 2pi*1 MHz).
inline DissipationConfig cavity_clock_preset() {
    DissipationConfig c;
    c.cooperativity = (0.4 * 0.4) / (5.0 * 1.0);
    c.kappa_over_delta_ratio = 2.0 * 1e-3 / 3.0;
    return c;
}

namespace detail {

/// out = H rho using the banded structure of H = omega Jz + chi Jx^2.
inline void apply_h_left(const SpinOperators& ops, double omega, double chi,
                         const CMatrix& rho, CMatrix& out) {
    const int n = ops.dim();
    const auto& jz = ops.jz_diag();
    const auto& d2 = ops.jx2_diag();
    const auto& o2 = ops.jx2_offdiag2();
    out.resize(n, n);
    for (int col = 0; col < n; ++col) {
        for (int i = 0; i < n; ++i) {
            Complex v = (omega * jz[i] + chi * d2[i]) * rho(i, col);
            if (i >= 2) v += chi * o2[i - 2] * rho(i - 2, col);
            if (i + 2 < n) v += chi * o2[i] * rho(i + 2, col);
            out(i, col) = v;
        }
    }
}

}  // namespace detail

/// Right-hand side of the master equation
///   drho/dt = -i[H, rho] + gamma_tilde (2 J+ rho J- - J-J+ rho - rho J-J+)
/// with H = chi Jx^2 plus optionally omega Jz. The jump operator is J+
/// (the adjoint of J-), which makes the dissipator trace preserving.
inline CMatrix lindblad_rhs(const SpinOperators& ops, double chi, double gamma_tilde,
                            const DensityMatrix& rho, bool include_omega_term = true,
                            double omega = -1.0) {
    if (rho.dim() != ops.dim()) throw std::invalid_argument("dimension mismatch");
    const int n = ops.dim();
    const double w = include_omega_term ? omega : 0.0;

    CMatrix h_rho;
    detail::apply_h_left(ops, w, chi, rho.elements, h_rho);
    const Complex mi(0.0, -1.0);
    CMatrix rhs = mi * (h_rho - h_rho.adjoint());

    if (gamma_tilde != 0.0) {
        const auto& amp = ops.jplus_amplitudes();  // amp[i-1]: J+ maps index i -> i-1
        // J-J+ is diagonal: (J-J+)_{ii} = amp[i-1]^2 for i >= 1, row 0 term 0.
        for (int i = 0; i < n; ++i) {
            const double di = i >= 1 ? amp[i - 1] * amp[i - 1] : 0.0;
            for (int jcol = 0; jcol < n; ++jcol) {
                const double dj = jcol >= 1 ? amp[jcol - 1] * amp[jcol - 1] : 0.0;
                rhs(i, jcol) -= gamma_tilde * (di + dj) * rho.elements(i, jcol);
            }
        }
        // 2 J+ rho J-: shifts the matrix up-left with product amplitudes.
        for (int i = 1; i < n; ++i)
            for (int jcol = 1; jcol < n; ++jcol)
                rhs(i - 1, jcol - 1) +=
                    2.0 * gamma_tilde * amp[i - 1] * amp[jcol - 1] * rho.elements(i, jcol);
    }
    return rhs;
}

struct PositivityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DensityPropagationResult {
    DensityMatrix final_rho;
    double trace_drift = 0.0;
    double hermiticity_correction = 0.0;  // accumulated symmetrization magnitude
    double min_eigenvalue = 0.0;
    long steps = 0;
};

/// Fixed-step RK4 on the master equation with gamma_tilde(t) tied to the
/// instantaneous chi(t). The state is symmetrized every step (drift
/// recorded); positivity is checked on a coarse stride and at the end.
inline DensityPropagationResult propagate_density(
    const SpinOperators& ops, const ControlProtocol& protocol,
    const DissipationConfig& dissipation, PropagationConfig config,
    const DensityMatrix& rho0, bool include_omega_term = true, double omega = -1.0) {
    dissipation.validate();
    rho0.validate();
    if (rho0.dim() != ops.dim()) throw std::invalid_argument("dimension mismatch");
    config.validate(protocol.total_time);

    const double T = protocol.total_time;
    double dt = config.step_size;
    if (dt <= 0.0) {
        // RK4 stability bound: the commutator superoperator's spectral
        // radius is twice the Hamiltonian's (|omega| J + chi J^2), and the
        // dissipator adds decay rates up to 2 gamma J(J+1). Coherences in
        // the occupied low-energy block evolve far slower, so accuracy is
        // governed by these bounds too (verified by step-halving tests).
        const double j = ops.j();
        double chi_max = std::abs(protocol.chi_final);
        if (protocol.kind == ControlProtocol::Kind::Crab)
            chi_max *= protocol.clamp_factor;
        dt = std::min(1e-2, 1.25 / (2.0 * (std::abs(omega) * j + chi_max * j * j) + 1e-30));
        const double gmax = dissipation.rate(chi_max);
        const double jj = j * (j + 1.0);
        if (gmax > 0.0) dt = std::min(dt, 1.0 / (2.0 * gmax * jj + 1e-30));
    }
    const long n_steps = std::max<long>(1, static_cast<long>(std::ceil(T / dt)));
    dt = T / static_cast<double>(n_steps);

    DensityPropagationResult result;
    result.final_rho = rho0;
    DensityMatrix& rho = result.final_rho;
    long clamp_events = 0;

    auto rhs_at = [&](double t, const DensityMatrix& r) {
        const double chi = protocol.value(std::min(t, T), &clamp_events);
        return lindblad_rhs(ops, chi, dissipation.rate(chi), r, include_omega_term, omega);
    };

    const long positivity_stride = std::max<long>(1, n_steps / 16);
    DensityMatrix tmp;
    tmp.n_atoms = rho0.n_atoms;
    for (long step = 0; step < n_steps; ++step) {
        const double t0 = step * dt;
        const CMatrix k1 = rhs_at(t0, rho);
        tmp.elements = rho.elements + (0.5 * dt) * k1;
        const CMatrix k2 = rhs_at(t0 + 0.5 * dt, tmp);
        tmp.elements = rho.elements + (0.5 * dt) * k2;
        const CMatrix k3 = rhs_at(t0 + 0.5 * dt, tmp);
        tmp.elements = rho.elements + dt * k3;
        const CMatrix k4 = rhs_at(t0 + dt, tmp);
        rho.elements += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const CMatrix sym = 0.5 * (rho.elements + rho.elements.adjoint());
        result.hermiticity_correction +=
            (rho.elements - sym).cwiseAbs().maxCoeff();
        rho.elements = sym;
        ++result.steps;

        if ((step + 1) % positivity_stride == 0 || step + 1 == n_steps) {
            const double mineig = rho.min_eigenvalue();
            result.min_eigenvalue = mineig;
            if (mineig < -1e-5) {
                std::ostringstream msg;
                msg << "positivity violation (min eigenvalue " << mineig
                    << ") at step " << step + 1 << " of " << n_steps << ", dt=" << dt;
                throw PositivityError(msg.str());
            }
        }
    }
    result.trace_drift = std::abs(rho.trace_real() - 1.0);
    if (result.trace_drift > 1e-7) {
        std::ostringstream msg;
        msg << "trace drift " << result.trace_drift << " exceeds 1e-7 (dt=" << dt << ")";
        throw PositivityError(msg.str());
    }
    return result;
}

struct MixedObservables {
    double mean_jz = 0.0;
    double var_jx = 0.0;
    double xi_squared = 0.0;
};

/// Squeezing observables from a density matrix: <A> = Re tr(A rho).
inline MixedObservables squeezing_from_density(const SpinOperators& ops,
                                               const DensityMatrix& rho) {
    if (rho.dim() != ops.dim()) throw std::invalid_argument("dimension mismatch");
    const int n = ops.dim();
    const auto& jz = ops.jz_diag();
    const auto& jxo = ops.jx_offdiag();
    const auto& d2 = ops.jx2_diag();
    const auto& o2 = ops.jx2_offdiag2();

    Complex mjz = 0.0, mjx = 0.0, mjx2 = 0.0;
    for (int i = 0; i < n; ++i) mjz += jz[i] * rho.elements(i, i);
    for (int i = 0; i + 1 < n; ++i)
        mjx += jxo[i] * (rho.elements(i + 1, i) + rho.elements(i, i + 1));
    for (int i = 0; i < n; ++i) mjx2 += d2[i] * rho.elements(i, i);
    for (int i = 0; i + 2 < n; ++i)
        mjx2 += o2[i] * (rho.elements(i + 2, i) + rho.elements(i, i + 2));

    if (std::abs(mjz.imag()) > 1e-9 || std::abs(mjx2.imag()) > 1e-9)
        throw std::invalid_argument("observable imaginary residue exceeds 1e-9");

    MixedObservables out;
    out.mean_jz = mjz.real();
    out.var_jx = mjx2.real() - mjx.real() * mjx.real();
    if (std::abs(out.mean_jz) < 1e-12)
        out.xi_squared = std::numeric_limits<double>::infinity();
    else
        out.xi_squared = 2.0 * ops.j() * out.var_jx / (out.mean_jz * out.mean_jz);
    return out;
}

struct SweepPoint {
    double eta = 0.0;
    std::string protocol;
    double total_time = 0.0;
    double xi_squared = 0.0;
    double mean_jz = 0.0;
    double trace_drift = 0.0;
    double min_eigenvalue = 0.0;
    bool failed = false;
    std::string error;
};

/// Squeezing-vs-cooperativity sweep: evolve the coherent state under each protocol's
/// control field with gamma_tilde(t) = chi(t) delta / (2 kappa eta) and
/// report the final squeezing per (eta, protocol) point.
inline std::vector<SweepPoint> cooperativity_sweep(
    const SpinOperators& ops, const std::vector<double>& eta_grid,
    const std::vector<std::pair<std::string, ControlProtocol>>& protocols,
    double kappa_over_delta_ratio = 1e-3, PropagationConfig config = {},
    bool include_omega_term = true, double omega = -1.0, int workers = 1) {
    for (std::size_t i = 1; i < eta_grid.size(); ++i)
        if (!(eta_grid[i] > eta_grid[i - 1]))
            throw std::invalid_argument("eta_grid must be positive ascending");
    if (!eta_grid.empty() && !(eta_grid.front() > 0.0))
        throw std::invalid_argument("eta_grid must be positive ascending");

    std::vector<SweepPoint> points(eta_grid.size() * protocols.size());
    auto run_one = [&](std::size_t index) {
        const std::size_t ei = index / protocols.size();
        const std::size_t pi = index % protocols.size();
        SweepPoint pt;
        pt.eta = eta_grid[ei];
        pt.protocol = protocols[pi].first;
        pt.total_time = protocols[pi].second.total_time;
        try {
            DissipationConfig d;
            d.cooperativity = pt.eta;
            d.kappa_over_delta_ratio = kappa_over_delta_ratio;
            const DensityPropagationResult run =
                propagate_density(ops, protocols[pi].second, d, config,
                                  DensityMatrix::from_pure(ops.coherent_up_state()),
                                  include_omega_term, omega);
            const MixedObservables obs = squeezing_from_density(ops, run.final_rho);
            pt.xi_squared = obs.xi_squared;
            pt.mean_jz = obs.mean_jz;
            pt.trace_drift = run.trace_drift;
            pt.min_eigenvalue = run.min_eigenvalue;
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
        }
        return pt;
    };

    if (workers > 1) {
        std::vector<std::future<SweepPoint>> futures;
        futures.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            futures.push_back(std::async(std::launch::async, run_one, i));
        for (std::size_t i = 0; i < points.size(); ++i) points[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < points.size(); ++i) points[i] = run_one(i);
    }
    return points;
}

}  // namespace squeeze
