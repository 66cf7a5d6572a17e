#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <lapacke.h>

#include "squeeze/spin_ops.hpp"

namespace squeeze {

struct GroundState {
    StateVector state;
    double energy = 0.0;
    double gap = 0.0;  // E1 - E0
    bool near_degenerate = false;
};

struct EigenSolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// All eigenpairs of the real symmetric pentadiagonal H = omega Jz + chi Jx^2,
/// via the LAPACK banded solver (kd = 2). Eigenvalues ascending.
inline void banded_eigensolve(const SpinOperators& ops, const HamiltonianParams& p,
                              std::vector<double>& eigenvalues,
                              Eigen::MatrixXd& eigenvectors) {
    const int n = ops.dim();
    const int kd = 2;
    const int ldab = kd + 1;
    // Lower-band column-major storage: ab[j*ldab + (i-j)] = H(i,j).
    std::vector<double> ab(static_cast<size_t>(ldab) * n, 0.0);
    const auto& jz = ops.jz_diag();
    const auto& d2 = ops.jx2_diag();
    const auto& o2 = ops.jx2_offdiag2();
    for (int jcol = 0; jcol < n; ++jcol) {
        ab[jcol * ldab + 0] = p.omega * jz[jcol] + p.chi * d2[jcol];
        if (jcol + 2 < n) ab[jcol * ldab + 2] = p.chi * o2[jcol];
    }
    eigenvalues.assign(n, 0.0);
    eigenvectors.resize(n, n);
    const lapack_int info = LAPACKE_dsbevd(
        LAPACK_COL_MAJOR, 'V', 'L', n, kd, ab.data(), ldab, eigenvalues.data(),
        eigenvectors.data(), n);
    if (info != 0) {
        std::ostringstream msg;
        msg << "dsbevd failed to converge (info=" << info << ", n=" << n
            << ", chi=" << p.chi << ")";
        throw EigenSolveError(msg.str());
    }
}

inline double hamiltonian_norm_bound(const SpinOperators& ops,
                                     const HamiltonianParams& p) {
    return std::abs(p.omega) * ops.j() + p.chi * ops.j() * ops.j();
}

}  // namespace detail

/// Lowest eigenpair of H. The returned vector has its largest-magnitude
/// amplitude real and positive. Flags near-degeneracy when the gap to the
/// next level falls below 1e-10 * ||H||.
inline GroundState ground_state(const SpinOperators& ops, const HamiltonianParams& p) {
    p.validate();
    std::vector<double> evals;
    Eigen::MatrixXd evecs;
    detail::banded_eigensolve(ops, p, evals, evecs);

    GroundState gs;
    gs.energy = evals[0];
    gs.gap = ops.dim() > 1 ? evals[1] - evals[0] : 0.0;
    gs.near_degenerate =
        ops.dim() > 1 && gs.gap < 1e-10 * std::max(1.0, detail::hamiltonian_norm_bound(ops, p));

    Eigen::VectorXd v = evecs.col(0);
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;

    gs.state.n_atoms = ops.n_atoms();
    gs.state.amplitudes = v.cast<Complex>();
    return gs;
}

struct ChiSearchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Interaction strength chi such that the ground state of
/// omega Jz + chi Jx^2 has <Jz> = target_signal, by doubling bracket plus
/// bisection on the monotone map chi -> <Jz>.
inline double find_chi_for_signal(const SpinOperators& ops, double target_signal,
                                  double omega = -1.0) {
    const double j = ops.j();
    if (!(target_signal > 0.0) || !(target_signal <= j))
        throw std::invalid_argument("target_signal must lie in (0, J]");

    auto signal_at = [&](double chi) {
        const GroundState gs = ground_state(ops, {omega, chi});
        return observables(ops, gs.state).mean_jz;
    };

    const double tol = 1e-8 * j;
    if (std::abs(signal_at(0.0) - target_signal) <= tol) return 0.0;

    double hi = 10.0;
    const double hi_cap = 1024.0;
    while (signal_at(hi) > target_signal) {
        if (hi >= hi_cap) {
            std::ostringstream msg;
            msg << "bracket failure: <Jz> stays above target " << target_signal
                << " for chi in [0, " << hi_cap << "]";
            throw ChiSearchError(msg.str());
        }
        hi *= 2.0;
    }

    double lo = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double s = signal_at(mid);
        if (std::abs(s - target_signal) <= tol) return mid;
        if (s > target_signal)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace squeeze
