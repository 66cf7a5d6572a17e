#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace squeeze {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Pure state over the symmetric (maximal-J) sector, basis ordered
/// m = +J, +J-1, ..., -J so the fully polarized +z state is index 0.
struct StateVector {
    CVector amplitudes;
    int n_atoms = 0;

    int dim() const { return static_cast<int>(amplitudes.size()); }
    double norm() const { return amplitudes.norm(); }
};

struct HamiltonianParams {
    double omega = -1.0;  // precession frequency, strictly negative
    double chi = 0.0;     // twisting strength, >= 0

    void validate() const {
        if (!(omega < 0.0))
            throw std::invalid_argument("omega must be strictly negative");
        if (!(chi >= 0.0))
            throw std::invalid_argument("chi must be non-negative");
    }
};

/// Collective-spin operators for N two-level atoms in banded form.
///
/// Jz is diagonal, Jx tridiagonal with zero diagonal, Jx^2 pentadiagonal
/// with zero first off-diagonal (parity). Only the non-trivial bands are
/// stored so applies cost O(dim). Immutable after construction.
class SpinOperators {
  public:
    static constexpr int kDefaultMaxAtoms = 10000;

    explicit SpinOperators(int n_atoms, int max_atoms = kDefaultMaxAtoms)
        : n_atoms_(n_atoms), j_(0.5 * n_atoms), dim_(n_atoms + 1) {
        if (n_atoms < 1)
            throw std::invalid_argument("n_atoms must be >= 1");
        if (n_atoms > max_atoms)
            throw std::invalid_argument("n_atoms exceeds configured maximum " +
                                        std::to_string(max_atoms));
        jz_.resize(dim_);
        for (int i = 0; i < dim_; ++i) jz_[i] = m_of(i);

        // a(m) = sqrt(J(J+1) - m(m+1)) raises |m> -> |m+1>, i.e. index i -> i-1.
        jplus_amp_.resize(dim_ - 1);
        for (int i = 1; i < dim_; ++i) {
            const double m = m_of(i);
            jplus_amp_[i - 1] = std::sqrt(j_ * (j_ + 1.0) - m * (m + 1.0));
        }

        jx_off_.resize(dim_ - 1);
        for (int i = 0; i + 1 < dim_; ++i) jx_off_[i] = 0.5 * jplus_amp_[i];

        jx2_diag_.assign(dim_, 0.0);
        jx2_off2_.assign(std::max(dim_ - 2, 0), 0.0);
        for (int i = 0; i < dim_; ++i) {
            double d = 0.0;
            if (i > 0) d += jx_off_[i - 1] * jx_off_[i - 1];
            if (i + 1 < dim_) d += jx_off_[i] * jx_off_[i];
            jx2_diag_[i] = d;
            if (i + 2 < dim_) jx2_off2_[i] = jx_off_[i] * jx_off_[i + 1];
        }
    }

    int n_atoms() const { return n_atoms_; }
    double j() const { return j_; }
    int dim() const { return dim_; }
    double m_of(int index) const { return j_ - index; }

    const std::vector<double>& jz_diag() const { return jz_; }
    const std::vector<double>& jplus_amplitudes() const { return jplus_amp_; }
    const std::vector<double>& jx_offdiag() const { return jx_off_; }
    const std::vector<double>& jx2_diag() const { return jx2_diag_; }
    const std::vector<double>& jx2_offdiag2() const { return jx2_off2_; }

    StateVector coherent_up_state() const {
        StateVector s;
        s.n_atoms = n_atoms_;
        s.amplitudes = CVector::Zero(dim_);
        s.amplitudes[0] = 1.0;
        return s;
    }

    template <typename Vec>
    void apply_jz(const Vec& in, Vec& out) const {
        check_dim(static_cast<int>(in.size()));
        out.resize(dim_);
        for (int i = 0; i < dim_; ++i) out[i] = jz_[i] * in[i];
    }

    template <typename Vec>
    void apply_jx(const Vec& in, Vec& out) const {
        check_dim(static_cast<int>(in.size()));
        out.resize(dim_);
        for (int i = 0; i < dim_; ++i) {
            typename Vec::Scalar v{};
            if (i > 0) v += jx_off_[i - 1] * in[i - 1];
            if (i + 1 < dim_) v += jx_off_[i] * in[i + 1];
            out[i] = v;
        }
    }

    template <typename Vec>
    void apply_jx2(const Vec& in, Vec& out) const {
        check_dim(static_cast<int>(in.size()));
        out.resize(dim_);
        for (int i = 0; i < dim_; ++i) {
            auto v = jx2_diag_[i] * in[i];
            if (i >= 2) v += jx2_off2_[i - 2] * in[i - 2];
            if (i + 2 < dim_) v += jx2_off2_[i] * in[i + 2];
            out[i] = v;
        }
    }

    /// out = (omega Jz + chi Jx^2) in, banded, no dense product.
    void apply_hamiltonian(const HamiltonianParams& p, const CVector& in,
                           CVector& out) const {
        check_dim(static_cast<int>(in.size()));
        out.resize(dim_);
        for (int i = 0; i < dim_; ++i) {
            Complex v = (p.omega * jz_[i] + p.chi * jx2_diag_[i]) * in[i];
            if (i >= 2) v += p.chi * jx2_off2_[i - 2] * in[i - 2];
            if (i + 2 < dim_) v += p.chi * jx2_off2_[i] * in[i + 2];
            out[i] = v;
        }
    }

    CVector apply_hamiltonian(const HamiltonianParams& p, const CVector& in) const {
        CVector out;
        apply_hamiltonian(p, in, out);
        return out;
    }

    /// Dense copies, for oracles and small-N checks only.
    Eigen::MatrixXd dense_jx() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
        for (int i = 0; i + 1 < dim_; ++i) {
            m(i, i + 1) = jx_off_[i];
            m(i + 1, i) = jx_off_[i];
        }
        return m;
    }

    Eigen::MatrixXd dense_jz() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
        for (int i = 0; i < dim_; ++i) m(i, i) = jz_[i];
        return m;
    }

    Eigen::MatrixXd dense_jplus() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
        for (int i = 1; i < dim_; ++i) m(i - 1, i) = jplus_amp_[i - 1];
        return m;
    }

    Eigen::MatrixXd dense_hamiltonian(const HamiltonianParams& p) const {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            h(i, i) = p.omega * jz_[i] + p.chi * jx2_diag_[i];
        for (int i = 0; i + 2 < dim_; ++i) {
            h(i, i + 2) = p.chi * jx2_off2_[i];
            h(i + 2, i) = p.chi * jx2_off2_[i];
        }
        return h;
    }

  private:
    void check_dim(int n) const {
        if (n != dim_) throw std::invalid_argument("dimension mismatch");
    }

    int n_atoms_;
    double j_;
    int dim_;
    std::vector<double> jz_;
    std::vector<double> jplus_amp_;
    std::vector<double> jx_off_;
    std::vector<double> jx2_diag_;
    std::vector<double> jx2_off2_;
};

inline SpinOperators build_operators(int n_atoms,
                                     int max_atoms = SpinOperators::kDefaultMaxAtoms) {
    return SpinOperators(n_atoms, max_atoms);
}

struct Observables {
    double mean_jz = 0.0;
    double mean_jx = 0.0;
    double var_jx = 0.0;
    double xi_squared = 0.0;

    bool zero_signal() const { return std::isinf(xi_squared); }
};

/// Expectation values and the squeezing parameter xi^2 = 2J Var(Jx)/<Jz>^2.
/// A vanishing signal |<Jz>| < 1e-12 is reported as xi^2 = +inf, not an error.
inline Observables observables(const SpinOperators& ops, const StateVector& state) {
    const CVector& c = state.amplitudes;
    if (static_cast<int>(c.size()) != ops.dim())
        throw std::invalid_argument("dimension mismatch");

    Observables out;
    const auto& jz = ops.jz_diag();
    const auto& jxo = ops.jx_offdiag();
    double mjz = 0.0, mjx = 0.0;
    for (int i = 0; i < ops.dim(); ++i) mjz += jz[i] * std::norm(c[i]);
    for (int i = 0; i + 1 < ops.dim(); ++i)
        mjx += 2.0 * jxo[i] * (std::conj(c[i]) * c[i + 1]).real();

    CVector jx2c;
    ops.apply_jx2(c, jx2c);
    const Complex mjx2c = c.dot(jx2c);  // conjugates c
    const double mjx2 = mjx2c.real();

    out.mean_jz = mjz;
    out.mean_jx = mjx;
    out.var_jx = mjx2 - mjx * mjx;
    if (std::abs(mjz) < 1e-12)
        out.xi_squared = std::numeric_limits<double>::infinity();
    else
        out.xi_squared = 2.0 * ops.j() * out.var_jx / (mjz * mjz);
    return out;
}

}  // namespace squeeze
