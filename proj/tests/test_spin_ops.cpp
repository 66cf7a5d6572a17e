#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "squeeze/spin_ops.hpp"

using namespace squeeze;
using Catch::Matchers::WithinAbs;

namespace {

Eigen::MatrixXcd dense_jy(const SpinOperators& ops) {
    const Eigen::MatrixXd jp = ops.dense_jplus();
    const Complex i2(0.0, 2.0);
    return (jp.cast<Complex>() - jp.transpose().cast<Complex>()) / i2;
}

StateVector basis_state(const SpinOperators& ops, int index) {
    StateVector s = ops.coherent_up_state();
    s.amplitudes.setZero();
    s.amplitudes[index] = 1.0;
    return s;
}

}  // namespace

TEST_CASE("N=1 gives Pauli algebra over two levels") {
    const SpinOperators ops = build_operators(1);
    REQUIRE(ops.dim() == 2);
    const Eigen::MatrixXd jx = ops.dense_jx();
    CHECK_THAT(jx(0, 1), WithinAbs(0.5, 1e-15));
    CHECK_THAT(jx(1, 0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(jx(0, 0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(ops.jz_diag()[0], WithinAbs(0.5, 1e-15));
    CHECK_THAT(ops.jz_diag()[1], WithinAbs(-0.5, 1e-15));
}

TEST_CASE("N=2 matrices match the hand-squared tridiagonal") {
    const SpinOperators ops = build_operators(2);
    REQUIRE(ops.dim() == 3);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK_THAT(ops.jx_offdiag()[0], WithinAbs(inv_sqrt2, 1e-15));
    CHECK_THAT(ops.jx_offdiag()[1], WithinAbs(inv_sqrt2, 1e-15));
    // Jx^2 couples m=+1 to m=-1 with element 1/2, diagonal (1/2, 1, 1/2)
    CHECK_THAT(ops.jx2_offdiag2()[0], WithinAbs(0.5, 1e-15));
    CHECK_THAT(ops.jx2_diag()[0], WithinAbs(0.5, 1e-15));
    CHECK_THAT(ops.jx2_diag()[1], WithinAbs(1.0, 1e-15));
    CHECK_THAT(ops.jx2_diag()[2], WithinAbs(0.5, 1e-15));
}

TEST_CASE("operator identities hold for a range of sizes") {
    for (int n : {1, 2, 3, 4, 7, 16, 25}) {
        CAPTURE(n);
        const SpinOperators ops = build_operators(n);
        const Eigen::MatrixXd jx = ops.dense_jx();
        const Eigen::MatrixXd jz = ops.dense_jz();
        const Eigen::MatrixXcd jy = dense_jy(ops);

        // jx2 bands equal the matrix square of jx
        const Eigen::MatrixXd jx2 = jx * jx;
        for (int i = 0; i < ops.dim(); ++i) {
            CHECK_THAT(ops.jx2_diag()[i], WithinAbs(jx2(i, i), 1e-12 * (1 + std::abs(jx2(i, i)))));
            if (i + 2 < ops.dim())
                CHECK_THAT(ops.jx2_offdiag2()[i],
                           WithinAbs(jx2(i, i + 2), 1e-12 * (1 + std::abs(jx2(i, i + 2)))));
        }

        // [Jx, Jy] = i Jz
        const Eigen::MatrixXcd comm =
            jx.cast<Complex>() * jy - jy * jx.cast<Complex>() -
            Complex(0.0, 1.0) * jz.cast<Complex>();
        CHECK(comm.cwiseAbs().maxCoeff() < 1e-12);

        // Casimir Jx^2 + Jy^2 + Jz^2 = J(J+1) I
        const double j = ops.j();
        const Eigen::MatrixXcd casimir = jx.cast<Complex>() * jx.cast<Complex>() +
                                         jy * jy + jz.cast<Complex>() * jz.cast<Complex>();
        const Eigen::MatrixXcd expected =
            j * (j + 1.0) * Eigen::MatrixXcd::Identity(ops.dim(), ops.dim());
        CHECK((casimir - expected).cwiseAbs().maxCoeff() < 1e-12 * j * (j + 1.0));
    }
}

TEST_CASE("construction rejects out-of-range sizes") {
    CHECK_THROWS_AS(build_operators(0), std::invalid_argument);
    CHECK_THROWS_AS(build_operators(-3), std::invalid_argument);
    CHECK_THROWS_AS(build_operators(10001), std::invalid_argument);
    CHECK_NOTHROW(build_operators(10001, 20000));
}

TEST_CASE("hamiltonian apply on Jz eigenstates and by linearity") {
    const SpinOperators ops = build_operators(6);
    const HamiltonianParams p{-1.0, 0.0};

    SECTION("chi=0 keeps |m> an eigenstate with eigenvalue omega*m") {
        for (int i = 0; i < ops.dim(); ++i) {
            const StateVector v = basis_state(ops, i);
            const CVector hv = ops.apply_hamiltonian(p, v.amplitudes);
            const CVector expected = p.omega * ops.m_of(i) * v.amplitudes;
            CHECK((hv - expected).norm() < 1e-14);
        }
    }

    SECTION("N=2 example: H|m=+1> = -|+1> + (1/2)|+1> + (1/2)|-1>") {
        const SpinOperators small = build_operators(2);
        const StateVector v = basis_state(small, 0);
        const CVector hv = small.apply_hamiltonian({-1.0, 1.0}, v.amplitudes);
        CHECK_THAT(hv[0].real(), WithinAbs(-1.0 + 0.5, 1e-14));
        CHECK_THAT(hv[1].real(), WithinAbs(0.0, 1e-14));
        CHECK_THAT(hv[2].real(), WithinAbs(0.5, 1e-14));
    }

    SECTION("linearity against the dense matrix on random vectors") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss;
        const HamiltonianParams params{-1.0, 0.7};
        const Eigen::MatrixXd dense = ops.dense_hamiltonian(params);
        CVector v(ops.dim()), w(ops.dim());
        for (int i = 0; i < ops.dim(); ++i) {
            v[i] = Complex(gauss(rng), gauss(rng));
            w[i] = Complex(gauss(rng), gauss(rng));
        }
        const Complex a(0.3, -0.2), b(-1.1, 0.5);
        const CVector lhs = ops.apply_hamiltonian(params, CVector(a * v + b * w));
        const CVector rhs = a * ops.apply_hamiltonian(params, v) +
                            b * ops.apply_hamiltonian(params, w);
        CHECK((lhs - rhs).norm() < 1e-12);
        const CVector dense_result = dense.cast<Complex>() * v;
        CHECK((ops.apply_hamiltonian(params, v) - dense_result).norm() < 1e-12);
    }

    SECTION("dimension mismatch is rejected") {
        CVector bad = CVector::Zero(3);
        CVector out;
        CHECK_THROWS_AS(ops.apply_hamiltonian(p, bad, out), std::invalid_argument);
    }
}

TEST_CASE("observables of reference states") {
    SECTION("coherent |Jz=J> has xi^2 = 1 and full signal") {
        for (int n : {2, 10, 31}) {
            const SpinOperators ops = build_operators(n);
            const Observables obs = observables(ops, ops.coherent_up_state());
            CHECK_THAT(obs.mean_jz, WithinAbs(ops.j(), 1e-12));
            CHECK_THAT(obs.xi_squared, WithinAbs(1.0, 1e-12));
        }
    }

    SECTION("m=0 Dicke state flags zero signal instead of dividing") {
        const SpinOperators ops = build_operators(4);
        const Observables obs = observables(ops, basis_state(ops, 2));
        CHECK_THAT(obs.mean_jz, WithinAbs(0.0, 1e-14));
        CHECK(std::isinf(obs.xi_squared));
    }

    SECTION("means are real for random states (Hermitian operators)") {
        const SpinOperators ops = build_operators(9);
        std::mt19937_64 rng(11);
        std::normal_distribution<double> gauss;
        CVector v(ops.dim());
        for (int i = 0; i < ops.dim(); ++i) v[i] = Complex(gauss(rng), gauss(rng));
        v /= v.norm();
        const StateVector s{v, 9};
        const Observables obs = observables(ops, s);
        const Eigen::MatrixXcd jx = ops.dense_jx().cast<Complex>();
        const Complex mjx = v.dot(jx * v);
        CHECK_THAT(obs.mean_jx, WithinAbs(mjx.real(), 1e-10));
        CHECK(std::abs(mjx.imag()) < 1e-10);
    }
}
