#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "squeeze/ground_state.hpp"

using namespace squeeze;
using Catch::Matchers::WithinAbs;

namespace {

// dense brute-force oracle for small N
std::pair<Eigen::VectorXd, double> dense_ground(const SpinOperators& ops,
                                                const HamiltonianParams& p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ops.dense_hamiltonian(p));
    Eigen::VectorXd v = solver.eigenvectors().col(0);
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
    return {v, solver.eigenvalues()[0]};
}

}  // namespace

TEST_CASE("chi=0 ground state is |m=+J> with energy -J") {
    for (int n : {2, 5, 12}) {
        const SpinOperators ops = build_operators(n);
        const GroundState gs = ground_state(ops, {-1.0, 0.0});
        CHECK_THAT(gs.energy, WithinAbs(-ops.j(), 1e-12));
        CHECK_THAT(std::abs(gs.state.amplitudes[0]), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("N=2 analytic parity-block values") {
    const SpinOperators ops = build_operators(2);

    SECTION("chi=1: energy 1/2 - sqrt(5)/2, support on {|+1>, |-1>}") {
        const GroundState gs = ground_state(ops, {-1.0, 1.0});
        CHECK_THAT(gs.energy, WithinAbs(0.5 - std::sqrt(5.0) / 2.0, 1e-12));
        CHECK(std::abs(gs.state.amplitudes[1]) < 1e-10);
    }

    SECTION("chi=2: energy 1 - sqrt(2), <Jz> = 1/sqrt(2), xi^2 = 2 - sqrt(2)") {
        const GroundState gs = ground_state(ops, {-1.0, 2.0});
        CHECK_THAT(gs.energy, WithinAbs(1.0 - std::sqrt(2.0), 1e-12));
        const Observables obs = observables(ops, gs.state);
        CHECK_THAT(obs.mean_jz, WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
        CHECK_THAT(obs.xi_squared, WithinAbs(2.0 - std::sqrt(2.0), 1e-12));
    }
}

TEST_CASE("banded solve matches dense diagonalization for N <= 6") {
    for (int n : {1, 2, 3, 4, 5, 6}) {
        for (double chi : {0.0, 0.3, 1.0, 2.7, 8.0}) {
            CAPTURE(n, chi);
            const SpinOperators ops = build_operators(n);
            const HamiltonianParams p{-1.0, chi};
            const GroundState gs = ground_state(ops, p);
            const auto [dense_vec, dense_energy] = dense_ground(ops, p);
            CHECK_THAT(gs.energy, WithinAbs(dense_energy, 1e-10));
            const double overlap =
                std::abs(dense_vec.cast<Complex>().dot(gs.state.amplitudes));
            CHECK_THAT(overlap, WithinAbs(1.0, 1e-8));
        }
    }
}

TEST_CASE("eigenvector residual and phase convention") {
    const SpinOperators ops = build_operators(40);
    const HamiltonianParams p{-1.0, 0.11};
    const GroundState gs = ground_state(ops, p);
    const CVector hv = ops.apply_hamiltonian(p, gs.state.amplitudes);
    CHECK((hv - gs.energy * gs.state.amplitudes).norm() < 1e-10);
    int imax = 0;
    gs.state.amplitudes.cwiseAbs().maxCoeff(&imax);
    CHECK(gs.state.amplitudes[imax].real() > 0.0);
    CHECK_THAT(gs.state.amplitudes[imax].imag(), WithinAbs(0.0, 1e-15));
}

TEST_CASE("ground-state parity: support stays in the m = J (mod 2) sector") {
    for (int n : {4, 10, 30}) {
        const SpinOperators ops = build_operators(n);
        const GroundState gs = ground_state(ops, {-1.0, 3.0 / n});
        for (int i = 1; i < ops.dim(); i += 2)
            CHECK(std::abs(gs.state.amplitudes[i]) < 1e-10);
    }
}

TEST_CASE("<Jz> of the ground state is non-increasing in chi") {
    const SpinOperators ops = build_operators(14);
    double prev = ops.j() + 1.0;
    for (double chi = 0.0; chi <= 2.0; chi += 0.1) {
        const GroundState gs = ground_state(ops, {-1.0, chi});
        const double mjz = observables(ops, gs.state).mean_jz;
        CHECK(mjz <= prev + 1e-12);
        prev = mjz;
    }
}

TEST_CASE("find_chi_for_signal") {
    SECTION("target J is the coherent state: chi = 0") {
        const SpinOperators ops = build_operators(8);
        CHECK_THAT(find_chi_for_signal(ops, ops.j()), WithinAbs(0.0, 1e-12));
    }

    SECTION("N=2 with target J/sqrt(2) recovers the analytic chi = 2") {
        const SpinOperators ops = build_operators(2);
        const double chi = find_chi_for_signal(ops, ops.j() / std::sqrt(2.0));
        CHECK_THAT(chi, WithinAbs(2.0, 1e-6));
    }

    SECTION("the solved ground state actually hits the requested signal") {
        const SpinOperators ops = build_operators(20);
        const double target = 0.707 * ops.j();
        const double chi = find_chi_for_signal(ops, target);
        const GroundState gs = ground_state(ops, {-1.0, chi});
        CHECK_THAT(observables(ops, gs.state).mean_jz, WithinAbs(target, 1e-8 * ops.j()));
    }

    SECTION("invalid targets are rejected") {
        const SpinOperators ops = build_operators(4);
        CHECK_THROWS_AS(find_chi_for_signal(ops, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(find_chi_for_signal(ops, -1.0), std::invalid_argument);
        CHECK_THROWS_AS(find_chi_for_signal(ops, ops.j() + 1.0), std::invalid_argument);
    }
}

TEST_CASE("squeezing at the working point beats the standard quantum limit") {
    for (int n : {2, 4, 8, 16, 30}) {
        const SpinOperators ops = build_operators(n);
        const double chi = find_chi_for_signal(ops, ops.j() / std::sqrt(2.0));
        const GroundState gs = ground_state(ops, {-1.0, chi});
        CHECK(observables(ops, gs.state).xi_squared < 1.0);
    }
}
