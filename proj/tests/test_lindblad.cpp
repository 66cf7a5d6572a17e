#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "squeeze/ground_state.hpp"
#include "squeeze/lindblad.hpp"

using namespace squeeze;
using Catch::Matchers::WithinAbs;

namespace {

DensityMatrix random_density(const SpinOperators& ops, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    CMatrix a(ops.dim(), ops.dim());
    for (int i = 0; i < ops.dim(); ++i)
        for (int j = 0; j < ops.dim(); ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
    CMatrix rho = a * a.adjoint();
    rho /= rho.trace();
    DensityMatrix out;
    out.elements = rho;
    out.n_atoms = ops.n_atoms();
    return out;
}

CMatrix dense_lindblad_rhs(const SpinOperators& ops, double chi, double gamma,
                           const CMatrix& rho, bool with_omega) {
    Eigen::MatrixXd hr = chi * ops.dense_jx() * ops.dense_jx();
    if (with_omega) hr -= ops.dense_jz();
    const CMatrix h = hr.cast<Complex>();
    const CMatrix jp = ops.dense_jplus().cast<Complex>();
    const CMatrix jm = jp.adjoint();
    const Complex i(0.0, 1.0);
    return -i * (h * rho - rho * h) +
           gamma * (2.0 * jp * rho * jm - jm * jp * rho - rho * jm * jp);
}

}  // namespace

TEST_CASE("lindblad RHS matches a dense oracle on random states") {
    const SpinOperators ops = build_operators(4);
    for (std::uint64_t seed : {1, 2, 3}) {
        const DensityMatrix rho = random_density(ops, seed);
        for (bool with_omega : {true, false}) {
            const CMatrix fast = lindblad_rhs(ops, 0.7, 0.3, rho, with_omega);
            const CMatrix slow =
                dense_lindblad_rhs(ops, 0.7, 0.3, rho.elements, with_omega);
            CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("lindblad RHS is traceless and Hermitian") {
    for (int n : {2, 4, 8}) {
        const SpinOperators ops = build_operators(n);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const DensityMatrix rho = random_density(ops, 100 * n + seed);
            const CMatrix rhs = lindblad_rhs(ops, 0.5, 1.3, rho);
            CHECK(std::abs(rhs.trace()) < 1e-12);
            CHECK((rhs - rhs.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("fully polarized +z state is dark for the raising dissipator") {
    const SpinOperators ops = build_operators(6);
    const DensityMatrix top = DensityMatrix::from_pure(ops.coherent_up_state());
    const CMatrix dissipator_only = lindblad_rhs(ops, 0.0, 2.0, top, false);
    CHECK(dissipator_only.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gamma=0 density evolution matches the pure-state propagator") {
    const SpinOperators ops = build_operators(4);
    const double chi = find_chi_for_signal(ops, ops.j() / std::sqrt(2.0));
    const ControlProtocol ramp = ControlProtocol::linear_ramp(2.0, chi);

    DissipationConfig no_loss;
    no_loss.cooperativity = 1e30;  // gamma_tilde ~ 0
    PropagationConfig prop;
    prop.method = Integrator::RK4;
    prop.step_size = 2e-3;
    const DensityPropagationResult mixed = propagate_density(
        ops, ramp, no_loss, prop, DensityMatrix::from_pure(ops.coherent_up_state()));

    const PropagationResult pure = propagate(ops, ramp, prop, ops.coherent_up_state());

    const double overlap =
        (pure.final_state.amplitudes.adjoint() * mixed.final_rho.elements *
         pure.final_state.amplitudes)(0)
            .real();
    CHECK(overlap >= 1.0 - 1e-8);
    // purity conserved in the unitary limit
    CHECK_THAT((mixed.final_rho.elements * mixed.final_rho.elements).trace().real(),
               WithinAbs(1.0, 1e-7));
}

TEST_CASE("density propagation stays trace-one and Hermitian with dissipation") {
    const SpinOperators ops = build_operators(6);
    const double chi = find_chi_for_signal(ops, ops.j() / std::sqrt(2.0));
    const ControlProtocol ramp = ControlProtocol::linear_ramp(2.0, chi);
    DissipationConfig dissipation;
    dissipation.cooperativity = 1e4;

    const DensityPropagationResult run = propagate_density(
        ops, ramp, dissipation, {}, DensityMatrix::from_pure(ops.coherent_up_state()));
    CHECK(run.trace_drift < 1e-7);
    CHECK(run.final_rho.hermiticity_defect() < 1e-10);
    CHECK(run.hermiticity_correction < 1e-8);
    CHECK(run.final_rho.min_eigenvalue() > -1e-8);
}

TEST_CASE("density RK4 converges under step halving") {
    const SpinOperators ops = build_operators(4);
    const ControlProtocol ramp = ControlProtocol::linear_ramp(1.0, 0.6);
    DissipationConfig dissipation;
    dissipation.cooperativity = 1e3;

    PropagationConfig coarse;
    coarse.step_size = 2e-3;
    PropagationConfig fine;
    fine.step_size = 1e-3;
    const DensityMatrix rho0 = DensityMatrix::from_pure(ops.coherent_up_state());
    const CMatrix a = propagate_density(ops, ramp, dissipation, coarse, rho0).final_rho.elements;
    const CMatrix b = propagate_density(ops, ramp, dissipation, fine, rho0).final_rho.elements;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("squeezing from density matrices") {
    const SpinOperators ops = build_operators(4);

    SECTION("coherent projector has xi^2 = 1") {
        const MixedObservables obs = squeezing_from_density(
            ops, DensityMatrix::from_pure(ops.coherent_up_state()));
        CHECK_THAT(obs.xi_squared, WithinAbs(1.0, 1e-12));
        CHECK_THAT(obs.mean_jz, WithinAbs(ops.j(), 1e-12));
    }

    SECTION("maximally mixed state flags zero signal") {
        DensityMatrix mixed;
        mixed.n_atoms = ops.n_atoms();
        mixed.elements =
            CMatrix::Identity(ops.dim(), ops.dim()) / static_cast<double>(ops.dim());
        const MixedObservables obs = squeezing_from_density(ops, mixed);
        CHECK(std::isinf(obs.xi_squared));
    }

    SECTION("pure-state projector agrees with the state-vector observables") {
        const GroundState gs = ground_state(ops, {-1.0, 1.1});
        const Observables pure = observables(ops, gs.state);
        const MixedObservables mixed =
            squeezing_from_density(ops, DensityMatrix::from_pure(gs.state));
        CHECK_THAT(mixed.mean_jz, WithinAbs(pure.mean_jz, 1e-10));
        CHECK_THAT(mixed.var_jx, WithinAbs(pure.var_jx, 1e-10));
        CHECK_THAT(mixed.xi_squared, WithinAbs(pure.xi_squared, 1e-10));
    }
}

TEST_CASE("cooperativity sweep output is ordered and validated") {
    const SpinOperators ops = build_operators(4);
    const double chi = find_chi_for_signal(ops, ops.j() / std::sqrt(2.0));
    const ControlProtocol ramp = ControlProtocol::linear_ramp(3.0, chi);

    CHECK_THROWS_AS(cooperativity_sweep(ops, {2.0, 1.0}, {{"adiabatic", ramp}}),
                    std::invalid_argument);

    // grid starts past the strong-pumping regime, where the state is pinned
    // near the coherent dark state and xi^2 is not monotone in eta
    const std::vector<SweepPoint> points =
        cooperativity_sweep(ops, {1e4, 1e6, 1e8}, {{"adiabatic", ramp}});
    REQUIRE(points.size() == 3);
    for (const SweepPoint& pt : points) {
        CHECK_FALSE(pt.failed);
        CHECK(pt.protocol == "adiabatic");
    }
    // less dissipation, better squeezing
    CHECK(points[2].xi_squared <= points[1].xi_squared + 1e-12);
    CHECK(points[1].xi_squared <= points[0].xi_squared + 1e-12);
}

TEST_CASE("density matrix validation rejects malformed inputs") {
    const SpinOperators ops = build_operators(3);
    DensityMatrix bad;
    bad.n_atoms = 3;
    bad.elements = CMatrix::Identity(ops.dim(), ops.dim());  // trace != 1
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.elements /= static_cast<double>(ops.dim());
    CHECK_NOTHROW(bad.validate());
    bad.elements(0, 1) = Complex(0.5, 0.0);  // not Hermitian
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
