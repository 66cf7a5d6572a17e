#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace squeeze {

/// CRAB correction: a truncated randomized Fourier basis on top of the
/// linear ramp,
///   chi(t) = chi_final [1 + lambda(t) sum_j a_j sin(w_j t) + b_j cos(w_j t)] t/T
/// with lambda(t) = sin(pi t/T) pinning both endpoints and
/// w_j = (2 pi / T)(1 + r_j), r_j uniform in [-0.5, 0.5].
struct CrabAnsatz {
    int n_frequencies = 10;
    std::vector<double> frequencies;
    std::vector<double> coeffs_a;
    std::vector<double> coeffs_b;
    std::uint64_t seed = 0;

    static CrabAnsatz with_random_frequencies(int n_f, double total_time,
                                              std::uint64_t seed) {
        if (n_f < 1) throw std::invalid_argument("n_frequencies must be >= 1");
        if (!(total_time > 0.0)) throw std::invalid_argument("total_time must be > 0");
        CrabAnsatz a;
        a.n_frequencies = n_f;
        a.seed = seed;
        a.frequencies.resize(n_f);
        a.coeffs_a.assign(n_f, 0.0);
        a.coeffs_b.assign(n_f, 0.0);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> r(-0.5, 0.5);
        const double base = 2.0 * std::numbers::pi / total_time;
        for (int k = 0; k < n_f; ++k) a.frequencies[k] = base * (1.0 + r(rng));
        return a;
    }

    /// lambda(t) * (sum_j a_j sin(w_j t) + b_j cos(w_j t)); zero at t=0 and t=T.
    double correction(double t, double total_time) const {
        const double s = t / total_time;
        if (s <= 0.0 || s >= 1.0) return 0.0;
        const double lambda = std::sin(std::numbers::pi * s);
        double acc = 0.0;
        for (std::size_t k = 0; k < frequencies.size(); ++k)
            acc += coeffs_a[k] * std::sin(frequencies[k] * t) +
                   coeffs_b[k] * std::cos(frequencies[k] * t);
        return lambda * acc;
    }
};

struct ControlProtocol {
    enum class Kind { LinearRamp, Crab };

    Kind kind = Kind::LinearRamp;
    double total_time = 1.0;
    double chi_final = 0.0;
    std::optional<CrabAnsatz> crab;
    double clamp_factor = 5.0;  // CRAB fields are clamped to +-clamp_factor*chi_final

    static ControlProtocol linear_ramp(double total_time, double chi_final) {
        ControlProtocol p;
        p.kind = Kind::LinearRamp;
        p.total_time = total_time;
        p.chi_final = chi_final;
        return p;
    }

    static ControlProtocol crab_field(double total_time, double chi_final,
                                      CrabAnsatz ansatz, double clamp_factor = 5.0) {
        ControlProtocol p;
        p.kind = Kind::Crab;
        p.total_time = total_time;
        p.chi_final = chi_final;
        p.crab = std::move(ansatz);
        p.clamp_factor = clamp_factor;
        return p;
    }

    /// chi(t); CRAB values are clamped, clamp events counted into *clamp_events.
    double value(double t, long* clamp_events = nullptr) const {
        if (t < 0.0 || t > total_time)
            throw std::out_of_range("control time outside [0, T]");
        const double ramp = chi_final * t / total_time;
        if (kind == Kind::LinearRamp) return ramp;
        if (t >= total_time) return chi_final;  // lambda(T) = 0 exactly
        double chi = ramp * (1.0 + crab->correction(t, total_time));
        const double bound = clamp_factor * std::abs(chi_final);
        if (chi > bound) {
            chi = bound;
            if (clamp_events) ++*clamp_events;
        } else if (chi < -bound) {
            chi = -bound;
            if (clamp_events) ++*clamp_events;
        }
        return chi;
    }
};

inline double control_value(const ControlProtocol& protocol, double t) {
    return protocol.value(t);
}

}  // namespace squeeze
