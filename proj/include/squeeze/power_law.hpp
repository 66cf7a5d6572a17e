#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace squeeze {

struct PowerLawFit {
    double amplitude = 0.0;  // A in y = A x^B
    double exponent = 0.0;   // B
    double r_squared = 0.0;
    int n_points = 0;
};

/// Ordinary least squares of log y on log x; exact on noiseless power laws.
inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("power-law fit needs at least 3 points");
    for (const auto& [x, y] : points)
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument("power-law fit requires positive data");

    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        const double lx = std::log(x);
        const double ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) <= 1e-12 * std::max(1.0, n * sxx))
        throw std::invalid_argument("degenerate abscissae");

    PowerLawFit fit;
    fit.n_points = static_cast<int>(points.size());
    fit.exponent = (n * sxy - sx * sy) / denom;
    fit.amplitude = std::exp((sy - fit.exponent * sx) / n);

    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
        const double r = std::log(y) - (std::log(fit.amplitude) + fit.exponent * std::log(x));
        ss_res += r * r;
    }
    fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return fit;
}

}  // namespace squeeze
