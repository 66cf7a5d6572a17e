#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace squeeze {

struct NelderMeadOptions {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double initial_edge = 0.1;
    double collapse_diameter = 1e-8;  // reinitialize the simplex below this
    int max_evaluations = 1000;
};

struct NelderMeadResult {
    std::vector<double> best_point;
    double best_value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    int collapses = 0;
};

/// Downhill simplex with standard reflect/expand/contract/shrink moves.
/// NaN costs are treated as +infinity. When the simplex collapses it is
/// rebuilt around the incumbent with the initial edge. Deterministic.
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& start, const NelderMeadOptions& options = {}) {
    const std::size_t n = start.size();
    NelderMeadResult result;

    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = objective(x);
        const double clean = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
        if (clean < result.best_value) {
            result.best_value = clean;
            result.best_point = x;
        }
        return clean;
    };

    std::vector<std::vector<double>> simplex;
    std::vector<double> values;
    auto build_simplex = [&](const std::vector<double>& center) {
        simplex.assign(n + 1, center);
        values.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += options.initial_edge;
        for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);
    };
    auto diameter = [&]() {
        double d = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                d = std::max(d, std::abs(simplex[i][k] - simplex[0][k]));
        return d;
    };

    build_simplex(start);
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), candidate(n);

    while (result.evaluations < options.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order[0];
        const std::size_t worst = order[n];
        const std::size_t second_worst = order[n - 1];

        if (diameter() < options.collapse_diameter) {
            ++result.collapses;
            build_simplex(result.best_point);
            continue;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto point_at = [&](double coef) {
            for (std::size_t k = 0; k < n; ++k)
                candidate[k] = centroid[k] + coef * (simplex[worst][k] - centroid[k]);
            return candidate;
        };

        const double reflected = eval(point_at(-options.reflection));
        if (reflected < values[best]) {
            auto refl = candidate;
            const double expanded = eval(point_at(-options.reflection * options.expansion));
            if (expanded < reflected) {
                simplex[worst] = candidate;
                values[worst] = expanded;
            } else {
                simplex[worst] = refl;
                values[worst] = reflected;
            }
        } else if (reflected < values[second_worst]) {
            simplex[worst] = candidate;
            values[worst] = reflected;
        } else {
            const bool outside = reflected < values[worst];
            const double coef = outside ? -options.reflection * options.contraction
                                        : options.contraction;
            const double contracted = eval(point_at(coef));
            if (contracted < std::min(reflected, values[worst])) {
                simplex[worst] = candidate;
                values[worst] = contracted;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t k = 0; k < n; ++k)
                        simplex[i][k] = simplex[best][k] +
                                        options.shrink * (simplex[i][k] - simplex[best][k]);
                    values[i] = eval(simplex[i]);
                    if (result.evaluations >= options.max_evaluations) break;
                }
            }
        }
    }
    return result;
}

}  // namespace squeeze
