#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "squeeze/nelder_mead.hpp"

using namespace squeeze;

TEST_CASE("nelder-mead minimizes a shifted quadratic") {
    auto objective = [](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - (1.0 + 0.5 * i);
            s += d * d;
        }
        return s;
    };
    NelderMeadOptions options;
    options.max_evaluations = 4000;
    const NelderMeadResult result = nelder_mead(objective, {0.0, 0.0, 0.0}, options);
    CHECK(result.best_value < 1e-10);
    CHECK(std::abs(result.best_point[0] - 1.0) < 1e-4);
    CHECK(std::abs(result.best_point[2] - 2.0) < 1e-4);
    CHECK(result.evaluations <= options.max_evaluations);
}

TEST_CASE("NaN costs are treated as +infinity, not propagated") {
    auto objective = [](const std::vector<double>& x) {
        if (x[0] > 0.5) return std::nan("");
        return (x[0] + 1.0) * (x[0] + 1.0);
    };
    NelderMeadOptions options;
    options.max_evaluations = 500;
    const NelderMeadResult result = nelder_mead(objective, {0.4}, options);
    CHECK(std::isfinite(result.best_value));
    CHECK(result.best_value < 1e-6);
}

TEST_CASE("collapsed simplex is rebuilt and search continues") {
    // flat objective: every move ends in a shrink, collapsing the simplex
    auto objective = [](const std::vector<double>& x) {
        return std::floor(std::abs(x[0]) * 0.1);
    };
    NelderMeadOptions options;
    options.max_evaluations = 300;
    options.initial_edge = 0.05;
    const NelderMeadResult result = nelder_mead(objective, {0.0}, options);
    CHECK(result.collapses >= 1);
    CHECK(result.best_value == 0.0);
}
