#pragma once

#include <oprisk/distributions.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

namespace oprisk {

using Point2 = std::array<double, 2>;

struct SimplexOptions {
    double diameter_tol = 1e-8;  // largest vertex distance from the best vertex
    double spread_tol = 1e-10;   // f(worst) - f(best)
    int max_iterations = 4000;
};

struct SimplexResult {
    Point2 x{};
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Nelder-Mead minimization in two dimensions. Non-finite objective values are
/// treated as +infinity so the simplex simply retreats from them.
SimplexResult minimize_simplex(const std::function<double(const Point2&)>& f, Point2 start, Point2 step,
                               const SimplexOptions& opts = {});

struct FitResult {
    SeverityModel model;
    double loglik = 0.0;    // sum of log densities at the fitted point
    std::size_t n = 0;
    bool converged = false;
    int iterations = 0;     // simplex iterations summed over all starts and restarts
    Point2 start{};         // natural-parameter start that produced the winning fit
    double grad_norm = 0.0; // finite-difference gradient norm of the mean log-likelihood
};

// Sum of log densities (truncation-aware); -infinity if any point is outside the support.
double log_likelihood(const SeverityModel& m, std::span<const double> losses);

/// Truncation-aware MLE of the two severity parameters.
///
/// Throws DataError for fewer than 10 losses, non-positive or non-finite amounts,
/// amounts not above the threshold, LogGamma amounts below 1, or an all-equal sample.
/// Failure to converge is reported through FitResult::converged, not thrown.
FitResult fit_severity(std::span<const double> losses, Family family, std::optional<double> threshold = std::nullopt);

// Same, but starting only from the given natural-parameter point.
FitResult fit_severity_from(std::span<const double> losses, Family family, std::optional<double> threshold,
                            Point2 start);

/// Poisson MLE: count / years. A zero count gives lambda = 0 with a warning.
FrequencyModel fit_poisson(std::int64_t loss_count, int years);

} // namespace oprisk
