#pragma once

#include <oprisk/distributions.hpp>

#include <span>
#include <string_view>
#include <vector>

namespace oprisk {

struct ScanRow {
    double param = 0.0;
    double p = 0.0;
    double var = 0.0;  // severity quantile at p
};

/// Severity quantile as one parameter moves along `grid` with the other held fixed.
/// `vary` is 1 or 2. Grid values outside the family's domain throw DomainError.
std::vector<ScanRow> convexity_scan(const SeverityModel& base, int vary, std::span<const double> grid,
                                    std::span<const double> ps);

enum class Curvature { Convex, Concave, Linear, Mixed };
std::string_view curvature_name(Curvature c);

/// Sign of the second divided differences of y(x). Differences within rel_tol of the curve's
/// own scale (max |y| / span(x)^2) count as zero; all zero is Linear.
Curvature classify_curvature(std::span<const double> x, std::span<const double> y, double rel_tol = 1e-6);

} // namespace oprisk
