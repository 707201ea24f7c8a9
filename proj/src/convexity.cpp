#include <oprisk/convexity.hpp>
#include <oprisk/error.hpp>

#include <algorithm>
#include <cmath>

namespace oprisk {

std::vector<ScanRow> convexity_scan(const SeverityModel& base, int vary, std::span<const double> grid,
                                    std::span<const double> ps) {
    if (vary != 1 && vary != 2) throw DomainError("convexity_scan: vary must be 1 or 2");
    std::vector<ScanRow> out;
    out.reserve(grid.size() * ps.size());
    for (double p : ps) {
        for (double g : grid) {
            const SeverityModel m = vary == 1 ? base.with_params(g, base.p2()) : base.with_params(base.p1(), g);
            out.push_back({g, p, quantile(m, p)});
        }
    }
    return out;
}

std::string_view curvature_name(Curvature c) {
    switch (c) {
    case Curvature::Convex: return "convex";
    case Curvature::Concave: return "concave";
    case Curvature::Linear: return "linear";
    case Curvature::Mixed: return "mixed";
    }
    return "mixed";
}

Curvature classify_curvature(std::span<const double> x, std::span<const double> y, double rel_tol) {
    if (x.size() != y.size() || x.size() < 3) throw DomainError("classify_curvature: need at least 3 matching points");
    double ymax = 0.0;
    for (double v : y) ymax = std::max(ymax, std::abs(v));
    const double span = x.back() - x.front();
    const double scale = ymax / (span * span);
    int pos = 0, neg = 0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        const double s1 = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        const double s2 = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        const double d2 = 2.0 * (s2 - s1) / (x[i + 1] - x[i - 1]);
        if (d2 > rel_tol * scale) ++pos;
        else if (d2 < -rel_tol * scale) ++neg;
    }
    if (pos == 0 && neg == 0) return Curvature::Linear;
    if (neg == 0) return Curvature::Convex;
    if (pos == 0) return Curvature::Concave;
    return Curvature::Mixed;
}

} // namespace oprisk
