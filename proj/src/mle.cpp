#include <oprisk/error.hpp>
#include <oprisk/mle.hpp>
#include <oprisk/warnings.hpp>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

namespace oprisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double softplus(double u) { return u > 30.0 ? u : std::log1p(std::exp(u)); }
double softplus_inv(double v) { return v > 30.0 ? v : std::log(std::expm1(v)); }

double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

// Sufficient statistics and per-family mean log-likelihood in the optimizer's coordinates.
class Objective {
public:
    Objective(std::span<const double> x, Family family, std::optional<double> threshold)
        : x_(x), family_(family), threshold_(threshold), n_(static_cast<double>(x.size())) {
        std::vector<double> v(x.begin(), x.end());
        if (family == Family::Normal) {
            // work on the raw values
        } else {
            for (double& e : v) e = std::log(e);
        }
        center_ = std::accumulate(v.begin(), v.end(), 0.0) / n_;
        for (double e : v) ss_ += (e - center_) * (e - center_);
        if (family == Family::LogGamma) {
            for (double e : v) sum_loglog_ += std::log(e);
        }
        if (family == Family::GPD) mean_x_ = std::accumulate(x.begin(), x.end(), 0.0) / n_;
    }

    Point2 to_natural(const Point2& y) const {
        switch (family_) {
        case Family::LogNormal:
        case Family::Normal:
            return {y[0], std::exp(y[1])};
        case Family::GPD:
            return {softplus(y[0]), std::exp(y[1])};
        case Family::LogGamma:
            return {std::exp(y[0]), std::exp(y[1])};
        }
        return y;
    }

    Point2 to_internal(const Point2& p) const {
        switch (family_) {
        case Family::LogNormal:
        case Family::Normal:
            return {p[0], std::log(p[1])};
        case Family::GPD:
            return {softplus_inv(std::max(p[0], 1e-6)), std::log(p[1])};
        case Family::LogGamma:
            return {std::log(p[0]), std::log(p[1])};
        }
        return p;
    }

    // Mean log-likelihood at natural parameters; -inf outside the domain.
    double mean_loglik(const Point2& p) const {
        if (!params_in_domain(family_, p[0], p[1])) return -kInf;
        switch (family_) {
        case Family::LogNormal: {
            const double mu = p[0], sigma = p[1];
            const double dev = center_ - mu;
            double ll = -std::log(sigma) - (ss_ / n_ + dev * dev) / (2.0 * sigma * sigma) - center_ - kLogSqrt2Pi;
            if (threshold_) {
                const double u = (std::log(*threshold_) - mu) / sigma;
                ll -= std::log(0.5 * boost::math::erfc(u / std::numbers::sqrt2));
            }
            return ll;
        }
        case Family::Normal: {
            const double mu = p[0], sigma = p[1];
            const double dev = center_ - mu;
            return -std::log(sigma) - (ss_ / n_ + dev * dev) / (2.0 * sigma * sigma) - kLogSqrt2Pi;
        }
        case Family::LogGamma: {
            const double a = p[0], b = p[1];
            double ll = a * std::log(b) - std::lgamma(a) + (a - 1.0) * sum_loglog_ / n_ - (b + 1.0) * center_;
            if (threshold_ && *threshold_ > 1.0) ll -= std::log(boost::math::gamma_q(a, b * std::log(*threshold_)));
            return ll;
        }
        case Family::GPD: {
            const double xi = p[0], theta = p[1];
            double ll = -std::log(theta);
            if (xi < 1e-12) {
                ll -= mean_x_ / theta;
                if (threshold_) ll += *threshold_ / theta;
            } else {
                double acc = 0.0;
                for (double e : x_) acc += std::log1p(xi * e / theta);
                ll -= (1.0 + 1.0 / xi) * acc / n_;
                if (threshold_) ll += std::log1p(xi * *threshold_ / theta) / xi;
            }
            return ll;
        }
        }
        return -kInf;
    }

    double operator()(const Point2& y) const {
        const double ll = mean_loglik(to_natural(y));
        return std::isfinite(ll) ? -ll : kInf;
    }

    double gradient_norm(const Point2& y) const {
        double g2 = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(y[i]));
            Point2 hi = y, lo = y;
            hi[i] += h;
            lo[i] -= h;
            const double g = ((*this)(hi) - (*this)(lo)) / (2.0 * h);
            g2 += g * g;
        }
        return std::sqrt(g2);
    }

    double n() const { return n_; }

private:
    std::span<const double> x_;
    Family family_;
    std::optional<double> threshold_;
    double n_;
    double center_ = 0.0;
    double ss_ = 0.0;
    double sum_loglog_ = 0.0;
    double mean_x_ = 0.0;
};

void validate(std::span<const double> x, Family family, std::optional<double> threshold) {
    if (x.size() < 10) {
        std::ostringstream os;
        os << "insufficient data: " << x.size() << " losses, at least 10 are required";
        throw DataError(os.str());
    }
    if (threshold && family == Family::Normal) throw ConfigError("the Normal family cannot be truncated");
    for (double e : x) {
        if (!std::isfinite(e)) throw DataError("loss amounts must be finite");
        if (family != Family::Normal && !(e > 0.0)) throw DataError("loss amounts must be positive");
        if (threshold && !(e > *threshold)) {
            std::ostringstream os;
            os << "loss " << e << " is not above the truncation threshold " << *threshold;
            throw DataError(os.str());
        }
        if (family == Family::LogGamma && e < 1.0) {
            std::ostringstream os;
            os << "loss " << e << " is outside the LogGamma support (x >= 1)";
            throw DataError(os.str());
        }
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) throw DataError("degenerate sample: all losses are equal");
}

double quantile7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Point2 gpd_quantile_match(const std::vector<double>& y) {
    const double q50 = quantile7(y, 0.50);
    const double q75 = quantile7(y, 0.75);
    double xi = 0.5;
    if (q50 > 0.0 && q75 / q50 - 1.0 > 0.0) xi = std::log2(q75 / q50 - 1.0);
    xi = std::clamp(xi, 0.05, 3.0);
    const double theta = q50 > 0.0 ? q50 * xi / (std::exp2(xi) - 1.0) : 1.0;
    return {xi, theta};
}

// Moment / quantile matching start for the untruncated family, then the truncated adjustment.
Point2 base_start(std::span<const double> x, Family family, std::optional<double> threshold) {
    const double n = static_cast<double>(x.size());
    switch (family) {
    case Family::Normal:
    case Family::LogNormal: {
        double m = 0.0, s = 0.0;
        for (double e : x) m += family == Family::Normal ? e : std::log(e);
        m /= n;
        for (double e : x) {
            const double d = (family == Family::Normal ? e : std::log(e)) - m;
            s += d * d;
        }
        s = std::sqrt(s / n);
        if (threshold) s *= 1.0 + base_cdf(SeverityModel(family, m, s), *threshold);
        return {m, s};
    }
    case Family::LogGamma: {
        double m = 0.0, v = 0.0;
        for (double e : x) m += std::log(e);
        m /= n;
        for (double e : x) v += (std::log(e) - m) * (std::log(e) - m);
        v /= n;
        double a = m * m / v;
        const double b = m / v;
        if (threshold) a *= 1.0 + base_cdf(SeverityModel(family, a, b), *threshold);
        return {a, b};
    }
    case Family::GPD: {
        std::vector<double> y(x.begin(), x.end());
        if (!threshold) return gpd_quantile_match(y);
        // Excesses over H are GPD with scale theta + xi*H.
        for (double& e : y) e -= *threshold;
        const auto [xi, beta] = gpd_quantile_match(y);
        return {xi, std::max(beta - xi * *threshold, 0.1 * beta)};
    }
    }
    return {1.0, 1.0};
}

struct Attempt {
    SimplexResult fit;
    Point2 start;
    double grad = kInf;
    bool ok = false;
};

Attempt run_from(const Objective& obj, const Point2& start_natural, int& iterations) {
    Attempt at;
    at.start = start_natural;
    Point2 y = obj.to_internal(start_natural);
    SimplexResult best{};
    best.fx = kInf;
    for (int restart = 0; restart < 4; ++restart) {
        const double step = restart == 0 ? 0.1 : 0.01;
        Point2 steps{step * std::max(1.0, std::abs(y[0])), step};
        SimplexResult r = minimize_simplex(obj, y, steps);
        iterations += r.iterations;
        if (r.fx <= best.fx) best = r;
        y = best.x;
        if (!std::isfinite(best.fx)) break;
        at.grad = obj.gradient_norm(best.x);
        if (best.converged && at.grad <= 1e-6) {
            at.ok = true;
            break;
        }
    }
    at.fit = best;
    return at;
}

FitResult finish(const Objective& obj, const Attempt& at, Family family, std::optional<double> threshold,
                 std::size_t n, int iterations) {
    const Point2 p = obj.to_natural(at.fit.x);
    FitResult r{SeverityModel(family, p[0], p[1], threshold)};
    r.loglik = -at.fit.fx * obj.n();
    r.n = n;
    r.converged = at.ok;
    r.iterations = iterations;
    r.start = at.start;
    r.grad_norm = at.grad;
    return r;
}

} // namespace

SimplexResult minimize_simplex(const std::function<double(const Point2&)>& f, Point2 start, Point2 step,
                               const SimplexOptions& opts) {
    auto eval = [&](const Point2& p) {
        const double v = f(p);
        return std::isfinite(v) ? v : kInf;
    };
    std::array<Point2, 3> v{start, start, start};
    v[1][0] += step[0];
    v[2][1] += step[1];
    std::array<double, 3> fv{eval(v[0]), eval(v[1]), eval(v[2])};

    SimplexResult out;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int i, int j) { return fv[i] < fv[j]; });
        const int b = idx[0], m = idx[1], w = idx[2];

        const double diam = std::max(dist(v[b], v[m]), dist(v[b], v[w]));
        if (std::isfinite(fv[w]) && diam < opts.diameter_tol && fv[w] - fv[b] < opts.spread_tol) {
            out.converged = true;
            break;
        }

        const Point2 c{0.5 * (v[b][0] + v[m][0]), 0.5 * (v[b][1] + v[m][1])};
        auto along = [&](double t) { return Point2{c[0] + t * (v[w][0] - c[0]), c[1] + t * (v[w][1] - c[1])}; };

        const Point2 xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < fv[b]) {
            const Point2 xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                v[w] = xe;
                fv[w] = fe;
            } else {
                v[w] = xr;
                fv[w] = fr;
            }
            continue;
        }
        if (fr < fv[m]) {
            v[w] = xr;
            fv[w] = fr;
            continue;
        }
        const bool outside = fr < fv[w];
        const Point2 xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[w])) {
            v[w] = xc;
            fv[w] = fc;
            continue;
        }
        for (int i : {m, w}) {
            v[i] = Point2{v[b][0] + 0.5 * (v[i][0] - v[b][0]), v[b][1] + 0.5 * (v[i][1] - v[b][1])};
            fv[i] = eval(v[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    out.x = v[best];
    out.fx = fv[best];
    out.iterations = it;
    return out;
}

double log_likelihood(const SeverityModel& m, std::span<const double> losses) {
    double acc = 0.0;
    for (double x : losses) acc += log_pdf(m, x);
    return acc;
}

FitResult fit_severity(std::span<const double> losses, Family family, std::optional<double> threshold) {
    validate(losses, family, threshold);
    const Objective obj(losses, family, threshold);
    const Point2 base = base_start(losses, family, threshold);

    int iterations = 0;
    Attempt best;
    best.fit.fx = kInf;
    for (double scale : {1.0, 0.5, 2.0}) {
        const Point2 start{base[0], base[1] * scale};
        Attempt at = run_from(obj, start, iterations);
        // Converged fits beat non-converged ones; otherwise the better likelihood wins.
        const bool better = (at.ok && !best.ok) || (at.ok == best.ok && at.fit.fx < best.fit.fx);
        if (better) best = at;
    }
    if (!std::isfinite(best.fit.fx)) {
        FitResult r{SeverityModel(family, base[0], base[1], threshold)};
        r.loglik = -kInf;
        r.n = losses.size();
        r.iterations = iterations;
        r.start = base;
        r.grad_norm = kInf;
        return r;
    }
    return finish(obj, best, family, threshold, losses.size(), iterations);
}

FitResult fit_severity_from(std::span<const double> losses, Family family, std::optional<double> threshold,
                            Point2 start) {
    validate(losses, family, threshold);
    if (!params_in_domain(family, start[0], start[1])) throw DomainError("start point is outside the parameter domain");
    const Objective obj(losses, family, threshold);
    int iterations = 0;
    const Attempt at = run_from(obj, start, iterations);
    return finish(obj, at, family, threshold, losses.size(), iterations);
}

FrequencyModel fit_poisson(std::int64_t loss_count, int years) {
    if (years < 1) throw DomainError("fit_poisson: years must be >= 1");
    if (loss_count < 0) throw DataError("fit_poisson: loss count must be >= 0");
    if (loss_count == 0) warn("degenerate frequency: zero losses observed, lambda estimate is 0");
    return FrequencyModel(static_cast<double>(loss_count) / years, years);
}

} // namespace oprisk
