#include <oprisk/distributions.hpp>
#include <oprisk/error.hpp>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace oprisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Standard normal helpers built on erfc so that both tails keep full relative precision.
double norm_cdf(double z) { return 0.5 * boost::math::erfc(-z / std::numbers::sqrt2); }
double norm_sf(double z) { return 0.5 * boost::math::erfc(z / std::numbers::sqrt2); }
double norm_ppf_upper(double q) { return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q); }
double norm_ppf(double p) { return -norm_ppf_upper(p); }

// ---- base (untruncated) families -------------------------------------------------

double base_cdf_impl(Family f, double p1, double p2, double x) {
    switch (f) {
    case Family::LogNormal:
        return x <= 0.0 ? 0.0 : norm_cdf((std::log(x) - p1) / p2);
    case Family::Normal:
        return norm_cdf((x - p1) / p2);
    case Family::GPD:
        if (x <= 0.0) return 0.0;
        if (p1 == 0.0) return -std::expm1(-x / p2);
        return -std::expm1(-std::log1p(p1 * x / p2) / p1);
    case Family::LogGamma:
        return x <= 1.0 ? 0.0 : boost::math::gamma_p(p1, p2 * std::log(x));
    }
    return 0.0;
}

double base_sf_impl(Family f, double p1, double p2, double x) {
    switch (f) {
    case Family::LogNormal:
        return x <= 0.0 ? 1.0 : norm_sf((std::log(x) - p1) / p2);
    case Family::Normal:
        return norm_sf((x - p1) / p2);
    case Family::GPD:
        if (x <= 0.0) return 1.0;
        if (p1 == 0.0) return std::exp(-x / p2);
        return std::exp(-std::log1p(p1 * x / p2) / p1);
    case Family::LogGamma:
        return x <= 1.0 ? 1.0 : boost::math::gamma_q(p1, p2 * std::log(x));
    }
    return 1.0;
}

double base_log_pdf_impl(Family f, double p1, double p2, double x) {
    constexpr double half_log_2pi = 0.91893853320467274178;
    switch (f) {
    case Family::LogNormal: {
        if (x <= 0.0) return -kInf;
        const double lx = std::log(x);
        const double z = (lx - p1) / p2;
        return -lx - std::log(p2) - half_log_2pi - 0.5 * z * z;
    }
    case Family::Normal: {
        const double z = (x - p1) / p2;
        return -std::log(p2) - half_log_2pi - 0.5 * z * z;
    }
    case Family::GPD:
        if (x < 0.0) return -kInf;
        if (p1 == 0.0) return -std::log(p2) - x / p2;
        return -std::log(p2) - (1.0 / p1 + 1.0) * std::log1p(p1 * x / p2);
    case Family::LogGamma: {
        if (x <= 1.0) return -kInf;
        const double lx = std::log(x);
        return p1 * std::log(p2) + (p1 - 1.0) * std::log(lx) - std::lgamma(p1) - (p2 + 1.0) * lx;
    }
    }
    return -kInf;
}

// Bracketed inversion of the LogGamma survival in the log-loss variable y = log x.
double loggamma_invert_bracketed(double a, double b, double q) {
    auto g = [&](double y) { return boost::math::gamma_q(a, b * y) - q; };
    double lo = 0.0;
    double hi = std::max(1.0, a / b);
    int expansions = 0;
    while (g(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++expansions > 200) {
            std::ostringstream os;
            os << "LogGamma quantile: could not bracket q=" << q << " for a=" << a << ", b=" << b
               << " (last bracket [" << lo << ", " << hi << "])";
            throw NumericError(os.str());
        }
    }
    std::uintmax_t iters = 200;
    auto tol = [](double l, double h) { return std::abs(h - l) <= 1e-13 * std::max(1.0, std::abs(h)); };
    const auto [l, h] = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
    if (iters >= 200) {
        std::ostringstream os;
        os << "LogGamma quantile: no convergence for q=" << q << " in [" << l << ", " << h << "]";
        throw NumericError(os.str());
    }
    return 0.5 * (l + h);
}

// Base upper quantile: x such that base survival equals q.
double base_quantile_upper(Family f, double p1, double p2, double q) {
    switch (f) {
    case Family::LogNormal:
        return std::exp(p1 + p2 * norm_ppf_upper(q));
    case Family::Normal:
        return p1 + p2 * norm_ppf_upper(q);
    case Family::GPD:
        if (p1 == 0.0) return -p2 * std::log(q);
        return p2 * std::expm1(-p1 * std::log(q)) / p1;
    case Family::LogGamma: {
        double y;
        try {
            y = boost::math::gamma_q_inv(p1, q) / p2;
        } catch (const std::exception&) {
            y = loggamma_invert_bracketed(p1, p2, q);
        }
        if (!std::isfinite(y)) y = loggamma_invert_bracketed(p1, p2, q);
        return std::exp(y);
    }
    }
    return 0.0;
}

// Base lower quantile: x such that base cdf equals p.
double base_quantile_lower(Family f, double p1, double p2, double p) {
    switch (f) {
    case Family::LogNormal:
        return std::exp(p1 + p2 * norm_ppf(p));
    case Family::Normal:
        return p1 + p2 * norm_ppf(p);
    case Family::GPD:
        if (p1 == 0.0) return -p2 * std::log1p(-p);
        return p2 * std::expm1(-p1 * std::log1p(-p)) / p1;
    case Family::LogGamma: {
        double y;
        try {
            y = boost::math::gamma_p_inv(p1, p) / p2;
        } catch (const std::exception&) {
            y = loggamma_invert_bracketed(p1, p2, 1.0 - p);
        }
        if (!std::isfinite(y)) y = loggamma_invert_bracketed(p1, p2, 1.0 - p);
        return std::exp(y);
    }
    }
    return 0.0;
}

void require_prob(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream os;
        os << what << ": probability must lie in (0,1), got " << p;
        throw DomainError(os.str());
    }
}

} // namespace

std::string_view family_name(Family f) {
    switch (f) {
    case Family::LogNormal: return "lognormal";
    case Family::LogGamma: return "loggamma";
    case Family::GPD: return "gpd";
    case Family::Normal: return "normal";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    const std::string n = lower(name);
    if (n == "lognormal" || n == "logn") return Family::LogNormal;
    if (n == "loggamma" || n == "logg") return Family::LogGamma;
    if (n == "gpd") return Family::GPD;
    if (n == "normal") return Family::Normal;
    throw ConfigError("unknown severity family '" + std::string(name) + "'");
}

bool params_in_domain(Family f, double p1, double p2) noexcept {
    if (!std::isfinite(p1) || !std::isfinite(p2) || !(p2 > 0.0)) return false;
    switch (f) {
    case Family::LogNormal:
    case Family::Normal:
        return true;
    case Family::GPD:
        return p1 >= 0.0;
    case Family::LogGamma:
        return p1 > 0.0;
    }
    return false;
}

SeverityModel::SeverityModel(Family family, double p1, double p2, std::optional<double> threshold)
    : family_(family), p1_(p1), p2_(p2), threshold_(threshold) {
    if (!params_in_domain(family, p1, p2)) {
        std::ostringstream os;
        os << "invalid " << family_name(family) << " parameters (" << p1 << ", " << p2 << ")";
        throw DomainError(os.str());
    }
    if (threshold_) {
        const double h = *threshold_;
        if (family == Family::Normal) throw DomainError("the Normal family does not support truncation");
        if (!std::isfinite(h) || h < 0.0) throw DomainError("truncation threshold must be finite and >= 0");
        if (family == Family::LogGamma && h < 1.0)
            throw DomainError("LogGamma support starts at 1: threshold must be >= 1");
        if (!(base_sf_impl(family, p1, p2, h) > 0.0))
            throw DomainError("threshold leaves no probability mass above it");
    }
}

std::string SeverityModel::label() const {
    const std::string t = truncated() ? "T" : "";
    switch (family_) {
    case Family::LogNormal: return t + "LogN";
    case Family::LogGamma: return t + "Logg";
    case Family::GPD: return t + "GPD";
    case Family::Normal: return "Normal";
    }
    return "?";
}

SeverityModel SeverityModel::with_params(double p1, double p2) const { return SeverityModel(family_, p1, p2, threshold_); }

SeverityModel SeverityModel::untruncated() const { return SeverityModel(family_, p1_, p2_); }

double SeverityModel::support_min() const noexcept {
    if (threshold_) return *threshold_;
    switch (family_) {
    case Family::LogNormal:
    case Family::GPD: return 0.0;
    case Family::LogGamma: return 1.0;
    case Family::Normal: return -kInf;
    }
    return 0.0;
}

FrequencyModel::FrequencyModel(double lambda_, int years_) : lambda(lambda_), years(years_) {
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw DomainError("frequency lambda must be finite and >= 0");
    if (years_ < 1) throw DomainError("observation horizon must be at least one year");
}

double base_cdf(const SeverityModel& m, double x) { return base_cdf_impl(m.family(), m.p1(), m.p2(), x); }
double base_survival(const SeverityModel& m, double x) { return base_sf_impl(m.family(), m.p1(), m.p2(), x); }

double log_pdf(const SeverityModel& m, double x) {
    if (m.truncated()) {
        const double h = *m.threshold();
        if (x <= h) return -kInf;
        return base_log_pdf_impl(m.family(), m.p1(), m.p2(), x) - std::log(base_survival(m, h));
    }
    return base_log_pdf_impl(m.family(), m.p1(), m.p2(), x);
}

double pdf(const SeverityModel& m, double x) { return std::exp(log_pdf(m, x)); }

double cdf(const SeverityModel& m, double x) {
    if (!m.truncated()) return base_cdf(m, x);
    const double h = *m.threshold();
    if (x <= h) return 0.0;
    return 1.0 - base_survival(m, x) / base_survival(m, h);
}

double survival(const SeverityModel& m, double x) {
    if (!m.truncated()) return base_survival(m, x);
    const double h = *m.threshold();
    if (x <= h) return 1.0;
    return base_survival(m, x) / base_survival(m, h);
}

double quantile_upper(const SeverityModel& m, double q) {
    require_prob(q, "quantile_upper");
    const double scale = m.truncated() ? base_survival(m, *m.threshold()) : 1.0;
    return base_quantile_upper(m.family(), m.p1(), m.p2(), q * scale);
}

double quantile(const SeverityModel& m, double p) {
    require_prob(p, "quantile");
    const Family f = m.family();
    if (!m.truncated()) {
        return p < 0.5 ? base_quantile_lower(f, m.p1(), m.p2(), p) : base_quantile_upper(f, m.p1(), m.p2(), 1.0 - p);
    }
    const double h = *m.threshold();
    const double fh = base_cdf(m, h);
    const double sh = base_survival(m, h);
    const double target = fh + p * sh;
    const double x = target < 0.5 ? base_quantile_lower(f, m.p1(), m.p2(), target)
                                  : base_quantile_upper(f, m.p1(), m.p2(), (1.0 - p) * sh);
    return std::max(x, h);
}

double tgpd_mean_survival_form(double xi, double theta, double h) {
    if (xi >= 1.0) return kInf;
    const double sh = base_sf_impl(Family::GPD, xi, theta, h);
    return theta / xi * (std::pow(sh, -xi) / (1.0 - xi) - 1.0);
}

double tgpd_mean_shifted_form(double xi, double theta, double h) {
    if (xi >= 1.0) return kInf;
    return (h + theta) / (1.0 - xi);
}

double tloggamma_mean_gamma_cdf_form(double a, double b, double h) {
    if (b <= 1.0) return kInf;
    const double lh = std::log(h);
    const double log_scale = a * std::log(b / (b - 1.0));
    const double upper = boost::math::gamma_q(a, lh * (b - 1.0)); // 1 - J(log(H)(b-1); a, 1)
    return std::exp(log_scale) * upper / boost::math::gamma_q(a, b * lh);
}

double tloggamma_mean_ratio_form(double a, double b, double h) {
    if (b <= 1.0) return kInf;
    const double log_scale = a * std::log(b / (b - 1.0));
    return std::exp(log_scale) * base_sf_impl(Family::LogGamma, a, b - 1.0, h) / base_sf_impl(Family::LogGamma, a, b, h);
}

double mean(const SeverityModel& m) {
    const double p1 = m.p1();
    const double p2 = m.p2();
    switch (m.family()) {
    case Family::Normal:
        return p1;
    case Family::LogNormal: {
        const double base = std::exp(p1 + 0.5 * p2 * p2);
        if (!m.truncated()) return base;
        const double lh = std::log(*m.threshold());
        return base * norm_cdf((p1 + p2 * p2 - lh) / p2) / base_survival(m, *m.threshold());
    }
    case Family::GPD:
        if (p1 >= 1.0) return kInf;
        return m.truncated() ? tgpd_mean_shifted_form(p1, p2, *m.threshold()) : p2 / (1.0 - p1);
    case Family::LogGamma:
        if (p2 <= 1.0) return kInf;
        if (!m.truncated()) return std::exp(p1 * std::log(p2 / (p2 - 1.0)));
        return tloggamma_mean_gamma_cdf_form(p1, p2, *m.threshold());
    }
    return kInf;
}

double sample_one(const SeverityModel& m, RandomStream& rng) {
    const double u = rng.uniform();
    if (m.truncated()) {
        const double x = base_quantile_upper(m.family(), m.p1(), m.p2(), u * base_survival(m, *m.threshold()));
        return std::max(x, std::nextafter(*m.threshold(), kInf));
    }
    return u < 0.5 ? base_quantile_lower(m.family(), m.p1(), m.p2(), u)
                   : base_quantile_upper(m.family(), m.p1(), m.p2(), 1.0 - u);
}

std::vector<double> sample(const SeverityModel& m, RandomStream& rng, std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    if (m.truncated()) {
        // Hoist the threshold survival out of the loop.
        const double sh = base_survival(m, *m.threshold());
        const double floor = std::nextafter(*m.threshold(), kInf);
        for (std::size_t i = 0; i < count; ++i) {
            const double x = base_quantile_upper(m.family(), m.p1(), m.p2(), rng.uniform() * sh);
            out.push_back(std::max(x, floor));
        }
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample_one(m, rng));
    return out;
}

std::int64_t sample_poisson(double mean_count, RandomStream& rng) {
    if (!(mean_count > 0.0)) return 0;
    std::poisson_distribution<std::int64_t> dist(mean_count);
    return dist(rng);
}

std::int64_t sample_poisson(const FrequencyModel& f, RandomStream& rng) { return sample_poisson(f.expected_count(), rng); }

} // namespace oprisk
