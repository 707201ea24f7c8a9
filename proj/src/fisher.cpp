#include <oprisk/error.hpp>
#include <oprisk/fisher.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

namespace oprisk {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw DomainError(msg);
}

FisherMatrix checked(FisherMatrix fm, const char* who) {
    if (!fm.info.positive_definite() || !fm.inverse.positive_definite()) {
        std::ostringstream os;
        os << who << ": Fisher information is not positive definite (info = [[" << fm.info.xx << ", " << fm.info.xy
           << "], [" << fm.info.xy << ", " << fm.info.yy << "]])";
        throw NumericError(os.str());
    }
    return fm;
}

} // namespace

SymMatrix2 SymMatrix2::inverse() const {
    const double d = det();
    if (!(std::abs(d) > 0.0) || !std::isfinite(d)) throw NumericError("singular 2x2 matrix");
    return {yy / d, -xy / d, xx / d};
}

double SymMatrix2::correlation() const noexcept { return xy / std::sqrt(xx * yy); }

FisherMatrix FisherMatrix::from_info(const SymMatrix2& info, FisherMethod method) {
    return FisherMatrix{info, info.inverse(), 1, method};
}

FisherMatrix FisherMatrix::from_inverse(const SymMatrix2& inverse, FisherMethod method) {
    return FisherMatrix{inverse.inverse(), inverse, 1, method};
}

FisherMatrix fisher_lognormal(double sigma) {
    require(sigma > 0.0, "fisher_lognormal: sigma must be > 0");
    const double s2 = sigma * sigma;
    return FisherMatrix{{1.0 / s2, 0.0, 2.0 / s2}, {s2, 0.0, s2 / 2.0}, 1, FisherMethod::ClosedForm};
}

FisherMatrix fisher_tlognormal(double mu, double sigma, double threshold) {
    require(sigma > 0.0, "fisher_tlognormal: sigma must be > 0");
    require(threshold >= 0.0, "fisher_tlognormal: threshold must be >= 0");
    if (threshold == 0.0) return fisher_lognormal(sigma);

    const double u = (std::log(threshold) - mu) / sigma;
    const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    const double tail = 0.5 * boost::math::erfc(u / std::numbers::sqrt2); // 1 - Phi(u)
    if (!(tail > 0.0)) throw NumericError("fisher_tlognormal: threshold is beyond the representable tail");
    const double J = phi / tail;
    const double w = J - u;
    const double inv = sigma * sigma / (2.0 + J * w * (u * w - 3.0));
    const SymMatrix2 cov{inv * (2.0 + J * u * (1.0 - u * w)), inv * J * (u * w - 1.0), inv * (1.0 - J * w)};
    if (!cov.positive_definite()) throw NumericError("fisher_tlognormal: covariance is not positive definite");
    return checked(FisherMatrix::from_inverse(cov, FisherMethod::ClosedForm), "fisher_tlognormal");
}

FisherMatrix fisher_gpd(double xi, double theta) {
    require(xi >= 0.0, "fisher_gpd: xi must be >= 0");
    require(theta > 0.0, "fisher_gpd: theta must be > 0");
    const double k = 1.0 + xi;
    const SymMatrix2 cov{k * k, -k * theta, k * 2.0 * theta * theta};
    return checked(FisherMatrix::from_inverse(cov, FisherMethod::ClosedForm), "fisher_gpd");
}

FisherMatrix fisher_tgpd(double xi, double theta, double threshold) {
    require(xi >= 0.0, "fisher_tgpd: xi must be >= 0");
    require(theta > 0.0, "fisher_tgpd: theta must be > 0");
    require(threshold >= 0.0, "fisher_tgpd: threshold must be >= 0");
    const double k = 1.0 + xi;
    const double r = threshold / theta;
    const double c = 1.0 + 2.0 * xi;
    const SymMatrix2 cov{k * k, -k * theta * (1.0 + c * r), k * theta * theta * (2.0 + 2.0 * c * r + k * c * r * r)};
    return checked(FisherMatrix::from_inverse(cov, FisherMethod::ClosedForm), "fisher_tgpd");
}

FisherMatrix fisher_loggamma(double a, double b) {
    require(a > 0.0, "fisher_loggamma: a must be > 0");
    require(b > 0.0, "fisher_loggamma: b must be > 0");
    const double tg = boost::math::trigamma(a);
    const double b2 = b * b;
    const double scale = 1.0 / ((a / b2) * tg - 1.0 / b2);
    const SymMatrix2 cov{scale * a / b2, scale / b, scale * tg};
    const SymMatrix2 info{tg, -1.0 / b, a / b2};
    return checked(FisherMatrix{info, cov, 1, FisherMethod::ClosedForm}, "fisher_loggamma");
}

FisherMatrix fisher_tloggamma_numeric(double a, double b, double threshold) {
    require(a > 0.0, "fisher_tloggamma_numeric: a must be > 0");
    require(b > 0.0, "fisher_tloggamma_numeric: b must be > 0");
    require(threshold >= 1.0, "fisher_tloggamma_numeric: threshold must be >= 1");
    if (threshold == 1.0) {
        auto fm = fisher_loggamma(a, b);
        fm.method = FisherMethod::Quadrature;
        return fm;
    }

    // y = log(x) is Gamma(shape a, rate b); the truncated region is y in [0, log H].
    const double upper = std::log(threshold);
    const double log_norm = a * std::log(b) - std::lgamma(a);
    const double psi = boost::math::digamma(a);
    const double lb = std::log(b);
    auto density = [&](double y) { return y > 0.0 ? std::exp(log_norm + (a - 1.0) * std::log(y) - b * y) : 0.0; };

    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto integrate = [&](auto&& g) {
        double err = 0.0;
        const double v = Quad::integrate([&](double y) { return y > 0.0 ? g(y) * density(y) : 0.0; }, 0.0, upper, 20,
                                         1e-12, &err);
        if (!std::isfinite(v) || err > 1e-10 * std::max(1.0, std::abs(v)) + 1e-12) {
            std::ostringstream os;
            os << "fisher_tloggamma_numeric: quadrature did not converge (a=" << a << ", b=" << b
               << ", H=" << threshold << ", err=" << err << ")";
            throw NumericError(os.str());
        }
        return v;
    };
    auto score_a = [&](double y) { return lb + std::log(y) - psi; };
    auto score_b = [&](double y) { return a / b - y; };

    const double m_a = integrate(score_a);
    const double m_b = integrate(score_b);
    const double p_aa = integrate([&](double y) { return score_a(y) * score_a(y); });
    const double p_ab = integrate([&](double y) { return score_a(y) * score_b(y); });
    const double p_bb = integrate([&](double y) { return score_b(y) * score_b(y); });
    const double s = boost::math::gamma_q(a, b * upper);

    const double tg = boost::math::trigamma(a);
    const SymMatrix2 info{(tg - p_aa) / s - m_a * m_a / (s * s), (-1.0 / b - p_ab) / s - m_a * m_b / (s * s),
                          (a / (b * b) - p_bb) / s - m_b * m_b / (s * s)};
    return checked(FisherMatrix::from_info(info, FisherMethod::Quadrature), "fisher_tloggamma_numeric");
}

FisherMatrix fisher_tloggamma_approx(double a, double b, double threshold, double eta) {
    require(a > 0.0, "fisher_tloggamma_approx: a must be > 0");
    require(b > 0.0, "fisher_tloggamma_approx: b must be > 0");
    require(threshold >= 1.0, "fisher_tloggamma_approx: threshold must be >= 1");
    require(eta > 0.0 && eta < a, "fisher_tloggamma_approx: eta must lie in (0, a)");
    if (threshold == 1.0) {
        auto fm = fisher_loggamma(a, b);
        fm.method = FisherMethod::Approximation;
        return fm;
    }

    // Every term below is divided through by Gamma(a) (or its square) so that powers such as
    // (b log H)^(2a) never appear on their own.
    const double x = b * std::log(threshold); // -z
    const double lx = std::log(x);
    const double lga = std::lgamma(a);
    const double psi = boost::math::digamma(a);
    const double tg = boost::math::trigamma(a);
    const double q = boost::math::gamma_q(a, x); // UIG / Gamma(a)
    const double e = std::exp(-x + a * lx - lga); // t^-b (b log t)^a / Gamma(a)
    const double a_dn = a - eta;
    const double a_up = a + eta;

    // Gamma(s+1) / Gamma(a) * x^(a-s) * P(s, x) = e * M(1, s+1, x): the confluent GHG(s, s+1; z)
    // term times x^a / Gamma(a). The three Kummer series are summed together; all terms are positive.
    double r_dn = 0.0, r_mid = 0.0, r_up = 0.0;
    {
        double t_dn = 1.0, t_mid = 1.0, t_up = 1.0;
        double s_dn = 1.0, s_mid = 1.0, s_up = 1.0;
        bool done = false;
        for (int k = 1; k < 100000 && !done; ++k) {
            t_dn *= x / (a_dn + k);
            t_mid *= x / (a + k);
            t_up *= x / (a_up + k);
            s_dn += t_dn;
            s_mid += t_mid;
            s_up += t_up;
            done = k > x && t_dn < 1e-17 * s_dn;
        }
        if (!done) throw NumericError("fisher_tloggamma_approx: hypergeometric series did not converge");
        r_dn = e * s_dn;
        r_mid = e * s_mid;
        r_up = e * s_up;
    }

    const double g2 = r_dn * a_up / (a_up - a_dn) + r_up * a_dn / (a_dn - a_up);
    const double g3 = r_dn * (a_up / (a_up - a_dn)) * (a / (a - a_dn)) + r_mid * (a_dn / (a_dn - a)) * (a_up / (a_up - a)) +
                      r_up * (a_dn / (a_dn - a_up)) * (a / (a - a_up));

    const double d = lx - psi;
    const double a2 = a * a;
    const double a4 = a2 * a2;
    const double q2 = q * q;
    const double b2 = b * b;

    const double A = (-g2 * g2 + 2.0 * a * (-q * g3 + a * g2 * d) + a4 * (-(1.0 - q) * d * d + q * tg)) / (a4 * q2);
    const double B = (e * g2 - a2 * (q2 + e * d)) / (a2 * b * q2);
    const double D = a / b2 + e * (1.0 - a + x) / (b2 * q) - e * e / (b2 * q2);

    const SymMatrix2 info{A, B, D};
    if (!std::isfinite(A) || !std::isfinite(B) || !std::isfinite(D) || !info.positive_definite()) {
        std::ostringstream os;
        os << "fisher_tloggamma_approx: cancellation left a non-positive-definite matrix for a=" << a << ", b=" << b
           << ", H=" << threshold << "; use fisher_tloggamma_numeric";
        throw NumericError(os.str());
    }
    return checked(FisherMatrix::from_info(info, FisherMethod::Approximation), "fisher_tloggamma_approx");
}

FisherMatrix fisher_information(const SeverityModel& m) {
    switch (m.family()) {
    case Family::LogNormal:
        return m.truncated() ? fisher_tlognormal(m.p1(), m.p2(), *m.threshold()) : fisher_lognormal(m.p2());
    case Family::Normal:
        return fisher_lognormal(m.p2());
    case Family::GPD:
        return m.truncated() ? fisher_tgpd(m.p1(), m.p2(), *m.threshold()) : fisher_gpd(m.p1(), m.p2());
    case Family::LogGamma:
        if (!m.truncated()) return fisher_loggamma(m.p1(), m.p2());
        try {
            return fisher_tloggamma_approx(m.p1(), m.p2(), *m.threshold());
        } catch (const NumericError&) {
            return fisher_tloggamma_numeric(m.p1(), m.p2(), *m.threshold());
        }
    }
    throw ConfigError("fisher_information: unsupported family");
}

ParamCovariance param_covariance(const FisherMatrix& fm, std::size_t n) {
    if (n < 2) throw DataError("param_covariance: need at least 2 observations");
    ParamCovariance pc;
    pc.cov = fm.inverse.scaled(1.0 / static_cast<double>(n));
    pc.sd1 = std::sqrt(pc.cov.xx);
    pc.sd2 = std::sqrt(pc.cov.yy);
    pc.rho = pc.cov.correlation();
    return pc;
}

} // namespace oprisk
