#include <oprisk/capital.hpp>
#include <oprisk/error.hpp>
#include <oprisk/parallel.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oprisk {

namespace {

constexpr std::size_t kChunkYears = 1 << 16;

// Single-loss forms need 1 - (1 - alpha) / lambda inside (0, 1); simulation does not.
double severity_p(const CapitalSpec& spec) {
    const double p = spec.severity_percentile();
    if (!(p > 0.0)) throw DomainError("lambda is too small: severity percentile is not positive");
    return p;
}

// Tail term coefficient c_xi / (1 - 1/xi) for 1 < xi < 2.
double tail_coefficient(double xi) {
    const double g1 = boost::math::tgamma(1.0 - 1.0 / xi);
    const double g2 = boost::math::tgamma(1.0 - 2.0 / xi);
    const double c = (1.0 - xi) * g1 * g1 / (2.0 * g2);
    return c / (1.0 - 1.0 / xi);
}

// Same severity with its tail index moved to `t` (the other parameter held fixed).
SeverityModel with_tail_index(const SeverityModel& m, double t) {
    switch (m.family()) {
    case Family::GPD:
        return m.with_params(t, m.p2());
    case Family::LogGamma:
        return m.with_params(m.p1(), 1.0 / t);
    default:
        throw DomainError("tail index is fixed at 0 for " + std::string(family_name(m.family())));
    }
}

void require_finite_mean(const SeverityModel& m, const char* who) {
    if (tail_index(m) >= 1.0) {
        std::ostringstream os;
        os << who << ": the severity mean is infinite (tail index " << tail_index(m)
           << " >= 1); use sla_degen or isla";
        throw DomainError(os.str());
    }
}

} // namespace

CapitalSpec::CapitalSpec(double alpha_, FrequencyModel freq_) : alpha(alpha_), freq(freq_) {
    if (!(alpha_ > 0.0 && alpha_ < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(freq_.lambda > 0.0)) throw DomainError("lambda must be > 0 for a capital estimate");
}

double tail_index(const SeverityModel& m) {
    switch (m.family()) {
    case Family::GPD:
        return m.p1();
    case Family::LogGamma:
        return 1.0 / m.p2();
    case Family::LogNormal:
    case Family::Normal:
        return 0.0;
    }
    return 0.0;
}

std::string_view branch_name(CapitalBranch b) {
    switch (b) {
    case CapitalBranch::SingleLoss: return "bk";
    case CapitalBranch::FiniteMean: return "degen_finite_mean";
    case CapitalBranch::InfiniteMean: return "degen_infinite_mean";
    case CapitalBranch::Interpolated: return "isla_interpolated";
    }
    return "unknown";
}

CapitalBreakdown sla_bk_detail(const SeverityModel& m, const CapitalSpec& spec) {
    require_finite_mean(m, "sla_bk");
    CapitalBreakdown out;
    out.tail_index = tail_index(m);
    out.branch = CapitalBranch::SingleLoss;
    out.quantile_term = quantile(m, severity_p(spec));
    out.correction = (spec.freq.lambda - 1.0) * mean(m);
    out.capital = out.quantile_term + out.correction;
    return out;
}

double sla_bk(const SeverityModel& m, const CapitalSpec& spec) { return sla_bk_detail(m, spec).capital; }

CapitalBreakdown sla_degen_detail(const SeverityModel& m, const CapitalSpec& spec) {
    const double t = tail_index(m);
    if (t >= 2.0) {
        std::ostringstream os;
        os << "sla_degen: tail index " << t << " >= 2 is outside the supported range";
        throw DomainError(os.str());
    }
    if (t == 1.0) throw DomainError("sla_degen: tail index exactly 1 is handled by isla");

    CapitalBreakdown out;
    out.tail_index = t;
    out.quantile_term = quantile(m, severity_p(spec));
    if (t < 1.0) {
        out.branch = CapitalBranch::FiniteMean;
        out.correction = spec.freq.lambda * mean(m);
    } else {
        out.branch = CapitalBranch::InfiniteMean;
        out.correction = (1.0 - spec.alpha) * out.quantile_term * tail_coefficient(t);
    }
    out.capital = out.quantile_term + out.correction;
    return out;
}

double sla_degen(const SeverityModel& m, const CapitalSpec& spec) { return sla_degen_detail(m, spec).capital; }

CapitalBreakdown isla_detail(const SeverityModel& m, const CapitalSpec& spec, const IslaSettings& s) {
    const double t = tail_index(m);
    if (t <= s.low || t >= s.high) return sla_degen_detail(m, spec);

    const double p = severity_p(spec);
    const double lambda = spec.freq.lambda;
    const double low_term = lambda * mean(with_tail_index(m, s.low));
    const double high_term = (1.0 - spec.alpha) * quantile(with_tail_index(m, s.high), p) * tail_coefficient(s.high);

    const double full_range = (s.high - s.low) * s.precision;
    const double position = (t - s.low) * s.precision;
    const double r = 1.0 / s.root;
    const double lo_root = std::pow(low_term, r);
    const double step = (std::pow(high_term, r) - lo_root) / (full_range - 1.0);

    CapitalBreakdown out;
    out.tail_index = t;
    out.branch = CapitalBranch::Interpolated;
    out.quantile_term = quantile(m, p);
    out.correction = std::pow(lo_root + position * step, s.root);
    out.capital = out.quantile_term + out.correction;
    return out;
}

double isla(const SeverityModel& m, const CapitalSpec& spec, const IslaSettings& settings) {
    return isla_detail(m, spec, settings).capital;
}

double quantile_type7(std::vector<double>& v, double p) {
    if (v.empty()) throw DataError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile probability must lie in [0, 1]");
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double x_lo = v[lo];
    if (lo + 1 >= v.size()) return x_lo;
    const double x_hi = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
}

double mc_capital_oracle(const SeverityModel& m, const CapitalSpec& spec, std::size_t n_years_sims,
                         const RandomStream& rng, int threads) {
    if (n_years_sims < 2) throw DomainError("mc_capital_oracle: need at least 2 simulated years");
    std::vector<double> totals(n_years_sims);
    const std::size_t chunks = (n_years_sims + kChunkYears - 1) / kChunkYears;
    const double lambda = spec.freq.lambda;
    parallel_for(
        chunks,
        [&](std::size_t c) {
            RandomStream local = rng.substream(c);
            const std::size_t begin = c * kChunkYears;
            const std::size_t end = std::min(begin + kChunkYears, n_years_sims);
            for (std::size_t y = begin; y < end; ++y) {
                const std::int64_t count = sample_poisson(lambda, local);
                double total = 0.0;
                for (std::int64_t k = 0; k < count; ++k) total += sample_one(m, local);
                totals[y] = total;
            }
        },
        threads);
    return quantile_type7(totals, spec.alpha);
}

} // namespace oprisk
