#include <oprisk/error.hpp>
#include <oprisk/parallel.hpp>
#include <oprisk/rce.hpp>
#include <oprisk/warnings.hpp>

#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace oprisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kLevels = static_cast<int>(kSeverityPercentiles.size());

bool calculable(double v, double cap) { return std::isfinite(v) && v <= cap; }

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

std::vector<int> grid_levels() {
    std::vector<int> level;
    level.reserve(kGridSize);
    for (int k = 0; k < kLevels; ++k)
        for (std::size_t i = 0; i < kDirections.size() * kFrequencyPercentiles.size(); ++i) level.push_back(k);
    return level;
}

// ISLA over one grid; invalid points and failures are incalculable (NaN).
std::vector<double> grid_capitals(const IsoGrid& grid, const SeverityModel& model, const CapitalSpec& spec,
                                  const IslaSettings& settings) {
    std::vector<double> out(grid.points.size(), kNaN);
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        const GridPoint& g = grid.points[i];
        if (!g.valid) continue;
        try {
            const SeverityModel m = model.with_params(g.p1, g.p2);
            const CapitalSpec s(spec.alpha, FrequencyModel(g.lambda, spec.freq.years));
            out[i] = isla(m, s, settings);
        } catch (const Error&) {
        } catch (const std::exception&) {
        }
    }
    return out;
}

} // namespace

double chi2_2_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("chi-square percentile must lie in (0, 1)");
    return -2.0 * std::log1p(-p);
}

std::array<EllipseOffset, 4> ellipse_offsets(const SymMatrix2& cov, double p) {
    if (!cov.positive_definite()) throw DomainError("ellipse_offsets: covariance is not positive definite");
    const double rho = cov.correlation();
    if (!(std::abs(rho) < 1.0)) throw DomainError("ellipse_offsets: degenerate covariance (|rho| = 1)");
    const double chi = chi2_2_quantile(p);
    const double sd1 = std::sqrt(cov.xx);
    const double sd2 = std::sqrt(cov.yy);
    std::array<EllipseOffset, 4> out;
    for (std::size_t k = 0; k < kDirections.size(); ++k) {
        const int z1 = kDirections[k][0];
        const int z2 = kDirections[k][1];
        const double q = std::sqrt(chi * (1.0 + z1 * z2 * rho) / 2.0);
        out[k] = EllipseOffset{z1, z2, q, z1 * q * sd1, z2 * q * sd2};
    }
    return out;
}

double perturb_lambda(double lambda, int years, double p_freq) {
    if (!(lambda > 0.0)) throw DomainError("perturb_lambda: lambda must be > 0");
    if (years < 1) throw DomainError("perturb_lambda: years must be >= 1");
    if (!(p_freq > 0.0 && p_freq < 1.0)) throw DomainError("perturb_lambda: percentile must lie in (0, 1)");
    using Policy = boost::math::policies::policy<
        boost::math::policies::discrete_quantile<boost::math::policies::integer_round_up>>;
    const boost::math::poisson_distribution<double, Policy> dist(lambda * years);
    return boost::math::quantile(dist, p_freq) / years;
}

IsoGrid build_iso_grid(const SeverityModel& model, const FrequencyModel& freq, const FisherMatrix& fisher,
                       std::size_t n) {
    IsoGrid grid;
    grid.cov = param_covariance(fisher, n).cov;
    std::array<double, kFrequencyPercentiles.size()> lambdas{};
    for (std::size_t j = 0; j < lambdas.size(); ++j)
        lambdas[j] = perturb_lambda(freq.lambda, freq.years, kFrequencyPercentiles[j]);

    grid.points.reserve(kGridSize);
    for (double p : kSeverityPercentiles) {
        for (const EllipseOffset& o : ellipse_offsets(grid.cov, p)) {
            for (std::size_t j = 0; j < lambdas.size(); ++j) {
                GridPoint g;
                g.p_sev = p;
                g.z1 = o.z1;
                g.z2 = o.z2;
                g.p_freq = kFrequencyPercentiles[j];
                g.p1 = model.p1() + o.d1;
                g.p2 = model.p2() + o.d2;
                g.lambda = lambdas[j];
                g.weight = (1.0 - p) * 2.0 * (1.0 - g.p_freq);
                g.valid = params_in_domain(model.family(), g.p1, g.p2) && g.lambda > 0.0;
                grid.points.push_back(g);
            }
        }
    }
    return grid;
}

CTable CTable::standard() {
    CTable t;
    t.set_row("LogN", {{1.00, 1.55, 1.55, 1.55, 1.75}, 8});
    t.set_row("TLogN", {{1.20, 1.70, 1.80, 1.80, 1.80}, 8});
    t.set_row("Logg", {{1.00, 1.00, 1.00, 1.00, 0.30}, 3});
    t.set_row("TLogg", {{0.30, 0.70, 0.85, 1.00, 1.00}, 3});
    t.set_row("GPD", {{1.60, 1.95, 2.00, 2.00, 2.00}, 10});
    t.set_row("TGPD", {{1.50, 1.85, 2.00, 2.10, 2.10}, 10});
    return t;
}

void CTable::set_row(const std::string& label, CTableRow row) {
    if (row.root < 1) throw ConfigError("c-table root must be >= 1");
    for (double c : row.c)
        if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("c-table values must be finite and >= 0");
    rows_[label] = row;
}

const CTableRow& CTable::row(const std::string& label) const {
    const auto it = rows_.find(label);
    if (it == rows_.end()) throw ConfigError("no c(sev, n) values for severity '" + label + "'");
    return it->second;
}

CLookup CTable::lookup(const std::string& label, double n) const {
    const CTableRow& r = row(label);
    if (!(n > 0.0)) throw DomainError("c lookup: sample size must be positive");
    if (n < kKnots.front() || n > kKnots.back()) {
        std::ostringstream os;
        os << "c(" << label << ", n=" << n << "): n outside [150, 1000], clamped to the nearest table value";
        warn(os.str());
        return {n < kKnots.front() ? r.c.front() : r.c.back(), false, true};
    }
    for (std::size_t k = 0; k < kKnots.size(); ++k)
        if (n == kKnots[k]) return {r.c[k], false, false};

    std::size_t k = 0;
    while (n > kKnots[k + 1]) ++k;
    const double lo = r.c[k];
    const double hi = r.c[k + 1];
    if (lo == hi) return {lo, true, false};
    const double frac = (n - kKnots[k]) / (kKnots[k + 1] - kKnots[k]);
    const double inv = 1.0 / r.root;
    const double c = std::pow(std::pow(lo, inv) + frac * (std::pow(hi, inv) - std::pow(lo, inv)), r.root);
    return {c, true, false};
}

CLookup c_lookup(const SeverityModel& model, double n, const CTable& table) {
    if (model.family() == Family::Normal) throw ConfigError("RCE is not defined for the Normal family");
    return table.lookup(model.label(), n);
}

int discard_ellipses(std::vector<double>& values, const std::vector<int>& level_of, int levels, double cap) {
    int first_bad = levels;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!calculable(values[i], cap)) first_bad = std::min(first_bad, level_of[i]);
    for (std::size_t i = 0; i < values.size(); ++i)
        if (level_of[i] >= first_bad) values[i] = kNaN;
    return levels - first_bad;
}

RceResult rce_estimate(const SeverityModel& model, std::size_t n, const CapitalSpec& spec, const CTable& table,
                       const RceOptions& options) {
    if (model.family() == Family::Normal) throw ConfigError("RCE is not defined for the Normal family");
    CLookup c = options.c ? CLookup{*options.c, false, false} : c_lookup(model, static_cast<double>(n), table);

    const FisherMatrix outer_fisher = fisher_information(model);
    const IsoGrid outer = build_iso_grid(model, spec.freq, outer_fisher, n);
    const std::vector<int> level = grid_levels();

    std::vector<double> medians(outer.points.size(), kNaN);
    parallel_for(
        outer.points.size(),
        [&](std::size_t i) {
            const GridPoint& g = outer.points[i];
            if (!g.valid) return;
            try {
                const SeverityModel m = model.with_params(g.p1, g.p2);
                const FrequencyModel f(g.lambda, spec.freq.years);
                const IsoGrid inner = build_iso_grid(m, f, fisher_information(m), n);
                std::vector<double> caps = grid_capitals(inner, m, spec, options.isla);
                discard_ellipses(caps, level, kLevels, options.capital_cap);
                std::erase_if(caps, [](double v) { return std::isnan(v); });
                if (!caps.empty()) medians[i] = median_of(std::move(caps));
            } catch (const Error&) {
            }
        },
        options.threads);

    RceResult out;
    out.c = c.c;
    out.c_interpolated = c.interpolated;
    out.c_clamped = c.clamped;
    out.n_eff = n;
    out.discarded_ellipses = discard_ellipses(medians, level, kLevels, options.capital_cap);
    if (out.discarded_ellipses == kLevels) throw EstimationError("RCE: every ellipse was discarded as incalculable");

    std::vector<double> kept;
    double wsum = 0.0;
    double wmed = 0.0;
    for (std::size_t i = 0; i < medians.size(); ++i) {
        if (std::isnan(medians[i])) continue;
        kept.push_back(medians[i]);
        wsum += outer.points[i].weight;
        wmed += outer.points[i].weight * medians[i];
    }
    out.median_of_medians = median_of(kept);
    out.weighted_mean = wmed / wsum;
    out.ratio = out.median_of_medians / out.weighted_mean;
    out.capital = out.median_of_medians * std::pow(out.ratio, out.c);
    out.medians = std::move(medians);
    try {
        out.step1_capital = isla(model, spec, options.isla);
    } catch (const Error&) {
        out.step1_capital = kNaN;
    }
    return out;
}

RceResult rce_estimate(const FitResult& fit, const CapitalSpec& spec, const CTable& table, const RceOptions& options) {
    if (!fit.converged) throw EstimationError("RCE requires a converged severity fit");
    return rce_estimate(fit.model, fit.n, spec, table, options);
}

} // namespace oprisk
