#pragma once

#include <oprisk/capital.hpp>
#include <oprisk/fisher.hpp>
#include <oprisk/mle.hpp>

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oprisk {

inline constexpr std::array<double, 7> kSeverityPercentiles{0.01, 0.10, 0.25, 0.50, 0.75, 0.90, 0.99};
inline constexpr std::array<double, 2> kFrequencyPercentiles{0.25, 0.75};
inline constexpr std::array<std::array<int, 2>, 4> kDirections{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
inline constexpr std::size_t kGridSize = kSeverityPercentiles.size() * kDirections.size() * kFrequencyPercentiles.size();

// Quantile of the chi-square distribution with two degrees of freedom: -2 log(1 - p).
double chi2_2_quantile(double p);

struct EllipseOffset {
    int z1 = 1;
    int z2 = 1;
    double q = 0.0;   // standard deviations moved along each axis
    double d1 = 0.0;  // offset of the first parameter
    double d2 = 0.0;  // offset of the second parameter
};

/// The four sign-pattern points on the p-level ellipse of a bivariate normal with covariance cov:
/// q = sqrt(chi2_2(p) * (1 + z1 z2 rho) / 2), offsets (z1 q sd1, z2 q sd2).
/// Throws DomainError when |rho| = 1 or cov is not positive definite.
std::array<EllipseOffset, 4> ellipse_offsets(const SymMatrix2& cov, double p);

/// Poisson(lambda * years) quantile at p_freq (smallest k with cdf >= p), as an annual rate.
double perturb_lambda(double lambda, int years, double p_freq);

struct GridPoint {
    double p_sev = 0.0;
    int z1 = 1;
    int z2 = 1;
    double p_freq = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
    double lambda = 0.0;
    double weight = 0.0;  // (1 - p_sev) * 2 * (1 - p_freq)
    bool valid = false;   // parameters inside the family's domain
};

struct IsoGrid {
    std::vector<GridPoint> points;  // ordered by severity percentile, direction, frequency percentile
    SymMatrix2 cov;
};

/// 7 x 4 x 2 perturbation grid around the model's parameters, with covariance fisher.inverse / n.
IsoGrid build_iso_grid(const SeverityModel& model, const FrequencyModel& freq, const FisherMatrix& fisher,
                       std::size_t n);

struct CTableRow {
    std::array<double, 5> c{};
    int root = 1;
};

struct CLookup {
    double c = 0.0;
    bool interpolated = false;
    bool clamped = false;
};

/// c(severity, n) scaling exponents at n = 150, 250, 500, 750, 1000, keyed by model label
/// (LogN, TLogN, Logg, TLogg, GPD, TGPD).
class CTable {
public:
    static constexpr std::array<double, 5> kKnots{150.0, 250.0, 500.0, 750.0, 1000.0};

    static CTable standard();

    void set_row(const std::string& label, CTableRow row);
    const CTableRow& row(const std::string& label) const;  // ConfigError when absent

    /// Exact at the knots; root-scale interpolation between them; clamped (with a warning) outside.
    CLookup lookup(const std::string& label, double n) const;

private:
    std::map<std::string, CTableRow> rows_;
};

CLookup c_lookup(const SeverityModel& model, double n, const CTable& table = CTable::standard());

struct RceOptions {
    double capital_cap = 1e15;      // larger capitals count as incalculable
    IslaSettings isla;
    std::optional<double> c;        // overrides the table lookup when set
    int threads = 1;                // workers over the outer grid (0 = default_threads())
};

struct RceResult {
    double capital = 0.0;
    double median_of_medians = 0.0;
    double weighted_mean = 0.0;
    double ratio = 0.0;             // median_of_medians / weighted_mean
    double c = 0.0;
    bool c_interpolated = false;
    bool c_clamped = false;
    int discarded_ellipses = 0;     // outer percentile levels dropped by the discard rule
    double step1_capital = 0.0;     // ISLA at the fitted parameters
    std::size_t n_eff = 0;
    std::vector<double> medians;    // per outer point, NaN where discarded
};

/// Median-of-medians capital scaled by (median / weighted mean)^c.
/// Throws EstimationError for a non-converged fit or when every ellipse is discarded,
/// ConfigError when no c is available for the family.
RceResult rce_estimate(const FitResult& fit, const CapitalSpec& spec, const CTable& table = CTable::standard(),
                       const RceOptions& options = {});

// Same statistic from an explicit parameter point and observation count.
RceResult rce_estimate(const SeverityModel& model, std::size_t n, const CapitalSpec& spec,
                       const CTable& table = CTable::standard(), const RceOptions& options = {});

/// Ellipse-level discard: if any value at a percentile level is incalculable, that level and
/// every larger one are dropped. `level_of[i]` is the level index of values[i]. Returns the
/// number of levels dropped (counting from the first failing level to the largest).
int discard_ellipses(std::vector<double>& values, const std::vector<int>& level_of, int levels, double cap);

} // namespace oprisk
