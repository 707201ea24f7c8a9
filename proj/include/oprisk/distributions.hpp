#pragma once

#include <oprisk/random.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oprisk {

/// Two-parameter severity families.
///
///   LogNormal  p1 = mu, p2 = sigma
///   LogGamma   p1 = a (shape), p2 = b (inverted shape); support x >= 1
///   GPD        p1 = xi (>= 0), p2 = theta
///   Normal     p1 = mu, p2 = sigma (diagnostic only: no truncation, no RCE)
enum class Family { LogNormal, LogGamma, GPD, Normal };

std::string_view family_name(Family f);
// Accepts "lognormal", "logn", "loggamma", "logg", "gpd", "normal" (case-insensitive).
Family parse_family(std::string_view name);

bool params_in_domain(Family f, double p1, double p2) noexcept;

/// Immutable severity model: family, parameters and optional truncation threshold.
/// Validated on construction.
class SeverityModel {
public:
    SeverityModel(Family family, double p1, double p2, std::optional<double> threshold = std::nullopt);

    Family family() const noexcept { return family_; }
    double p1() const noexcept { return p1_; }
    double p2() const noexcept { return p2_; }
    std::optional<double> threshold() const noexcept { return threshold_; }
    bool truncated() const noexcept { return threshold_.has_value(); }

    // Short label matching the usual table rows: LogN, TLogN, Logg, TLogg, GPD, TGPD, Normal.
    std::string label() const;

    // Same family and threshold, new parameters (validated).
    SeverityModel with_params(double p1, double p2) const;
    SeverityModel untruncated() const;

    // Lower end of the support of the (possibly truncated) model.
    double support_min() const noexcept;

    friend bool operator==(const SeverityModel&, const SeverityModel&) = default;

private:
    Family family_;
    double p1_;
    double p2_;
    std::optional<double> threshold_;
};

/// Poisson frequency: expected annual count and observation horizon in years.
struct FrequencyModel {
    double lambda = 0.0;
    int years = 1;

    FrequencyModel() = default;
    FrequencyModel(double lambda, int years);

    double expected_count() const noexcept { return lambda * years; }
};

// Density, cdf and survival of the model (truncated models are conditional on x > H).
// Out-of-support x gives 0 density, not an error.
double pdf(const SeverityModel& m, double x);
double log_pdf(const SeverityModel& m, double x);
double cdf(const SeverityModel& m, double x);
double survival(const SeverityModel& m, double x);

// Untruncated base distribution, regardless of the model's threshold.
double base_cdf(const SeverityModel& m, double x);
double base_survival(const SeverityModel& m, double x);

/// Quantile at probability p in (0,1). Truncated models return the quantile of the
/// conditional-above-H distribution.
double quantile(const SeverityModel& m, double p);

/// Upper-tail quantile: the x with survival(x) = q. More accurate than quantile(1-q)
/// for tiny q.
double quantile_upper(const SeverityModel& m, double q);

// Severity mean. Returns +infinity when it does not exist (GPD xi >= 1, LogGamma b <= 1).
double mean(const SeverityModel& m);

// Both printed closed forms of the truncated means, exposed for cross-checking.
double tgpd_mean_survival_form(double xi, double theta, double h);
double tgpd_mean_shifted_form(double xi, double theta, double h);
double tloggamma_mean_gamma_cdf_form(double a, double b, double h);
double tloggamma_mean_ratio_form(double a, double b, double h);

// Inverse-cdf sampling; truncation via the conditional survival, never rejection.
std::vector<double> sample(const SeverityModel& m, RandomStream& rng, std::size_t count);
double sample_one(const SeverityModel& m, RandomStream& rng);

// One draw of the total loss count over the horizon: Poisson(lambda * years).
std::int64_t sample_poisson(const FrequencyModel& f, RandomStream& rng);
std::int64_t sample_poisson(double mean, RandomStream& rng);

} // namespace oprisk
