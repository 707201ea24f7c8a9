#pragma once

#include <oprisk/distributions.hpp>
#include <oprisk/random.hpp>

#include <cstddef>
#include <string_view>
#include <vector>

namespace oprisk {

/// Confidence level and frequency for a single-loss capital approximation.
/// The severity quantile is taken at 1 - (1 - alpha) / lambda.
struct CapitalSpec {
    double alpha = 0.999;
    FrequencyModel freq;

    CapitalSpec(double alpha, FrequencyModel freq);
    double severity_percentile() const noexcept { return 1.0 - (1.0 - alpha) / freq.lambda; }
};

inline constexpr double kRegulatoryAlpha = 0.999;
inline constexpr double kEconomicAlpha = 0.9997;

// xi for GPD, 1/b for LogGamma, 0 for LogNormal and Normal (truncation does not change it).
double tail_index(const SeverityModel& m);

enum class CapitalBranch { SingleLoss, FiniteMean, InfiniteMean, Interpolated };
std::string_view branch_name(CapitalBranch b);

struct CapitalBreakdown {
    double capital = 0.0;
    double quantile_term = 0.0;  // severity quantile at the estimated parameters
    double correction = 0.0;     // mean or tail correction added to it
    double tail_index = 0.0;
    CapitalBranch branch = CapitalBranch::FiniteMean;
};

/// Interpolation band on the tail index and the power-scale settings.
struct IslaSettings {
    double low = 0.8;
    double high = 1.2;
    double precision = 1000.0;
    double root = 50.0;
};

/// Boecker-Klueppelberg: quantile + (lambda - 1) * mean. Throws DomainError if the mean is infinite.
double sla_bk(const SeverityModel& m, const CapitalSpec& spec);
CapitalBreakdown sla_bk_detail(const SeverityModel& m, const CapitalSpec& spec);

/// Degen: quantile + lambda * mean below tail index 1; quantile plus the
/// (1 - alpha) * quantile * c / (1 - 1/xi) tail term for tail index in (1, 2).
/// Throws DomainError at tail index exactly 1 or at 2 and above.
double sla_degen(const SeverityModel& m, const CapitalSpec& spec);
CapitalBreakdown sla_degen_detail(const SeverityModel& m, const CapitalSpec& spec);

/// Interpolated single-loss approximation: Degen outside the band, and inside it a
/// root-scale interpolation of the correction between the band edges.
double isla(const SeverityModel& m, const CapitalSpec& spec, const IslaSettings& settings = {});
CapitalBreakdown isla_detail(const SeverityModel& m, const CapitalSpec& spec, const IslaSettings& settings = {});

/// Monte Carlo annual-aggregate quantile (type-7 interpolation). Simulations are split into
/// fixed-size chunks, each drawn from its own substream, so the result depends only on the
/// stream and n_years_sims, never on the worker count.
double mc_capital_oracle(const SeverityModel& m, const CapitalSpec& spec, std::size_t n_years_sims,
                         const RandomStream& rng, int threads = 0);

// Type-7 sample quantile (linear interpolation between order statistics). Reorders `values`.
double quantile_type7(std::vector<double>& values, double p);

} // namespace oprisk
