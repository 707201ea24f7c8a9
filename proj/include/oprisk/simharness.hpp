#pragma once

#include <oprisk/capital.hpp>
#include <oprisk/mle.hpp>
#include <oprisk/random.hpp>
#include <oprisk/rce.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oprisk {

enum class ContaminationTail { Left, Right, Both };
std::string_view tail_name(ContaminationTail t);
ContaminationTail parse_tail(std::string_view s);

/// Mixture contamination: each loss comes from a tail-shifted severity with probability
/// epsilon per active tail. The shifted parameters sit on the joint_p ellipse of the
/// asymptotic parameter distribution at the truth (n = lambda * years).
struct ContaminationSpec {
    ContaminationTail tail = ContaminationTail::Right;
    double epsilon = 0.05;
    double joint_p = 0.90;

    void validate() const;
};

struct Contaminants {
    std::optional<SeverityModel> left;   // both parameters moved toward the light tail
    std::optional<SeverityModel> right;  // both parameters moved toward the heavy tail
};

// For LogGamma the second parameter moves against the first (a larger b is a lighter tail).
Contaminants contaminating_models(const SeverityModel& truth, const FrequencyModel& freq,
                                  const ContaminationSpec& spec);

enum class LossOrigin : std::uint8_t { Truth, Left, Right };

/// One simulated observation period: Poisson(lambda * years) losses, each drawn from the
/// truth or (with probability epsilon per active tail) from a contaminating severity.
/// When `origins` is given it receives the source of every loss.
std::vector<double> simulate_sample(const SeverityModel& truth, const FrequencyModel& freq,
                                    const std::optional<ContaminationSpec>& contamination, RandomStream& rng,
                                    std::vector<LossOrigin>* origins = nullptr);

struct CapitalDistStats {
    double true_capital = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double bias_pct = 0.0;
    double rmse = 0.0;             // sqrt(mean squared error), divisor m
    double stddev = 0.0;           // divisor m - 1
    double cv = 0.0;
    double iqr = 0.0;              // type-7 quantiles
    double ci95_width = 0.0;       // q97.5 - q2.5, type-7
    double skewness = 0.0;         // adjusted sample skewness G1 (NaN below 3 values)
    double excess_kurtosis = 0.0;  // adjusted sample excess kurtosis G2 (NaN below 4 values)
    std::size_t n = 0;
    std::size_t n_failed = 0;
};

CapitalDistStats capital_stats(std::span<const double> capitals, double true_capital, std::size_t n_failed = 0);

struct StudyConfig {
    SeverityModel truth{Family::LogNormal, 10.0, 2.0};
    FrequencyModel freq{25.0, 10};
    int replications = 1000;
    std::vector<double> alphas{kRegulatoryAlpha, kEconomicAlpha};
    bool run_mle = true;
    bool run_rce = true;
    std::optional<ContaminationSpec> contamination;
    bool lambda_only = false;   // severity fixed at the truth; only lambda is estimated
    std::uint64_t master_seed = 20240101;
    int threads = 0;            // 0 = default_threads()
    CTable ctable = CTable::standard();
    std::optional<double> c_override;
    double capital_cap = 1e15;

    void validate() const;
};

struct ReplicationRecord {
    std::size_t index = 0;
    std::size_t n_losses = 0;
    double lambda_hat = 0.0;
    double p1_hat = 0.0;
    double p2_hat = 0.0;
    bool failed = false;
    std::string failure;
    std::vector<double> mle;  // per alpha (empty unless run_mle)
    std::vector<double> rce;  // per alpha (empty unless run_rce)
};

struct EstimatorStats {
    std::string estimator;  // "MLE" or "RCE"
    double alpha = 0.0;
    CapitalDistStats stats;
};

struct StudyResult {
    std::vector<double> true_capital;  // per alpha, ISLA at the truth
    std::vector<ReplicationRecord> replications;
    std::vector<EstimatorStats> stats;
    std::size_t n_failed = 0;
    bool quality_warning = false;      // more than 10% of replications failed

    const CapitalDistStats& find(std::string_view estimator, double alpha) const;
};

/// Replications run in parallel; every replication draws from streams keyed by
/// (master_seed, index, purpose), and statistics are reduced in index order, so the
/// result does not depend on the worker count. A replication whose fit fails or whose
/// capital is incalculable for any estimator is excluded from all statistics.
StudyResult run_study(const StudyConfig& config);

struct CalibrationPoint {
    double c = 0.0;
    double bias_pct = 0.0;  // averaged over the truth grid
};

struct CalibrationResult {
    double c = 0.0;
    double bias_pct = 0.0;
    bool ok = false;                        // some c reached |bias| < 15%
    std::vector<CalibrationPoint> curve;    // c = 0, 0.05, ..., 3
    std::vector<double> truth_bias_pct;     // per truth at the chosen c
    std::vector<double> check_bias_pct;     // at the 2.5% / 97.5% joint-percentile truths
    std::size_t n_failed = 0;
};

/// Grid search for the c(sev, n) exponent over [0, 3] in steps of 0.05: the value closest to
/// unbiased RCE capital (averaged over `truths`), ties broken toward positive bias. The chosen
/// value is then re-checked at the 2.5% and 97.5% joint-percentile parameter pairs of the first truth.
CalibrationResult calibrate_c(std::span<const SeverityModel> truths, std::size_t n, int years, int replications,
                              std::uint64_t seed, double alpha = kRegulatoryAlpha, int threads = 0);

} // namespace oprisk
