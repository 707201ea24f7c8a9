#pragma once

#include <oprisk/simharness.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oprisk {

struct LossData {
    std::vector<double> amounts;
    std::vector<int> years;  // empty when the file has no year column
};

/// CSV with a `loss_amount` header column (and optional `year`). Amounts must be positive
/// and, when a threshold is given, strictly above it. Throws DataError with the line number.
LossData read_losses(std::istream& in, std::optional<double> threshold = std::nullopt);
LossData read_loss_file(const std::string& path, std::optional<double> threshold = std::nullopt);

/// key = value study description; `[contamination]` sections and dotted keys are both accepted.
/// Keys: family, p1, p2, threshold, lambda, years, replications, alphas, estimators,
/// contamination.tail, contamination.epsilon, contamination.joint_p, lambda_only, c, seed, threads.
StudyConfig parse_study(std::istream& in);
StudyConfig parse_study_file(const std::string& path);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// One row per alpha, columns mirroring the usual MLE-vs-RCE comparison tables.
std::string study_summary_csv(const StudyConfig& cfg, const StudyResult& result);
/// One row per replication with the fitted parameters and every capital estimate.
std::string study_replications_csv(const StudyConfig& cfg, const StudyResult& result);

/// Parses a CSV produced above back into rows of column -> text.
std::vector<std::map<std::string, std::string>> read_csv_rows(std::istream& in);

} // namespace oprisk
