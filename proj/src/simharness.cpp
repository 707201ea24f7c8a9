#include <oprisk/error.hpp>
#include <oprisk/parallel.hpp>
#include <oprisk/simharness.hpp>
#include <oprisk/warnings.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace oprisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool calculable(double v, double cap) { return std::isfinite(v) && v > 0.0 && v <= cap; }

std::vector<double> draw_losses(const SeverityModel& truth, const FrequencyModel& freq, const Contaminants& cont,
                                double epsilon, RandomStream& rng, std::vector<LossOrigin>* origins = nullptr) {
    const std::int64_t count = sample_poisson(freq, rng);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    if (origins) origins->clear();
    const bool any = cont.left || cont.right;
    for (std::int64_t k = 0; k < count; ++k) {
        const SeverityModel* source = &truth;
        LossOrigin origin = LossOrigin::Truth;
        if (any) {
            const double u = rng.uniform();
            if (cont.left && u < epsilon) {
                source = &*cont.left;
                origin = LossOrigin::Left;
            } else if (cont.right) {
                const double lo = cont.left ? epsilon : 0.0;
                if (u >= lo && u < lo + epsilon) {
                    source = &*cont.right;
                    origin = LossOrigin::Right;
                }
            }
        }
        out.push_back(sample_one(*source, rng));
        if (origins) origins->push_back(origin);
    }
    return out;
}

double type7(std::vector<double> v, double p) { return quantile_type7(v, p); }

} // namespace

std::string_view tail_name(ContaminationTail t) {
    switch (t) {
    case ContaminationTail::Left: return "left";
    case ContaminationTail::Right: return "right";
    case ContaminationTail::Both: return "both";
    }
    return "right";
}

ContaminationTail parse_tail(std::string_view s) {
    if (s == "left") return ContaminationTail::Left;
    if (s == "right") return ContaminationTail::Right;
    if (s == "both") return ContaminationTail::Both;
    throw ConfigError("contamination tail must be left, right or both (got '" + std::string(s) + "')");
}

void ContaminationSpec::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("contamination epsilon must lie in (0, 1)");
    if (tail == ContaminationTail::Both && !(epsilon < 0.5))
        throw ConfigError("two-tailed contamination needs epsilon < 0.5");
    if (!(joint_p > 0.0 && joint_p < 1.0)) throw ConfigError("contamination joint percentile must lie in (0, 1)");
}

Contaminants contaminating_models(const SeverityModel& truth, const FrequencyModel& freq,
                                  const ContaminationSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::size_t>(std::llround(freq.expected_count()));
    const SymMatrix2 cov = param_covariance(fisher_information(truth), std::max<std::size_t>(n, 2)).cov;
    const auto offsets = ellipse_offsets(cov, spec.joint_p);
    // kDirections order: (+,+), (+,-), (-,+), (-,-).
    const bool flip = truth.family() == Family::LogGamma;
    const EllipseOffset& up = offsets[flip ? 1 : 0];
    const EllipseOffset& down = offsets[flip ? 2 : 3];

    Contaminants out;
    if (spec.tail != ContaminationTail::Left) out.right = truth.with_params(truth.p1() + up.d1, truth.p2() + up.d2);
    if (spec.tail != ContaminationTail::Right)
        out.left = truth.with_params(truth.p1() + down.d1, truth.p2() + down.d2);
    return out;
}

std::vector<double> simulate_sample(const SeverityModel& truth, const FrequencyModel& freq,
                                    const std::optional<ContaminationSpec>& contamination, RandomStream& rng,
                                    std::vector<LossOrigin>* origins) {
    if (!contamination) return draw_losses(truth, freq, {}, 0.0, rng, origins);
    return draw_losses(truth, freq, contaminating_models(truth, freq, *contamination), contamination->epsilon, rng,
                       origins);
}

CapitalDistStats capital_stats(std::span<const double> x, double true_capital, std::size_t n_failed) {
    if (x.size() < 2) throw DataError("capital_stats: need at least 2 values");
    const double m = static_cast<double>(x.size());
    CapitalDistStats s;
    s.true_capital = true_capital;
    s.n = x.size();
    s.n_failed = n_failed;

    double sum = 0.0;
    for (double v : x) sum += v;
    s.mean = sum / m;
    s.bias = s.mean - true_capital;
    s.bias_pct = 100.0 * s.bias / true_capital;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, se = 0.0;
    for (double v : x) {
        const double d = v - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        se += (v - true_capital) * (v - true_capital);
    }
    s.rmse = std::sqrt(se / m);
    s.stddev = std::sqrt(m2 / (m - 1.0));
    s.cv = s.stddev / s.mean;

    std::vector<double> v(x.begin(), x.end());
    s.iqr = type7(v, 0.75) - type7(v, 0.25);
    s.ci95_width = type7(v, 0.975) - type7(v, 0.025);

    m2 /= m;
    m3 /= m;
    m4 /= m;
    s.skewness = kNaN;
    s.excess_kurtosis = kNaN;
    if (m2 > 0.0 && x.size() >= 3) s.skewness = std::sqrt(m * (m - 1.0)) / (m - 2.0) * (m3 / std::pow(m2, 1.5));
    if (m2 > 0.0 && x.size() >= 4) {
        const double g2 = m4 / (m2 * m2) - 3.0;
        s.excess_kurtosis = (m - 1.0) / ((m - 2.0) * (m - 3.0)) * ((m + 1.0) * g2 + 6.0);
    }
    return s;
}

void StudyConfig::validate() const {
    if (replications < 2) throw ConfigError("replications must be >= 2");
    if (alphas.empty()) throw ConfigError("at least one alpha is required");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("alphas must lie in (0, 1)");
    if (!run_mle && !run_rce) throw ConfigError("no estimator selected");
    if (run_rce && truth.family() == Family::Normal) throw ConfigError("RCE is not defined for the Normal family");
    if (!(freq.lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (contamination) contamination->validate();
}

const CapitalDistStats& StudyResult::find(std::string_view estimator, double alpha) const {
    for (const auto& e : stats)
        if (e.estimator == estimator && e.alpha == alpha) return e.stats;
    throw ConfigError("no statistics for estimator " + std::string(estimator));
}

StudyResult run_study(const StudyConfig& cfg) {
    cfg.validate();
    const std::size_t reps = static_cast<std::size_t>(cfg.replications);
    const Contaminants cont = cfg.contamination
                                  ? contaminating_models(cfg.truth, cfg.freq, *cfg.contamination)
                                  : Contaminants{};
    const double epsilon = cfg.contamination ? cfg.contamination->epsilon : 0.0;

    StudyResult out;
    for (double a : cfg.alphas) out.true_capital.push_back(isla(cfg.truth, CapitalSpec(a, cfg.freq)));

    RceOptions ropt;
    ropt.capital_cap = cfg.capital_cap;
    ropt.c = cfg.c_override;

    out.replications.resize(reps);
    parallel_for(
        reps,
        [&](std::size_t i) {
            ReplicationRecord& rec = out.replications[i];
            rec.index = i;
            auto fail = [&](std::string why) {
                rec.failed = true;
                rec.failure = std::move(why);
            };
            RandomStream rng = RandomStream::keyed(cfg.master_seed, i, StreamPurpose::Sample);
            try {
                std::optional<FitResult> fit;
                if (cfg.lambda_only) {
                    rec.n_losses = static_cast<std::size_t>(sample_poisson(cfg.freq, rng));
                } else {
                    const std::vector<double> losses = draw_losses(cfg.truth, cfg.freq, cont, epsilon, rng);
                    rec.n_losses = losses.size();
                    if (losses.size() < 10) return fail("insufficient data");
                    fit = fit_severity(losses, cfg.truth.family(), cfg.truth.threshold());
                    rec.p1_hat = fit->model.p1();
                    rec.p2_hat = fit->model.p2();
                    if (!fit->converged) return fail("severity fit did not converge");
                }
                const FrequencyModel lam = fit_poisson(static_cast<std::int64_t>(rec.n_losses), cfg.freq.years);
                rec.lambda_hat = lam.lambda;
                if (!(lam.lambda > 0.0)) return fail("no losses observed");
                const SeverityModel& model = fit ? fit->model : cfg.truth;
                if (!fit) {
                    rec.p1_hat = model.p1();
                    rec.p2_hat = model.p2();
                }
                for (double a : cfg.alphas) {
                    const CapitalSpec spec(a, lam);
                    if (cfg.run_mle) {
                        const double c = isla(model, spec);
                        if (!calculable(c, cfg.capital_cap)) return fail("incalculable MLE capital");
                        rec.mle.push_back(c);
                    }
                    if (cfg.run_rce) {
                        const std::size_t n = fit ? fit->n : std::max<std::size_t>(rec.n_losses, 2);
                        const double c = rce_estimate(model, n, spec, cfg.ctable, ropt).capital;
                        if (!calculable(c, cfg.capital_cap)) return fail("incalculable RCE capital");
                        rec.rce.push_back(c);
                    }
                }
            } catch (const Error& e) {
                fail(e.what());
            }
        },
        cfg.threads);

    for (const auto& r : out.replications) out.n_failed += r.failed ? 1 : 0;
    out.quality_warning = out.n_failed * 10 > reps;
    if (out.quality_warning) {
        std::ostringstream os;
        os << "study quality: " << out.n_failed << " of " << reps << " replications failed";
        warn(os.str());
    }

    auto collect = [&](bool use, const char* name, auto member) {
        if (!use) return;
        for (std::size_t k = 0; k < cfg.alphas.size(); ++k) {
            std::vector<double> v;
            for (const auto& r : out.replications)
                if (!r.failed) v.push_back((r.*member)[k]);
            if (v.size() < 2) throw EstimationError("fewer than 2 successful replications");
            out.stats.push_back({name, cfg.alphas[k], capital_stats(v, out.true_capital[k], out.n_failed)});
        }
    };
    collect(cfg.run_mle, "MLE", &ReplicationRecord::mle);
    collect(cfg.run_rce, "RCE", &ReplicationRecord::rce);
    return out;
}

namespace {

struct RceDraws {
    std::vector<double> median;  // median of medians per successful replication
    std::vector<double> ratio;
    double true_capital = 0.0;
    std::size_t failed = 0;

    double bias_pct(double c) const {
        double s = 0.0;
        for (std::size_t i = 0; i < median.size(); ++i) s += median[i] * std::pow(ratio[i], c);
        return 100.0 * (s / static_cast<double>(median.size()) / true_capital - 1.0);
    }
};

RceDraws rce_draws(const SeverityModel& truth, std::size_t n, int years, int replications, std::uint64_t seed,
                   std::uint64_t stream_offset, double alpha, int threads) {
    const FrequencyModel freq(static_cast<double>(n) / years, years);
    RceDraws d;
    d.true_capital = isla(truth, CapitalSpec(alpha, freq));
    std::vector<double> med(static_cast<std::size_t>(replications), kNaN);
    std::vector<double> rat(med.size(), kNaN);
    RceOptions opt;
    opt.c = 0.0;
    parallel_for(
        med.size(),
        [&](std::size_t i) {
            RandomStream rng = RandomStream::keyed(seed, stream_offset + i, StreamPurpose::Calibration);
            try {
                const std::vector<double> losses = draw_losses(truth, freq, {}, 0.0, rng);
                if (losses.size() < 10) return;
                const FitResult fit = fit_severity(losses, truth.family(), truth.threshold());
                if (!fit.converged) return;
                const FrequencyModel lam(static_cast<double>(losses.size()) / years, years);
                const RceResult r = rce_estimate(fit, CapitalSpec(alpha, lam), CTable::standard(), opt);
                if (std::isfinite(r.median_of_medians) && std::isfinite(r.ratio)) {
                    med[i] = r.median_of_medians;
                    rat[i] = r.ratio;
                }
            } catch (const Error&) {
            }
        },
        threads);
    for (std::size_t i = 0; i < med.size(); ++i) {
        if (std::isnan(med[i])) {
            ++d.failed;
            continue;
        }
        d.median.push_back(med[i]);
        d.ratio.push_back(rat[i]);
    }
    if (d.median.size() < 2) throw EstimationError("calibration: fewer than 2 successful replications");
    return d;
}

} // namespace

CalibrationResult calibrate_c(std::span<const SeverityModel> truths, std::size_t n, int years, int replications,
                              std::uint64_t seed, double alpha, int threads) {
    if (truths.empty()) throw ConfigError("calibrate_c: empty truth grid");
    if (replications < 2) throw ConfigError("calibrate_c: replications must be >= 2");
    if (years < 1) throw ConfigError("calibrate_c: years must be >= 1");
    for (const auto& t : truths)
        if (t.family() == Family::Normal) throw ConfigError("RCE is not defined for the Normal family");

    const auto reps = static_cast<std::uint64_t>(replications);
    std::vector<RceDraws> draws;
    for (std::size_t k = 0; k < truths.size(); ++k)
        draws.push_back(rce_draws(truths[k], n, years, replications, seed, k * reps, alpha, threads));

    CalibrationResult out;
    for (const auto& d : draws) out.n_failed += d.failed;
    double best_abs = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 60; ++step) {
        const double c = 0.05 * step;
        double bias = 0.0;
        for (const auto& d : draws) bias += d.bias_pct(c);
        bias /= static_cast<double>(draws.size());
        out.curve.push_back({c, bias});
        const double ab = std::abs(bias);
        // Within 0.05 percentage points counts as a tie; prefer the non-negative side.
        const bool tie = std::abs(ab - best_abs) <= 0.05;
        if ((!tie && ab < best_abs) || (tie && bias >= 0.0 && out.bias_pct < 0.0)) {
            best_abs = ab;
            out.c = c;
            out.bias_pct = bias;
        }
    }
    out.ok = best_abs < 15.0;
    for (const auto& d : draws) out.truth_bias_pct.push_back(d.bias_pct(out.c));

    const FrequencyModel freq(static_cast<double>(n) / years, years);
    const Contaminants extremes = contaminating_models(truths.front(), freq, {ContaminationTail::Both, 0.05, 0.95});
    std::uint64_t offset = truths.size() * reps;
    for (const auto& t : {extremes.left, extremes.right}) {
        if (!t) continue;
        try {
            out.check_bias_pct.push_back(
                rce_draws(*t, n, years, replications, seed, offset, alpha, threads).bias_pct(out.c));
        } catch (const Error&) {
            out.check_bias_pct.push_back(kNaN);
        }
        offset += reps;
    }
    if (!out.ok) {
        std::ostringstream os;
        os << "calibration failure: no c in [0, 3] brings |bias| below 15% (best " << out.bias_pct << "%)";
        warn(os.str());
    }
    return out;
}

} // namespace oprisk
