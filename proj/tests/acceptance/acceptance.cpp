// Acceptance run: one PASS/FAIL line per criterion. Exits 0 once every check has run,
// whatever the verdicts; failures are reported, not hidden.

#include "../support/oracles.hpp"

#include <oprisk/capital.hpp>
#include <oprisk/convexity.hpp>
#include <oprisk/distributions.hpp>
#include <oprisk/fisher.hpp>
#include <oprisk/rce.hpp>
#include <oprisk/simharness.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace oprisk;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void verdict(int id, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

CapitalSpec spec(double lambda, double alpha) { return CapitalSpec(alpha, FrequencyModel(lambda, 1)); }

constexpr double kThreshold = 10000.0;
constexpr std::uint64_t kSeed = 20240101;

// ---------------------------------------------------------------------------------------------

void capital_anchors() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;

    const SeverityModel infinite_mean(Family::GPD, 1.1, 40000.0);
    const double rcap = isla(infinite_mean, spec(25.0, kRegulatoryAlpha));
    const double ecap = isla(infinite_mean, spec(25.0, kEconomicAlpha));
    const double e1 = oracle::rel(rcap, 2521620617.0), e2 = oracle::rel(ecap, 9432295763.0);
    ok = ok && e1 <= 0.005 && e2 <= 0.005;
    detail += fmt("GPD(1.1, 40000) RCap %.0f (%.4f%%) ECap %.0f (%.4f%%);", rcap, 100 * e1, ecap, 100 * e2);

    struct Row { double xi, theta; bool truncated; double millions; };
    const std::vector<Row> rows{
        {0.8, 35000, false, 149},    {0.95, 7500, false, 121},   {0.875, 47500, false, 391},
        {0.95, 25000, false, 403},   {0.925, 50000, false, 643}, {0.99, 27500, false, 636},
        {0.775, 33500, true, 141},   {0.8, 25000, true, 140},    {0.8675, 50000, true, 452},
        {0.91, 31000, true, 451},    {0.92, 47500, true, 698},   {0.95, 35000, true, 717},
    };
    double worst = 0.0;
    for (const auto& r : rows) {
        const SeverityModel m(Family::GPD, r.xi, r.theta, r.truncated ? std::optional(kThreshold) : std::nullopt);
        worst = std::max(worst, oracle::rel(isla(m, spec(25.0, kRegulatoryAlpha)) / 1e6, r.millions));
    }
    ok = ok && worst <= 0.01;
    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 1.0;
    detail += fmt(" 12 GPD/TGPD rows worst %.3f%%; %.3f s", 100 * worst, elapsed);
    verdict(1, ok, detail);
}

void isla_vs_monte_carlo() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    const std::size_t sims = 5'000'000;
    for (double xi : {0.85, 0.95, 1.00, 1.05, 1.15}) {
        const double approx = isla(SeverityModel(Family::GPD, xi, 55000.0), spec(25.0, kRegulatoryAlpha));
        const double mc = oracle::mc_aggregate_quantile({oracle::Kind::GPD, xi, 55000.0}, 25.0, kRegulatoryAlpha, sims,
                                                        kSeed + static_cast<std::uint64_t>(xi * 100));
        const double err = std::abs(approx - mc) / mc;
        ok = ok && err <= 0.01;
        detail += fmt("xi %.2f %+.2f%%; ", xi, 100 * (approx - mc) / mc);
    }
    const double elapsed = seconds_since(t0);
    ok = ok && elapsed <= 600.0;
    verdict(2, ok, detail + fmt("%.0f s", elapsed));
}

void fisher_exactness() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;

    const double eps = std::numeric_limits<double>::epsilon();
    double ln_err = 0.0;
    for (double sigma : {0.5, 1.0, 2.0, 2.65}) {
        const auto f = fisher_lognormal(sigma);
        ln_err = std::max({ln_err, oracle::rel(f.inverse.xx, sigma * sigma), oracle::rel(f.inverse.yy, sigma * sigma / 2),
                           std::abs(f.inverse.xy)});
    }
    ok = ok && ln_err <= 4 * eps;
    detail += fmt("LogN inverse err %.1e;", ln_err);

    auto worst_entry = [](const SymMatrix2& got, const oracle::Mat2& want) {
        return std::max({oracle::rel(got.xx, want[0]), oracle::rel(got.xy, want[1]), oracle::rel(got.yy, want[3])});
    };
    const double gpd = worst_entry(fisher_gpd(0.875, 47500.0).info, oracle::fisher({oracle::Kind::GPD, 0.875, 47500.0}));
    const double tgpd = worst_entry(fisher_tgpd(0.8, 25000.0, kThreshold).info,
                                    oracle::fisher({oracle::Kind::GPD, 0.8, 25000.0, kThreshold}));
    const double lg = worst_entry(fisher_loggamma(24.0, 2.65).info, oracle::fisher({oracle::Kind::LogGamma, 24.0, 2.65}));
    ok = ok && gpd <= 1e-8 && tgpd <= 1e-8 && lg <= 1e-8;
    detail += fmt(" GPD %.1e TGPD %.1e Logg %.1e;", gpd, tgpd, lg);

    double tlogg = 0.0;
    const double rows[6][2] = {{23.5, 2.65}, {33.0, 3.3}, {24.5, 2.5}, {34.5, 3.15}, {24.75, 2.45}, {34.6, 3.07}};
    for (const auto& r : rows) {
        const auto approx = fisher_tloggamma_approx(r[0], r[1], kThreshold).info;
        const auto numeric = fisher_tloggamma_numeric(r[0], r[1], kThreshold).info;
        tlogg = std::max({tlogg, oracle::rel(approx.xx, numeric.xx), oracle::rel(approx.xy, numeric.xy),
                          oracle::rel(approx.yy, numeric.yy)});
    }
    ok = ok && tlogg <= 1e-6;
    const double elapsed = seconds_since(t0);
    ok = ok && elapsed <= 60.0;
    verdict(3, ok, detail + fmt(" TLogg approx vs numeric %.1e; %.2f s", tlogg, elapsed));
}

void mean_identities() {
    const auto t0 = Clock::now();
    double gpd = 0.0, lg = 0.0;
    const double tgpd_rows[6][2] = {{0.775, 33500}, {0.8, 25000}, {0.868, 50000}, {0.91, 31000}, {0.92, 47500}, {0.95, 35000}};
    for (const auto& r : tgpd_rows)
        gpd = std::max(gpd, oracle::rel(tgpd_mean_survival_form(r[0], r[1], kThreshold),
                                        tgpd_mean_shifted_form(r[0], r[1], kThreshold)));
    const double tlogg_rows[6][2] = {{23.5, 2.65}, {33.0, 3.3}, {24.5, 2.5}, {34.5, 3.15}, {24.75, 2.45}, {34.6, 3.07}};
    for (const auto& r : tlogg_rows)
        lg = std::max(lg, oracle::rel(tloggamma_mean_gamma_cdf_form(r[0], r[1], kThreshold),
                                      tloggamma_mean_ratio_form(r[0], r[1], kThreshold)));
    verdict(4, gpd <= 1e-10 && lg <= 1e-10, fmt("TGPD forms %.1e, TLogg forms %.1e; %.3f s", gpd, lg, seconds_since(t0)));
}

// ---------------------------------------------------------------------------------------------

StudyConfig study(const SeverityModel& truth) {
    StudyConfig cfg;
    cfg.truth = truth;
    cfg.freq = FrequencyModel(25.0, 10);
    cfg.replications = 1000;
    cfg.master_seed = kSeed;
    return cfg;
}

bool within(double v, double centre, double half) { return std::abs(v - centre) <= half; }

struct IidRuns {
    StudyResult lognormal;
    StudyResult gpd;
    double lognormal_seconds = 0.0;
    double gpd_seconds = 0.0;
};

IidRuns bias_replication() {
    IidRuns runs;
    auto t0 = Clock::now();
    runs.lognormal = run_study(study(SeverityModel(Family::LogNormal, 10.0, 2.0)));
    runs.lognormal_seconds = seconds_since(t0);
    t0 = Clock::now();
    runs.gpd = run_study(study(SeverityModel(Family::GPD, 0.875, 47500.0)));
    runs.gpd_seconds = seconds_since(t0);

    const double ln_mle = runs.lognormal.find("MLE", kRegulatoryAlpha).bias_pct;
    const double ln_rce = runs.lognormal.find("RCE", kRegulatoryAlpha).bias_pct;
    const double gp_mle = runs.gpd.find("MLE", kRegulatoryAlpha).bias_pct;
    const double gp_rce = runs.gpd.find("RCE", kRegulatoryAlpha).bias_pct;
    const bool ok = within(ln_mle, 6.7, 2.5) && within(ln_rce, 0.5, 2.5) && within(gp_mle, 63.7, 8.0) &&
                    within(gp_rce, 1.2, 3.0) && runs.lognormal_seconds <= 1800 && runs.gpd_seconds <= 1800;
    verdict(5, ok,
            fmt("LogN MLE %.2f%% (6.7+-2.5) RCE %.2f%% (0.5+-2.5); GPD MLE %.2f%% (63.7+-8) RCE %.2f%% (1.2+-3); "
                "%.0f s / %.0f s, failed reps %zu / %zu",
                ln_mle, ln_rce, gp_mle, gp_rce, runs.lognormal_seconds, runs.gpd_seconds, runs.lognormal.n_failed,
                runs.gpd.n_failed));
    return runs;
}

void precision_dominance(const IidRuns& runs) {
    bool ok = true;
    std::string detail;
    for (const auto* r : {&runs.lognormal, &runs.gpd}) {
        const double rcap = r->find("RCE", kRegulatoryAlpha).rmse / r->find("MLE", kRegulatoryAlpha).rmse;
        const double ecap = r->find("RCE", kEconomicAlpha).rmse / r->find("MLE", kEconomicAlpha).rmse;
        ok = ok && rcap < 0.95 && ecap < 0.90;
        detail += fmt("%s RMSE ratio RCap %.3f ECap %.3f; ", r == &runs.lognormal ? "LogN" : "GPD", rcap, ecap);
    }
    verdict(6, ok, detail + "bounds 0.95 / 0.90");
}

void lambda_only_bias() {
    const auto t0 = Clock::now();
    // Frequency estimated from a single year of counts (relative variance 1 / lambda);
    // the ten-year figure is shown alongside.
    auto run = [](int years) {
        StudyConfig cfg = study(SeverityModel(Family::LogNormal, 10.0, 2.0));
        cfg.freq = FrequencyModel(25.0, years);
        cfg.lambda_only = true;
        cfg.run_rce = false;
        return run_study(cfg).find("MLE", kRegulatoryAlpha);
    };
    const auto one = run(1), ten = run(10);
    // Standard error of the mean bias, for reading a near-zero result.
    const double se = one.stddev / std::sqrt(static_cast<double>(one.n)) / one.true_capital * 100.0;
    verdict(7, one.bias_pct >= -1.5 && one.bias_pct <= 0.0,
            fmt("RCap bias %.3f%% (SE %.3f%%) in [-1.5, 0] with a one-year window; ten-year window %.3f%%; %.1f s",
                one.bias_pct, se, ten.bias_pct, seconds_since(t0)));
}

void normal_counterexample() {
    const auto t0 = Clock::now();
    StudyConfig cfg = study(SeverityModel(Family::Normal, 5e5, 1.5e6));
    cfg.run_rce = false;
    const auto r = run_study(cfg);
    const auto& s = r.find("MLE", kRegulatoryAlpha);
    verdict(8, std::abs(s.bias_pct) <= 1.0 && s.excess_kurtosis <= 0.5,
            fmt("RCap bias %.3f%%, excess kurtosis %.3f; %.1f s", s.bias_pct, s.excess_kurtosis, seconds_since(t0)));
}

void robustness_ordering(const IidRuns& runs) {
    const auto t0 = Clock::now();
    StudyConfig cfg = study(SeverityModel(Family::LogNormal, 10.0, 2.0));
    ContaminationSpec c;
    c.tail = ContaminationTail::Right;
    c.epsilon = 0.05;
    cfg.contamination = c;
    const auto r = run_study(cfg);
    const double mle = r.find("MLE", kRegulatoryAlpha).bias_pct, rce = r.find("RCE", kRegulatoryAlpha).bias_pct;
    const double mle_shift = std::abs(mle - runs.lognormal.find("MLE", kRegulatoryAlpha).bias_pct);
    const double rce_shift = std::abs(rce - runs.lognormal.find("RCE", kRegulatoryAlpha).bias_pct);
    verdict(9, within(mle, 44.6, 8.0) && rce_shift < mle_shift,
            fmt("MLE bias %.2f%% (44.6+-8); deviation from i.i.d. MLE %.2f pts, RCE %.2f pts; %.1f s", mle, mle_shift,
                rce_shift, seconds_since(t0)));
}

// ---------------------------------------------------------------------------------------------

std::vector<SeverityModel> six_severities() {
    return {{Family::LogNormal, 10.0, 2.0},         {Family::LogNormal, 10.2, 1.95, kThreshold},
            {Family::LogGamma, 24.0, 2.65},         {Family::LogGamma, 23.5, 2.65, kThreshold},
            {Family::GPD, 0.875, 47500.0},          {Family::GPD, 0.8, 25000.0, kThreshold}};
}

void property_suites() {
    const auto t0 = Clock::now();
    std::vector<std::string> failed;
    const CapitalSpec rcap(kRegulatoryAlpha, FrequencyModel(25.0, 10));

    // Quantile / cdf round trips.
    {
        std::vector<SeverityModel> models = six_severities();
        models.emplace_back(Family::Normal, 5e5, 1.5e6);
        double worst = 0.0;
        for (const auto& m : models)
            for (double p : {1e-6, 0.01, 0.25, 0.5, 0.75, 0.99, 0.999, 0.99997}) worst = std::max(worst, std::abs(cdf(m, quantile(m, p)) - p));
        if (worst > 1e-10) failed.push_back(fmt("round trip %.1e", worst));
    }

    // Every iso-grid point on its own ellipse; 56 points; 8 per level; ratio in (0, 1].
    for (const auto& m : six_severities()) {
        const auto fm = fisher_information(m);
        const auto grid = build_iso_grid(m, FrequencyModel(25.0, 10), fm, 250);
        if (grid.points.size() != 56) failed.push_back(m.label() + " grid size");
        const SymMatrix2 prec = grid.cov.inverse();
        std::map<double, int> per_level;
        for (const auto& g : grid.points) {
            ++per_level[g.p_sev];
            const double d = prec.quad(g.p1 - m.p1(), g.p2 - m.p2());
            if (oracle::rel(d, chi2_2_quantile(g.p_sev)) > 1e-9) failed.push_back(m.label() + " off-ellipse point");
        }
        for (const auto& [p, count] : per_level)
            if (count != 8) failed.push_back(m.label() + " level count");
        const auto r = rce_estimate(m, 250, rcap);
        if (!(r.ratio > 0.0 && r.ratio <= 1.0)) failed.push_back(m.label() + fmt(" ratio %.4f", r.ratio));
    }

    // Discard rule: whatever fails, the surviving levels keep every direction and frequency point.
    {
        std::mt19937_64 eng(kSeed);
        std::vector<int> level;
        for (int l = 0; l < 7; ++l) level.insert(level.end(), 8, l);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> v(56, 1.0);
            const std::size_t bad = std::uniform_int_distribution<std::size_t>(0, 55)(eng);
            v[bad] = std::numeric_limits<double>::infinity();
            const int dropped = discard_ellipses(v, level, 7, 1e15);
            if (dropped != 7 - level[bad]) failed.push_back("discard count");
            for (int l = 0; l < 7; ++l) {
                int alive = 0;
                for (int k = 0; k < 8; ++k) alive += !std::isnan(v[l * 8 + k]);
                if (alive != (l < level[bad] ? 8 : 0)) failed.push_back("discard balance");
            }
        }
    }

    // Monotone-median identity: median of capitals = capital at the median parameter.
    {
        std::mt19937_64 eng(kSeed);
        std::normal_distribution<double> sigma(2.0, 0.1);
        std::vector<double> sigmas(101), caps;
        for (auto& s : sigmas) s = sigma(eng);
        for (double s : sigmas) caps.push_back(isla(SeverityModel(Family::LogNormal, 10.0, s), rcap));
        std::nth_element(sigmas.begin(), sigmas.begin() + 50, sigmas.end());
        std::nth_element(caps.begin(), caps.begin() + 50, caps.end());
        if (caps[50] != isla(SeverityModel(Family::LogNormal, 10.0, sigmas[50]), rcap)) failed.push_back("monotone median");
    }

    // Serial and parallel studies agree bit for bit.
    {
        StudyConfig cfg = study(SeverityModel(Family::GPD, 0.875, 47500.0));
        cfg.replications = 40;
        cfg.threads = 1;
        const auto a = run_study(cfg);
        cfg.threads = 4;
        const auto b = run_study(cfg);
        bool same = a.replications.size() == b.replications.size();
        for (std::size_t i = 0; same && i < a.replications.size(); ++i) {
            const auto &x = a.replications[i], &y = b.replications[i];
            same = x.n_losses == y.n_losses && x.p1_hat == y.p1_hat && x.p2_hat == y.p2_hat && x.mle == y.mle && x.rce == y.rce;
        }
        if (!same) failed.push_back("thread determinism");
    }

    std::string detail = failed.empty() ? "all properties hold" : "";
    for (const auto& f : failed) detail += f + "; ";
    verdict(10, failed.empty(), detail + fmt(" %.1f s", seconds_since(t0)));
}

void convexity_classifications() {
    const double p = 0.99997;
    const std::vector<double> ps{p};
    // Expected shape in (first, second) parameter.
    const std::vector<std::pair<Curvature, Curvature>> expected{
        {Curvature::Convex, Curvature::Convex}, {Curvature::Convex, Curvature::Convex},
        {Curvature::Convex, Curvature::Convex}, {Curvature::Convex, Curvature::Convex},
        {Curvature::Convex, Curvature::Linear}, {Curvature::Convex, Curvature::Linear}};
    const auto models = six_severities();
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& m = models[i];
        Curvature got[2];
        for (int vary = 1; vary <= 2; ++vary) {
            const double centre = vary == 1 ? m.p1() : m.p2();
            std::vector<double> grid, y;
            for (int k = -4; k <= 4; ++k) grid.push_back(centre * (1.0 + 0.05 * k));
            for (const auto& row : convexity_scan(m, vary, grid, ps)) y.push_back(row.var);
            got[vary - 1] = classify_curvature(grid, y);
        }
        const bool match = got[0] == expected[i].first && got[1] == expected[i].second;
        ok = ok && match;
        detail += fmt("%s %s/%s%s; ", m.label().c_str(), std::string(curvature_name(got[0])).c_str(),
                      std::string(curvature_name(got[1])).c_str(), match ? "" : " (mismatch)");
    }
    verdict(11, ok, detail);
}

} // namespace

int main() {
    const auto t0 = Clock::now();
    capital_anchors();
    isla_vs_monte_carlo();
    fisher_exactness();
    mean_identities();
    const IidRuns runs = bias_replication();
    precision_dominance(runs);
    lambda_only_bias();
    normal_counterexample();
    robustness_ordering(runs);
    property_suites();
    convexity_classifications();
    std::printf("acceptance run finished in %.0f s\n", seconds_since(t0));
    return 0;
}
