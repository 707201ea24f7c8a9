// oprisk: severity fitting, single-loss capital, RCE and simulation studies from the command line.

#include <oprisk/capital.hpp>
#include <oprisk/convexity.hpp>
#include <oprisk/error.hpp>
#include <oprisk/fisher.hpp>
#include <oprisk/io.hpp>
#include <oprisk/mle.hpp>
#include <oprisk/parallel.hpp>
#include <oprisk/rce.hpp>
#include <oprisk/simharness.hpp>
#include <oprisk/warnings.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace oprisk;

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitStrict = 4;

struct ModelArgs {
    std::string family;
    double p1 = 0.0;
    double p2 = 0.0;
    std::optional<double> threshold;

    SeverityModel model() const { return SeverityModel(parse_family(family), p1, p2, threshold); }
};

void add_model_flags(CLI::App* cmd, ModelArgs& m, bool required = true) {
    auto* f = cmd->add_option("--family", m.family, "lognormal | loggamma | gpd | normal");
    auto* a = cmd->add_option("--p1", m.p1, "mu, a or xi");
    auto* b = cmd->add_option("--p2", m.p2, "sigma, b or theta");
    cmd->add_option("--threshold", m.threshold, "truncation threshold (e.g. 10000); absent means untruncated");
    if (required) {
        f->required();
        a->required();
        b->required();
    }
}

// Full double precision; non-finite values become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix(const SymMatrix2& m) { return json::array({{number(m.xx), number(m.xy)}, {number(m.xy), number(m.yy)}}); }

json model_json(const SeverityModel& m) {
    json j{{"family", family_name(m.family())}, {"label", m.label()}, {"p1", m.p1()}, {"p2", m.p2()}};
    j["threshold"] = m.threshold() ? json(*m.threshold()) : json(nullptr);
    return j;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<double> parse_grid(const std::string& text) {
    // "start:stop:count" or a comma-separated list
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::istringstream is(text);
        std::string a, b, c;
        std::getline(is, a, ':');
        std::getline(is, b, ':');
        std::getline(is, c, ':');
        const double lo = std::stod(a), hi = std::stod(b);
        const int n = c.empty() ? 11 : std::stoi(c);
        if (n < 3) throw ConfigError("grid needs at least 3 points");
        for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
        return out;
    }
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw ConfigError("empty grid");
    return out;
}

int run_fit(const std::string& path, const std::string& family, std::optional<double> threshold) {
    const Family fam = parse_family(family);
    const LossData data = read_loss_file(path, threshold);
    const FitResult fit = fit_severity(data.amounts, fam, threshold);
    json j = model_json(fit.model);
    j["loglik"] = fit.loglik;
    j["n"] = fit.n;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["gradient_norm"] = number(fit.grad_norm);
    j["start"] = {fit.start[0], fit.start[1]};
    try {
        const FisherMatrix fm = fisher_information(fit.model);
        const ParamCovariance pc = param_covariance(fm, fit.n);
        j["covariance"] = matrix(pc.cov);
        j["stdev"] = {pc.sd1, pc.sd2};
        j["correlation"] = number(pc.rho);
    } catch (const NumericError& e) {
        j["covariance"] = nullptr;
        j["covariance_error"] = e.what();
    }
    print(j);
    return fit.converged ? 0 : kExitNumeric;
}

int run_capital(const ModelArgs& args, double lambda, int years, double alpha, const std::string& method,
                std::size_t sims, std::uint64_t seed) {
    const SeverityModel m = args.model();
    const CapitalSpec spec(alpha, FrequencyModel(lambda, years));
    json j = model_json(m);
    j["lambda"] = lambda;
    j["alpha"] = alpha;
    j["method"] = method;
    j["severity_percentile"] = spec.severity_percentile();
    j["tail_index"] = tail_index(m);
    if (method == "mc") {
        j["capital"] = mc_capital_oracle(m, spec, sims, RandomStream::keyed(seed, 0, StreamPurpose::MonteCarlo));
        j["simulations"] = sims;
        j["seed"] = seed;
    } else {
        CapitalBreakdown b;
        if (method == "bk") b = sla_bk_detail(m, spec);
        else if (method == "degen") b = sla_degen_detail(m, spec);
        else b = isla_detail(m, spec);
        j["capital"] = number(b.capital);
        j["quantile_term"] = number(b.quantile_term);
        j["correction"] = number(b.correction);
        j["branch"] = branch_name(b.branch);
        j["interpolated"] = b.branch == CapitalBranch::Interpolated;
    }
    print(j);
    return 0;
}

json rce_json(const RceResult& r) {
    return json{{"rce", number(r.capital)},
                {"step1_capital", number(r.step1_capital)},
                {"median_of_medians", number(r.median_of_medians)},
                {"weighted_mean", number(r.weighted_mean)},
                {"ratio", number(r.ratio)},
                {"c", r.c},
                {"c_interpolated", r.c_interpolated},
                {"c_clamped", r.c_clamped},
                {"discarded_ellipses", r.discarded_ellipses},
                {"n_eff", r.n_eff}};
}

int run_rce(const std::string& losses, const ModelArgs& args, std::size_t n, std::optional<double> lambda, int years,
            double alpha, std::optional<double> c) {
    RceOptions opt;
    opt.c = c;
    opt.threads = 0;
    json j;
    if (!losses.empty()) {
        if (args.family.empty()) throw ConfigError("--family is required with --losses");
        const LossData data = read_loss_file(losses, args.threshold);
        const FitResult fit = fit_severity(data.amounts, parse_family(args.family), args.threshold);
        const double lam = lambda ? *lambda : static_cast<double>(data.amounts.size()) / years;
        const RceResult r = rce_estimate(fit, CapitalSpec(alpha, FrequencyModel(lam, years)), CTable::standard(), opt);
        j = model_json(fit.model);
        j["converged"] = fit.converged;
        j["lambda"] = lam;
        j.update(rce_json(r));
    } else {
        if (!lambda) throw ConfigError("--lambda is required with explicit parameters");
        if (n < 2) throw ConfigError("--n (observation count) is required with explicit parameters");
        const SeverityModel m = args.model();
        const RceResult r = rce_estimate(m, n, CapitalSpec(alpha, FrequencyModel(*lambda, years)), CTable::standard(), opt);
        j = model_json(m);
        j["lambda"] = *lambda;
        j.update(rce_json(r));
    }
    j["alpha"] = alpha;
    j["years"] = years;
    print(j);
    return 0;
}

int run_simulate(const std::string& study, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 std::optional<int> threads, std::optional<int> replications, bool strict) {
    StudyConfig cfg = parse_study_file(study);
    if (seed) cfg.master_seed = *seed;
    if (threads) cfg.threads = *threads;
    if (replications) cfg.replications = *replications;
    cfg.validate();
    const StudyResult r = run_study(cfg);

    std::filesystem::create_directories(out_dir);
    const auto summary = std::filesystem::path(out_dir) / "summary.csv";
    const auto reps = std::filesystem::path(out_dir) / "replications.csv";
    std::ofstream(summary) << study_summary_csv(cfg, r);
    std::ofstream(reps) << study_replications_csv(cfg, r);

    json j = model_json(cfg.truth);
    j["replications"] = cfg.replications;
    j["failed"] = r.n_failed;
    j["quality_warning"] = r.quality_warning;
    j["summary_csv"] = summary.string();
    j["replications_csv"] = reps.string();
    json rows = json::array();
    for (const auto& e : r.stats)
        rows.push_back({{"estimator", e.estimator}, {"alpha", e.alpha}, {"true_capital", e.stats.true_capital},
                        {"mean", e.stats.mean}, {"bias_pct", e.stats.bias_pct}, {"rmse", e.stats.rmse}});
    j["stats"] = rows;
    print(j);
    return (strict && r.quality_warning) ? kExitStrict : 0;
}

int run_calibrate(const ModelArgs& args, std::size_t n, int years, int replications, std::uint64_t seed, double alpha) {
    const std::vector<SeverityModel> truths{args.model()};
    const CalibrationResult r = calibrate_c(truths, n, years, replications, seed, alpha);
    json curve = json::array();
    for (const auto& p : r.curve) curve.push_back({{"c", p.c}, {"bias_pct", p.bias_pct}});
    json j = model_json(truths.front());
    j.update({{"n", n},
              {"years", years},
              {"replications", replications},
              {"alpha", alpha},
              {"c", r.c},
              {"bias_pct", r.bias_pct},
              {"ok", r.ok},
              {"check_bias_pct", r.check_bias_pct},
              {"failed", r.n_failed},
              {"curve", curve}});
    for (auto& v : j["check_bias_pct"])
        if (v.is_number() && !std::isfinite(v.get<double>())) v = nullptr;
    print(j);
    return r.ok ? 0 : kExitNumeric;
}

int run_scan(const ModelArgs& args, const std::string& fix, const std::string& param_grid, const std::string& p_grid,
             const std::string& out) {
    const SeverityModel m = args.model();
    int vary = 0;
    if (fix == "p1") vary = 2;
    else if (fix == "p2") vary = 1;
    else throw ConfigError("--fix-param must be p1 or p2");
    const auto grid = parse_grid(param_grid);
    const auto ps = parse_grid(p_grid);
    const auto rows = convexity_scan(m, vary, grid, ps);

    std::ostringstream os;
    os << "param_value,p,var\n";
    for (const auto& r : rows) os << format_double(r.param) << ',' << format_double(r.p) << ',' << format_double(r.var) << '\n';
    if (out.empty()) std::cout << os.str();
    else std::ofstream(out) << os.str();

    for (double p : ps) {
        std::vector<double> y;
        for (const auto& r : rows)
            if (r.p == p) y.push_back(r.var);
        std::cerr << "p=" << format_double(p) << ": " << curvature_name(classify_curvature(grid, y)) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Operational-risk capital: severity fitting, single-loss approximations, RCE and simulation studies"};
    app.require_subcommand(1);
    bool strict = false;
    app.add_flag("--strict", strict, "treat study-quality warnings as errors (exit 4)");

    // fit
    auto* fit = app.add_subcommand("fit", "fit a severity to a loss file");
    std::string fit_losses, fit_family;
    std::optional<double> fit_threshold;
    fit->add_option("losses", fit_losses, "CSV with a loss_amount column")->required();
    fit->add_option("--family", fit_family)->required();
    fit->add_option("--threshold", fit_threshold);

    // capital
    auto* cap = app.add_subcommand("capital", "single-loss capital approximation or Monte Carlo");
    ModelArgs cap_model;
    double cap_lambda = 0.0, cap_alpha = kRegulatoryAlpha;
    int cap_years = 1;
    std::string cap_method = "isla";
    std::size_t cap_sims = 1'000'000;
    std::uint64_t cap_seed = 1;
    add_model_flags(cap, cap_model);
    cap->add_option("--lambda", cap_lambda, "annual loss frequency")->required();
    cap->add_option("--years", cap_years);
    cap->add_option("--alpha", cap_alpha);
    cap->add_option("--method", cap_method)->check(CLI::IsMember({"bk", "degen", "isla", "mc"}));
    cap->add_option("--sims", cap_sims, "simulated years for --method mc");
    cap->add_option("--seed", cap_seed);

    // rce
    auto* rce = app.add_subcommand("rce", "reduced-bias capital estimate");
    ModelArgs rce_model;
    std::string rce_losses;
    std::size_t rce_n = 0;
    std::optional<double> rce_lambda, rce_c;
    int rce_years = 10;
    double rce_alpha = kRegulatoryAlpha;
    add_model_flags(rce, rce_model, false);
    rce->add_option("--losses", rce_losses, "fit this loss file instead of using explicit parameters");
    rce->add_option("--n", rce_n, "observation count behind explicit parameters");
    rce->add_option("--lambda", rce_lambda);
    rce->add_option("--years", rce_years);
    rce->add_option("--alpha", rce_alpha);
    rce->add_option("--c", rce_c, "override the c(sev, n) table");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a simulation study");
    std::string sim_study, sim_out = "study_out";
    std::optional<std::uint64_t> sim_seed;
    std::optional<int> sim_threads, sim_reps;
    sim->add_option("study", sim_study, "key = value study file")->required();
    sim->add_option("--out", sim_out);
    sim->add_option("--seed", sim_seed);
    sim->add_option("--threads", sim_threads);
    sim->add_option("--replications", sim_reps);
    sim->add_flag("--strict", strict, "exit 4 when more than 10% of replications fail");

    // calibrate-c
    auto* cal = app.add_subcommand("calibrate-c", "grid-search the c(sev, n) exponent");
    ModelArgs cal_model;
    std::size_t cal_n = 250;
    int cal_years = 10, cal_reps = 1000;
    std::uint64_t cal_seed = 1;
    double cal_alpha = kRegulatoryAlpha;
    add_model_flags(cal, cal_model);
    cal->add_option("--n", cal_n);
    cal->add_option("--years", cal_years);
    cal->add_option("--replications", cal_reps);
    cal->add_option("--seed", cal_seed);
    cal->add_option("--alpha", cal_alpha);

    // convexity-scan
    auto* scan = app.add_subcommand("convexity-scan", "severity quantile as one parameter varies");
    ModelArgs scan_model;
    std::string scan_fix = "p1", scan_grid, scan_p = "0.99997", scan_out;
    add_model_flags(scan, scan_model);
    scan->add_option("--fix-param", scan_fix, "parameter held fixed: p1 or p2");
    scan->add_option("--param-grid", scan_grid, "start:stop:count or comma list")->required();
    scan->add_option("--p-grid", scan_p, "comma list of probabilities");
    scan->add_option("--out", scan_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        if (*fit) return run_fit(fit_losses, fit_family, fit_threshold);
        if (*cap) return run_capital(cap_model, cap_lambda, cap_years, cap_alpha, cap_method, cap_sims, cap_seed);
        if (*rce) return run_rce(rce_losses, rce_model, rce_n, rce_lambda, rce_years, rce_alpha, rce_c);
        if (*sim) return run_simulate(sim_study, sim_out, sim_seed, sim_threads, sim_reps, strict);
        if (*cal) return run_calibrate(cal_model, cal_n, cal_years, cal_reps, cal_seed, cal_alpha);
        if (*scan) return run_scan(scan_model, scan_fix, scan_grid, scan_p, scan_out);
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: invalid number: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitValidation;
}
