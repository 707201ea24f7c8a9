#include <oprisk/error.hpp>
#include <oprisk/io.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace oprisk {

namespace {

std::string trim(std::string s) {
    const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

std::string unquote(std::string s) {
    s = trim(std::move(s));
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(what + ": '" + text + "' is not a number");
    return v;
}

long long to_integer(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError(what + ": '" + text + "' is not an integer");
    return v;
}

bool to_bool(const std::string& text, const std::string& what) {
    const std::string t = lower(unquote(text));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(what + ": '" + text + "' is not a boolean");
}

std::vector<std::string> list_items(std::string v) {
    v = trim(v);
    if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::vector<std::string> out;
    for (auto& item : split(v, ','))
        if (!item.empty()) out.push_back(unquote(item));
    return out;
}

std::string csv_cell(double v) { return format_double(v); }

std::string clean(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

} // namespace

LossData read_losses(std::istream& in, std::optional<double> threshold) {
    std::string line;
    std::size_t line_no = 0;
    int amount_col = -1;
    int year_col = -1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto cols = split(line, ',');
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const std::string name = lower(unquote(cols[i]));
            if (name == "loss_amount") amount_col = static_cast<int>(i);
            if (name == "year") year_col = static_cast<int>(i);
        }
        break;
    }
    if (amount_col < 0) throw DataError("loss file: missing 'loss_amount' header column");

    LossData data;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto cols = split(line, ',');
        auto where = [&] { return "loss file line " + std::to_string(line_no); };
        if (static_cast<int>(cols.size()) <= amount_col) throw DataError(where() + ": missing loss_amount");
        double amount = 0.0;
        try {
            amount = to_double(cols[static_cast<std::size_t>(amount_col)], where());
        } catch (const ConfigError& e) {
            throw DataError(e.what());
        }
        if (!std::isfinite(amount) || !(amount > 0.0))
            throw DataError(where() + ": loss amount must be positive (got " + cols[static_cast<std::size_t>(amount_col)] + ")");
        if (threshold && !(amount > *threshold))
            throw DataError(where() + ": loss amount " + format_double(amount) + " is not above the threshold " +
                            format_double(*threshold));
        data.amounts.push_back(amount);
        if (year_col >= 0 && static_cast<int>(cols.size()) > year_col) {
            try {
                data.years.push_back(static_cast<int>(to_integer(cols[static_cast<std::size_t>(year_col)], where())));
            } catch (const ConfigError& e) {
                throw DataError(e.what());
            }
        }
    }
    if (!data.years.empty() && data.years.size() != data.amounts.size())
        throw DataError("loss file: the year column is incomplete");
    return data;
}

LossData read_loss_file(const std::string& path, std::optional<double> threshold) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open loss file '" + path + "'");
    return read_losses(in, threshold);
}

StudyConfig parse_study(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = lower(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("study file line " + std::to_string(line_no) + ": expected key = value");
        std::string key = lower(trim(line.substr(0, eq)));
        if (!section.empty()) key = section + "." + key;
        kv[key] = trim(line.substr(eq + 1));
    }

    auto take = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    const auto family = take("family");
    const auto p1 = take("p1");
    const auto p2 = take("p2");
    if (!family || !p1 || !p2) throw ConfigError("study file: family, p1 and p2 are required");
    std::optional<double> threshold;
    if (auto t = take("threshold")) {
        const std::string v = lower(unquote(*t));
        if (v != "none" && !v.empty()) threshold = to_double(v, "threshold");
    }

    StudyConfig cfg;
    cfg.truth = SeverityModel(parse_family(unquote(*family)), to_double(*p1, "p1"), to_double(*p2, "p2"), threshold);
    double lambda = cfg.freq.lambda;
    int years = cfg.freq.years;
    if (auto v = take("lambda")) lambda = to_double(*v, "lambda");
    if (auto v = take("years")) years = static_cast<int>(to_integer(*v, "years"));
    cfg.freq = FrequencyModel(lambda, years);
    if (auto v = take("replications")) cfg.replications = static_cast<int>(to_integer(*v, "replications"));
    if (auto v = take("alphas")) {
        cfg.alphas.clear();
        for (const auto& a : list_items(*v)) cfg.alphas.push_back(to_double(a, "alphas"));
    }
    if (auto v = take("estimators")) {
        cfg.run_mle = cfg.run_rce = false;
        for (const auto& e : list_items(*v)) {
            const std::string name = lower(e);
            if (name == "mle" || name == "mle-lda") cfg.run_mle = true;
            else if (name == "rce") cfg.run_rce = true;
            else throw ConfigError("unknown estimator '" + e + "' (expected mle or rce)");
        }
    }
    if (auto v = take("lambda_only")) cfg.lambda_only = to_bool(*v, "lambda_only");
    if (auto v = take("c")) cfg.c_override = to_double(*v, "c");
    if (auto v = take("seed")) cfg.master_seed = static_cast<std::uint64_t>(to_integer(*v, "seed"));
    if (auto v = take("threads")) cfg.threads = static_cast<int>(to_integer(*v, "threads"));

    const auto tail = take("contamination.tail");
    const auto eps = take("contamination.epsilon");
    const auto joint = take("contamination.joint_p");
    if (tail && lower(unquote(*tail)) != "none") {
        ContaminationSpec spec;
        spec.tail = parse_tail(lower(unquote(*tail)));
        if (eps) spec.epsilon = to_double(*eps, "contamination.epsilon");
        if (joint) spec.joint_p = to_double(*joint, "contamination.joint_p");
        cfg.contamination = spec;
    } else if (eps || joint) {
        throw ConfigError("contamination settings given without contamination.tail");
    }

    if (!kv.empty()) throw ConfigError("study file: unknown key '" + kv.begin()->first + "'");
    cfg.validate();
    return cfg;
}

StudyConfig parse_study_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open study file '" + path + "'");
    return parse_study(in);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string study_summary_csv(const StudyConfig& cfg, const StudyResult& result) {
    std::ostringstream os;
    os << "Dist,Parm1,Parm2,Threshold,Lambda,Years,Alpha,TrueCap,"
          "MLE_Mean,MLE_Bias,MLE_BiasPct,RCE_Mean,RCE_Bias,RCE_BiasPct,"
          "MLE_RMSE,RCE_RMSE,RMSE_Ratio,MLE_StdDev,RCE_StdDev,StdDev_Ratio,"
          "MLE_CI95,RCE_CI95,CI95_Ratio,MLE_CV,RCE_CV,MLE_IQR,RCE_IQR,IQR_Ratio,"
          "MLE_Skew,RCE_Skew,MLE_Kurtosis,RCE_Kurtosis,n_used,n_failed\n";
    for (std::size_t k = 0; k < cfg.alphas.size(); ++k) {
        const double a = cfg.alphas[k];
        const CapitalDistStats* mle = cfg.run_mle ? &result.find("MLE", a) : nullptr;
        const CapitalDistStats* rce = cfg.run_rce ? &result.find("RCE", a) : nullptr;
        auto f = [](const CapitalDistStats* s, double CapitalDistStats::*m) {
            return s ? csv_cell(s->*m) : std::string();
        };
        auto ratio = [&](double CapitalDistStats::*m) {
            return (mle && rce) ? csv_cell(rce->*m / (mle->*m)) : std::string();
        };
        const CapitalDistStats* any = mle ? mle : rce;
        os << cfg.truth.label() << ',' << format_double(cfg.truth.p1()) << ',' << format_double(cfg.truth.p2()) << ','
           << (cfg.truth.threshold() ? format_double(*cfg.truth.threshold()) : std::string()) << ','
           << format_double(cfg.freq.lambda) << ',' << cfg.freq.years << ',' << format_double(a) << ','
           << format_double(result.true_capital[k]) << ',' << f(mle, &CapitalDistStats::mean) << ','
           << f(mle, &CapitalDistStats::bias) << ',' << f(mle, &CapitalDistStats::bias_pct) << ','
           << f(rce, &CapitalDistStats::mean) << ',' << f(rce, &CapitalDistStats::bias) << ','
           << f(rce, &CapitalDistStats::bias_pct) << ',' << f(mle, &CapitalDistStats::rmse) << ','
           << f(rce, &CapitalDistStats::rmse) << ',' << ratio(&CapitalDistStats::rmse) << ','
           << f(mle, &CapitalDistStats::stddev) << ',' << f(rce, &CapitalDistStats::stddev) << ','
           << ratio(&CapitalDistStats::stddev) << ',' << f(mle, &CapitalDistStats::ci95_width) << ','
           << f(rce, &CapitalDistStats::ci95_width) << ',' << ratio(&CapitalDistStats::ci95_width) << ','
           << f(mle, &CapitalDistStats::cv) << ',' << f(rce, &CapitalDistStats::cv) << ','
           << f(mle, &CapitalDistStats::iqr) << ',' << f(rce, &CapitalDistStats::iqr) << ','
           << ratio(&CapitalDistStats::iqr) << ',' << f(mle, &CapitalDistStats::skewness) << ','
           << f(rce, &CapitalDistStats::skewness) << ',' << f(mle, &CapitalDistStats::excess_kurtosis) << ','
           << f(rce, &CapitalDistStats::excess_kurtosis) << ',' << any->n << ',' << result.n_failed << '\n';
    }
    return os.str();
}

std::string study_replications_csv(const StudyConfig& cfg, const StudyResult& result) {
    std::ostringstream os;
    os << "replication,n_losses,lambda_hat,p1_hat,p2_hat,failed,failure";
    for (const char* name : {"MLE", "RCE"}) {
        if ((name[0] == 'M' && !cfg.run_mle) || (name[0] == 'R' && !cfg.run_rce)) continue;
        for (double a : cfg.alphas) os << ',' << name << '_' << format_double(a);
    }
    os << '\n';
    for (const auto& r : result.replications) {
        os << r.index << ',' << r.n_losses << ',' << format_double(r.lambda_hat) << ',' << format_double(r.p1_hat)
           << ',' << format_double(r.p2_hat) << ',' << (r.failed ? 1 : 0) << ',' << clean(r.failure);
        auto emit = [&](bool use, const std::vector<double>& v) {
            if (!use) return;
            for (std::size_t k = 0; k < cfg.alphas.size(); ++k) os << ',' << (k < v.size() ? format_double(v[k]) : "");
        };
        emit(cfg.run_mle, r.mle);
        emit(cfg.run_rce, r.rce);
        os << '\n';
    }
    return os.str();
}

std::vector<std::map<std::string, std::string>> read_csv_rows(std::istream& in) {
    std::vector<std::map<std::string, std::string>> rows;
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cols = split(line, ',');
        if (header.empty()) {
            header = std::move(cols);
            continue;
        }
        if (cols.size() != header.size()) throw DataError("csv: row has " + std::to_string(cols.size()) +
                                                          " cells, header has " + std::to_string(header.size()));
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = cols[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace oprisk
