// breakpoint: break-date estimation and simulation studies for linear
// regression and AR(1) models with a one-time parameter shift.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "breakpoint/errors.hpp"
#include "breakpoint/estimators.hpp"
#include "breakpoint/inference.hpp"
#include "breakpoint/regression.hpp"
#include "breakpoint/simulation.hpp"
#include "breakpoint/tomlmini.hpp"
#include "breakpoint/weights.hpp"

using nlohmann::ordered_json;

namespace {

// Exit codes: 2 config, 3 data, 4 estimation.
struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        std::size_t a = item.find_first_not_of(" \t");
        std::size_t b = item.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV ingestion: header row required, every field numeric, no missing values.

struct Csv {
    std::vector<std::string> cols;
    std::vector<std::vector<double>> data;  // column major
    std::size_t rows = 0;
};

bool parse_double(const std::string& field, double* out) {
    std::size_t a = field.find_first_not_of(" \t\r");
    if (a == std::string::npos) return false;
    std::size_t b = field.find_last_not_of(" \t\r");
    std::string t = field.substr(a, b - a + 1);
    try {
        std::size_t used = 0;
        double v = std::stod(t, &used);
        if (used != t.size() || !std::isfinite(v)) return false;
        *out = v;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

Csv load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CliError(3, "cannot open input file '" + path + "'");
    Csv csv;
    std::string line;
    if (!std::getline(f, line)) throw CliError(3, "input file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream hdr(line);
    std::string cell;
    while (std::getline(hdr, cell, ',')) {
        std::size_t a = cell.find_first_not_of(" \t");
        std::size_t b = cell.find_last_not_of(" \t");
        csv.cols.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    if (csv.cols.empty() || csv.cols[0].empty())
        throw CliError(3, "input file '" + path + "' needs a header row");
    csv.data.assign(csv.cols.size(), {});

    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::size_t j = 0;
        while (std::getline(row, cell, ',')) {
            if (j >= csv.cols.size())
                throw CliError(3, path + ":" + std::to_string(lineno) + ": too many fields");
            double v;
            if (!parse_double(cell, &v))
                throw CliError(3, path + ":" + std::to_string(lineno) +
                                      ": missing or non-numeric value in column '" +
                                      csv.cols[j] + "'");
            csv.data[j].push_back(v);
            ++j;
        }
        if (j != csv.cols.size())
            throw CliError(3, path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(csv.cols.size()) + " fields, got " +
                                  std::to_string(j));
        ++csv.rows;
    }
    if (csv.rows == 0) throw CliError(3, "input file '" + path + "' has no data rows");
    return csv;
}

// ---------------------------------------------------------------------------
// Weight spec strings: unit | power:<gamma> | fisher | custom:<csv path>.

bp::WeightScheme parse_weight(const std::string& spec) {
    if (spec == "unit") return bp::WeightScheme::unit();
    if (spec == "fisher") return bp::WeightScheme::fisher();
    if (spec.rfind("power:", 0) == 0) {
        double g;
        if (!parse_double(spec.substr(6), &g))
            throw CliError(2, "bad weight spec '" + spec + "': power needs a numeric exponent");
        return bp::WeightScheme::power_concave(g);
    }
    if (spec.rfind("custom:", 0) == 0) {
        std::string path = spec.substr(7);
        std::ifstream f(path);
        if (!f) throw CliError(2, "bad weight spec: cannot open '" + path + "'");
        std::string line;
        std::vector<double> rho, om;
        bool header = true;
        while (std::getline(f, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (header) {
                header = false;
                continue;
            }
            auto parts = split_list(line);
            double r, o;
            if (parts.size() != 2 || !parse_double(parts[0], &r) || !parse_double(parts[1], &o))
                throw CliError(2, "bad weight table row '" + line + "' in " + path);
            rho.push_back(r);
            om.push_back(o);
        }
        try {
            return bp::WeightScheme::custom_scalar(om);
        } catch (const std::invalid_argument& e) {
            throw CliError(2, std::string("bad weight table: ") + e.what());
        }
    }
    throw CliError(2, "unknown weight spec '" + spec +
                          "' (expected unit, power:<gamma>, fisher or custom:<path>)");
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOptions {
    std::string input, response, out, objective_out;
    std::string break_cols, stable_cols;
    std::string weight = "power:0.5";
    std::string ci = "none";
    std::string cov = "hac";
    double trim = 0.15;
    double level = 0.95;
    int lags = 0;
    bool no_intercept = false;
    std::uint64_t seed = 0;
    bool require_ci = false;  // set by the `ci` command
};

struct BuiltData {
    bp::Dataset ds;
    bp::VectorXd raw_response;  // before lag trimming
    bool pure_lag1 = false;     // exactly y on lag1, no other regressor
};

BuiltData build_dataset(const EstimateOptions& opt) {
    if (opt.lags < 0) throw CliError(2, "--lags must be nonnegative");
    std::vector<std::string> breaks = split_list(opt.break_cols);
    std::vector<std::string> stables = split_list(opt.stable_cols);
    if (breaks.empty()) throw CliError(2, "estimate needs a nonempty --break-cols list");

    Csv csv = load_csv(opt.input);
    auto col_index = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t j = 0; j < csv.cols.size(); ++j)
            if (csv.cols[j] == name) return j;
        return std::nullopt;
    };
    auto resp = col_index(opt.response);
    if (!resp) throw CliError(3, "response column '" + opt.response + "' not in input");

    const auto L = static_cast<std::size_t>(opt.lags);
    if (csv.rows <= L) throw CliError(3, "not enough rows to build " + std::to_string(L) + " lags");
    const std::size_t T = csv.rows - L;
    if (T < 20) throw CliError(3, "need at least 20 usable rows, have " + std::to_string(T));

    // A regressor name resolves to a CSV column, a constructed lag of the
    // response, or the reserved intercept name "const".
    auto fetch = [&](const std::string& name) -> std::vector<double> {
        if (name == "const") {
            if (opt.no_intercept)
                throw CliError(2, "'const' regressor conflicts with --no-intercept");
            return std::vector<double>(T, 1.0);
        }
        if (name.rfind("lag", 0) == 0 && name.size() > 3 &&
            name.find_first_not_of("0123456789", 3) == std::string::npos) {
            auto j = static_cast<std::size_t>(std::stoul(name.substr(3)));
            if (j >= 1 && j <= L) {
                std::vector<double> v(T);
                for (std::size_t t = 0; t < T; ++t) v[t] = csv.data[*resp][t + L - j];
                return v;
            }
        }
        auto idx = col_index(name);
        if (!idx) throw CliError(3, "column '" + name + "' not in input (and not a built lag)");
        std::vector<double> v(csv.data[*idx].begin() + static_cast<std::ptrdiff_t>(L),
                              csv.data[*idx].end());
        return v;
    };

    // Intercept enters the stable block by default unless it already appears
    // somewhere or --no-intercept is given.
    auto listed = [&](const std::string& name) {
        return std::count(breaks.begin(), breaks.end(), name) ||
               std::count(stables.begin(), stables.end(), name);
    };
    if (!opt.no_intercept && !listed("const")) stables.insert(stables.begin(), "const");
    for (const auto& b : breaks)
        if (std::count(stables.begin(), stables.end(), b))
            throw CliError(2, "column '" + b + "' listed as both stable and break regressor");
    for (const auto& lst : {breaks, stables})
        for (std::size_t i = 0; i < lst.size(); ++i)
            for (std::size_t j = i + 1; j < lst.size(); ++j)
                if (lst[i] == lst[j]) throw CliError(2, "duplicate regressor '" + lst[i] + "'");

    BuiltData built;
    const std::size_t p = stables.size() + breaks.size();
    built.ds.X.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(p));
    built.ds.R = bp::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                    static_cast<Eigen::Index>(breaks.size()));
    std::size_t c = 0;
    for (const auto& name : stables) {
        auto v = fetch(name);
        for (std::size_t t = 0; t < T; ++t)
            built.ds.X(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = v[t];
        built.ds.labels.push_back(name);
        ++c;
    }
    for (std::size_t bj = 0; bj < breaks.size(); ++bj) {
        auto v = fetch(breaks[bj]);
        for (std::size_t t = 0; t < T; ++t)
            built.ds.X(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = v[t];
        built.ds.R(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(bj)) = 1.0;
        built.ds.labels.push_back(breaks[bj]);
        ++c;
    }
    built.ds.y.resize(static_cast<Eigen::Index>(T));
    for (std::size_t t = 0; t < T; ++t)
        built.ds.y(static_cast<Eigen::Index>(t)) = csv.data[*resp][t + L];

    built.raw_response.resize(static_cast<Eigen::Index>(csv.rows));
    for (std::size_t t = 0; t < csv.rows; ++t)
        built.raw_response(static_cast<Eigen::Index>(t)) = csv.data[*resp][t];
    built.pure_lag1 =
        (opt.lags == 1 && stables.empty() && breaks.size() == 1 && breaks[0] == "lag1");

    try {
        built.ds.validate();
    } catch (const std::invalid_argument& e) {
        throw CliError(3, std::string("assembled design is unusable: ") + e.what());
    }
    return built;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CliError(3, "cannot write '" + path + "'");
    f << text;
}

int cmd_estimate(const EstimateOptions& opt) {
    if (!(opt.trim >= 0.0 && opt.trim < 0.5)) throw CliError(2, "--trim must lie in [0, 0.5)");
    if (!(opt.level > 0.5 && opt.level < 1.0)) throw CliError(2, "--level must lie in (0.5, 1)");
    if (opt.cov != "hac" && opt.cov != "iid") throw CliError(2, "--cov must be hac or iid");
    if (opt.require_ci && opt.ci == "none")
        throw CliError(2, "the ci command needs an explicit --ci method");
    bp::WeightScheme w = parse_weight(opt.weight);
    bp::WeightValidation val = bp::validate_weight_scheme(w, opt.trim);

    BuiltData built = build_dataset(opt);
    const bp::Dataset& ds = built.ds;
    bp::CovKind cov = (opt.cov == "iid") ? bp::CovKind::IID : bp::CovKind::HAC;
    const bp::WeightScheme unit = bp::WeightScheme::unit();

    bp::BreakFit fit_new, fit_ls;
    bp::DeltaEstimate d_new, d_ls;
    std::optional<bp::ConfidenceInterval> ci;
    try {
        fit_new = bp::estimate_break(ds, w, opt.trim);
        fit_ls = bp::estimate_break(ds, unit, opt.trim);
        d_new = bp::estimate_delta(ds, fit_new.k_hat, cov);
        d_ls = bp::estimate_delta(ds, fit_ls.k_hat, cov);

        if (opt.ci != "none") {
            if (opt.ci == "analytic") {
                ci = bp::analytic_ci(ds, fit_new.k_hat, w, opt.level, cov);
            } else if (opt.ci.rfind("residual:", 0) == 0 || opt.ci.rfind("wild:", 0) == 0 ||
                       opt.ci.rfind("recursive:", 0) == 0) {
                auto colon = opt.ci.find(':');
                std::string kind = opt.ci.substr(0, colon);
                int B = 0;
                double bd;
                if (!parse_double(opt.ci.substr(colon + 1), &bd) || bd < 1 ||
                    bd != std::floor(bd))
                    throw CliError(2, "bad --ci replicate count in '" + opt.ci + "'");
                B = static_cast<int>(bd);
                if (kind == "recursive") {
                    if (!built.pure_lag1)
                        throw CliError(2,
                                       "--ci recursive needs the pure lag-1 model "
                                       "(--lags 1 --break-cols lag1 --no-intercept)");
                    ci = bp::bootstrap_ci_ar1(built.raw_response, w, opt.trim, B, opt.level,
                                              opt.seed)
                             .ci;
                } else {
                    auto bk = (kind == "residual") ? bp::BootstrapKind::Residual
                                                   : bp::BootstrapKind::Wild;
                    ci = bp::bootstrap_ci(ds, w, opt.trim, bk, B, opt.level, opt.seed).ci;
                }
            } else {
                throw CliError(2, "unknown --ci method '" + opt.ci + "'");
            }
        }
    } catch (const CliError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw CliError(2, e.what());
    } catch (const std::runtime_error& e) {
        throw CliError(4, e.what());
    }

    ordered_json rep;
    rep["schema_version"] = 1;
    rep["command"] = opt.require_ci ? "ci" : "estimate";
    ordered_json cfg;
    cfg["input"] = opt.input;
    cfg["response"] = opt.response;
    cfg["stable_cols"] = opt.stable_cols;
    cfg["break_cols"] = opt.break_cols;
    cfg["lags"] = opt.lags;
    cfg["intercept"] = !opt.no_intercept;
    cfg["weight"] = opt.weight;
    cfg["trim"] = opt.trim;
    cfg["cov"] = opt.cov;
    cfg["ci"] = opt.ci;
    cfg["level"] = opt.level;
    cfg["seed"] = opt.seed;
    cfg["T"] = ds.T();
    rep["config"] = cfg;
    if (!val.admissible) rep["weight_warnings"] = val.violations;

    auto fit_block = [&](const bp::BreakFit& f, const bp::DeltaEstimate& d) {
        ordered_json j;
        j["k_hat"] = f.k_hat;
        j["rho_hat"] = f.rho_hat;
        j["delta"] = std::vector<double>(d.delta.data(), d.delta.data() + d.delta.size());
        j["se"] = std::vector<double>(d.se.data(), d.se.data() + d.se.size());
        j["sigma2"] = d.sigma2;
        return j;
    };
    rep["new"] = fit_block(fit_new, d_new);
    rep["ls"] = fit_block(fit_ls, d_ls);
    if (ci) {
        ordered_json j;
        j["lower_k"] = ci->lower_k;
        j["upper_k"] = ci->upper_k;
        j["level"] = ci->level;
        j["method"] = ci->method;
        rep["ci"] = j;
    } else {
        rep["ci"] = nullptr;
    }

    // Objective curves share one candidate grid; LS values are joined by k.
    std::map<Eigen::Index, double> ls_by_k;
    for (std::size_t i = 0; i < fit_ls.grid.size(); ++i)
        ls_by_k[fit_ls.grid[i]] = fit_ls.objective_curve[i];
    ordered_json curve;
    std::vector<Eigen::Index> ks;
    std::vector<double> rhos, qnew, vls;
    std::ostringstream curve_csv;
    curve_csv << "k,rho,q_new,v_ls\n";
    for (std::size_t i = 0; i < fit_new.grid.size(); ++i) {
        auto it = ls_by_k.find(fit_new.grid[i]);
        if (it == ls_by_k.end()) continue;
        ks.push_back(fit_new.grid[i]);
        double rho = static_cast<double>(fit_new.grid[i]) / static_cast<double>(ds.T());
        rhos.push_back(rho);
        qnew.push_back(fit_new.objective_curve[i]);
        vls.push_back(it->second);
        curve_csv << fit_new.grid[i] << ',' << fmt(rho) << ',' << fmt(fit_new.objective_curve[i])
                  << ',' << fmt(it->second) << '\n';
    }
    curve["k"] = ks;
    curve["rho"] = rhos;
    curve["q_new"] = qnew;
    curve["v_ls"] = vls;
    rep["objective_curve"] = curve;

    write_text(opt.out, rep.dump(2) + "\n");
    if (!opt.objective_out.empty()) write_text(opt.objective_out, curve_csv.str());
    return 0;
}

// ---------------------------------------------------------------------------
// simulate / infill

struct StudyOptions {
    std::string config, out;
    int reps_override = -1;
    long long seed_override = -1;
    std::string weight_override;
};

std::string hist_path(const std::string& out, std::size_t cell, const char* which) {
    std::string stem = out;
    auto dot = stem.find_last_of('.');
    if (dot != std::string::npos && stem.find('/', dot) == std::string::npos)
        stem = stem.substr(0, dot);
    return stem + "_cell" + std::to_string(cell) + "_" + which + "_hist.csv";
}

void write_hist(const std::string& path, const std::vector<long>& hist) {
    std::ostringstream os;
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < hist.size(); ++b)
        os << fmt(0.01 * static_cast<double>(b)) << ',' << fmt(0.01 * static_cast<double>(b + 1))
           << ',' << hist[b] << '\n';
    write_text(path, os.str());
}

struct StudyConfig {
    std::string kind;  // simulate | infill
    std::string model; // mean | ar
    long long T = 100;
    double sigma = 1.0;
    int reps = 1000;
    double trim = 0.0;
    std::string weight = "power:0.5";
    std::uint64_t seed = 0;
    long long grid_n = 200;
    double grid_h = 0.005;
    double y0 = 0.0;
    std::vector<double> rho0, d0, mu, delta;
};

StudyConfig read_study_config(const StudyOptions& opt, const std::string& kind) {
    if (opt.config.empty()) throw CliError(2, "--config is required");
    if (opt.out.empty()) throw CliError(2, "--out is required");
    bp::toml::Table tbl;
    try {
        tbl = bp::toml::parse_file(opt.config);
    } catch (const std::runtime_error& e) {
        throw CliError(2, e.what());
    }
    auto key = [&](const std::string& k) { return kind + "." + k; };
    if (!tbl.has(key("model"))) throw CliError(2, "config needs " + kind + ".model");

    StudyConfig sc;
    sc.kind = kind;
    try {
        sc.model = tbl.at(key("model")).as_string();
        sc.T = tbl.get_int(key("T"), sc.T);
        sc.sigma = tbl.get_double(key("sigma"), sc.sigma);
        sc.reps = static_cast<int>(tbl.get_int(key("reps"), sc.reps));
        sc.trim = tbl.get_double(key("trim"), sc.trim);
        sc.weight = tbl.get_string(key("weight"), sc.weight);
        sc.seed = static_cast<std::uint64_t>(tbl.get_int(key("seed"), 0));
        sc.grid_n = tbl.get_int(key("grid_n"), sc.grid_n);
        sc.grid_h = tbl.get_double(key("grid_h"), sc.grid_h);
        sc.y0 = tbl.get_double(key("y0"), sc.y0);
        if (tbl.has(key("rho0"))) sc.rho0 = tbl.at(key("rho0")).as_double_array();
        if (tbl.has(key("d0"))) sc.d0 = tbl.at(key("d0")).as_double_array();
        if (tbl.has(key("mu"))) sc.mu = tbl.at(key("mu")).as_double_array();
        if (tbl.has(key("delta"))) sc.delta = tbl.at(key("delta")).as_double_array();
    } catch (const std::runtime_error& e) {
        throw CliError(2, e.what());
    }
    if (opt.reps_override > 0) sc.reps = opt.reps_override;
    if (opt.seed_override >= 0) sc.seed = static_cast<std::uint64_t>(opt.seed_override);
    if (!opt.weight_override.empty()) sc.weight = opt.weight_override;

    if (sc.model != "mean" && sc.model != "ar")
        throw CliError(2, "model must be 'mean' or 'ar'");
    if (sc.rho0.empty()) throw CliError(2, "config needs a rho0 list");
    if (sc.model == "mean" && sc.d0.empty()) throw CliError(2, "mean model needs a d0 list");
    if (sc.model == "ar") {
        if (sc.mu.empty() || sc.mu.size() != sc.delta.size())
            throw CliError(2, "ar model needs mu and delta lists of equal length (zipped)");
    }
    return sc;
}

void echo_config(std::ostringstream& os, const StudyConfig& sc, bool quick) {
    auto list = [](const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
        return s + "]";
    };
    os << "# breakpoint " << sc.kind << " report\n";
    os << "# schema_version = 1\n";
    os << "# model = " << sc.model << "\n";
    if (sc.kind == "simulate") os << "# T = " << sc.T << "\n";
    if (sc.kind == "infill" && sc.model == "mean") os << "# grid_n = " << sc.grid_n << "\n";
    if (sc.kind == "infill" && sc.model == "ar") {
        os << "# grid_h = " << fmt(sc.grid_h) << "\n";
        os << "# y0 = " << fmt(sc.y0) << "\n";
    }
    os << "# sigma = " << fmt(sc.sigma) << "\n";
    os << "# reps = " << sc.reps << "\n";
    if (sc.kind == "simulate") os << "# trim = " << fmt(sc.trim) << "\n";
    os << "# weight = " << sc.weight << "\n";
    os << "# seed = " << sc.seed << "\n";
    os << "# rho0 = " << list(sc.rho0) << "\n";
    if (sc.model == "mean") os << "# d0 = " << list(sc.d0) << "\n";
    if (sc.model == "ar") {
        os << "# mu = " << list(sc.mu) << "\n";
        os << "# delta = " << list(sc.delta) << "\n";
    }
    os << "# quick_mode = " << (quick ? "true" : "false") << "\n";
}

void append_summary(std::ostringstream& os, const bp::McSummary& w, const bp::McSummary& l,
                    int failures) {
    os << fmt(w.rmse) << ',' << fmt(w.bias) << ',' << fmt(w.stderr_) << ',' << fmt(l.rmse) << ','
       << fmt(l.bias) << ',' << fmt(l.stderr_) << ',' << failures << '\n';
}

int cmd_simulate(const StudyOptions& opt) {
    StudyConfig sc = read_study_config(opt, "simulate");
    bp::WeightScheme w = parse_weight(sc.weight);
    bool quick = sc.reps < 1000;
    if (quick)
        std::cerr << "warning: quick mode (reps = " << sc.reps
                  << " < 1000); summaries will be dominated by sampling noise\n";

    std::ostringstream os;
    echo_config(os, sc, quick);
    std::size_t cell = 0;
    try {
        if (sc.model == "mean") {
            os << "rho0,d0,rmse_new,bias_new,stderr_new,rmse_ls,bias_ls,stderr_ls,failures\n";
            for (double r0 : sc.rho0)
                for (double d : sc.d0) {
                    bp::MeanBreakConfig mc;
                    mc.T = sc.T;
                    mc.rho0 = r0;
                    mc.d0 = d;
                    mc.sigma = sc.sigma;
                    bp::McReport rep =
                        bp::run_mc(mc, w, sc.trim, sc.reps, bp::derive_seed(sc.seed, cell));
                    os << fmt(r0) << ',' << fmt(d) << ',';
                    append_summary(os, rep.weighted, rep.ls, rep.failures);
                    write_hist(hist_path(opt.out, cell, "new"), rep.weighted.hist);
                    write_hist(hist_path(opt.out, cell, "ls"), rep.ls.hist);
                    ++cell;
                }
        } else {
            os << "mu,delta,beta1,beta2,rho0,rmse_new,bias_new,stderr_new,"
                  "rmse_ls,bias_ls,stderr_ls,failures\n";
            for (std::size_t m = 0; m < sc.mu.size(); ++m)
                for (double r0 : sc.rho0) {
                    bp::ArBreakConfig ac;
                    ac.T = sc.T;
                    ac.rho0 = r0;
                    ac.mu = sc.mu[m];
                    ac.delta = sc.delta[m];
                    ac.sigma = sc.sigma;
                    ac.y0 = sc.y0;
                    bp::McReport rep =
                        bp::run_mc(ac, w, sc.trim, sc.reps, bp::derive_seed(sc.seed, cell));
                    os << fmt(ac.mu) << ',' << fmt(ac.delta) << ',' << fmt(ac.beta1()) << ','
                       << fmt(ac.beta2()) << ',' << fmt(r0) << ',';
                    append_summary(os, rep.weighted, rep.ls, rep.failures);
                    write_hist(hist_path(opt.out, cell, "new"), rep.weighted.hist);
                    write_hist(hist_path(opt.out, cell, "ls"), rep.ls.hist);
                    ++cell;
                }
        }
    } catch (const std::invalid_argument& e) {
        throw CliError(2, e.what());
    } catch (const std::runtime_error& e) {
        throw CliError(4, e.what());
    }
    write_text(opt.out, os.str());
    return 0;
}

int cmd_infill(const StudyOptions& opt) {
    StudyConfig sc = read_study_config(opt, "infill");
    bp::WeightScheme w = parse_weight(sc.weight);
    const bp::WeightScheme unit = bp::WeightScheme::unit();
    bool quick = sc.reps < 1000;
    if (quick)
        std::cerr << "warning: quick mode (reps = " << sc.reps
                  << " < 1000); summaries will be dominated by sampling noise\n";

    std::ostringstream os;
    echo_config(os, sc, quick);
    std::size_t cell = 0;
    try {
        if (sc.model == "mean") {
            os << "rho0,d0,rmse_new,bias_new,stderr_new,rmse_ls,bias_ls,stderr_ls,failures\n";
            for (double r0 : sc.rho0)
                for (double d : sc.d0) {
                    std::uint64_t cs = bp::derive_seed(sc.seed, cell);
                    auto sw = bp::infill_mean_limit(static_cast<int>(sc.grid_n), sc.reps, r0, d,
                                                    w, cs);
                    auto sl = bp::infill_mean_limit(static_cast<int>(sc.grid_n), sc.reps, r0, d,
                                                    unit, cs);
                    os << fmt(r0) << ',' << fmt(d) << ',';
                    append_summary(os, sw.summary, sl.summary, 0);
                    write_hist(hist_path(opt.out, cell, "new"), sw.summary.hist);
                    write_hist(hist_path(opt.out, cell, "ls"), sl.summary.hist);
                    ++cell;
                }
        } else {
            os << "mu,delta,rho0,rmse_new,bias_new,stderr_new,"
                  "rmse_ls,bias_ls,stderr_ls,failures\n";
            double j0 = sc.y0 * std::sqrt(sc.grid_h) / sc.sigma;
            for (std::size_t m = 0; m < sc.mu.size(); ++m)
                for (double r0 : sc.rho0) {
                    std::uint64_t cs = bp::derive_seed(sc.seed, cell);
                    auto sw = bp::infill_ar_limit(sc.grid_h, sc.reps, r0, sc.mu[m], sc.delta[m],
                                                  w, cs, j0);
                    auto sl = bp::infill_ar_limit(sc.grid_h, sc.reps, r0, sc.mu[m], sc.delta[m],
                                                  unit, cs, j0);
                    os << fmt(sc.mu[m]) << ',' << fmt(sc.delta[m]) << ',' << fmt(r0) << ',';
                    append_summary(os, sw.summary, sl.summary, 0);
                    write_hist(hist_path(opt.out, cell, "new"), sw.summary.hist);
                    write_hist(hist_path(opt.out, cell, "ls"), sl.summary.hist);
                    ++cell;
                }
        }
    } catch (const std::invalid_argument& e) {
        throw CliError(2, e.what());
    } catch (const std::runtime_error& e) {
        throw CliError(4, e.what());
    }
    write_text(opt.out, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Break-date estimation for linear regression and AR(1) models"};
    app.require_subcommand(1);

    EstimateOptions eo;
    auto add_estimate_flags = [&](CLI::App* cmd) {
        cmd->add_option("--input", eo.input, "CSV input with header row")->required();
        cmd->add_option("--response", eo.response, "response column name")->required();
        cmd->add_option("--break-cols", eo.break_cols, "comma list of breaking regressors")
            ->required();
        cmd->add_option("--stable-cols", eo.stable_cols, "comma list of stable regressors");
        cmd->add_option("--lags", eo.lags, "build lag1..lagN columns of the response");
        cmd->add_flag("--no-intercept", eo.no_intercept, "do not add the intercept");
        cmd->add_option("--weight", eo.weight, "unit | power:<gamma> | fisher | custom:<path>");
        cmd->add_option("--trim", eo.trim, "candidate trimming fraction");
        cmd->add_option("--cov", eo.cov, "delta covariance: hac | iid");
        cmd->add_option("--ci", eo.ci,
                        "none | analytic | residual:<B> | wild:<B> | recursive:<B>");
        cmd->add_option("--level", eo.level, "confidence level");
        cmd->add_option("--seed", eo.seed, "bootstrap seed");
        cmd->add_option("--out", eo.out, "report path (JSON; stdout when omitted)");
        cmd->add_option("--objective-out", eo.objective_out, "objective curve CSV path");
    };
    CLI::App* est = app.add_subcommand("estimate", "estimate a break date on CSV data");
    add_estimate_flags(est);
    CLI::App* cic = app.add_subcommand("ci", "estimate plus a required confidence interval");
    add_estimate_flags(cic);

    StudyOptions so;
    auto add_study_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", so.config, "TOML experiment config")->required();
        cmd->add_option("--out", so.out, "summary CSV path")->required();
        cmd->add_option("--reps", so.reps_override, "override replication count");
        cmd->add_option("--seed", so.seed_override, "override master seed");
        cmd->add_option("--weight", so.weight_override, "override weight spec");
    };
    CLI::App* sim = app.add_subcommand("simulate", "finite-sample Monte Carlo study");
    add_study_flags(sim);
    CLI::App* inf = app.add_subcommand("infill", "limit-experiment study");
    add_study_flags(inf);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (est->parsed()) return cmd_estimate(eo);
        if (cic->parsed()) {
            eo.require_ci = true;
            return cmd_estimate(eo);
        }
        if (sim->parsed()) return cmd_simulate(so);
        if (inf->parsed()) return cmd_infill(so);
    } catch (const CliError& e) {
        std::cerr << (e.code == 2 ? "config error: " : e.code == 3 ? "data error: "
                                                                   : "estimation error: ")
                  << e.what() << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
