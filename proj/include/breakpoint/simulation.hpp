#ifndef BREAKPOINT_SIMULATION_HPP
#define BREAKPOINT_SIMULATION_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "breakpoint/estimators.hpp"
#include "breakpoint/inference.hpp"
#include "breakpoint/regression.hpp"
#include "breakpoint/rng.hpp"
#include "breakpoint/threads.hpp"
#include "breakpoint/weights.hpp"

namespace bp {

struct MeanBreakConfig {
    Eigen::Index T = 100;
    double rho0 = 0.5;
    double d0 = 1.0;    // break size on the sqrt(T) scale: the mean shifts by d0/sqrt(T)
    double sigma = 1.0;

    void validate() const {
        if (T < 20) throw std::invalid_argument("MeanBreakConfig: T must be at least 20");
        if (!(rho0 > 0.0 && rho0 < 1.0))
            throw std::invalid_argument("MeanBreakConfig: rho0 must lie in (0, 1)");
        if (!(sigma > 0.0)) throw std::invalid_argument("MeanBreakConfig: sigma must be positive");
        if (!std::isfinite(d0)) throw std::invalid_argument("MeanBreakConfig: d0 must be finite");
    }
    Eigen::Index k0() const { return static_cast<Eigen::Index>(std::lround(rho0 * static_cast<double>(T))); }
};

struct ArBreakConfig {
    Eigen::Index T = 200;
    double rho0 = 0.5;
    double mu = 1.0;      // pre-break drift on the local-to-unity scale
    double delta = 1.0;   // drift increment after the break
    double sigma = 1.0;
    double y0 = 0.0;

    double beta1() const { return std::exp(-mu / static_cast<double>(T)); }
    double beta2() const { return std::exp(-(mu + delta) / static_cast<double>(T)); }
    void validate() const {
        if (T < 20) throw std::invalid_argument("ArBreakConfig: T must be at least 20");
        if (!(rho0 > 0.0 && rho0 < 1.0))
            throw std::invalid_argument("ArBreakConfig: rho0 must lie in (0, 1)");
        if (!(sigma > 0.0)) throw std::invalid_argument("ArBreakConfig: sigma must be positive");
        if (!std::isfinite(mu) || !std::isfinite(delta))
            throw std::invalid_argument("ArBreakConfig: drift parameters must be finite");
    }
    Eigen::Index k0() const { return static_cast<Eigen::Index>(std::floor(rho0 * static_cast<double>(T))); }
};

// Intercept-shift design: X is a column of ones, the break column is that
// same intercept, and y jumps by d0/sqrt(T) after observation k0.
inline Dataset gen_mean_break(const MeanBreakConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    NormalGen g(seed);
    const Eigen::Index T = cfg.T, k0 = cfg.k0();
    const double jump = cfg.d0 / std::sqrt(static_cast<double>(T));
    Dataset ds;
    ds.X = MatrixXd::Ones(T, 1);
    ds.R = MatrixXd::Identity(1, 1);
    ds.y.resize(T);
    for (Eigen::Index t = 0; t < T; ++t)
        ds.y(t) = (t + 1 > k0 ? jump : 0.0) + cfg.sigma * g();
    ds.labels = {"const"};
    return ds;
}

// AR(1) series of length T+1 whose first entry is the pre-sample value; the
// slope switches from beta1 to beta2 after pair k0.
inline VectorXd gen_ar1_break(const ArBreakConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    NormalGen g(seed);
    const Eigen::Index T = cfg.T, k0 = cfg.k0();
    const double b1 = cfg.beta1(), b2 = cfg.beta2();
    VectorXd y(T + 1);
    y(0) = cfg.y0;
    for (Eigen::Index t = 1; t <= T; ++t)
        y(t) = (t <= k0 ? b1 : b2) * y(t - 1) + cfg.sigma * g();
    return y;
}

struct McSummary {
    double rmse = 0.0;
    double bias = 0.0;
    double stderr_ = 0.0;
    std::vector<long> hist = std::vector<long>(100, 0);  // rho in [0,1), bins of 0.01
};

struct McReport {
    McSummary weighted, ls;
    std::vector<double> rho_weighted, rho_ls;  // one entry per successful replication
    int reps = 0;
    int failures = 0;
};

namespace detail {

inline McSummary summarize(const std::vector<double>& rho, double rho0) {
    McSummary s;
    const auto n = static_cast<double>(rho.size());
    double mean = 0.0;
    for (double r : rho) mean += r;
    mean /= n;
    double var = 0.0, msq = 0.0;
    for (double r : rho) {
        var += (r - mean) * (r - mean);
        msq += (r - rho0) * (r - rho0);
        auto bin = static_cast<std::size_t>(std::floor(r * 100.0));
        ++s.hist[std::min<std::size_t>(bin, 99)];
    }
    s.bias = mean - rho0;
    s.stderr_ = std::sqrt(var / n);
    s.rmse = std::sqrt(msq / n);
    return s;
}

inline void check_mc_args(int reps) {
    if (reps < 100) throw std::invalid_argument("run_mc: need at least 100 replications");
}

inline McReport collect(const std::vector<double>& rw, const std::vector<double>& rl,
                        const std::vector<char>& fail, double rho0, int reps) {
    McReport rep;
    rep.reps = reps;
    for (int i = 0; i < reps; ++i) {
        if (fail[static_cast<std::size_t>(i)]) {
            ++rep.failures;
            continue;
        }
        rep.rho_weighted.push_back(rw[static_cast<std::size_t>(i)]);
        rep.rho_ls.push_back(rl[static_cast<std::size_t>(i)]);
    }
    if (rep.failures * 100 > reps)
        throw std::runtime_error("run_mc: more than 1% of replications failed");
    rep.weighted = summarize(rep.rho_weighted, rho0);
    rep.ls = summarize(rep.rho_ls, rho0);
    return rep;
}

}  // namespace detail

// Monte Carlo over the mean-shift model: each replication estimates the
// break date with the given weight and with the unit weight on the same
// draw. Deterministic in master_seed for any worker count.
inline McReport run_mc(const MeanBreakConfig& cfg, const WeightScheme& w, double trim,
                       int reps, std::uint64_t master_seed) {
    cfg.validate();
    detail::check_mc_args(reps);
    const auto n = static_cast<std::size_t>(reps);
    std::vector<double> rw(n), rl(n);
    std::vector<char> fail(n, 0);
    const WeightScheme unit = WeightScheme::unit();
    parallel_for(n, [&](std::size_t i) {
        try {
            Dataset ds = gen_mean_break(cfg, derive_seed(master_seed, i));
            rw[i] = estimate_break(ds, w, trim).rho_hat;
            rl[i] = estimate_break(ds, unit, trim).rho_hat;
        } catch (const std::runtime_error&) {
            fail[i] = 1;
        }
    });
    return detail::collect(rw, rl, fail, cfg.rho0, reps);
}

// Monte Carlo over the AR(1) model. When the pre-break slope is stationary
// the pre-sample value is redrawn from its stationary law each replication;
// otherwise cfg.y0 is used as given.
inline McReport run_mc(const ArBreakConfig& cfg, const WeightScheme& w, double trim,
                       int reps, std::uint64_t master_seed) {
    cfg.validate();
    detail::check_mc_args(reps);
    const auto n = static_cast<std::size_t>(reps);
    std::vector<double> rw(n), rl(n);
    std::vector<char> fail(n, 0);
    const WeightScheme unit = WeightScheme::unit();
    const double b1 = cfg.beta1();
    const bool stationary = std::abs(b1) < 1.0;
    const double sd0 = stationary ? cfg.sigma / std::sqrt(1.0 - b1 * b1) : 0.0;
    parallel_for(n, [&](std::size_t i) {
        try {
            std::uint64_t rep_seed = derive_seed(master_seed, i);
            ArBreakConfig rc = cfg;
            if (stationary) {
                NormalGen gy(derive_seed(rep_seed, 1));
                rc.y0 = sd0 * gy();
            }
            VectorXd y = gen_ar1_break(rc, derive_seed(rep_seed, 0));
            rw[i] = estimate_break_ar1(y, w, trim).rho_hat;
            rl[i] = estimate_break_ar1(y, unit, trim).rho_hat;
        } catch (const std::runtime_error&) {
            fail[i] = 1;
        }
    });
    return detail::collect(rw, rl, fail, cfg.rho0, reps);
}

struct LimitSample {
    std::vector<double> rho;
    McSummary summary;
};

// Limit experiment for the mean-shift model: one Brownian bridge per
// replication, deterministic drift from (rho0, d0), and the weighted argmax
// over an equally spaced grid restricted to [0.01, 0.99].
inline LimitSample infill_mean_limit(int grid_n, int reps, double rho0, double d0,
                                     const WeightScheme& w, std::uint64_t seed) {
    if (grid_n < 200) throw std::invalid_argument("infill_mean_limit: grid_n must be >= 200");
    detail::check_mc_args(reps);
    if (!(rho0 > 0.0 && rho0 < 1.0))
        throw std::invalid_argument("infill_mean_limit: rho0 must lie in (0, 1)");
    if (!w.is_scalar())
        throw WeightShapeMismatch("infill_mean_limit takes a scalar weight scheme");

    const auto n = static_cast<std::size_t>(reps);
    const double gn = grid_n;
    const Eigen::Index ilo = static_cast<Eigen::Index>(std::ceil(0.01 * gn - 1e-9));
    const Eigen::Index ihi = static_cast<Eigen::Index>(std::floor(0.99 * gn + 1e-9));
    LimitSample out;
    out.rho.resize(n);
    parallel_for(n, [&](std::size_t r) {
        NormalGen g(derive_seed(seed, r));
        const double sq = std::sqrt(1.0 / gn);
        std::vector<double> B(static_cast<std::size_t>(grid_n) + 1, 0.0);
        for (int i = 1; i <= grid_n; ++i)
            B[static_cast<std::size_t>(i)] = B[static_cast<std::size_t>(i - 1)] + sq * g();
        const double b1 = B.back();
        double best = -1.0, bestrho = 0.0;
        for (Eigen::Index i = ilo; i <= ihi; ++i) {
            double rho = static_cast<double>(i) / gn;
            double bridge = (B[static_cast<std::size_t>(i)] - rho * b1) /
                            std::sqrt(rho * (1.0 - rho));
            double drift = (rho <= rho0)
                               ? -(1.0 - rho0) * std::sqrt(rho / (1.0 - rho)) * d0
                               : -rho0 * std::sqrt((1.0 - rho) / rho) * d0;
            double wt = bridge + drift;
            double om = w.omega(rho);
            double value = om * om * wt * wt;
            if (value > best) {
                best = value;
                bestrho = rho;
            }
        }
        out.rho[r] = bestrho;
    });
    out.summary = detail::summarize(out.rho, rho0);
    return out;
}

// Limit experiment for the AR(1) model: a local-to-unity diffusion with
// drift switching from mu to mu+delta at rho0, simulated by its exact
// transition on a grid of mesh grid_h, and a split-fit objective
//   V(rho) = (J(rho)^2 - J(0)^2 - rho)^2 / int_0^rho J^2
//          + (J(1)^2 - J(rho)^2 - (1-rho))^2 / int_rho^1 J^2
// maximized after weighting. Candidates start at 0.01 and run through 1 -
// grid_h; integrals are trapezoid sums.
inline LimitSample infill_ar_limit(double grid_h, int reps, double rho0, double mu,
                                   double delta, const WeightScheme& w, std::uint64_t seed,
                                   double j0 = 0.0) {
    if (!(grid_h > 0.0 && grid_h <= 0.01))
        throw std::invalid_argument("infill_ar_limit: grid_h must lie in (0, 0.01]");
    detail::check_mc_args(reps);
    if (!(rho0 > 0.0 && rho0 < 1.0))
        throw std::invalid_argument("infill_ar_limit: rho0 must lie in (0, 1)");
    if (!w.is_scalar())
        throw WeightShapeMismatch("infill_ar_limit takes a scalar weight scheme");

    const auto N = static_cast<std::size_t>(std::lround(1.0 / grid_h));
    const auto n = static_cast<std::size_t>(reps);
    const auto klo = static_cast<std::size_t>(std::ceil(0.01 / grid_h - 1e-9));
    LimitSample out;
    out.rho.resize(n);
    parallel_for(n, [&](std::size_t r) {
        NormalGen g(derive_seed(seed, r));
        std::vector<double> J(N + 1), Q(N + 1, 0.0);
        J[0] = j0;
        for (std::size_t i = 0; i < N; ++i) {
            double a = mu + (static_cast<double>(i) * grid_h > rho0 ? delta : 0.0);
            double ea = std::exp(-a * grid_h);
            double var = std::abs(a) < 1e-14 ? grid_h : -std::expm1(-2.0 * a * grid_h) / (2.0 * a);
            J[i + 1] = ea * J[i] + std::sqrt(var) * g();
            Q[i + 1] = Q[i] + 0.5 * grid_h * (J[i] * J[i] + J[i + 1] * J[i + 1]);
        }
        const double j0sq = J[0] * J[0], jNsq = J[N] * J[N], qN = Q[N];
        double best = -1.0, bestrho = 0.0;
        for (std::size_t k = klo; k <= N - 1; ++k) {
            double rho = static_cast<double>(k) * grid_h;
            double den1 = Q[k], den2 = qN - Q[k];
            if (!(den1 > 0.0) || !(den2 > 0.0)) continue;
            double num1 = J[k] * J[k] - j0sq - rho;
            double num2 = jNsq - J[k] * J[k] - (1.0 - rho);
            double v = num1 * num1 / den1 + num2 * num2 / den2;
            if (!std::isfinite(v)) continue;
            double om = w.omega(rho);
            double value = om * om * v;
            if (value > best) {
                best = value;
                bestrho = rho;
            }
        }
        out.rho[r] = bestrho;
    });
    out.summary = detail::summarize(out.rho, rho0);
    return out;
}

// Limit law of the estimation error for a break of fixed (non-shrinking)
// size: the signed argmax of W(s) - |s|/2 over the whole line. Shares the
// early-stopped random walk engine with the quantile table.
inline std::vector<double> infill_large_break_limit(std::size_t reps, std::uint64_t seed,
                                                    double step = 0.01,
                                                    double horizon = 400.0) {
    return argmax_w::signed_sample(reps, step, horizon, seed);
}

}  // namespace bp

#endif
