#ifndef BREAKPOINT_INFERENCE_HPP
#define BREAKPOINT_INFERENCE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "breakpoint/errors.hpp"
#include "breakpoint/estimators.hpp"
#include "breakpoint/regression.hpp"
#include "breakpoint/rng.hpp"
#include "breakpoint/threads.hpp"
#include "breakpoint/weights.hpp"

namespace bp {

enum class CovKind { IID, HAC };

// Bartlett-kernel bandwidth rule, overridable everywhere it is used.
inline Eigen::Index nw_bandwidth(Eigen::Index T) {
    return static_cast<Eigen::Index>(
        std::floor(4.0 * std::pow(static_cast<double>(T) / 100.0, 2.0 / 9.0)));
}

// Newey-West long-run covariance of the rows of V.
inline MatrixXd newey_west(const MatrixXd& V, Eigen::Index bw) {
    const Eigen::Index T = V.rows();
    MatrixXd S = V.transpose() * V / static_cast<double>(T);
    for (Eigen::Index j = 1; j <= bw && j < T; ++j) {
        double w = 1.0 - static_cast<double>(j) / static_cast<double>(bw + 1);
        MatrixXd G =
            V.bottomRows(T - j).transpose() * V.topRows(T - j) / static_cast<double>(T);
        S += w * (G + G.transpose());
    }
    return S;
}

struct DeltaEstimate {
    VectorXd delta;
    MatrixXd cov;      // sandwich covariance of delta_hat
    VectorXd se;
    double sigma2 = 0.0;
    MatrixXd vhat;     // Z_k'MZ_k / T
    VectorXd residuals;
    Eigen::Index k = 0;
};

// Break-magnitude estimate at a fixed date: delta_hat regresses the
// annihilated response on the annihilated break block, and the covariance is
// the sandwich Vhat^{-1} Uhat Vhat^{-1} / T with Uhat either sigma2*Vhat or a
// Newey-West estimate from the per-observation scores.
inline DeltaEstimate estimate_delta(const Dataset& ds, Eigen::Index k,
                                    CovKind kind = CovKind::IID,
                                    Eigen::Index bandwidth = -1) {
    ds.validate();
    const Eigen::Index T = ds.T(), p = ds.p(), q = ds.q();
    if (k < p || k > T - p)
        throw CandidateOutOfRange("estimate_delta: k outside [p, T-p]");

    Annihilator ann(ds.X);
    MatrixXd MZ = ann.apply(break_block(ds, k));
    VectorXd my = ann.apply(ds.y);

    MatrixXd ZMZ = MZ.transpose() * MZ;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(ZMZ);
    double mx = es.eigenvalues().maxCoeff();
    if (mx <= 0.0 || es.eigenvalues().minCoeff() < kSingularTol * mx)
        throw SingularSubsample("estimate_delta: Z_k'MZ_k rank deficient");

    DeltaEstimate out;
    out.k = k;
    out.delta = es.eigenvectors() *
                (es.eigenvectors().transpose() * (MZ.transpose() * my))
                    .cwiseQuotient(es.eigenvalues());
    out.residuals = my - MZ * out.delta;
    double dof = static_cast<double>(T - p - q);
    out.sigma2 = out.residuals.squaredNorm() / dof;
    out.vhat = ZMZ / static_cast<double>(T);

    MatrixXd uhat;
    if (kind == CovKind::IID) {
        uhat = out.sigma2 * out.vhat;
    } else {
        MatrixXd scores = MZ.array().colwise() * out.residuals.array();
        uhat = newey_west(scores, bandwidth >= 0 ? bandwidth : nw_bandwidth(T));
    }
    Eigen::LDLT<MatrixXd> vld(out.vhat);
    MatrixXd cov = vld.solve(vld.solve(uhat).transpose()) / static_cast<double>(T);
    out.cov = 0.5 * (cov + cov.transpose());
    out.se = out.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    return out;
}

// Law of the location of the maximum of W(t) - |t|/2 over the real line,
// W a two-sided standard Brownian motion. Used for analytic break-date
// intervals.
namespace argmax_w {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// P(V <= x) for x >= 0; the law is symmetric about zero.
inline double cdf_positive(double x) {
    if (x <= 0.0) return 0.5;
    return 1.0 + std::sqrt(x / (2.0 * std::numbers::pi)) * std::exp(-x / 8.0) +
           1.5 * std::exp(x) * normal_cdf(-1.5 * std::sqrt(x)) -
           0.5 * (x + 5.0) * normal_cdf(-0.5 * std::sqrt(x));
}

// Root of P(|V| <= c) = level.
inline double quantile_closed_form(double level) {
    double target = 0.5 * (1.0 + level);
    double lo = 0.0, hi = 200.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (cdf_positive(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Simulates the signed argmax once per path, positive side first. A side
// whose running maximum leads the current value by more than 40 cannot
// recover (the drifted supremum is Exp(1), so the miss probability is e^-40)
// and is cut short.
inline std::vector<double> signed_sample(std::size_t paths, double step, double horizon,
                                         std::uint64_t seed) {
    std::vector<double> out(paths);
    const std::size_t nsteps = static_cast<std::size_t>(horizon / step);
    const double sq = std::sqrt(step);
    parallel_for(paths, [&](std::size_t j) {
        NormalGen g(derive_seed(seed, j));
        double best = 0.0, bestloc = 0.0;
        for (int side = 0; side < 2; ++side) {
            double s = 0.0, m = 0.0, loc = 0.0;
            for (std::size_t i = 1; i <= nsteps; ++i) {
                s += sq * g() - 0.5 * step;
                if (s > m) {
                    m = s;
                    loc = static_cast<double>(i) * step;
                } else if (m - s > 40.0) {
                    break;
                }
            }
            if (m > best) {
                best = m;
                bestloc = (side == 0 ? loc : -loc);
            }
        }
        out[j] = bestloc;
    });
    return out;
}

inline std::vector<double> sample(std::size_t paths, double step, double horizon,
                                  std::uint64_t seed) {
    std::vector<double> v = signed_sample(paths, step, horizon, seed);
    for (double& x : v) x = std::abs(x);
    return v;
}

inline double sample_quantile(std::vector<double> v, double level) {
    if (v.empty()) throw std::invalid_argument("sample_quantile: empty sample");
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(
        std::ceil(level * static_cast<double>(v.size())));
    rank = std::min(std::max<std::size_t>(rank, 1), v.size());
    return v[rank - 1];
}

// Frozen quantiles of |V| at the standard levels, from one simulation of
// 4e6 paths on a 0.01 grid out to +-400 with the seed below. Argmax
// locations are grid multiples, so two decimals are exact. The
// regenerate_argmax_table test reproduces them.
inline constexpr std::uint64_t kTableSeed = 0x41524d4158575451ull;
inline constexpr std::size_t kTablePaths = 4000000;
inline constexpr double kTableStep = 0.01;
inline constexpr double kTableHorizon = 400.0;
inline constexpr double kTableLevels[4] = {0.80, 0.90, 0.95, 0.99};
inline constexpr double kTableValues[4] = {4.70, 7.69, 11.03, 19.81};

}  // namespace argmax_w

inline double argmax_w_quantile(double level) {
    if (!(level > 0.5 && level < 1.0))
        throw std::invalid_argument("argmax_w_quantile: level must lie in (0.5, 1)");
    for (int i = 0; i < 4; ++i)
        if (std::abs(level - argmax_w::kTableLevels[i]) < 1e-9)
            return argmax_w::kTableValues[i];
    return argmax_w::quantile_closed_form(level);
}

struct ConfidenceInterval {
    Eigen::Index lower_k = 0;
    Eigen::Index upper_k = 0;
    double level = 0.0;
    std::string method;
};

// Analytic break-date interval. The signal-to-noise ratio
//   L = (delta' Sz Om delta)^2 / (delta' Om Xi Om delta)
// scales the argmax-law quantile into observation units; Om is the weight
// matrix at the estimated date (identity for the unit weight), Sz the raw
// second-moment matrix of z, Xi the long-run variance of z_t e_t.
inline ConfidenceInterval analytic_ci(const Dataset& ds, Eigen::Index k_hat,
                                      const WeightScheme& w, double level,
                                      CovKind kind = CovKind::HAC,
                                      Eigen::Index bandwidth = -1) {
    ds.validate();
    const Eigen::Index T = ds.T();
    DeltaEstimate de = estimate_delta(ds, k_hat, kind, bandwidth);

    MatrixXd Z = ds.Z();
    MatrixXd sz = Z.transpose() * Z / static_cast<double>(T);

    MatrixXd om;
    if (w.is_scalar()) {
        double o = w.omega(static_cast<double>(k_hat) / static_cast<double>(T));
        om = (o * o) * MatrixXd::Identity(ds.q(), ds.q());
    } else {
        om = de.vhat;
    }

    MatrixXd xi;
    if (kind == CovKind::IID) {
        xi = de.sigma2 * sz;
    } else {
        MatrixXd scores = Z.array().colwise() * de.residuals.array();
        xi = newey_west(scores, bandwidth >= 0 ? bandwidth : nw_bandwidth(T));
    }

    double num = de.delta.dot(sz * (om * de.delta));
    if (num <= 1e-12)
        throw ZeroMagnitude("analytic_ci: estimated break magnitude is numerically zero");
    VectorXd od = om * de.delta;
    double den = od.dot(xi * od);
    if (den <= 0.0)
        throw ZeroMagnitude("analytic_ci: degenerate long-run variance");
    double lhat = num * num / den;

    double c = argmax_w_quantile(level);
    auto half = static_cast<Eigen::Index>(std::floor(c / lhat)) + 1;
    ConfidenceInterval ci;
    ci.lower_k = std::max<Eigen::Index>(1, k_hat - half);
    ci.upper_k = std::min<Eigen::Index>(T - 1, k_hat + half);
    ci.level = level;
    ci.method = (kind == CovKind::IID) ? "analytic-iid" : "analytic-hac";
    return ci;
}

enum class BootstrapKind { Residual, Wild, RecursiveAR };

struct BootstrapResult {
    ConfidenceInterval ci;
    std::vector<Eigen::Index> k_draws;  // successful replicate break dates
    int failures = 0;
};

namespace detail {

inline ConfidenceInterval order_statistic_ci(std::vector<Eigen::Index>& pool, double level,
                                             std::string method) {
    std::sort(pool.begin(), pool.end());
    const auto n = static_cast<double>(pool.size());
    double alpha = 1.0 - level;
    // The guard keeps ranks stable when n * alpha / 2 lands on an integer up
    // to floating-point noise in (1 - level).
    auto lo = static_cast<std::size_t>(std::ceil(0.5 * alpha * n - 1e-9));
    auto hi = static_cast<std::size_t>(std::ceil((1.0 - 0.5 * alpha) * n - 1e-9));
    lo = std::min(std::max<std::size_t>(lo, 1), pool.size());
    hi = std::min(std::max<std::size_t>(hi, 1), pool.size());
    ConfidenceInterval ci;
    ci.lower_k = pool[lo - 1];
    ci.upper_k = pool[hi - 1];
    ci.level = level;
    ci.method = std::move(method);
    return ci;
}

inline void check_bootstrap_args(int B, double level) {
    if (B < 99) throw std::invalid_argument("bootstrap: need B >= 99 replicates");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("bootstrap: level must lie in (0, 1)");
}

inline void check_failure_rate(int failures, int B) {
    if (failures > static_cast<int>(0.05 * B))
        throw std::runtime_error("bootstrap: more than 5% of replicates failed");
}

}  // namespace detail

// Bootstrap interval for the break date in the regression model. Residual
// resampling draws centered residuals with replacement; the wild variant
// flips each residual's sign with probability one half, preserving its
// magnitude at every t. Replicates that fail to estimate are dropped; more
// than 5% of them failing is an error.
inline BootstrapResult bootstrap_ci(const Dataset& ds, const WeightScheme& w, double trim,
                                    BootstrapKind kind, int B, double level,
                                    std::uint64_t seed) {
    detail::check_bootstrap_args(B, level);
    if (kind == BootstrapKind::RecursiveAR)
        throw std::invalid_argument("bootstrap_ci: recursive scheme needs the AR series API");
    ds.validate();
    const Eigen::Index T = ds.T();

    BreakFit base = estimate_break(ds, w, trim);
    MatrixXd W(T, ds.p() + ds.q());
    W << ds.X, break_block(ds, base.k_hat);
    RegressionFit joint = ols_fit(W, ds.y);
    VectorXd fitted = ds.y - joint.residuals;
    VectorXd centered = joint.residuals.array() - joint.residuals.mean();

    BootstrapResult out;
    out.k_draws.reserve(static_cast<std::size_t>(B));
    Dataset boot = ds;
    for (int b = 0; b < B; ++b) {
        NormalGen g(derive_seed(seed, static_cast<std::uint64_t>(b)));
        for (Eigen::Index t = 0; t < T; ++t) {
            if (kind == BootstrapKind::Residual) {
                auto idx = static_cast<Eigen::Index>(g.bits() % static_cast<std::uint64_t>(T));
                boot.y(t) = fitted(t) + centered(idx);
            } else {
                boot.y(t) = fitted(t) + joint.residuals(t) * g.sign();
            }
        }
        try {
            out.k_draws.push_back(estimate_break(boot, w, trim).k_hat);
        } catch (const std::runtime_error&) {
            ++out.failures;
        }
    }
    detail::check_failure_rate(out.failures, B);

    std::vector<Eigen::Index> pool = out.k_draws;
    pool.push_back(base.k_hat);
    out.ci = detail::order_statistic_ci(
        pool, level, kind == BootstrapKind::Residual ? "bootstrap-residual" : "bootstrap-wild");
    return out;
}

// Recursive bootstrap for the AR(1) model: regime slopes are re-estimated at
// the fitted date, centered residuals are redrawn, and each replicate series
// is rebuilt recursively from the observed pre-sample value.
inline BootstrapResult bootstrap_ci_ar1(const VectorXd& y, const WeightScheme& w, double trim,
                                        int B, double level, std::uint64_t seed) {
    detail::check_bootstrap_args(B, level);
    const Eigen::Index T = y.size() - 1;

    BreakFit base = estimate_break_ar1(y, w, trim);
    const Eigen::Index k = base.k_hat;
    double a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;
    for (Eigen::Index t = 1; t <= T; ++t) {
        (t <= k ? a1 : a2) += y(t - 1) * y(t);
        (t <= k ? b1 : b2) += y(t - 1) * y(t - 1);
    }
    if (b1 <= 0.0 || b2 <= 0.0)
        throw DegenerateSubsample("bootstrap_ci_ar1: regime without lag variation");
    const double beta1 = a1 / b1, beta2 = a2 / b2;

    VectorXd resid(T);
    for (Eigen::Index t = 1; t <= T; ++t)
        resid(t - 1) = y(t) - (t <= k ? beta1 : beta2) * y(t - 1);
    VectorXd centered = resid.array() - resid.mean();

    BootstrapResult out;
    out.k_draws.reserve(static_cast<std::size_t>(B));
    VectorXd ystar(T + 1);
    for (int b = 0; b < B; ++b) {
        NormalGen g(derive_seed(seed, static_cast<std::uint64_t>(b)));
        ystar(0) = y(0);
        for (Eigen::Index t = 1; t <= T; ++t) {
            auto idx = static_cast<Eigen::Index>(g.bits() % static_cast<std::uint64_t>(T));
            ystar(t) = (t <= k ? beta1 : beta2) * ystar(t - 1) + centered(idx);
        }
        try {
            out.k_draws.push_back(estimate_break_ar1(ystar, w, trim).k_hat);
        } catch (const std::runtime_error&) {
            ++out.failures;
        }
    }
    detail::check_failure_rate(out.failures, B);

    std::vector<Eigen::Index> pool = out.k_draws;
    pool.push_back(base.k_hat);
    out.ci = detail::order_statistic_ci(pool, level, "bootstrap-recursive-ar");
    return out;
}

}  // namespace bp

#endif
