#ifndef BREAKPOINT_ESTIMATORS_HPP
#define BREAKPOINT_ESTIMATORS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "breakpoint/errors.hpp"
#include "breakpoint/regression.hpp"
#include "breakpoint/weights.hpp"

namespace bp {

struct BreakFit {
    Eigen::Index k_hat = 0;           // pre-break observation count
    double rho_hat = 0.0;             // k_hat / T
    std::vector<Eigen::Index> grid;   // candidates that produced a value
    std::vector<double> objective_curve;
    std::string method;               // "LS" or "Weighted"
    double trim = 0.0;
};

// Candidate scan for the partial-break regression model. The annihilated
// cross products needed at every k are suffix sums over t > k, so one pass
// from the right prices all candidates:
//   Z_k'MZ_k = H_k - G_k (X'X)^{-1} G_k',  H_k = sum z_t z_t', G_k = sum z_t x_t'
//   Z_k'My   = sum z_t (My)_t
// with the sums over t > k and My computed once.
class BreakScan {
  public:
    explicit BreakScan(const Dataset& ds)
        : T_(ds.T()), q_(ds.q()), ann_(ds.X), xtx_ldlt_(ds.X.transpose() * ds.X) {
        ds.validate();
        ey_ = ann_.apply(ds.y);
        sbar_ = ey_.squaredNorm();
        MatrixXd Z = ds.Z();
        const MatrixXd& X = ds.X;

        H_.assign(T_ + 1, MatrixXd::Zero(q_, q_));
        G_.assign(T_ + 1, MatrixXd::Zero(q_, ds.p()));
        b_.assign(T_ + 1, VectorXd::Zero(q_));
        for (Eigen::Index k = T_ - 1; k >= 0; --k) {
            VectorXd z = Z.row(k).transpose();
            H_[k] = H_[k + 1] + z * z.transpose();
            G_[k] = G_[k + 1] + z * X.row(k);
            b_[k] = b_[k + 1] + z * ey_(k);
        }
    }

    Eigen::Index T() const { return T_; }
    double sbar() const { return sbar_; }

    // Explained-SSR gain V_T(k)^2 at candidate k; false when the sub-sample
    // block is numerically singular.
    bool vt_sq(Eigen::Index k, double* out) const {
        MatrixXd S = subsample_info(k);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
        double mx = es.eigenvalues().maxCoeff();
        if (mx <= 0.0 || es.eigenvalues().minCoeff() < kSingularTol * mx) return false;
        VectorXd tmp = es.eigenvectors().transpose() * b_[k];
        *out = (tmp.array().square() / es.eigenvalues().array()).sum();
        return true;
    }

    // Weighted objective Q_T(k)^2. Scalar weights multiply V_T(k)^2 by
    // omega(k/T)^2; the Fisher weight sandwiches Omega_k = Z_k'MZ_k/T between
    // the symmetric square roots of Z_k'MZ_k.
    bool qt_sq(Eigen::Index k, const WeightScheme& w, double* out) const {
        if (w.is_scalar()) {
            double v;
            if (!vt_sq(k, &v)) return false;
            double om = w.omega(static_cast<double>(k) / static_cast<double>(T_));
            *out = om * om * v;
            return true;
        }
        MatrixXd S = subsample_info(k);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
        double mx = es.eigenvalues().maxCoeff();
        if (mx <= 0.0 || es.eigenvalues().minCoeff() < kSingularTol * mx) return false;
        VectorXd delta = es.eigenvectors() *
                         (es.eigenvectors().transpose() * b_[k]).cwiseQuotient(es.eigenvalues());
        MatrixXd root = psd_sqrt(S);
        VectorXd half = root * delta;
        *out = half.dot(S * half) / static_cast<double>(T_);
        return true;
    }

    // Magnitude estimate and information matrix at a fixed k, shared with the
    // inference layer.
    MatrixXd subsample_info(Eigen::Index k) const {
        return H_[k] - G_[k] * xtx_ldlt_.solve(G_[k].transpose());
    }
    VectorXd score(Eigen::Index k) const { return b_[k]; }
    const VectorXd& my() const { return ey_; }

  private:
    Eigen::Index T_, q_;
    Annihilator ann_;
    Eigen::LDLT<MatrixXd> xtx_ldlt_;
    VectorXd ey_;
    double sbar_ = 0.0;
    std::vector<MatrixXd> H_, G_;
    std::vector<VectorXd> b_;
};

inline double vt_sq(const Dataset& ds, Eigen::Index k) {
    ds.validate();
    if (k < ds.p() || k > ds.T() - ds.p())
        throw CandidateOutOfRange("vt_sq: k outside [p, T-p]");
    double v;
    if (!BreakScan(ds).vt_sq(k, &v))
        throw SingularSubsample("vt_sq: Z_k'MZ_k rank deficient at k=" + std::to_string(k));
    return v;
}

inline double qt_sq(const Dataset& ds, Eigen::Index k, const WeightScheme& w) {
    ds.validate();
    if (k < ds.p() || k > ds.T() - ds.p())
        throw CandidateOutOfRange("qt_sq: k outside [p, T-p]");
    double v;
    if (!BreakScan(ds).qt_sq(k, w, &v))
        throw SingularSubsample("qt_sq: Z_k'MZ_k rank deficient at k=" + std::to_string(k));
    return v;
}

namespace detail {
inline void candidate_range(Eigen::Index T, Eigen::Index margin, double trim,
                            Eigen::Index* kmin, Eigen::Index* kmax) {
    if (!(trim >= 0.0 && trim < 0.5))
        throw std::invalid_argument("trim must lie in [0, 0.5)");
    double t = static_cast<double>(T);
    *kmin = std::max<Eigen::Index>(margin, static_cast<Eigen::Index>(std::ceil(trim * t)));
    *kmax = std::min<Eigen::Index>(T - margin, static_cast<Eigen::Index>(std::floor((1.0 - trim) * t)));
    if (*kmin > *kmax)
        throw std::invalid_argument("trim leaves no candidate dates");
}
}  // namespace detail

// Break-date estimator for the regression model: maximizes Q_T(k)^2 over the
// trimmed candidate range. Unit weight reproduces the LS estimator exactly.
// Candidates with singular sub-sample blocks are skipped; ties go to the
// smallest k.
inline BreakFit estimate_break(const Dataset& ds, const WeightScheme& w, double trim = 0.15) {
    ds.validate();
    BreakScan scan(ds);
    if (scan.sbar() <= 1e-14 * std::max(1.0, ds.y.squaredNorm()))
        throw AllCandidatesSingular(
            "estimate_break: response carries no variation beyond the stable regressors");
    Eigen::Index kmin, kmax;
    detail::candidate_range(ds.T(), ds.p(), trim, &kmin, &kmax);

    BreakFit fit;
    fit.trim = trim;
    fit.method = (w.kind == WeightKind::Unit) ? "LS" : "Weighted";
    double best = -1.0;
    for (Eigen::Index k = kmin; k <= kmax; ++k) {
        double value;
        if (!scan.qt_sq(k, w, &value)) continue;
        fit.grid.push_back(k);
        fit.objective_curve.push_back(value);
        if (value > best) {
            best = value;
            fit.k_hat = k;
        }
    }
    if (fit.grid.empty())
        throw AllCandidatesSingular("estimate_break: every candidate date is singular");
    fit.rho_hat = static_cast<double>(fit.k_hat) / static_cast<double>(ds.T());
    return fit;
}

// AR(1) break estimator. The series (length T+1, first entry is the
// pre-sample value) is split at candidate k into two no-intercept AR fits;
// the weighted objective is the explained-SSR gain of the split,
// omega_k^2 (Sbar_1 - S(k)^2), maximized over k. With the unit weight the
// argmax is exactly the argmin of S(k)^2, the LS split estimator.
inline BreakFit estimate_break_ar1(const VectorXd& y, const WeightScheme& w, double trim = 0.15) {
    const Eigen::Index T = y.size() - 1;  // regression pairs (y_{t-1}, y_t)
    if (T < 10)
        throw std::invalid_argument("estimate_break_ar1: need at least 10 observations");
    if (!w.is_scalar())
        throw WeightShapeMismatch("estimate_break_ar1 takes a scalar weight scheme");

    std::vector<double> A(T + 1, 0.0), B(T + 1, 0.0), C(T + 1, 0.0);
    for (Eigen::Index t = 1; t <= T; ++t) {
        A[t] = A[t - 1] + y(t - 1) * y(t);
        B[t] = B[t - 1] + y(t - 1) * y(t - 1);
        C[t] = C[t - 1] + y(t) * y(t);
    }
    const double btol = 1e-12 * std::max(B[T], 1.0);
    if (B[T] <= btol)
        throw DegenerateSubsample("estimate_break_ar1: no variation in the lagged series");
    const double sbar1 = C[T] - A[T] * A[T] / B[T];

    Eigen::Index kmin, kmax;
    detail::candidate_range(T, 1, trim, &kmin, &kmax);

    BreakFit fit;
    fit.trim = trim;
    fit.method = (w.kind == WeightKind::Unit) ? "LS" : "Weighted";
    double best = -1.0;
    for (Eigen::Index k = kmin; k <= kmax; ++k) {
        double b1 = B[k], b2 = B[T] - B[k];
        if (b1 <= btol || b2 <= btol) continue;
        double ssr = (C[k] - A[k] * A[k] / b1) +
                     ((C[T] - C[k]) - (A[T] - A[k]) * (A[T] - A[k]) / b2);
        double gain = std::max(0.0, sbar1 - ssr);
        double om = w.omega(static_cast<double>(k) / static_cast<double>(T));
        double value = om * om * gain;
        fit.grid.push_back(k);
        fit.objective_curve.push_back(value);
        if (value > best) {
            best = value;
            fit.k_hat = k;
        }
    }
    if (fit.grid.empty())
        throw DegenerateSubsample("estimate_break_ar1: every candidate split is degenerate");
    fit.rho_hat = static_cast<double>(fit.k_hat) / static_cast<double>(T);
    return fit;
}

}  // namespace bp

#endif
