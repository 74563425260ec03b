#ifndef BREAKPOINT_REGRESSION_HPP
#define BREAKPOINT_REGRESSION_HPP

#include <Eigen/Dense>
#include <string>
#include <tuple>
#include <vector>

#include "breakpoint/errors.hpp"

namespace bp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Relative cutoff below which a design is treated as rank deficient.
inline constexpr double kSingularTol = 1e-10;

struct RegressionFit {
    VectorXd coefficients;
    VectorXd residuals;
    double ssr = 0.0;
};

// Response y, regressors X (stable columns first), and the 0/1 selection
// matrix R picking the q break-affected regressors, z_t = R'x_t.
struct Dataset {
    VectorXd y;
    MatrixXd X;
    MatrixXd R;
    std::vector<std::string> labels;

    Eigen::Index T() const { return y.size(); }
    Eigen::Index p() const { return X.cols(); }
    Eigen::Index q() const { return R.cols(); }
    MatrixXd Z() const { return X * R; }

    void validate() const {
        if (X.rows() != y.size())
            throw std::invalid_argument("dataset: X rows must match y length");
        if (T() <= 2 * p())
            throw std::invalid_argument("dataset: need T > 2p observations");
        if (R.rows() != p() || R.cols() < 1 || R.cols() > p())
            throw std::invalid_argument("dataset: R must be p x q with 1 <= q <= p");
        for (Eigen::Index j = 0; j < R.cols(); ++j) {
            int ones = 0;
            for (Eigen::Index i = 0; i < R.rows(); ++i) {
                double e = R(i, j);
                if (e != 0.0 && e != 1.0)
                    throw std::invalid_argument("dataset: R entries must be 0 or 1");
                if (e == 1.0) ++ones;
            }
            if (ones != 1)
                throw std::invalid_argument("dataset: each R column selects exactly one regressor");
        }
        for (Eigen::Index j = 0; j < R.cols(); ++j)
            for (Eigen::Index j2 = j + 1; j2 < R.cols(); ++j2)
                if ((R.col(j).array() * R.col(j2).array()).sum() > 0)
                    throw std::invalid_argument("dataset: R columns must select distinct regressors");
    }
};

namespace detail {
// Rank check on the pivoted R factor: the diagonal decays like the singular
// values, so its min/max ratio is a cheap stand-in for the SVD cutoff.
inline void require_full_rank(const Eigen::ColPivHouseholderQR<MatrixXd>& qr,
                              Eigen::Index cols, const char* what) {
    VectorXd diag = qr.matrixR().diagonal().head(cols).cwiseAbs();
    double mx = diag.maxCoeff();
    if (mx <= 0.0 || diag.minCoeff() < kSingularTol * mx)
        throw SingularDesign(what);
}
}  // namespace detail

// Projection residual maker M = I - X(X'X)^{-1}X', applied through the QR
// factorization of X; the T x T matrix itself is never formed.
class Annihilator {
  public:
    explicit Annihilator(const MatrixXd& X) : X_(X), qr_(X) {
        detail::require_full_rank(qr_, X.cols(), "annihilator design is rank deficient");
    }

    VectorXd apply(const VectorXd& v) const { return v - X_ * qr_.solve(v); }
    MatrixXd apply(const MatrixXd& V) const { return V - X_ * qr_.solve(V); }

    // Coefficients of the projection being removed, (X'X)^{-1}X'v.
    VectorXd coefficients(const VectorXd& v) const { return qr_.solve(v); }

  private:
    MatrixXd X_;
    Eigen::ColPivHouseholderQR<MatrixXd> qr_;
};

inline RegressionFit ols_fit(const MatrixXd& X, const VectorXd& y) {
    if (X.rows() != y.size())
        throw std::invalid_argument("ols_fit: dimension mismatch");
    Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
    detail::require_full_rank(qr, X.cols(), "ols design is rank deficient");
    RegressionFit fit;
    fit.coefficients = qr.solve(y);
    fit.residuals = y - X * fit.coefficients;
    fit.ssr = fit.residuals.squaredNorm();
    return fit;
}

inline VectorXd annihilate(const MatrixXd& X, const VectorXd& v) {
    return Annihilator(X).apply(v);
}

// Break regressor block at candidate k (k = number of pre-break rows):
// rows 1..k are zero, rows k+1..T carry z_t.
inline MatrixXd break_block(const Dataset& ds, Eigen::Index k) {
    MatrixXd Zk = MatrixXd::Zero(ds.T(), ds.q());
    MatrixXd Z = ds.Z();
    Zk.bottomRows(ds.T() - k) = Z.bottomRows(ds.T() - k);
    return Zk;
}

// Sum-of-squares split at candidate k: the no-break SSR equals the broken
// model's SSR plus the explained gain V_T(k)^2. Returns (sbar, s_k, v_k_sq),
// with v_k_sq computed from the quadratic form so the caller can verify
// sbar = s_k + v_k_sq independently.
inline std::tuple<double, double, double> ssr_decomposition_check(const Dataset& ds,
                                                                  Eigen::Index k) {
    ds.validate();
    const Eigen::Index T = ds.T(), p = ds.p();
    if (k < p || k > T - p)
        throw CandidateOutOfRange("ssr decomposition needs p <= k <= T-p");

    Annihilator ann(ds.X);
    VectorXd my = ann.apply(ds.y);
    double sbar = my.squaredNorm();

    MatrixXd Zk = break_block(ds, k);
    MatrixXd aug(T, p + ds.q());
    aug << ds.X, Zk;
    double s_k = ols_fit(aug, ds.y).ssr;

    MatrixXd mz = ann.apply(Zk);
    MatrixXd S = mz.transpose() * mz;
    VectorXd b = mz.transpose() * ds.y;
    Eigen::LDLT<MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw SingularSubsample("break block at k is collinear with the design");
    double v_k_sq = b.dot(ldlt.solve(b));
    return {sbar, s_k, v_k_sq};
}

}  // namespace bp

#endif
