#ifndef BREAKPOINT_WEIGHTS_HPP
#define BREAKPOINT_WEIGHTS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "breakpoint/regression.hpp"

namespace bp {

enum class WeightKind { Unit, PowerConcave, FisherMatrix, CustomScalar };

// Weighting rule applied to the break objective across candidate dates.
// Scalar kinds evaluate omega(rho); FisherMatrix weights the quadratic form
// with Omega_k = Z_k'MZ_k / T instead.
struct WeightScheme {
    WeightKind kind = WeightKind::Unit;
    double gamma = 0.0;                 // PowerConcave exponent
    std::vector<double> table;          // CustomScalar values on a uniform rho grid over [0,1]
    std::string description = "unit";

    static WeightScheme unit() { return {}; }

    static WeightScheme power_concave(double g) {
        WeightScheme w;
        w.kind = WeightKind::PowerConcave;
        w.gamma = g;
        char buf[48];
        std::snprintf(buf, sizeof buf, "power-concave gamma=%g", g);
        w.description = buf;
        return w;
    }

    static WeightScheme fisher() {
        WeightScheme w;
        w.kind = WeightKind::FisherMatrix;
        w.description = "fisher information matrix";
        return w;
    }

    // Tabulated scalar weight; resampled onto a fixed 1024-point grid so the
    // admissibility slope check and evaluation share one representation.
    static WeightScheme custom_scalar(const std::vector<double>& values) {
        if (values.size() < 3)
            throw std::invalid_argument("custom weight table needs at least 3 points");
        WeightScheme w;
        w.kind = WeightKind::CustomScalar;
        w.table.resize(1024);
        const std::size_t n = values.size();
        for (std::size_t i = 0; i < w.table.size(); ++i) {
            double pos = static_cast<double>(i) / (w.table.size() - 1) * (n - 1);
            std::size_t lo = static_cast<std::size_t>(pos);
            if (lo >= n - 1) lo = n - 2;
            double frac = pos - static_cast<double>(lo);
            w.table[i] = (1.0 - frac) * values[lo] + frac * values[lo + 1];
        }
        w.description = "custom tabulated scalar";
        return w;
    }

    bool is_scalar() const { return kind != WeightKind::FisherMatrix; }

    // Scalar weight value at break fraction rho.
    double omega(double rho) const {
        switch (kind) {
            case WeightKind::Unit:
                return 1.0;
            case WeightKind::PowerConcave: {
                double core = rho * (1.0 - rho);
                return core <= 0.0 ? 0.0 : std::pow(core, gamma);
            }
            case WeightKind::CustomScalar: {
                if (rho <= 0.0) return table.front();
                if (rho >= 1.0) return table.back();
                double pos = rho * (table.size() - 1);
                std::size_t lo = static_cast<std::size_t>(pos);
                if (lo >= table.size() - 1) lo = table.size() - 2;
                double frac = pos - static_cast<double>(lo);
                return (1.0 - frac) * table[lo] + frac * table[lo + 1];
            }
            case WeightKind::FisherMatrix:
                throw WeightShapeMismatch("fisher weight has no scalar value");
        }
        return 1.0;
    }
};

struct WeightValidation {
    bool admissible = true;
    std::vector<std::string> violations;

    void flag(const std::string& v) {
        admissible = false;
        violations.push_back(v);
    }
};

// Symmetric PSD square root via eigendecomposition; eigenvalues below the
// clip are treated as zero so roundoff negatives cannot poison the root.
inline MatrixXd psd_sqrt(const MatrixXd& S, double clip = 1e-12) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam(i) = lam(i) > clip ? std::sqrt(lam(i)) : 0.0;
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Admissibility screen. Scalar weights must stay nonnegative and obey the
// slope bound |omega'/omega| < 1/(2 rho(1-rho)) over the trimmed candidate
// range; for the power family that reduces to 0 <= gamma <= 1/2. Tabulated
// weights are checked by central differences, so the bound is applied only
// where the estimator actually searches (a vanishing boundary cusp would
// otherwise dominate the difference quotient). Violations are reported, not
// enforced: estimation proceeds with a warning.
inline WeightValidation validate_weight_scheme(const WeightScheme& w, double trim = 0.15) {
    WeightValidation report;
    switch (w.kind) {
        case WeightKind::Unit:
        case WeightKind::FisherMatrix:
            break;
        case WeightKind::PowerConcave:
            if (!(w.gamma >= 0.0 && w.gamma <= 0.5)) {
                char buf[80];
                std::snprintf(buf, sizeof buf,
                              "power exponent gamma=%g outside the admissible range [0, 1/2]",
                              w.gamma);
                report.flag(buf);
            }
            break;
        case WeightKind::CustomScalar: {
            const auto& t = w.table;
            const std::size_t n = t.size();
            const double step = 1.0 / (n - 1);
            int negatives = 0, slope_hits = 0;
            double first_bad_rho = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (t[i] < 0.0) ++negatives;
                if (i == 0 || i + 1 == n) continue;
                double rho = static_cast<double>(i) * step;
                if (rho < trim - 1e-12 || rho > 1.0 - trim + 1e-12) continue;
                double deriv = (t[i + 1] - t[i - 1]) / (2.0 * step);
                double bound = t[i] / (2.0 * rho * (1.0 - rho));
                if (t[i] > 0.0 && std::fabs(deriv) >= bound) {
                    if (slope_hits == 0) first_bad_rho = rho;
                    ++slope_hits;
                }
            }
            if (negatives > 0)
                report.flag("tabulated weight has negative entries");
            if (slope_hits > 0) {
                char buf[96];
                std::snprintf(buf, sizeof buf,
                              "slope bound |w'/w| < 1/(2 rho(1-rho)) fails at %d grid points (first at rho=%.4f)",
                              slope_hits, first_bad_rho);
                report.flag(buf);
            }
            break;
        }
    }
    return report;
}

// Data-dependent screen for the Fisher weight: Omega_k must be symmetric PSD
// and bounded across candidate dates. Checked at a spread of interior k.
inline WeightValidation validate_weight_scheme(const WeightScheme& w, const Dataset& ds,
                                               double trim = 0.15) {
    WeightValidation report = validate_weight_scheme(w, trim);
    if (w.kind != WeightKind::FisherMatrix) return report;
    ds.validate();
    Annihilator ann(ds.X);
    const Eigen::Index T = ds.T();
    const double bound = 1e6 * ds.Z().squaredNorm() / static_cast<double>(T);
    for (Eigen::Index k : {T / 10, T / 4, T / 2, 3 * T / 4, 9 * T / 10}) {
        if (k < ds.p() || k > T - ds.p()) continue;
        MatrixXd mz = ann.apply(break_block(ds, k));
        MatrixXd omega = mz.transpose() * mz / static_cast<double>(T);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(omega);
        if (es.eigenvalues().minCoeff() < -1e-10)
            report.flag("fisher weight not PSD at k=" + std::to_string(k));
        if (es.eigenvalues().maxCoeff() > bound)
            report.flag("fisher weight unbounded at k=" + std::to_string(k));
    }
    return report;
}

}  // namespace bp

#endif
