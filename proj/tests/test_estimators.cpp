#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "breakpoint/estimators.hpp"
#include "breakpoint/rng.hpp"
#include "breakpoint/simulation.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

bp::Dataset random_dataset(Eigen::Index T, Eigen::Index p, std::uint64_t seed,
                           double shift = 0.0, Eigen::Index k0 = 0) {
    bp::NormalGen g(seed);
    bp::Dataset ds;
    ds.X = MatrixXd(T, p);
    ds.X.col(0).setOnes();
    for (Eigen::Index j = 1; j < p; ++j)
        for (Eigen::Index t = 0; t < T; ++t) ds.X(t, j) = g();
    ds.R = MatrixXd::Zero(p, 1);
    ds.R(0, 0) = 1.0;
    ds.y = VectorXd(T);
    for (Eigen::Index t = 0; t < T; ++t) ds.y(t) = g() + (t >= k0 ? shift : 0.0);
    return ds;
}

// Reference scan, priced per candidate from scratch: the gain comes from the
// plain SSR difference of the pooled and split fits, the Fisher form from the
// annihilated score directly.
Eigen::Index oracle_khat(const bp::Dataset& ds, const bp::WeightScheme& w, double trim) {
    Eigen::Index kmin, kmax;
    bp::detail::candidate_range(ds.T(), ds.p(), trim, &kmin, &kmax);
    bp::Annihilator ann(ds.X);
    VectorXd my = ann.apply(ds.y);
    double sbar = my.squaredNorm();
    double best = -1.0;
    Eigen::Index karg = -1;
    for (Eigen::Index k = kmin; k <= kmax; ++k) {
        double value;
        try {
            if (w.kind == bp::WeightKind::FisherMatrix) {
                MatrixXd mz = ann.apply(bp::break_block(ds, k));
                value = (mz.transpose() * ds.y).squaredNorm() / static_cast<double>(ds.T());
            } else {
                MatrixXd aug(ds.T(), ds.p() + ds.q());
                aug << ds.X, bp::break_block(ds, k);
                double gain = sbar - bp::ols_fit(aug, ds.y).ssr;
                double om = w.omega(static_cast<double>(k) / static_cast<double>(ds.T()));
                value = om * om * gain;
            }
        } catch (const bp::SingularDesign&) {
            continue;
        }
        if (value > best) {
            best = value;
            karg = k;
        }
    }
    return karg;
}

Eigen::Index oracle_khat_ar1(const VectorXd& y, const bp::WeightScheme& w, double trim) {
    const Eigen::Index T = y.size() - 1;
    Eigen::Index kmin, kmax;
    bp::detail::candidate_range(T, 1, trim, &kmin, &kmax);
    auto split_ssr = [&](Eigen::Index lo, Eigen::Index hi) {
        // through-origin AR fit on pairs t in (lo, hi]
        MatrixXd X(hi - lo, 1);
        VectorXd r(hi - lo);
        for (Eigen::Index t = lo + 1; t <= hi; ++t) {
            X(t - lo - 1, 0) = y(t - 1);
            r(t - lo - 1) = y(t);
        }
        return bp::ols_fit(X, r).ssr;
    };
    const double sbar1 = split_ssr(0, T);
    double best = -1.0;
    Eigen::Index karg = -1;
    for (Eigen::Index k = kmin; k <= kmax; ++k) {
        double gain = std::max(0.0, sbar1 - split_ssr(0, k) - split_ssr(k, T));
        double om = w.omega(static_cast<double>(k) / static_cast<double>(T));
        double value = om * om * gain;
        if (value > best) {
            best = value;
            karg = k;
        }
    }
    return karg;
}

}  // namespace

TEST_CASE("a dominant mean shift is located exactly", "[estimators]") {
    bp::Dataset ds;
    ds.X = MatrixXd::Ones(10, 1);
    ds.R = MatrixXd::Ones(1, 1);
    ds.y = VectorXd(10);
    ds.y << 0, 0, 0, 0, 10, 10, 10, 10, 10, 10;
    bp::NormalGen g(1);
    for (Eigen::Index t = 0; t < 10; ++t) ds.y(t) += 1e-3 * g();
    auto fit = bp::estimate_break(ds, bp::WeightScheme::unit(), 0.1);
    CHECK(fit.k_hat == 4);
    CHECK(fit.rho_hat == Catch::Approx(0.4).epsilon(1e-12));
    CHECK(fit.method == "LS");
}

TEST_CASE("scan agrees with the per-candidate reference on small samples", "[estimators]") {
    const bp::WeightScheme schemes[] = {bp::WeightScheme::unit(),
                                        bp::WeightScheme::power_concave(0.5),
                                        bp::WeightScheme::fisher()};
    for (Eigen::Index T = 10; T <= 15; ++T) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            for (Eigen::Index p : {Eigen::Index(1), Eigen::Index(2)}) {
                auto ds = random_dataset(T, p, seed * 100 + static_cast<std::uint64_t>(T),
                                         0.9, T / 2);
                for (const auto& w : schemes) {
                    for (double trim : {0.0, 0.15}) {
                        auto fit = bp::estimate_break(ds, w, trim);
                        REQUIRE(fit.k_hat == oracle_khat(ds, w, trim));
                    }
                }
            }
        }
    }
}

TEST_CASE("unit weight reproduces the plain gain argmax", "[estimators]") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto ds = random_dataset(60, 2, seed, 0.6, 35);
        auto fit = bp::estimate_break(ds, bp::WeightScheme::unit(), 0.15);
        Eigen::Index kmin, kmax;
        bp::detail::candidate_range(60, 2, 0.15, &kmin, &kmax);
        double best = -1.0;
        Eigen::Index karg = -1;
        for (Eigen::Index k = kmin; k <= kmax; ++k) {
            double v = bp::vt_sq(ds, k);
            if (v > best) {
                best = v;
                karg = k;
            }
        }
        REQUIRE(fit.k_hat == karg);
    }
}

TEST_CASE("zero-exponent power weight is the unit weight", "[estimators]") {
    for (std::uint64_t seed = 60; seed <= 80; ++seed) {
        auto ds = random_dataset(50, 2, seed, 0.5, 20);
        auto a = bp::estimate_break(ds, bp::WeightScheme::unit(), 0.1);
        auto b = bp::estimate_break(ds, bp::WeightScheme::power_concave(0.0), 0.1);
        REQUIRE(a.k_hat == b.k_hat);
    }
}

TEST_CASE("argmax is invariant to scaling and shifting the response", "[estimators]") {
    const bp::WeightScheme schemes[] = {bp::WeightScheme::unit(),
                                        bp::WeightScheme::power_concave(0.5),
                                        bp::WeightScheme::fisher()};
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        auto ds = random_dataset(45, 2, seed, 0.8, 30);
        for (const auto& w : schemes) {
            auto base = bp::estimate_break(ds, w, 0.1);
            auto scaled = ds;
            scaled.y = 3.7 * ds.y;
            REQUIRE(bp::estimate_break(scaled, w, 0.1).k_hat == base.k_hat);
            scaled.y = -2.0 * ds.y;
            REQUIRE(bp::estimate_break(scaled, w, 0.1).k_hat == base.k_hat);
            auto shifted = ds;
            shifted.y = ds.y.array() + 11.0;
            REQUIRE(bp::estimate_break(shifted, w, 0.1).k_hat == base.k_hat);
        }
    }
}

TEST_CASE("exact objective ties resolve to the smallest candidate", "[estimators]") {
    bp::Dataset ds;
    ds.X = MatrixXd::Ones(4, 1);
    ds.R = MatrixXd::Ones(1, 1);
    ds.y = VectorXd(4);
    ds.y << 0, 1, 1, 0;
    // symmetric pattern: the gain at k=1 and k=3 is identical (1/3)
    auto fit = bp::estimate_break(ds, bp::WeightScheme::unit(), 0.0);
    REQUIRE(fit.grid.size() == 3);
    CHECK(fit.objective_curve[0] == Catch::Approx(fit.objective_curve[2]).epsilon(1e-15));
    CHECK(fit.k_hat == 1);

    // an identically zero weight makes every candidate tie at zero
    auto zero = bp::WeightScheme::custom_scalar(std::vector<double>(11, 0.0));
    auto flat = bp::estimate_break(ds, zero, 0.0);
    CHECK(flat.k_hat == flat.grid.front());
}

TEST_CASE("singular candidates are skipped, not fatal", "[estimators]") {
    // The break regressor dies after row 10, so every split past it has a
    // zero block and only the early candidates can be priced.
    bp::NormalGen g(5);
    const Eigen::Index T = 30;
    bp::Dataset ds;
    ds.X = MatrixXd::Zero(T, 2);
    ds.X.col(0).setOnes();
    for (Eigen::Index t = 0; t < 10; ++t) ds.X(t, 1) = g();
    ds.R = MatrixXd::Zero(2, 1);
    ds.R(1, 0) = 1.0;
    ds.y = VectorXd(T);
    for (Eigen::Index t = 0; t < T; ++t) ds.y(t) = g();

    auto fit = bp::estimate_break(ds, bp::WeightScheme::unit(), 0.0);
    REQUIRE(fit.grid.size() == 8);
    CHECK(fit.grid.front() == 2);
    CHECK(fit.grid.back() == 9);
    CHECK(fit.k_hat >= 2);
    CHECK(fit.k_hat <= 9);
}

TEST_CASE("a constant response cannot be scanned", "[estimators]") {
    bp::Dataset ds;
    ds.X = MatrixXd::Ones(30, 1);
    ds.R = MatrixXd::Ones(1, 1);
    ds.y = VectorXd::Constant(30, 3.3);
    CHECK_THROWS_AS(bp::estimate_break(ds, bp::WeightScheme::unit(), 0.1),
                    bp::AllCandidatesSingular);
}

TEST_CASE("estimate_break rejects invalid trims", "[estimators]") {
    auto ds = random_dataset(30, 1, 2);
    CHECK_THROWS_AS(bp::estimate_break(ds, bp::WeightScheme::unit(), 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(bp::estimate_break(ds, bp::WeightScheme::unit(), -0.01),
                    std::invalid_argument);
}

TEST_CASE("objective curve is aligned with the grid and peaks at k_hat", "[estimators]") {
    auto ds = random_dataset(40, 2, 77, 1.0, 25);
    auto fit = bp::estimate_break(ds, bp::WeightScheme::power_concave(0.5), 0.1);
    REQUIRE(fit.grid.size() == fit.objective_curve.size());
    double mx = -1.0;
    Eigen::Index at = -1;
    for (std::size_t i = 0; i < fit.grid.size(); ++i) {
        if (fit.objective_curve[i] > mx) {
            mx = fit.objective_curve[i];
            at = fit.grid[i];
        }
    }
    CHECK(at == fit.k_hat);
    CHECK(fit.rho_hat == Catch::Approx(static_cast<double>(fit.k_hat) / 40.0).epsilon(1e-12));
}

TEST_CASE("ar1 estimator matches its per-candidate reference", "[estimators]") {
    bp::ArBreakConfig cfg;
    cfg.T = 40;
    cfg.rho0 = 0.5;
    cfg.mu = 20.0;
    cfg.delta = 60.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        VectorXd y = bp::gen_ar1_break(cfg, seed);
        for (const auto& w : {bp::WeightScheme::unit(), bp::WeightScheme::power_concave(0.5)}) {
            for (double trim : {0.1, 0.15}) {
                auto fit = bp::estimate_break_ar1(y, w, trim);
                REQUIRE(fit.k_hat == oracle_khat_ar1(y, w, trim));
                REQUIRE(fit.rho_hat ==
                        Catch::Approx(static_cast<double>(fit.k_hat) / 40.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("unit-weight ar1 estimator minimizes the split ssr", "[estimators]") {
    bp::ArBreakConfig cfg;
    cfg.T = 60;
    cfg.rho0 = 0.4;
    cfg.mu = 30.0;
    cfg.delta = 80.0;
    for (std::uint64_t seed = 30; seed <= 40; ++seed) {
        VectorXd y = bp::gen_ar1_break(cfg, seed);
        auto fit = bp::estimate_break_ar1(y, bp::WeightScheme::unit(), 0.1);
        Eigen::Index kmin, kmax;
        bp::detail::candidate_range(60, 1, 0.1, &kmin, &kmax);
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index karg = -1;
        for (Eigen::Index k = kmin; k <= kmax; ++k) {
            MatrixXd x1(k, 1), x2(60 - k, 1);
            VectorXd r1(k), r2(60 - k);
            for (Eigen::Index t = 1; t <= k; ++t) {
                x1(t - 1, 0) = y(t - 1);
                r1(t - 1) = y(t);
            }
            for (Eigen::Index t = k + 1; t <= 60; ++t) {
                x2(t - k - 1, 0) = y(t - 1);
                r2(t - k - 1) = y(t);
            }
            double ssr = bp::ols_fit(x1, r1).ssr + bp::ols_fit(x2, r2).ssr;
            if (ssr < best) {
                best = ssr;
                karg = k;
            }
        }
        REQUIRE(fit.k_hat == karg);
        REQUIRE(fit.method == "LS");
    }
}

TEST_CASE("ar1 estimator input checks", "[estimators]") {
    CHECK_THROWS_AS(bp::estimate_break_ar1(VectorXd::Zero(10), bp::WeightScheme::unit(), 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(bp::estimate_break_ar1(VectorXd::Zero(41), bp::WeightScheme::unit(), 0.1),
                    bp::DegenerateSubsample);
    bp::ArBreakConfig cfg;
    cfg.T = 40;
    VectorXd y = bp::gen_ar1_break(cfg, 3);
    CHECK_THROWS_AS(bp::estimate_break_ar1(y, bp::WeightScheme::fisher(), 0.1),
                    bp::WeightShapeMismatch);
    CHECK_THROWS_AS(bp::estimate_break_ar1(y, bp::WeightScheme::unit(), 0.7),
                    std::invalid_argument);
}

TEST_CASE("candidate range endpoints", "[estimators]") {
    Eigen::Index kmin = 0, kmax = 0;
    bp::detail::candidate_range(100, 1, 0.15, &kmin, &kmax);
    CHECK(kmin == 15);
    CHECK(kmax == 85);
    bp::detail::candidate_range(100, 3, 0.0, &kmin, &kmax);
    CHECK(kmin == 3);
    CHECK(kmax == 97);
    CHECK_THROWS_AS(bp::detail::candidate_range(10, 6, 0.0, &kmin, &kmax),
                    std::invalid_argument);
}
