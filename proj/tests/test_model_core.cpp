#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "regkern/errors.hpp"
#include "regkern/linalg.hpp"
#include "regkern/model_core.hpp"
#include "test_support.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace regkern;

TEST_SUITE("model_core") {

TEST_CASE("build_regressor forms the zero-padded Toeplitz regressor") {
    VectorXd u(3);
    u << 1, 2, 3;
    const MatrixXd phi = build_regressor(u, 2, 3);
    MatrixXd expect(3, 2);
    expect << 1, 0, 2, 1, 3, 2;
    CHECK(testsup::matrix_rel_err(phi, expect) == 0.0);

    CHECK_THROWS_AS(build_regressor(u, 0, 3), DimensionError);
    CHECK_THROWS_AS(build_regressor(u, 4, 3), DimensionError);
    CHECK_THROWS_AS(build_regressor(u, 2, 5), DimensionError);
}

TEST_CASE("make_dataset with burn-in drops the zero-padded rows") {
    const VectorXd u = testsup::gaussian_vector(40, 11);
    const VectorXd y = testsup::gaussian_vector(40, 12);
    const Dataset full = make_dataset(u, y, 5, false);
    CHECK(full.N == 40);
    CHECK(full.phi.rows() == 40);

    const Dataset trimmed = make_dataset(u, y, 5, true);
    CHECK(trimmed.N == 35);
    CHECK(trimmed.phi.rows() == 35);
    CHECK(testsup::matrix_rel_err(trimmed.phi, full.phi.bottomRows(35)) == 0.0);
    CHECK((trimmed.y - full.y.tail(35)).cwiseAbs().maxCoeff() == 0.0);
    // Every retained row is fully populated: the first retained row is the
    // one at original index n, [u(n), ..., u(1)].
    for (int j = 0; j < 5; ++j) CHECK(trimmed.phi(0, j) == doctest::Approx(u(5 - j)));
}

TEST_CASE("ls_estimate solves the normal equations and refuses singular designs") {
    auto md = testsup::white_dataset(4, 200, 0.01, 31);
    const VectorXd theta = ls_estimate(md.d);
    const VectorXd resid = md.d.phi.transpose() * (md.d.y - md.d.phi * theta);
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-8 * md.d.y.norm());

    Dataset degenerate = md.d;
    degenerate.phi.col(1) = degenerate.phi.col(0);  // exactly collinear columns
    CHECK_THROWS_AS(ls_estimate(degenerate), IllConditionedError);
}

TEST_CASE("rls_estimate matches the covariance-form dense formula") {
    auto md = testsup::white_dataset(5, 60, 0.2, 7);
    const MatrixXd P = testsup::random_spd(5, 8);
    const double s2 = 0.3;
    const VectorXd fast = rls_estimate(md.d, P, s2);

    MatrixXd Q = md.d.phi * P * md.d.phi.transpose();
    Q.diagonal().array() += s2;
    const VectorXd dense = P * md.d.phi.transpose() * Q.ldlt().solve(md.d.y);
    CHECK((fast - dense).norm() < 1e-9 * (1.0 + dense.norm()));
}

TEST_CASE("rls_estimate stays exact for singular P") {
    auto md = testsup::white_dataset(5, 60, 0.2, 19);
    const VectorXd v = testsup::gaussian_vector(5, 20);
    const MatrixXd P = v * v.transpose();  // rank one
    const double s2 = 0.5;
    const VectorXd fast = rls_estimate(md.d, P, s2);

    MatrixXd Q = md.d.phi * P * md.d.phi.transpose();
    Q.diagonal().array() += s2;
    const VectorXd dense = P * md.d.phi.transpose() * Q.ldlt().solve(md.d.y);
    CHECK((fast - dense).norm() < 1e-9 * (1.0 + dense.norm()));
    // The estimate lives in the range of P.
    const VectorXd dir = v / v.norm();
    const VectorXd off_range = fast - dir * dir.dot(fast);
    CHECK(off_range.norm() < 1e-10 * (1.0 + fast.norm()));
}

TEST_CASE("rls_estimate approaches ls_estimate as regularization vanishes") {
    auto md = testsup::white_dataset(6, 300, 0.1, 23);
    const VectorXd ls = ls_estimate(md.d);
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {1e2, 1e4, 1e6, 1e8}) {
        const MatrixXd P = c * MatrixXd::Identity(6, 6);
        const double err = (rls_estimate(md.d, P, md.sigma2) - ls).norm() / ls.norm();
        CHECK(err < prev * 1.01);
        prev = err;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("rls_estimate rejects non-psd kernels") {
    auto md = testsup::white_dataset(3, 30, 0.1, 41);
    MatrixXd bad = MatrixXd::Identity(3, 3);
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(rls_estimate(md.d, bad, 0.1), InvalidKernelError);
    MatrixXd asym = MatrixXd::Identity(3, 3);
    asym(0, 1) = 0.5;  // asymmetric beyond tolerance
    CHECK_THROWS_AS(rls_estimate(md.d, asym, 0.1), InvalidKernelError);
}

TEST_CASE("mseg_exact and msey_exact match Monte Carlo averages") {
    const int n = 4, N = 50, reps = 10000;
    auto md = testsup::white_dataset(n, N, 0.0, 3);  // noise added per replicate below
    const MatrixXd P = testsup::random_spd(n, 4);
    const double s2 = 0.4;
    const VectorXd theta0 = md.theta0;

    const double mseg = mseg_exact(P, md.d.phi, theta0, s2);
    const double msey = msey_exact(P, md.d.phi, theta0, s2);

    // Precompute the n-dimensional solve operator for speed.
    const MatrixXd gram = md.d.phi.transpose() * md.d.phi;
    MatrixXd H = P * gram;
    H.diagonal().array() += s2;
    const Eigen::PartialPivLU<MatrixXd> lu(H);
    const VectorXd mean_y = md.d.phi * theta0;

    std::mt19937_64 gen(777);
    std::normal_distribution<double> nd(0.0, std::sqrt(s2));
    double sum_g = 0, sumsq_g = 0, sum_y = 0, sumsq_y = 0;
    for (int r = 0; r < reps; ++r) {
        VectorXd e(N), estar(N);
        for (int t = 0; t < N; ++t) e(t) = nd(gen);
        for (int t = 0; t < N; ++t) estar(t) = nd(gen);
        const VectorXd y = mean_y + e;
        const VectorXd theta_r = lu.solve(P * (md.d.phi.transpose() * y));
        const double vg = (theta_r - theta0).squaredNorm();
        const double vy = (mean_y + estar - md.d.phi * theta_r).squaredNorm();
        sum_g += vg;
        sumsq_g += vg * vg;
        sum_y += vy;
        sumsq_y += vy * vy;
    }
    const double mean_g = sum_g / reps;
    const double se_g = std::sqrt((sumsq_g / reps - mean_g * mean_g) / reps);
    const double mean_yv = sum_y / reps;
    const double se_y = std::sqrt((sumsq_y / reps - mean_yv * mean_yv) / reps);

    CHECK(std::abs(mean_g - mseg) < 3.0 * se_g);
    CHECK(std::abs(mean_yv - msey) < 3.0 * se_y);
}

TEST_CASE("regularization improves on least squares for small positive weights") {
    const int n = 6, N = 80;
    auto md = testsup::white_dataset(n, N, 0.3, 13);
    const double s2 = 0.3;
    for (std::uint64_t seed : {101u, 202u, 303u}) {
        const MatrixXd A = testsup::random_spd(n, seed);
        const VectorXd beta = VectorXd::LinSpaced(40, -8.0, 0.0)
                                  .unaryExpr([](double e) { return std::pow(10.0, e); });
        const GainCurve curve = regularization_gain_curve(A, beta, md.d.phi, md.theta0, s2);
        CHECK(curve.mseg.minCoeff() < curve.mseg_ls);
        CHECK(curve.msey.minCoeff() < curve.msey_ls);
        // The beta -> 0 end of the curve recovers the LS MSE.
        CHECK(testsup::rel_diff(curve.mseg(0), curve.mseg_ls) < 1e-5);
        CHECK(testsup::rel_diff(curve.msey(0), curve.msey_ls) < 1e-5);
    }
    const VectorXd bad = VectorXd::Zero(2);
    CHECK_THROWS_AS(
        regularization_gain_curve(MatrixXd::Identity(n, n), bad, md.d.phi, md.theta0, s2),
        DomainError);
}

TEST_CASE("gain curve endpoints agree with the exact MSE evaluators") {
    const int n = 4, N = 60;
    auto md = testsup::white_dataset(n, N, 0.2, 29);
    const double s2 = 0.25;
    const MatrixXd A = testsup::random_spd(n, 30);
    VectorXd beta(2);
    beta << 0.5, 2.0;
    const GainCurve curve = regularization_gain_curve(A, beta, md.d.phi, md.theta0, s2);
    for (int i = 0; i < beta.size(); ++i) {
        // P^{-1} = beta A / s2  =>  P = (s2 / beta) A^{-1}.
        const MatrixXd P = (s2 / beta(i)) * spd_inverse(A);
        CHECK(testsup::rel_diff(curve.mseg(i), mseg_exact(P, md.d.phi, md.theta0, s2)) < 1e-9);
        CHECK(testsup::rel_diff(curve.msey(i), msey_exact(P, md.d.phi, md.theta0, s2)) < 1e-9);
    }
}

TEST_CASE("fit_metric endpoint values") {
    const VectorXd theta0 = testsup::gaussian_vector(8, 55);
    CHECK(fit_metric(theta0, theta0) == doctest::Approx(100.0));
    const VectorXd centered =
        2.0 * theta0 - VectorXd::Constant(8, theta0.mean());
    CHECK(fit_metric(centered, theta0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK_THROWS_AS(fit_metric(theta0, VectorXd::Constant(8, 3.0)), UndefinedFitError);
}

TEST_CASE("sigma2_estimate is close to the true noise variance") {
    const double s2 = 0.7;
    double acc = 0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) acc += sigma2_estimate(testsup::white_dataset(5, 400, s2, 1000 + r).d);
    CHECK(std::abs(acc / reps - s2) < 0.05 * s2);
    auto tiny = testsup::white_dataset(5, 5, 0.1, 2);
    CHECK_THROWS_AS(sigma2_estimate(tiny.d), DimensionError);
}

}  // TEST_SUITE
