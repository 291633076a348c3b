#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "regkern/errors.hpp"
#include "regkern/linalg.hpp"
#include "test_support.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace regkern;

TEST_SUITE("linalg") {

TEST_CASE("symmetric_part and is_symmetric") {
    MatrixXd m(2, 2);
    m << 1, 2, 4, 3;
    MatrixXd s = symmetric_part(m);
    CHECK(s(0, 1) == doctest::Approx(3.0));
    CHECK(s(1, 0) == doctest::Approx(3.0));
    CHECK(is_symmetric(s));
    CHECK_FALSE(is_symmetric(m));
    CHECK(is_symmetric(m, 2.0));  // generous tolerance accepts anything
}

TEST_CASE("all_finite flags NaN and infinity") {
    MatrixXd m = MatrixXd::Ones(3, 3);
    CHECK(all_finite(m));
    m(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(all_finite(m));
    m(1, 2) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(all_finite(m));
}

TEST_CASE("condition_estimate tracks the true condition number of diagonal matrices") {
    MatrixXd d = VectorXd::LinSpaced(4, 1.0, 4.0).asDiagonal();
    const double est = condition_estimate(d);
    // LDLT rcond is an estimate; require the right order of magnitude.
    CHECK(est >= 4.0 / 3.0);
    CHECK(est <= 40.0);

    MatrixXd singular = MatrixXd::Zero(3, 3);
    singular(0, 0) = 1.0;
    CHECK(condition_estimate(singular) >= kConditionLimit);
}

TEST_CASE("logdet_lu matches eigenvalue computation and tracks sign") {
    const MatrixXd a = testsup::random_spd(6, 17);
    bool positive = false;
    const double ld = logdet_lu(a, &positive);
    CHECK(positive);
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    const double ld_ref = es.eigenvalues().array().log().sum();
    CHECK(ld == doctest::Approx(ld_ref).epsilon(1e-10));

    MatrixXd neg = a;
    neg.row(0) *= -1.0;  // flips the determinant sign, keeps |det|
    bool pos2 = true;
    const double ld2 = logdet_lu(neg, &pos2);
    CHECK_FALSE(pos2);
    CHECK(ld2 == doctest::Approx(ld).epsilon(1e-10));
}

TEST_CASE("logdet_spd agrees with logdet_lu on SPD input and throws otherwise") {
    const MatrixXd a = testsup::random_spd(5, 99);
    CHECK(logdet_spd(a) == doctest::Approx(logdet_lu(a)).epsilon(1e-10));
    MatrixXd indef = MatrixXd::Identity(3, 3);
    indef(2, 2) = -1.0;
    CHECK_THROWS_AS(logdet_spd(indef), InvalidKernelError);
}

TEST_CASE("psd_factor reconstructs definite and semidefinite matrices") {
    const MatrixXd a = testsup::random_spd(7, 5);
    const MatrixXd c = psd_factor(a);
    CHECK(testsup::matrix_rel_err(c * c.transpose(), a) < 1e-10);

    // Rank-1 positive semidefinite case.
    const VectorXd v = testsup::gaussian_vector(5, 3);
    const MatrixXd r1 = v * v.transpose();
    const MatrixXd c1 = psd_factor(r1);
    CHECK(testsup::matrix_rel_err(c1 * c1.transpose(), r1) < 1e-9);

    MatrixXd indef = MatrixXd::Identity(3, 3);
    indef(0, 0) = -0.5;
    CHECK_THROWS_AS(psd_factor(indef), Error);
}

TEST_CASE("spd_inverse inverts SPD matrices") {
    const MatrixXd a = testsup::random_spd(6, 21);
    const MatrixXd inv = spd_inverse(a);
    CHECK(testsup::matrix_rel_err(a * inv, MatrixXd::Identity(6, 6)) < 1e-10);
}

}  // TEST_SUITE
