#include "doctest.h"

#include <random>

#include <Eigen/Eigenvalues>

#include "ctflow/model_core.hpp"
#include "oracles.hpp"

using namespace ctflow;

TEST_CASE("divergence") {
    CHECK(divergence(2, 1, 3) == 4);
    CHECK(divergence(1.7, 0.0, 1) == 1.7);
    CHECK(divergence(1.7, 5.0, 1) == 1.7);
    for (int n = 1; n <= 6; ++n) CHECK(divergence(1, 1, n) == doctest::Approx(n));
}

TEST_CASE("spectral gap against eigenvalue spread") {
    CHECK(spectral_gap(2, 1, 3) == 2);
    CHECK(oracle::pairwise_spread({2, 1, 1}) == 2);
    CHECK(spectral_gap(0.3, 0.3, 5) == 0);
    CHECK(spectral_gap(4, -2, 1) == 0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-10, 10);
    for (int n = 2; n <= 6; ++n) {
        for (int k = 0; k < 50; ++k) {
            const double p = U(rng), q = U(rng);
            std::vector<double> lambda{p};
            lambda.insert(lambda.end(), n - 1, q);
            CHECK(spectral_gap(p, q, n) == doctest::Approx(oracle::pairwise_spread(lambda)).epsilon(1e-13));
        }
    }
}

TEST_CASE("grad_u_matrix closed form") {
    Eigen::VectorXd x(2);
    x << 0.7, 0.0;
    const Eigen::MatrixXd M = grad_u_matrix(x, 2, 1);
    CHECK(M(0, 0) == 2);
    CHECK(M(1, 1) == 1);
    CHECK(M(0, 1) == 0);
    CHECK(M(1, 0) == 0);

    Eigen::VectorXd y(4);
    y << 0.3, -1.2, 2.0, 0.1;
    const Eigen::MatrixXd iso = grad_u_matrix(y, 1.5, 1.5);
    CHECK((iso - 1.5 * Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-14);

    CHECK_THROWS_AS(grad_u_matrix(Eigen::VectorXd::Zero(3), 1, 1), DomainError);
}

TEST_CASE("grad_u_matrix eigenvalues and trace, n = 3 random directions") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N01;
    for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd x(3);
        x << N01(rng), N01(rng), N01(rng);
        const VelocityGradientSample s = sample_velocity_gradient(x, 2, 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.matrix);
        const auto ev = es.eigenvalues();
        CHECK(ev(0) == doctest::Approx(1).epsilon(1e-12));
        CHECK(ev(1) == doctest::Approx(1).epsilon(1e-12));
        CHECK(ev(2) == doctest::Approx(2).epsilon(1e-12));
        CHECK(s.matrix.trace() == doctest::Approx(divergence(2, 1, 3)).epsilon(1e-13));
        // p along x / |x|
        const Eigen::VectorXd e = x.normalized();
        CHECK((s.matrix * e - 2.0 * e).norm() < 1e-12);
    }
}

TEST_CASE("gap identity examples") {
    // Left side 2(n-1)pq + (n-1)(n-2)q^2 = 8 + 2 = 10, right side 2/3 * 16 - 2/3 = 10.
    const GapIdentity g = gap_identity(2, 1, 3);
    CHECK(g.left == doctest::Approx(10));
    CHECK(g.right == doctest::Approx(10));
    CHECK(gap_consistency_check(2, 1, 3) < 1e-12);
    CHECK(gap_consistency_check(0, 0, 4) == 0);
    CHECK(gap_consistency_check(1, 1, 2) < 1e-12);
    CHECK_THROWS_AS(gap_identity(1, 1, 1), DomainError);
}

TEST_CASE("gap identity against the matrix: d^2 - tr(M^2)") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1e3, 1e3);
    std::normal_distribution<double> N01;
    for (int n = 2; n <= 5; ++n) {
        for (int k = 0; k < 200; ++k) {
            const double p = U(rng), q = U(rng);
            Eigen::VectorXd x(n);
            for (int i = 0; i < n; ++i) x(i) = N01(rng);
            const Eigen::MatrixXd M = grad_u_matrix(x, p, q);
            const double d = M.trace();
            const double lhs = d * d - (M * M).trace();
            const GapIdentity g = gap_identity(p, q, n);
            CHECK(std::abs(lhs - g.right) <= 1e-10 * g.scale);
            CHECK(g.residual < 1e-12);
        }
    }
}

TEST_CASE("ModelParams validation") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.kappa = 0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = {};
    p.c = -1;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = {};
    p.n = 0.5;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = {};
    p.model = ModelKind::DampedBurgers;
    p.kappa_damp = 0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    CHECK(model_kind_from_string("damped-burgers") == ModelKind::DampedBurgers);
    CHECK_THROWS_AS(model_kind_from_string("navier-stokes"), DomainError);
}

TEST_CASE("sphere area") {
    CHECK(sphere_area(0) == doctest::Approx(2));
    CHECK(sphere_area(1) == doctest::Approx(2 * std::acos(-1.0)));
    CHECK(sphere_area(2) == doctest::Approx(4 * std::acos(-1.0)));
    for (int k = 0; k < 6; ++k) CHECK(sphere_area(k) == doctest::Approx(oracle::sphere(k)));
}
