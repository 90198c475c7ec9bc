#include "doctest.h"

#include <cmath>

#include "ctflow/euler_alignment.hpp"
#include "oracles.hpp"

using namespace ctflow;

namespace {

RadialFunction indicator(double amplitude, double R) {
    ProfileSpec s;
    s.name = "indicator";
    s.amplitude = amplitude;
    s.radius = R;
    return s.function();
}

RadialFunction velocity(const char* name, double amplitude, double width = 1.0) {
    ProfileSpec s;
    s.name = name;
    s.kind = ProfileKind::Velocity;
    s.amplitude = amplitude;
    s.width = width;
    return s.function();
}

AlignmentBounds manual_bounds(double pm, double pM, double nu, double C0 = 0.0) {
    AlignmentBounds b;
    b.psi_min = pm;
    b.psi_max = pM;
    b.nu = nu;
    b.C0 = C0;
    b.mass = 1.0;
    return b;
}

}  // namespace

TEST_CASE("influence functions") {
    const InfluenceSpec c = constant_influence(2.0);
    CHECK(c(5.0) == 2.0);
    CHECK(c.sup_phi_prime == 0.0);
    const InfluenceSpec p = inverse_power_influence(1.0, 0.5);
    CHECK(p(3.0) == doctest::Approx(0.5));
    CHECK(p.sup_phi_prime == doctest::Approx(0.5));
    CHECK(p.slow_decay);
    const InfluenceSpec e = exponential_influence(1.0, 2.0);
    CHECK(e.sup_phi_prime == doctest::Approx(2.0));
    CHECK_FALSE(e.slow_decay);
    for (const auto* f : {&c, &p, &e}) CHECK_NOTHROW(f->validate());
    InfluenceSpec bad = p;
    bad.sup_phi_prime = 0.1;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    CHECK_THROWS_AS(inverse_power_influence(1.0, 0.0), DomainError);
}

TEST_CASE("constant influence: psi is phi times mass, zeta vanishes") {
    const InfluenceSpec c = constant_influence(0.7);
    const RadialFunction rho = indicator(1.3, 1.5);
    const RadialFunction u = velocity("tanh", 0.8);
    for (int n : {1, 2, 3}) {
        const double mass = density_mass(rho, n);
        for (double r : {0.0, 0.4, 1.5, 4.0}) {
            CHECK(eval_psi(rho, c, r, n) == doctest::Approx(0.7 * mass).epsilon(1e-12));
            CHECK(std::abs(eval_zeta(rho, u, c, r, n)) < 1e-12);
        }
    }
}

TEST_CASE("zeta at the origin") {
    const InfluenceSpec e = exponential_influence(1.0, 1.0);
    for (int n : {1, 2, 3}) CHECK(eval_zeta(indicator(1, 1), velocity("linear", 1), e, 0.0, n) == 0.0);
}

TEST_CASE("narrow bump: psi tends to phi(r) times mass") {
    ProfileSpec s;
    s.name = "gaussian-bump";
    s.width = 1e-3;
    s.radius = 1e-2;
    const RadialFunction rho = s.function();
    const InfluenceSpec p = inverse_power_influence(1.0, 0.5);
    for (int n : {2, 3}) {
        const double mass = density_mass(rho, n);
        for (double r : {0.5, 1.0, 3.0}) CHECK(std::abs(eval_psi(rho, p, r, n) / mass - p(r)) < 1e-4);
    }
}

TEST_CASE("psi against brute-force quadrature") {
    const InfluenceSpec p = inverse_power_influence(1.0, 1.0);
    const RadialFunction rho = indicator(1.0, 1.0);
    for (double r : {0.0, 0.3, 1.0, 2.0}) {
        const double ref = oracle::psi_brute(p.phi, [](double) { return 1.0; }, 1.0, r, 2);
        CHECK(eval_psi(rho, p, r, 2) == doctest::Approx(ref).epsilon(1e-8));
    }
    // n = 1: two-point sum over +-s
    for (double r : {0.0, 0.6, 2.0}) {
        auto g = [&](double s) { return p(std::abs(r - s)) + p(r + s); };
        const double ref = r > 0 && r < 1 ? oracle::simpson(g, 0, r, 2000) + oracle::simpson(g, r, 1, 2000)
                                          : oracle::simpson(g, 0, 1, 2000);
        CHECK(eval_psi(rho, p, r, 1) == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("zeta against brute-force quadrature and its bound") {
    const InfluenceSpec e = exponential_influence(1.0, 1.0);
    const RadialFunction rho = indicator(1.0, 1.0);
    const RadialFunction u = velocity("linear", 1.0);
    const AlignmentBounds b = compute_bounds(rho, u, e, 1.0, 2);
    for (double r : {0.2, 1.0, 2.5}) {
        const double ref =
            oracle::kernel_brute(e.phi, [](double) { return 1.0; }, [](double s) { return s; }, 1.0, r, 2);
        const double z = eval_zeta(rho, u, e, r, 2);
        CHECK(z == doctest::Approx(ref).epsilon(1e-8));
    }
    for (int k = 1; k <= 50; ++k) {
        const double r = 0.1 * k;
        CHECK(std::abs(eval_zeta(rho, u, e, r, 2)) / r <= b.C0 + 1e-10);
    }
}

TEST_CASE("reduced kernels are symmetric in r and s") {
    const InfluenceSpec e = exponential_influence(1.0, 1.3);
    const InfluenceSpec p = inverse_power_influence(1.0, 0.5);
    for (double n : {1.0, 2.0, 3.0, 4.0})
        for (double r : {0.1, 0.7, 2.0})
            for (double s : {0.05, 0.9, 3.0}) {
                CHECK(std::abs(psi_kernel(e, r, s, n) - psi_kernel(e, s, r, n)) < 1e-10);
                CHECK(std::abs(psi_kernel(p, r, s, n) - psi_kernel(p, s, r, n)) < 1e-10);
                CHECK(std::abs(zeta_kernel(p, r, s, n) - zeta_kernel(p, s, r, n)) < 1e-10);
            }
}

TEST_CASE("psi lies between psi_min and psi_max on the support") {
    const InfluenceSpec p = inverse_power_influence(1.0, 0.5);
    ProfileSpec g;
    g.radius = 1.0;
    const RadialFunction rho = g.function();
    for (int n : {1, 2, 3}) {
        const AlignmentBounds b = compute_bounds(rho, velocity("rexp", 1.0), p, 1.0, n);
        for (int k = 0; k <= 10; ++k) {
            const double v = eval_psi(rho, p, 0.1 * k, n);
            CHECK(v >= b.psi_min - 1e-10);
            CHECK(v <= b.psi_max + 1e-10);
        }
    }
}

TEST_CASE("compute_bounds examples") {
    const InfluenceSpec p = inverse_power_influence(1.0, 0.5);
    const AlignmentBounds a = compute_bounds(indicator(0.5, 1.0), velocity("zero", 0), p, 1.0, 1);
    CHECK(a.mass == doctest::Approx(1.0));
    CHECK(a.nu == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(a.psi_min == a.nu);
    CHECK(a.psi_max == doctest::Approx(1.0));

    CHECK(compute_bounds(indicator(1, 1), velocity("linear", 2), constant_influence(1), 1.0, 2).C0 == 0.0);

    const AlignmentBounds c = compute_bounds(indicator(1, 1), velocity("linear", 3), exponential_influence(1, 0.5), 1, 1);
    CHECK(c.mass == doctest::Approx(2.0));
    CHECK(c.u_max == doctest::Approx(3.0));
    CHECK(c.C0 == doctest::Approx(3.0));
    CHECK(c.psi_max == doctest::Approx(2.0));

    const AlignmentBounds t = compute_bounds(indicator(1, 1), velocity("rexp", 1.0, 0.5), p, 1.0, 3);
    CHECK(t.u_max == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));

    InfluenceSpec hat;
    hat.phi = [](double r) { return std::max(0.0, 1.0 - r); };
    hat.sup_phi = 1.0;
    hat.sup_phi_prime = 1.0;
    CHECK_THROWS_AS(compute_bounds(indicator(1, 1), velocity("zero", 0), hat, 1.0, 2), DomainError);
    CHECK_THROWS_AS(compute_bounds(indicator(1, 2), velocity("zero", 0), p, 1.0, 2), DomainError);
}

TEST_CASE("rough thresholds") {
    CHECK(rough_threshold_q(-0.5, manual_bounds(0.8, 1.0, 0.8, 0.15)) == Region::Subcritical);
    CHECK(rough_threshold_q(-0.51, manual_bounds(0.8, 1.0, 0.8, 0.15)) == Region::Gap);
    CHECK(rough_q_bounds(0.8, 1.0, 0.15).supercritical == doctest::Approx(0.5 * (-1 - std::sqrt(1.6))));
    CHECK(rough_threshold_q(-1.2, manual_bounds(0.8, 1.0, 0.8, 0.15)) == Region::Supercritical);
    CHECK(std::isnan(rough_q_bounds(0.8, 1.0, 0.2).subcritical));
    const RoughBounds sharp = rough_q_bounds(1.5, 1.5, 0.0);
    CHECK(sharp.subcritical == -1.5);
    CHECK(sharp.supercritical == -1.5);

    CHECK(rough_G_bounds(0.8, 1.0, 0.16, 2).subcritical == doctest::Approx(0.4));
    CHECK(rough_threshold_G(0.0, manual_bounds(0.5, 2.0, 0.5), 1) == Region::Subcritical);
    CHECK(rough_threshold_G(-1e-9, manual_bounds(0.5, 2.0, 0.5), 1) == Region::Supercritical);
    const RoughBounds g = rough_G_bounds(1.5, 1.5, 0.0, 3);
    CHECK(g.subcritical == 0.0);
    CHECK(g.supercritical == 0.0);
}

TEST_CASE("enhanced curves start at their stated values") {
    const AlignmentBounds b = manual_bounds(0.8, 1.0, 0.8);
    const IntegratorConfig cfg;
    for (double n : {1.0, 2.0, 3.0}) {
        CHECK(enhanced_curve(CurveKind::SigmaGPlus, b, n, 0.2, cfg).sigma.front() == 0.0);
        CHECK(enhanced_curve(CurveKind::SigmaGMinus, b, n, 0.2, cfg).sigma.front() == 0.0);
    }
    const EnhancedCurve qp = enhanced_curve(CurveKind::SigmaQPlus, b, 2, 0.2, cfg);
    const EnhancedCurve qm = enhanced_curve(CurveKind::SigmaQMinus, b, 2, 0.2, cfg);
    CHECK(qp.sigma.front() == doctest::Approx(-0.8));
    CHECK(qm.sigma.front() == doctest::Approx(-1.0));
    CHECK(qp.slope0 == doctest::Approx(1.0 / 1.6));
    CHECK(qm.slope0 == doctest::Approx(-1.0 / 1.8));
}

TEST_CASE("n = 1 G curves vanish identically") {
    const AlignmentBounds b = manual_bounds(0.8, 1.0, 0.8);
    for (auto k : {CurveKind::SigmaGPlus, CurveKind::SigmaGMinus}) {
        const EnhancedCurve c = enhanced_curve(k, b, 1, 2.0, {});
        CHECK(c.complete);
        for (double v : c.sigma) CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("enhanced curves sit inside the rough bounds") {
    const AlignmentBounds b = manual_bounds(0.8, 1.0, 0.8);
    const IntegratorConfig cfg;
    const EnhancedCurve gp = enhanced_curve(CurveKind::SigmaGPlus, b, 2, 0.2, cfg);
    const EnhancedCurve gm = enhanced_curve(CurveKind::SigmaGMinus, b, 2, 0.2, cfg);
    REQUIRE(gp.x.size() == gm.x.size());
    for (std::size_t k = 1; k < gp.x.size(); ++k) {
        const double x = gp.x[k];
        CHECK(gp.sigma[k] > 0.0);
        CHECK(gm.sigma[k] < 0.0);
        const RoughBounds r = rough_G_bounds(0.8, 1.0, x, 2);
        if (!std::isnan(r.subcritical)) CHECK(gp.sigma[k] <= r.subcritical);
        CHECK(gm.sigma[k] >= r.supercritical);
    }
    const EnhancedCurve qp = enhanced_curve(CurveKind::SigmaQPlus, b, 2, 0.2, cfg);
    const EnhancedCurve qm = enhanced_curve(CurveKind::SigmaQMinus, b, 2, 0.2, cfg);
    for (std::size_t k = 1; k < qp.x.size(); ++k) {
        const RoughBounds r = rough_q_bounds(0.8, 1.0, qp.x[k]);
        if (!std::isnan(r.subcritical)) CHECK(qp.sigma[k] <= r.subcritical);
        CHECK(qm.sigma[k] >= r.supercritical);
    }
}

TEST_CASE("sigma_q_plus switches branch at zero") {
    const AlignmentBounds b = manual_bounds(0.8, 1.0, 0.8);
    const EnhancedCurve c = enhanced_curve(CurveKind::SigmaQPlus, b, 2, 5.0, {}, 501);
    REQUIRE(c.x_switch > 0.0);
    for (std::size_t k = 0; k < c.x.size(); ++k) CHECK((c.sigma[k] < 0.0) == (c.x[k] < c.x_switch));
    for (std::size_t k = 1; k < c.x.size(); ++k) CHECK(c.sigma[k] >= c.sigma[k - 1]);
}

TEST_CASE("constant influence reproduces the damped Burgers thresholds") {
    const double mass = 1.7, phi = 0.6;
    const AlignmentBounds b = manual_bounds(mass * phi, mass * phi, mass * phi);
    CHECK(enhanced_curve(CurveKind::SigmaQPlus, b, 2, 0.1, {}).sigma.front() == doctest::Approx(-mass * phi));
    CHECK(enhanced_curve(CurveKind::SigmaQMinus, b, 2, 0.1, {}).sigma.front() == doctest::Approx(-mass * phi));
}

TEST_CASE("curve helpers") {
    CHECK(curve_kind_from_string("sigma_G_minus") == CurveKind::SigmaGMinus);
    CHECK_THROWS_AS(curve_kind_from_string("sigma"), DomainError);
    const AlignmentBounds b = manual_bounds(0.8, 1.0, 0.8);
    CHECK_THROWS_AS(enhanced_curve(CurveKind::SigmaGPlus, b, 2, 0.0, {}), DomainError);
    CHECK_THROWS_AS(enhanced_curve(CurveKind::SigmaGPlus, manual_bounds(0, 1, 1), 2, 1.0, {}), DomainError);
    const EnhancedCurve c = enhanced_curve(CurveKind::SigmaGPlus, b, 2, 0.2, {}, 11);
    CHECK(c.x.size() == 11);
    CHECK(std::isnan(curve_value(c, 0.3)));
    CHECK(curve_value(c, 0.1) == doctest::Approx(c.sigma[5]));
}

TEST_CASE("comparison classifier") {
    const AlignmentBounds b = manual_bounds(0.8, 1.0, 0.8);
    const IntegratorConfig cfg;
    CHECK(comparison_classify(ComparisonKind::Q, -0.8, 0.0, b, 2, cfg).verdict == Verdict::GlobalBounded);
    const ClassificationOutcome far = comparison_classify(ComparisonKind::Q, -5.0, 0.1, b, 2, cfg);
    CHECK(far.verdict == Verdict::FiniteTimeBlowup);
    CHECK(std::isfinite(far.t_estimate));

    const EnhancedCurve gp = enhanced_curve(CurveKind::SigmaGPlus, b, 2, 0.2, cfg);
    const EnhancedCurve gm = enhanced_curve(CurveKind::SigmaGMinus, b, 2, 0.2, cfg);
    // the curve itself is the stable manifold of the saddle at (0, 0); seeds sit strictly above it
    for (int k = 1; k <= 5; ++k) {
        const double C0 = 0.04 * k;
        CHECK(comparison_classify(ComparisonKind::G, curve_value(gp, C0) + std::pow(10.0, -k - 1), C0, b, 2, cfg)
                  .verdict == Verdict::GlobalBounded);
        CHECK(comparison_classify(ComparisonKind::G, curve_value(gm, C0) - 0.05, C0, b, 2, cfg).verdict ==
              Verdict::FiniteTimeBlowup);
    }
    CHECK_THROWS_AS(comparison_classify(ComparisonKind::G, 0.0, -1.0, b, 2, cfg), DomainError);
}
