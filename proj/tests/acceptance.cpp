#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "ctflow/euler_alignment.hpp"
#include "ctflow/euler_poisson.hpp"
#include "ctflow/model_core.hpp"
#include "ctflow/qs_atlas.hpp"
#include "ctflow/radial_pde.hpp"
#include "oracles.hpp"

using namespace ctflow;

namespace {

struct Result {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

ModelParams model(double n, ModelKind kind = ModelKind::EulerPoisson, double kappa = 1.0, double c = 0.0) {
    ModelParams p;
    p.model = kind;
    p.n = n;
    p.kappa = kappa;
    p.c = c;
    return p;
}

RadialFunction density(const char* name, double amplitude, double width, double radius) {
    ProfileSpec s;
    s.name = name;
    s.amplitude = amplitude;
    s.width = width;
    s.radius = radius;
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

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Result sharp_region_1d() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr int N = 50;
    Result r;
    int wrong = 0, band_inconclusive = 0, band_cells = 0;
    for (double c : {0.0, 1.0}) {
        auto p0 = [](int i) { return -4.0 + 8.0 * i / (N - 1); };
        auto rho0 = [](int j) { return 0.1 + 3.9 * j / (N - 1); };
        auto truth = [&](int i, int j) { return oracle::sigma1d_subcritical(p0(i), rho0(j), 1.0, c); };
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                bool band = false;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        const int a = i + di, b = j + dj;
                        if (a >= 0 && a < N && b >= 0 && b < N && truth(a, b) != truth(i, j)) band = true;
                    }
                const Verdict want = truth(i, j) ? Verdict::GlobalBounded : Verdict::FiniteTimeBlowup;
                const Verdict got = classify_ep({p0(i), 0, 0, rho0(j)}, model(1, ModelKind::EulerPoisson, 1, c), {}).verdict;
                band_cells += band;
                if (band && got == Verdict::Inconclusive) {
                    ++band_inconclusive;
                    continue;
                }
                if (got != want) ++wrong;
            }
    }
    const double secs = seconds_since(t0);
    r.pass = wrong == 0 && secs < 60.0;
    r.detail = fmt("2x%dx%d cells, %d disagreements, %d/%d band cells inconclusive, %.2f s", N, N, wrong,
                   band_inconclusive, band_cells, secs);
    return r;
}

Result damped_burgers() {
    Result r;
    int cells = 0, wrong = 0, skipped = 0;
    constexpr int N = 40;
    for (double k : {0.5, 1.0, 2.0}) {
        ModelParams p = model(2, ModelKind::DampedBurgers);
        p.kappa_damp = k;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                const double p0 = -2 * k + 3 * k * i / (N - 1), q0 = -2 * k + 3 * k * j / (N - 1);
                if (std::abs(p0 + k) < 1e-2 || std::abs(q0 + k) < 1e-2) {
                    ++skipped;
                    continue;
                }
                ++cells;
                const Verdict want =
                    oracle::damped_burgers_regular(p0, q0, k, 2) ? Verdict::GlobalBounded : Verdict::FiniteTimeBlowup;
                if (classify_ep({p0, q0, 0, 1}, p, {}).verdict != want) ++wrong;
            }
    }
    r.pass = wrong == 0;
    r.detail = fmt("%d cells over 3 kappa, %d disagreements, %d in the 1e-2 band", cells, wrong, skipped);
    return r;
}

Result qs_decay() {
    Result r;
    IntegratorConfig cfg;
    cfg.t_max = 1000;
    int capped = 0, bad = 0;
    std::string ranges;
    for (double n : {2.0, 2.5, 3.0, 4.0}) {
        double qlo = INFINITY, qhi = -INFINITY, slo = INFINITY, shi = -INFINITY;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                const double q0 = -5.0 + 10.0 * i / 9, s0 = 0.2 * (j + 1);
                const QsRun run = integrate_qs(model(n), q0, s0, cfg);
                if (run.record.termination.kind != Termination::ReachedHorizon) {
                    ++capped;
                    continue;
                }
                const double eq = estimate_decay_exponent(run.record, 0, 100, 1000);
                const double es = estimate_decay_exponent(run.record, 1, 100, 1000);
                qlo = std::min(qlo, eq);
                qhi = std::max(qhi, eq);
                slo = std::min(slo, es);
                shi = std::max(shi, es);
                const bool q_ok = std::abs(eq + 1.0) <= 0.1;
                const bool s_ok = n >= 3 ? std::abs(es + n) <= 0.1 : es <= -1.9;
                if (!q_ok || !s_ok) ++bad;
            }
        ranges += fmt(" n=%g q[%.3f,%.3f] s[%.3f,%.3f];", n, qlo, qhi, slo, shi);
    }
    r.pass = capped == 0 && bad == 0;
    r.detail = fmt("400 seeds, %d hit the cap, %d exponents out of range;", capped, bad) + ranges;
    return r;
}

Result periodic_orbits() {
    Result r;
    IntegratorConfig a;
    a.t_max = 1000;
    a.rel_tol = 1e-11;
    a.abs_tol = 1e-13;
    const IntegratorConfig b = a.tightened(2.0);
    struct Seed {
        double n, c, q0, s0;
    };
    const std::vector<Seed> seeds = {{2, 1, 0.5, 0.5},  {2, 1, -1.0, 0.2},  {2, 1, 0.8, 0.0}, {2, 0.5, 0.1, 1.0},
                                     {3, 0.5, -1.0, 0.2}, {3, 0.5, 0.3, 0.2}, {3, 0.5, 2.0, 0.2}, {3, 1, 0.0, 0.5},
                                     {4, 1, -0.5, 1.5},  {2.5, 2, 1.0, 0.1}};
    double worst_return = 0.0, worst_period = 0.0;
    int missing = 0;
    for (const Seed& s : seeds) {
        const PeriodicOrbit oa = detect_periodic_orbit(model(s.n, ModelKind::EulerPoisson, 1, s.c), s.q0, s.s0, a);
        const PeriodicOrbit ob = detect_periodic_orbit(model(s.n, ModelKind::EulerPoisson, 1, s.c), s.q0, s.s0, b);
        if (!oa.found || !ob.found) {
            ++missing;
            continue;
        }
        worst_return = std::max({worst_return, oa.return_distance, ob.return_distance});
        worst_period = std::max(worst_period, std::abs(oa.period - ob.period));
    }
    r.pass = missing == 0 && worst_return < 1e-4 && worst_period < 1e-6;
    r.detail = fmt("10 seeds, %d without an orbit, max return %.2e, max period change %.2e", missing, worst_return,
                   worst_period);
    return r;
}

Result dcrit() {
    Result r;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> V(0.01, 5.0), G(0.1, 5.0), K(0.1, 5.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double v0 = V(rng), g = G(rng), kappa = K(rng);
        worst = std::max(worst, std::abs(compute_Dcrit(v0, g, kappa) - oracle::dcrit(v0, g, kappa)));
    }
    r.pass = worst <= 1e-8;
    r.detail = fmt("100 triples, max |D - oracle| = %.2e", worst);
    return r;
}

Result explicit_bound() {
    Result r;
    const ModelParams p = model(3);
    const double q0 = 1.0, s0 = 0.01;
    const ThresholdConstants k = compute_threshold_constants(p, q0, s0, {});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> V(0.2, 3.0), W(0.0, 1.0);
    IntegratorConfig cfg;
    cfg.t_max = 2000;
    int bounded = 0, blowup = 0;
    for (int i = 0; i < 20; ++i) {
        const double v0 = V(rng);
        const double w0 = explicit_sigma_plus(v0, k, 1.0, 3.0) + 1e-3 + 3.0 * W(rng);
        bounded += classify_ep({w0 / v0, q0, s0, 1.0 / v0}, p, cfg).verdict == Verdict::GlobalBounded;
    }
    for (int i = 0; i < 20; ++i) {
        const double v0 = V(rng);
        const double w0 = -k.C - 0.05 - 3.0 * W(rng);
        blowup += classify_ep({w0 / v0, q0, s0, 1.0 / v0}, p, cfg).verdict == Verdict::FiniteTimeBlowup;
    }
    r.pass = bounded == 20 && blowup == 20;
    r.detail = fmt("C = %.4f, %d/20 above the bound bounded, %d/20 below -C blow up", k.C, bounded, blowup);
    return r;
}

Result kernel_bounds() {
    Result r;
    const std::vector<InfluenceSpec> phis = {constant_influence(1.0), inverse_power_influence(1.0, 0.5),
                                             exponential_influence(1.0, 1.0)};
    const std::vector<RadialFunction> rhos = {density("gaussian-bump", 1.0, 0.5, 1.0),
                                              density("indicator", 1.0, 1.0, 1.0),
                                              density("polynomial-decay", 1.0, 0.5, 1.0)};
    const RadialFunction u = velocity("tanh", 0.7);
    const double D = 1.0;
    int violations = 0, checks = 0;
    double zeta_const = 0.0;
    for (std::size_t a = 0; a < phis.size(); ++a)
        for (const RadialFunction& rho : rhos)
            for (int n : {1, 2, 3}) {
                const AlignmentBounds b = compute_bounds(rho, u, phis[a], D, n);
                for (int k = 0; k <= 20; ++k) {
                    const double x = D * k / 20;
                    const double psi = eval_psi(rho, phis[a], x, n);
                    violations += psi < b.psi_min - 1e-10 || psi > b.psi_max + 1e-10;
                    ++checks;
                    if (k == 0) continue;
                    const double z = eval_zeta(rho, u, phis[a], x, n);
                    violations += std::abs(z) / x > b.C0 + 1e-10;
                    ++checks;
                    if (a == 0) zeta_const = std::max(zeta_const, std::abs(z));
                }
            }
    r.pass = violations == 0 && zeta_const <= 1e-12;
    r.detail = fmt("%d checks, %d bound violations, constant-phi max |zeta| = %.1e", checks, violations, zeta_const);
    return r;
}

AlignmentBounds manual(double pm, double pM, double nu) {
    AlignmentBounds b;
    b.psi_min = pm;
    b.psi_max = pM;
    b.nu = nu;
    b.mass = 1.0;
    return b;
}

Result curve_limits() {
    Result r;
    double worst_start = 0.0, worst_n1 = 0.0, worst_const = 0.0;
    for (auto [pm, pM] : {std::pair{0.8, 1.0}, std::pair{0.3, 2.0}, std::pair{1.5, 1.6}})
        for (double n : {2.0, 3.0}) {
            const AlignmentBounds b = manual(pm, pM, pm);
            const double nu = pm;
            // value at 0 and one-sided slope of each curve
            const std::vector<std::tuple<CurveKind, double, double>> starts = {
                {CurveKind::SigmaQPlus, -pm, 1.0 / (2.0 * pm)},
                {CurveKind::SigmaQMinus, -pM, -1.0 / (pM + nu)},
                {CurveKind::SigmaGPlus, 0.0, (n - 1.0) / (2.0 * pm)},
                {CurveKind::SigmaGMinus, 0.0, -(n - 1.0) / (pM + nu)},
            };
            for (const auto& [kind, value, slope] : starts) {
                const EnhancedCurve c = enhanced_curve(kind, b, n, 1e-4, {});
                for (std::size_t k = 1; k < c.x.size(); k += 20)
                    worst_start = std::max(worst_start, std::abs(c.sigma[k] - value - slope * c.x[k]));
            }
            for (CurveKind k : {CurveKind::SigmaGPlus, CurveKind::SigmaGMinus})
                for (double v : enhanced_curve(k, b, 1, 2.0, {}).sigma) worst_n1 = std::max(worst_n1, std::abs(v));
        }
    for (double mass : {0.5, 1.7})
        for (double phi : {0.6, 2.0}) {
            const double k = mass * phi;
            const AlignmentBounds b = manual(k, k, k);
            // damped Burgers with rate k: q is regular iff q0 >= -k, G iff G0 >= 0
            const std::vector<std::tuple<CurveKind, double, double>> starts = {
                {CurveKind::SigmaQPlus, -k, 1.0 / (2.0 * k)},
                {CurveKind::SigmaQMinus, -k, -1.0 / (2.0 * k)},
                {CurveKind::SigmaGPlus, 0.0, 1.0 / (2.0 * k)},
                {CurveKind::SigmaGMinus, 0.0, -1.0 / (2.0 * k)},
            };
            for (const auto& [kind, value, slope] : starts) {
                const EnhancedCurve c = enhanced_curve(kind, b, 2, 1e-4, {});
                worst_const = std::max(worst_const, std::abs(c.sigma[1] - value - slope * c.x[1]));
            }
        }
    r.pass = worst_start <= 1e-6 && worst_n1 <= 1e-12 && worst_const <= 1e-6;
    r.detail = fmt("start offset %.1e, n=1 G curves max %.1e, constant-phi offset %.1e", worst_start, worst_n1,
                   worst_const);
    return r;
}

Result curve_classifier() {
    Result r;
    const AlignmentBounds b = manual(0.8, 1.0, 0.8);
    const double x_max = 0.2;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> X(1e-3, x_max), Delta(1e-2, 0.5);
    int total = 0, agree = 0;
    for (CurveKind kind : {CurveKind::SigmaQPlus, CurveKind::SigmaQMinus, CurveKind::SigmaGPlus, CurveKind::SigmaGMinus}) {
        const EnhancedCurve c = enhanced_curve(kind, b, 2, x_max, {});
        const bool plus = kind == CurveKind::SigmaQPlus || kind == CurveKind::SigmaGPlus;
        const ComparisonKind ck =
            kind == CurveKind::SigmaQPlus || kind == CurveKind::SigmaQMinus ? ComparisonKind::Q : ComparisonKind::G;
        for (int i = 0; i < 40; ++i) {
            const double C0 = X(rng);
            const double sigma = curve_value(c, C0);
            // above sigma^+ is bounded, below sigma^- blows up
            const double y0 = plus ? sigma + Delta(rng) : sigma - Delta(rng);
            const Verdict want = plus ? Verdict::GlobalBounded : Verdict::FiniteTimeBlowup;
            ++total;
            agree += comparison_classify(ck, y0, C0, b, 2, {}).verdict == want;
        }
    }
    r.pass = agree == total;
    r.detail = fmt("%d/%d seeds agree with curve membership", agree, total);
    return r;
}

Result pde_cross_validation() {
    Result r;
    std::string detail;

    // Euler-Poisson: first path blowup against per-path ODE classification
    double worst_tb = 0.0;
    for (double n : {1.0, 3.0}) {
        const RadialFunction rho0 = density("gaussian-bump", 1.0, 1.0, 3.0);
        const RadialFunction u0 = velocity("tanh", n == 1.0 ? -2.0 : -3.0);
        SimulationConfig cfg;
        cfg.paths = 100;
        cfg.radius = 3.0;
        cfg.t_end = 5.0;
        cfg.snapshot_every = 0.05;
        const SimulationResult res = simulate_ep(rho0, u0, model(n), cfg);
        double t_ode = INFINITY;
        for (double x : res.r0) {
            const CharState y{u0.df(x), u0(x) / x, n > 1 ? initial_s_from_density(rho0, 0.0, x, n) : 0.0, rho0(x)};
            const ClassificationOutcome o = classify_ep(y, model(n), {});
            if (o.verdict == Verdict::FiniteTimeBlowup) t_ode = std::min(t_ode, o.t_estimate);
        }
        const double rel = std::abs(res.t_blowup - t_ode) / t_ode;
        if (res.verdict != Verdict::FiniteTimeBlowup || !(rel <= 0.02)) r.pass = false;
        worst_tb = std::max(worst_tb, std::isfinite(rel) ? rel : INFINITY);
        detail += fmt("EP n=%g t_b %.4f vs %.4f; ", n, res.t_blowup, t_ode);
    }

    // Euler-alignment flocking
    {
        const RadialFunction rho0 = density("indicator", 1.0, 1.0, 1.0);
        const RadialFunction u0 = velocity("linear", 0.2);
        const InfluenceSpec phi = inverse_power_influence(1.0, 0.5);
        SimulationConfig cfg;
        cfg.paths = 48;
        cfg.t_end = 20.0;
        cfg.snapshot_every = 0.5;
        const SimulationResult res = simulate_ea(rho0, u0, model(2, ModelKind::EulerAlignment), phi, cfg);
        const auto diag = diagnostics_series(res.snapshots);
        double D = 0.0;
        for (const auto& row : diag) D = std::max(D, row.support);
        const AlignmentBounds b = compute_bounds(rho0, u0, phi, D, 2);
        double worst_ratio = 0.0, worst_mass = 0.0;
        for (const auto& row : diag) {
            worst_ratio = std::max(worst_ratio, row.V / (diag.front().V * std::exp(-b.nu * row.t)));
            worst_mass = std::max(worst_mass, std::abs(row.mass - diag.front().mass) / diag.front().mass);
        }
        if (res.verdict != Verdict::GlobalBounded || worst_ratio > 1.0 + 1e-9 || worst_mass > 4e-16) r.pass = false;
        detail += fmt("EA max V/(V0 e^-nu t) %.4f, mass drift %.1e; ", worst_ratio, worst_mass);
    }

    // 1D Euler-alignment: G / rho along paths
    {
        const RadialFunction rho0 = density("indicator", 1.0, 1.0, 1.0);
        const RadialFunction u0 = velocity("tanh", -0.3, 0.5);
        const InfluenceSpec phi = inverse_power_influence(1.0, 0.5);
        SimulationConfig cfg;
        cfg.paths = 100;
        cfg.t_end = 100.0;
        cfg.snapshot_every = 1.0;
        const SimulationResult res = simulate_ea(rho0, u0, model(1, ModelKind::EulerAlignment), phi, cfg);
        const FieldSnapshot& first = res.snapshots.front();
        double dev = 0.0;
        for (const auto& s : res.snapshots)
            for (std::size_t i = 0; i < s.G.size(); ++i) {
                const double a = first.G[i] / first.rho[i];
                dev = std::max(dev, std::abs(s.G[i] / s.rho[i] - a) / std::abs(a));
            }
        if (res.verdict != Verdict::GlobalBounded || !(dev < 0.01)) r.pass = false;
        detail += fmt("1D EA G/rho deviation %.2e", dev);
    }
    r.detail = detail;
    return r;
}

Result identities() {
    Result r;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(-1e3, 1e3);
    std::uniform_int_distribution<int> dim(2, 6);
    std::normal_distribution<double> N01;
    double worst_trace = 0.0, worst_gap = 0.0, worst_diff = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const int n = dim(rng);
        const double p = U(rng), q = U(rng);
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x(i) = N01(rng);
        const Eigen::MatrixXd M = grad_u_matrix(x, p, q);
        const double scale = std::abs(p) + (n - 1) * std::abs(q);
        worst_trace = std::max(worst_trace, std::abs(M.trace() - divergence(p, q, n)) / scale);
        std::vector<double> lambda{p};
        lambda.insert(lambda.end(), n - 1, q);
        const double spread = oracle::pairwise_spread(lambda);
        worst_gap = std::max(worst_gap, std::abs(spectral_gap(p, q, n) - spread) / std::max(1.0, spread));
        worst_diff = std::max(worst_diff, gap_consistency_check(p, q, n));
    }
    r.pass = worst_trace <= 1e-12 && worst_gap <= 1e-12 && worst_diff <= 1e-12;
    r.detail = fmt("1e4 samples, trace %.1e, spectral gap %.1e, difference identity %.1e", worst_trace, worst_gap,
                   worst_diff);
    return r;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
        {"1D Euler-Poisson sharp region", sharp_region_1d},
        {"damped Burgers sharpness", damped_burgers},
        {"(q,s) boundedness and decay", qs_decay},
        {"periodic orbits for c > 0", periodic_orbits},
        {"D_crit against direct minimization", dcrit},
        {"explicit multi-D Euler-Poisson bound", explicit_bound},
        {"alignment kernel bounds", kernel_bounds},
        {"threshold curve endpoints and limits", curve_limits},
        {"curve and classifier consistency", curve_classifier},
        {"PDE cross-validation", pde_cross_validation},
        {"algebraic identities", identities},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Result res;
        try {
            res = criteria[i].second();
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("exception: ") + e.what();
        }
        failed += !res.pass;
        std::printf("criterion %2zu %s: %s (%s) [%.1f s]\n", i + 1, res.pass ? "PASS" : "FAIL", criteria[i].first,
                    res.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
