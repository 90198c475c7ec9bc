#include "ctflow/euler_alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "ctflow/quadrature.hpp"

namespace ctflow {

InfluenceSpec constant_influence(double strength) {
    if (!(strength > 0.0)) throw DomainError("influence strength must be > 0");
    InfluenceSpec s;
    s.name = "constant";
    s.phi = [strength](double) { return strength; };
    s.phi_prime = [](double) { return 0.0; };
    s.sup_phi = strength;
    s.sup_phi_prime = 0.0;
    s.slow_decay = true;
    return s;
}

InfluenceSpec inverse_power_influence(double strength, double beta) {
    if (!(strength > 0.0) || !(beta > 0.0)) throw DomainError("inverse-power influence needs strength, exponent > 0");
    InfluenceSpec s;
    s.name = "inverse-power";
    s.phi = [strength, beta](double r) { return strength * std::pow(1.0 + r, -beta); };
    s.phi_prime = [strength, beta](double r) { return -strength * beta * std::pow(1.0 + r, -beta - 1.0); };
    s.sup_phi = strength;
    s.sup_phi_prime = strength * beta;
    s.slow_decay = beta <= 1.0;
    return s;
}

InfluenceSpec exponential_influence(double strength, double lambda) {
    if (!(strength > 0.0) || !(lambda > 0.0)) throw DomainError("exponential influence needs strength, rate > 0");
    InfluenceSpec s;
    s.name = "exponential";
    s.phi = [strength, lambda](double r) { return strength * std::exp(-lambda * r); };
    s.phi_prime = [strength, lambda](double r) { return -strength * lambda * std::exp(-lambda * r); };
    s.sup_phi = strength;
    s.sup_phi_prime = strength * lambda;
    s.slow_decay = false;
    return s;
}

void InfluenceSpec::validate(double r_max) const {
    if (!phi) throw DomainError("influence function missing");
    double prev = phi(0.0);
    for (int k = 0; k <= 2000; ++k) {
        const double r = r_max * k / 2000.0;
        const double v = phi(r);
        if (!(v >= 0.0)) throw DomainError("influence function must be >= 0");
        if (v > sup_phi * (1.0 + 1e-12)) throw DomainError("influence function exceeds sup_phi");
        if (non_increasing && v > prev * (1.0 + 1e-14)) throw DomainError("influence function is not non-increasing");
        if (phi_prime && std::abs(phi_prime(r)) > sup_phi_prime * (1.0 + 1e-12))
            throw DomainError("influence derivative exceeds sup_phi_prime");
        prev = v;
    }
}

void AlignmentBounds::validate() const {
    if (!(psi_min > 0.0) || !(psi_min <= psi_max)) throw DomainError("bounds need 0 < psi_min <= psi_max");
    if (!(nu > 0.0)) throw DomainError("bounds need nu > 0");
    if (!(C0 >= 0.0)) throw DomainError("bounds need C0 >= 0");
}

namespace {

// int_0^pi sin^k
double sine_power_integral(double k) {
    return std::sqrt(std::numbers::pi) * std::tgamma((k + 1.0) / 2.0) / std::tgamma(k / 2.0 + 1.0);
}

double angular(const InfluenceSpec& phi, double r, double s, double n, bool with_cos, int level,
               const KernelQuadrature& quad) {
    if (n == 1.0) {
        const double near = phi(std::abs(r - s)), far = phi(r + s);
        return with_cos ? near - far : near + far;
    }
    const double omega = sphere_area(n - 2.0);
    if (r == 0.0 || s == 0.0) return with_cos ? 0.0 : omega * phi(r + s) * sine_power_integral(n - 2.0);
    const double dr = r - s, rs4 = 4.0 * r * s;
    auto f = [&](double th) {
        const double h = std::sin(0.5 * th);
        const double d = std::sqrt(dr * dr + rs4 * h * h);
        double w = n == 2.0 ? 1.0 : std::pow(std::sin(th), n - 2.0);
        if (with_cos) w *= std::cos(th);
        return phi(d) * w;
    };
    const double rel = std::abs(dr) / std::max(r, s);
    if (rel < 0.25) {
        const int levels = std::min(26, 2 + static_cast<int>(std::ceil(std::log(0.25 / std::max(rel, 1e-16)) / std::log(4.0))));
        return omega * integrate_panels(f, graded_breaks(0.0, std::numbers::pi, 0.0, 0.25, levels), quad.graded_order, level);
    }
    return omega * integrate_panels(f, {0.0, std::numbers::pi}, quad.angular_order, level);
}

struct Sum {
    double value = 0.0;
    double magnitude = 0.0;
};

Sum radial_sum(const std::function<double(double)>& g, const std::vector<double>& breaks, int order, int pieces) {
    const GaussRule& rule = gauss_legendre(order);
    Sum out;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        if (!(b > a)) continue;
        const double h = (b - a) / pieces;
        for (int j = 0; j < pieces; ++j) {
            const double mid = a + (j + 0.5) * h, half = 0.5 * h;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double v = rule.w[i] * half * g(mid + half * rule.x[i]);
                out.value += v;
                out.magnitude += std::abs(v);
            }
        }
    }
    return out;
}

std::vector<double> radial_breaks(const RadialFunction& rho, double r) {
    const double S = rho.support;
    std::vector<double> b{0.0, S};
    for (double x : rho.breaks)
        if (x > 0.0 && x < S) b.push_back(x);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    if (r > 0.0) {
        // Grade toward s = r, or toward the support edge when r lies beyond it.
        const double c = std::min(r, S);
        auto it = std::lower_bound(b.begin(), b.end(), c);
        const double lo = it == b.begin() ? 0.0 : *(it - 1);
        const double hi = it != b.end() && *it > c ? *it : (it + 1 < b.end() ? *(it + 1) : c);
        r = c;
        std::vector<double> extra;
        if (r > lo) {
            auto g = graded_breaks(lo, r, r, 0.25, 20);
            extra.insert(extra.end(), g.begin(), g.end());
        }
        if (hi > r) {
            auto g = graded_breaks(r, hi, r, 0.25, 20);
            extra.insert(extra.end(), g.begin(), g.end());
        }
        b.insert(b.end(), extra.begin(), extra.end());
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
    }
    return b;
}

double kernel_integral(const RadialFunction& rho, const RadialFunction* u, const InfluenceSpec& phi, double r, int n,
                       const KernelQuadrature& quad) {
    if (n < 1) throw DomainError("dimension must be >= 1");
    if (!(r >= 0.0)) throw DomainError("radius must be >= 0");
    if (!std::isfinite(rho.support)) throw DomainError("kernel sums need a density with finite support");
    const bool zeta = u != nullptr;
    if (zeta && r == 0.0) return 0.0;
    const auto breaks = radial_breaks(rho, r);
    const double nn = n;
    // Size of the integral with |phi| <= sup_phi and no cancellation.
    const double ang = nn == 1.0 ? 2.0 : sphere_area(nn - 2.0) * sine_power_integral(nn - 2.0);
    const double scale = phi.sup_phi * ang *
                         radial_sum([&](double s) { return rho(s) * std::pow(s, nn - 1.0) * (zeta ? (*u)(s) : 1.0); },
                                    breaks, quad.radial_order, 1)
                             .magnitude;
    double prev = 0.0;
    Sum cur;
    for (int level = 1, k = 0; k <= quad.max_doublings; level *= 2, ++k) {
        auto g = [&](double s) {
            double w = rho(s) * std::pow(s, nn - 1.0);
            if (zeta) w *= (*u)(s);
            if (w == 0.0) return 0.0;
            return w * angular(phi, r, s, nn, zeta, level, quad);
        };
        cur = radial_sum(g, breaks, quad.radial_order, level);
        const double delta = std::abs(cur.value - prev);
        if (k > 0 && (delta <= quad.rel_tol * std::max(std::abs(cur.value), 1e-2 * cur.magnitude) ||
                      delta <= 1e-14 * scale))
            break;
        prev = cur.value;
    }
    return cur.value;
}

}  // namespace

double psi_kernel(const InfluenceSpec& phi, double r, double s, double n, int level, const KernelQuadrature& quad) {
    return angular(phi, r, s, n, false, level, quad);
}

double zeta_kernel(const InfluenceSpec& phi, double r, double s, double n, int level, const KernelQuadrature& quad) {
    return angular(phi, r, s, n, true, level, quad);
}

double eval_psi(const RadialFunction& rho, const InfluenceSpec& phi, double r, int n, const KernelQuadrature& quad) {
    return kernel_integral(rho, nullptr, phi, r, n, quad);
}

double eval_zeta(const RadialFunction& rho, const RadialFunction& u, const InfluenceSpec& phi, double r, int n,
                 const KernelQuadrature& quad) {
    return kernel_integral(rho, &u, phi, r, n, quad);
}

double density_mass(const RadialFunction& rho, double n) {
    if (rho.closed_mass) return rho.closed_mass(n);
    if (!std::isfinite(rho.support)) throw DomainError("mass of an unbounded sampled density");
    std::vector<double> b{0.0, rho.support};
    for (double x : rho.breaks)
        if (x > 0.0 && x < rho.support) b.push_back(x);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    const double integral = integrate_panels([&](double s) { return rho(s) * std::pow(s, n - 1.0); }, b, 16, 2);
    return sphere_area(n - 1.0) * integral;
}

AlignmentBounds compute_bounds(const RadialFunction& rho0, const RadialFunction& u0, const InfluenceSpec& phi,
                               double D, int n) {
    if (!(D > 0.0)) throw DomainError("support radius D must be > 0");
    if (rho0.support > D * (1.0 + 1e-12)) throw DomainError("density support exceeds D");
    AlignmentBounds b;
    b.D = D;
    b.mass = density_mass(rho0, n);
    constexpr int m = 4000;
    int best = 0;
    for (int k = 0; k <= m; ++k) {
        const double v = std::abs(u0(D * k / m));
        if (v > b.u_max) {
            b.u_max = v;
            best = k;
        }
    }
    const double lo = D * std::max(best - 1, 0) / m, hi = D * std::min(best + 1, m) / m;
    const auto res = boost::math::tools::brent_find_minima([&](double r) { return -std::abs(u0(r)); }, lo, hi, 50);
    b.u_max = std::max(b.u_max, -res.second);
    const double edge = phi(2.0 * D);
    if (!(edge > 0.0)) throw DomainError("phi(2D) = 0 gives a degenerate alignment rate");
    b.nu = edge * b.mass;
    b.psi_min = b.nu;
    b.psi_max = phi.sup_phi * b.mass;
    b.C0 = phi.sup_phi_prime * b.mass * b.u_max;
    return b;
}

RoughBounds rough_q_bounds(double psi_min, double psi_max, double C0) {
    RoughBounds r;
    const double disc = psi_min * psi_min - 4.0 * C0;
    r.subcritical = disc >= 0.0 ? 0.5 * (-psi_min - std::sqrt(disc)) : std::numeric_limits<double>::quiet_NaN();
    r.supercritical = 0.5 * (-psi_max - std::sqrt(psi_max * psi_max + 4.0 * C0));
    return r;
}

RoughBounds rough_G_bounds(double psi_min, double psi_max, double C0, double n) {
    RoughBounds r;
    const double disc = psi_min * psi_min - 4.0 * (n - 1.0) * C0;
    r.subcritical = disc >= 0.0 ? 0.5 * (psi_min - std::sqrt(disc)) : std::numeric_limits<double>::quiet_NaN();
    r.supercritical = 0.5 * (psi_max - std::sqrt(psi_max * psi_max + 4.0 * (n - 1.0) * C0));
    return r;
}

Region rough_threshold_q(double q0, const AlignmentBounds& bounds) {
    const RoughBounds r = rough_q_bounds(bounds.psi_min, bounds.psi_max, bounds.C0);
    if (!std::isnan(r.subcritical) && q0 >= r.subcritical) return Region::Subcritical;
    if (q0 < r.supercritical) return Region::Supercritical;
    return Region::Gap;
}

Region rough_threshold_G(double G0, const AlignmentBounds& bounds, double n) {
    const RoughBounds r = rough_G_bounds(bounds.psi_min, bounds.psi_max, bounds.C0, n);
    if (!std::isnan(r.subcritical) && G0 >= r.subcritical) return Region::Subcritical;
    if (G0 < r.supercritical) return Region::Supercritical;
    return Region::Gap;
}

std::string to_string(CurveKind k) {
    switch (k) {
        case CurveKind::SigmaQPlus: return "sigma_q_plus";
        case CurveKind::SigmaQMinus: return "sigma_q_minus";
        case CurveKind::SigmaGPlus: return "sigma_G_plus";
        case CurveKind::SigmaGMinus: return "sigma_G_minus";
    }
    return "unknown";
}

CurveKind curve_kind_from_string(const std::string& name) {
    for (auto k : {CurveKind::SigmaQPlus, CurveKind::SigmaQMinus, CurveKind::SigmaGPlus, CurveKind::SigmaGMinus})
        if (to_string(k) == name) return k;
    throw DomainError("unknown curve '" + name + "'");
}

namespace {

// Numerator N(sigma, x) of d sigma / dx = N / (-nu x).
std::function<double(double, double)> curve_numerator(CurveKind kind, const AlignmentBounds& b, double n,
                                                      bool upper_branch) {
    const double pm = b.psi_min, pM = b.psi_max;
    switch (kind) {
        case CurveKind::SigmaQPlus: {
            const double c1 = upper_branch ? pM : pm;
            return [c1](double s, double x) { return -s * s - c1 * s - x; };
        }
        case CurveKind::SigmaQMinus: return [pM](double s, double x) { return -s * s - pM * s + x; };
        case CurveKind::SigmaGPlus: return [pm, n](double s, double x) { return -s * s + pm * s - (n - 1.0) * x; };
        case CurveKind::SigmaGMinus: return [pM, n](double s, double x) { return -s * s + pM * s + (n - 1.0) * x; };
    }
    throw DomainError("unknown curve");
}

}  // namespace

EnhancedCurve enhanced_curve(CurveKind kind, const AlignmentBounds& bounds, double n, double x_max,
                             const IntegratorConfig& config, std::size_t samples) {
    bounds.validate();
    if (!(x_max > 0.0)) throw DomainError("x_max must be > 0");
    if (samples < 2) throw DomainError("need at least two curve samples");
    const double pm = bounds.psi_min, pM = bounds.psi_max, nu = bounds.nu;
    EnhancedCurve out;
    out.kind = kind;
    switch (kind) {
        case CurveKind::SigmaQPlus: out.sigma0 = -pm, out.slope0 = 1.0 / (pm + nu); break;
        case CurveKind::SigmaQMinus: out.sigma0 = -pM, out.slope0 = -1.0 / (pM + nu); break;
        case CurveKind::SigmaGPlus: out.sigma0 = 0.0, out.slope0 = (n - 1.0) / (pm + nu); break;
        case CurveKind::SigmaGMinus: out.sigma0 = 0.0, out.slope0 = -(n - 1.0) / (pM + nu); break;
    }
    const double eps = 1e-6 * std::max(1.0, pm * pm);
    if (!(eps < x_max)) throw DomainError("x_max below the series start offset");
    const double start = out.sigma0 + out.slope0 * eps;

    auto system_for = [&](bool upper) {
        const auto N = curve_numerator(kind, bounds, n, upper);
        return OdeSystem{1, [N, nu](double x, const double* y, double* f) { f[0] = N(y[0], x) / (-nu * x); }};
    };
    {
        const auto N = curve_numerator(kind, bounds, n, kind == CurveKind::SigmaQPlus && start >= 0.0);
        const double slope_eps = N(start, eps) / (-nu * eps);
        if (std::abs(slope_eps - out.slope0) * eps > 1e-8 * std::max(1.0, std::abs(out.sigma0)))
            throw DomainError("series start offset too large for the curve's local truncation tolerance");
    }

    IntegratorConfig cfg = config;
    cfg.t_max = x_max;
    cfg.h_max = std::min(config.h_max, x_max / 100.0);
    cfg.h_init = std::min({cfg.h_init, eps, cfg.h_max});
    cfg.h_min = std::min(cfg.h_min, cfg.h_init);
    IntegrateOptions opts;
    opts.t0 = eps;
    const bool switching = kind == CurveKind::SigmaQPlus;
    bool upper = switching && start >= 0.0;
    if (switching && !upper)
        opts.events.push_back({"branch", [](double, const double* y) { return y[0]; }, +1, true});
    std::vector<TrajectoryRecord> parts;
    parts.push_back(integrate(system_for(upper), {start}, cfg, opts));
    if (parts.back().termination.kind == Termination::Event) {
        const double xs = parts.back().final_time();
        out.x_switch = xs;
        IntegrateOptions o2;
        o2.t0 = xs;
        parts.push_back(integrate(system_for(true), {0.0}, cfg, o2));
    }
    const auto& last = parts.back();
    const auto term = last.termination.kind;
    out.x_end = last.final_time();
    out.complete = term == Termination::ReachedHorizon;
    if (term == Termination::BlowupDetected && std::isfinite(last.termination.t_estimate))
        out.x_end = last.termination.t_estimate;

    for (std::size_t k = 0; k < samples; ++k) {
        const double x = x_max * static_cast<double>(k) / static_cast<double>(samples - 1);
        double v;
        if (x < eps) {
            v = out.sigma0 + out.slope0 * x;
        } else {
            const TrajectoryRecord* seg = nullptr;
            for (const auto& p : parts)
                if (x >= p.times().front() && x <= p.final_time()) seg = &p;
            if (!seg) break;
            v = seg->at(x, 0);
        }
        out.x.push_back(x);
        out.sigma.push_back(v);
    }
    return out;
}

double curve_value(const EnhancedCurve& curve, double x) {
    if (curve.x.empty() || x < 0.0 || x > curve.x.back()) return std::numeric_limits<double>::quiet_NaN();
    auto it = std::upper_bound(curve.x.begin(), curve.x.end(), x);
    if (it == curve.x.end()) return curve.sigma.back();
    const std::size_t k = static_cast<std::size_t>(it - curve.x.begin());
    const double x0 = curve.x[k - 1], x1 = curve.x[k];
    const double w = (x - x0) / (x1 - x0);
    return (1.0 - w) * curve.sigma[k - 1] + w * curve.sigma[k];
}

namespace {

ClassificationOutcome compare_once(ComparisonKind kind, double y0, double C0, const AlignmentBounds& b, double n,
                                   const IntegratorConfig& config) {
    const double pm = b.psi_min, pM = b.psi_max, nu = b.nu;
    OdeSystem sys;
    if (kind == ComparisonKind::Q)
        sys = {2, [pm, pM, nu](double, const double* y, double* f) {
                   const double c1 = y[0] < 0.0 ? pm : pM;
                   f[0] = -y[0] * y[0] - c1 * y[0] - y[1];
                   f[1] = -nu * y[1];
               }};
    else
        sys = {2, [pm, pM, nu, n](double, const double* y, double* f) {
                   const double c1 = y[0] >= 0.0 ? pm : pM;
                   f[0] = -y[0] * y[0] + c1 * y[0] - (n - 1.0) * y[1];
                   f[1] = -nu * y[1];
               }};
    IntegrateOptions opts;
    opts.store = false;
    const TrajectoryRecord rec = integrate(sys, {y0, C0}, config, opts);
    ClassificationOutcome out;
    out.termination = rec.termination.kind;
    out.t_final = rec.final_time();
    out.max_norm = rec.max_norm;
    out.final_state = rec.final_state();
    switch (rec.termination.kind) {
        case Termination::ReachedHorizon:
            out.verdict = Verdict::GlobalBounded;
            out.reason = "horizon reached with bounded state";
            break;
        case Termination::BlowupDetected:
            out.verdict = Verdict::FiniteTimeBlowup;
            out.t_estimate = rec.termination.t_estimate;
            out.reason = kind == ComparisonKind::Q ? "q -> -infinity" : "G -> -infinity";
            break;
        default:
            out.verdict = Verdict::Inconclusive;
            out.reason = to_string(rec.termination.kind) + ": " + rec.termination.message;
            break;
    }
    return out;
}

}  // namespace

ClassificationOutcome comparison_classify(ComparisonKind kind, double y0, double C0, const AlignmentBounds& bounds,
                                          double n, const IntegratorConfig& config, bool tolerance_check) {
    bounds.validate();
    config.validate();
    if (!(C0 >= 0.0)) throw DomainError("C0 must be >= 0");
    ClassificationOutcome first = compare_once(kind, y0, C0, bounds, n, config);
    if (!tolerance_check || first.verdict == Verdict::Inconclusive) return first;
    const ClassificationOutcome tight = compare_once(kind, y0, C0, bounds, n, config.tightened(10.0));
    if (tight.verdict != first.verdict) {
        first.verdict = Verdict::Inconclusive;
        first.reason = "verdict changes under 10x tighter tolerances";
        first.t_estimate = std::numeric_limits<double>::quiet_NaN();
    }
    return first;
}

}  // namespace ctflow
