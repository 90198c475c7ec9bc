#include "ctflow/euler_poisson.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "ctflow/quadrature.hpp"

namespace ctflow {

OdeSystem ep_char_system(const ModelParams& params) {
    params.validate();
    const double n = params.n, k = params.kappa, c = params.c;
    switch (params.model) {
        case ModelKind::EulerPoisson:
            if (n == 1.0)
                return {4, [k, c](double, const double* y, double* f) {
                            f[0] = -y[0] * y[0] + k * (y[3] - c);
                            f[1] = 0.0;
                            f[2] = 0.0;
                            f[3] = -y[3] * y[0];
                        }};
            return {4, [n, k, c](double, const double* y, double* f) {
                        const double p = y[0], q = y[1], s = y[2], rho = y[3];
                        f[0] = -p * p + k * (rho - c - (n - 1.0) * s);
                        f[1] = -q * q + k * s;
                        f[2] = -(n * s + c) * q;
                        f[3] = -rho * (p + (n - 1.0) * q);
                    }};
        case ModelKind::DampedBurgers:
        case ModelKind::InviscidBurgers: {
            const double d = params.model == ModelKind::DampedBurgers ? params.kappa_damp : 0.0;
            return {4, [n, d](double, const double* y, double* f) {
                        f[0] = -y[0] * y[0] - d * y[0];
                        f[1] = n == 1.0 ? 0.0 : -y[1] * y[1] - d * y[1];
                        f[2] = 0.0;
                        f[3] = -y[3] * (y[0] + (n - 1.0) * y[1]);
                    }};
        }
        case ModelKind::EulerAlignment:
            break;
    }
    throw DomainError("the characteristic system is not closed for euler-alignment");
}

OdeSystem qs_system(const ModelParams& params) {
    const double n = params.n, k = params.kappa, c = params.c;
    return {2, [n, k, c](double, const double* y, double* f) {
                f[0] = -y[0] * y[0] + k * y[1];
                f[1] = -(n * y[1] + c) * y[0];
            }};
}

OdeSystem wv_system(const ModelParams& params, double s0) {
    const double n = params.n, k = params.kappa, c = params.c;
    const double st0 = s0 + c / n;
    if (!(st0 > 0.0)) throw DomainError("s0 + c/n must be positive");
    return {4, [n, k, c, st0](double, const double* y, double* f) {
                const double w = y[0], v = y[1], q = y[2], s = y[3];
                const double eA = std::pow(std::max(s + c / n, 0.0) / st0, (n - 1.0) / n);
                f[0] = k * eA - k * (c + (n - 1.0) * s) * v;
                f[1] = w;
                f[2] = -q * q + k * s;
                f[3] = -(n * s + c) * q;
            }};
}

TrajectoryRecord integrate_wv(const ModelParams& params, const CharState& y0, const IntegratorConfig& config) {
    if (!(y0.rho > 0.0)) throw DomainError("(w, v) needs rho0 > 0");
    return integrate(wv_system(params, y0.s), {y0.p / y0.rho, 1.0 / y0.rho, y0.q, y0.s}, config);
}

namespace {

// int_0^h tau^(n-1) g(tau) dtau with g quadratic through 0, h/2, h.
double origin_moment(double g0, double g1, double g2, double h, double n) {
    const double m0 = 1.0 / n, m1 = 1.0 / (n + 1.0), m2 = 1.0 / (n + 2.0);
    const double w0 = 2 * m2 - 3 * m1 + m0;
    const double w1 = 4 * m1 - 4 * m2;
    const double w2 = 2 * m2 - m1;
    return std::pow(h, n) * (w0 * g0 + w1 * g1 + w2 * g2);
}

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double x0 = a + k * h;
        acc += f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h);
    }
    return acc * h / 6.0;
}

}  // namespace

double initial_s_from_density(const RadialProfile& rho0, double c, double r, double n) {
    if (!(r > 0.0)) throw DomainError("radius must be positive");
    if (r > rho0.r_max() * (1.0 + 1e-14)) throw DomainError("radius outside the density profile");
    if (!(n >= 1.0)) throw DomainError("dimension must be >= 1");
    const auto g = [&](double t) { return rho0(std::min(t, rho0.r_max())) - c; };
    const auto integrand = [&](double t) { return std::pow(t, n - 1.0) * g(t); };
    const auto& x = rho0.nodes();
    const double h1 = std::min(x[1], r);
    const double h0 = h1 / 16.0;
    double total = origin_moment(g(0.0), g(0.5 * h0), g(h0), h0, n);
    total += simpson(integrand, h0, h1, 15);
    for (std::size_t k = 1; k + 1 < x.size() && x[k] < r; ++k) total += simpson(integrand, x[k], std::min(x[k + 1], r), 8);
    return total / std::pow(r, n);
}

double initial_s_from_density(const RadialFunction& rho0, double c, double r, double n) {
    if (!(r > 0.0)) throw DomainError("radius must be positive");
    if (!(n >= 1.0)) throw DomainError("dimension must be >= 1");
    std::vector<double> breaks = graded_breaks(0.0, r, 0.0, 0.25, 12);
    for (double b : rho0.breaks)
        if (b > 0.0 && b < r) breaks.push_back(b);
    if (rho0.support < r) breaks.push_back(rho0.support);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const auto integrand = [&](double t) { return std::pow(t, n - 1.0) * (rho0(t) - c); };
    return integrate_panels(integrand, breaks, 20, 2) / std::pow(r, n);
}

namespace {

ClassificationOutcome classify_once(const CharState& y0, const ModelParams& params, const IntegratorConfig& config,
                                    const ClassifyOptions& options) {
    const OdeSystem sys = ep_char_system(params);
    IntegrateOptions opts;
    opts.store = false;
    const bool ep = params.model == ModelKind::EulerPoisson;
    const double n = params.n, k = params.kappa;
    if (ep && options.early_exit && params.c == 0.0 && n >= 2.0) {
        const double basin = options.basin;
        opts.stop_name = "basin";
        opts.stop = [n, k, basin](double, const double* y) {
            const double p = y[0], q = y[1], s = y[2], rho = y[3];
            if (std::abs(q) + std::abs(s) >= basin) return false;
            const double forcing = k * (rho - (n - 1.0) * s);
            return forcing >= 0.0 && (p >= 0.0 || p * p < forcing);
        };
    }
    const TrajectoryRecord rec = integrate(sys, {y0.p, y0.q, y0.s, y0.rho}, config, opts);
    ClassificationOutcome out;
    out.termination = rec.termination.kind;
    out.t_final = rec.final_time();
    out.max_norm = rec.max_norm;
    out.final_state = rec.final_state();
    static const char* names[] = {"p", "q", "s", "rho"};
    const std::size_t comp = rec.termination.component;
    switch (rec.termination.kind) {
        case Termination::ReachedHorizon:
            out.verdict = Verdict::GlobalBounded;
            out.reason = "horizon reached with bounded state";
            break;
        case Termination::Event:
            out.verdict = Verdict::GlobalBounded;
            out.reason = "entered the decay basin";
            break;
        case Termination::BlowupDetected: {
            const bool channel = comp == 0 || comp == 3 || (!ep && comp == 1);
            if (channel) {
                out.verdict = Verdict::FiniteTimeBlowup;
                out.t_estimate = rec.termination.t_estimate;
                out.reason = std::string("blowup in ") + names[comp];
            } else {
                out.verdict = Verdict::Inconclusive;
                out.reason = std::string("escape in ") + names[comp] + ", which is bounded in theory";
            }
            break;
        }
        case Termination::CapExceeded:
            out.verdict = Verdict::Inconclusive;
            out.reason = std::string("cap exceeded in ") + names[comp] + " without a blowup signature";
            break;
        case Termination::StepCollapse:
            out.verdict = Verdict::Inconclusive;
            out.reason = "step collapse: " + rec.termination.message;
            break;
    }
    return out;
}

}  // namespace

ClassificationOutcome classify_ep(const CharState& y0, const ModelParams& params, const IntegratorConfig& config,
                                  const ClassifyOptions& options) {
    params.validate();
    config.validate();
    if (!(y0.rho >= 0.0)) throw DomainError("rho0 must be >= 0");
    if (!std::isfinite(y0.p) || !std::isfinite(y0.q) || !std::isfinite(y0.s) || !std::isfinite(y0.rho))
        throw DomainError("initial state must be finite");
    if (params.model == ModelKind::EulerPoisson && params.n > 1.0 && !(y0.s > -params.c / params.n))
        throw DomainError("s0 must exceed -c/n");
    ClassificationOutcome first = classify_once(y0, params, config, options);
    if (!options.tolerance_check || first.verdict == Verdict::Inconclusive) return first;
    const ClassificationOutcome tight = classify_once(y0, params, config.tightened(10.0), options);
    if (tight.verdict != first.verdict) {
        first.verdict = Verdict::Inconclusive;
        first.reason = "verdict changes under 10x tighter tolerances (" + to_string(tight.verdict) + ")";
        first.t_estimate = std::numeric_limits<double>::quiet_NaN();
    }
    return first;
}

Region sigma_1d(double p0, double rho0, double kappa, double c) {
    if (c == 0.0) return p0 > -std::sqrt(2.0 * kappa * std::max(rho0, 0.0)) ? Region::Subcritical
                                                                           : Region::Supercritical;
    if (2.0 * rho0 <= c) return Region::Supercritical;
    return std::abs(p0) < std::sqrt(kappa * (2.0 * rho0 - c)) ? Region::Subcritical : Region::Supercritical;
}

OdeSystem qshat_system(const ModelParams& params) {
    const double n = params.n, k = params.kappa;
    return {2, [n, k](double, const double* y, double* f) {
                f[0] = -y[0] * y[0] + y[0] + k * y[1];
                f[1] = (2.0 - n * y[0]) * y[1];
            }};
}

QshatRun qshat_integrate(const ModelParams& params, double qhat0, double shat0, const IntegratorConfig& config) {
    if (!(shat0 > 0.0)) throw DomainError("shat0 must be positive");
    const double n = params.n, k = params.kappa;
    IntegrateOptions opts;
    opts.events.push_back({"shat-max", [n](double, const double* y) { return y[0] - 2.0 / n; }, +1, false});
    opts.events.push_back(
        {"qhat-peak", [k](double, const double* y) { return -y[0] * y[0] + y[0] + k * y[1]; }, -1, false});
    QshatRun run;
    run.record = integrate(qshat_system(params), {qhat0, shat0}, config, opts);
    run.qhat_max = qhat0;
    for (std::size_t i = 0; i < run.record.size(); ++i) run.qhat_max = std::max(run.qhat_max, run.record.value(i, 0));
    bool crossed = false;
    for (const auto& e : run.record.events) {
        if (e.name == "qhat-peak") run.qhat_max = std::max(run.qhat_max, e.y[0]);
        if (e.name == "shat-max" && !crossed) {
            crossed = true;
            run.t_star = e.t;
            run.shat_max = e.y[1];
        }
    }
    if (qhat0 >= 2.0 / n) {
        run.t_star = 0.0;
        run.shat_max = shat0;
    } else if (!crossed) {
        run.shat_max = shat0;
        for (std::size_t i = 0; i < run.record.size(); ++i)
            if (run.record.value(i, 1) > run.shat_max) {
                run.shat_max = run.record.value(i, 1);
                run.t_star = run.record.time(i);
            }
    }
    return run;
}

ThresholdConstants compute_threshold_constants(const ModelParams& params, double q0, double s0,
                                               const IntegratorConfig& config) {
    const double n = params.n, k = params.kappa;
    if (!(n > 2.0)) throw UnsupportedRegime("threshold constants need n > 2");
    if (params.c != 0.0) throw UnsupportedRegime("threshold constants need c = 0");
    if (!(s0 > 0.0)) throw DomainError("s0 must be positive");
    if (!(q0 >= 0.0)) throw UnsupportedRegime("threshold constants need q0 >= 0");
    IntegratorConfig cfg = config;
    cfg.t_max = 50.0;
    const QshatRun run = qshat_integrate(params, q0, s0, cfg);
    ThresholdConstants out;
    out.shat_max = run.shat_max;
    out.t_star = run.t_star;
    out.C_q = std::max(run.qhat_max, 1.0);
    out.C_s = run.shat_max * std::exp((n - 2.0) * run.t_star + n * (n - 2.0) / 2.0);
    out.C = k / (n - 2.0) * std::pow(out.C_s / s0, (n - 1.0) / n);
    out.gamma = out.C_q * (n - 1.0) - 2.0;
    return out;
}

double compute_Dcrit(double v0, double gamma, double kappa) {
    if (!(v0 > 0.0) || !(gamma > 0.0) || !(kappa > 0.0)) throw DomainError("D_crit needs v0, gamma, kappa > 0");
    const double top = kappa / (gamma + 1.0);
    if (v0 >= kappa / (gamma * (gamma + 1.0))) return top;
    const auto F = [&](double z) {
        return v0 + kappa / gamma * std::pow(z, gamma / (gamma + 1.0)) - top * (z + 1.0 / gamma);
    };
    const auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15; };
    const auto root = boost::math::tools::bisect(F, 0.0, 1.0, tol);
    const double z = 0.5 * (root.first + root.second);
    return top * (1.0 - z);
}

double explicit_sigma_plus(double v0, const ThresholdConstants& k, double kappa, double n) {
    if (!(n >= 3.0)) throw UnsupportedRegime("explicit bound needs n >= 3");
    if (!(k.C_s < n - 2.0)) throw UnsupportedRegime("explicit bound degenerates for C_s >= n - 2");
    const double d = compute_Dcrit(v0, k.gamma, kappa);
    return (-d + k.C_s * (v0 / (n - 1.0) + k.C / (n - 2.0))) / (1.0 - k.C_s / (n - 2.0));
}

}  // namespace ctflow
