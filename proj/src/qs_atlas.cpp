#include "ctflow/qs_atlas.hpp"

#include <algorithm>
#include <cmath>

#include "ctflow/euler_poisson.hpp"

namespace ctflow {

std::string to_string(PortraitVerdict v) {
    switch (v) {
        case PortraitVerdict::Converging: return "converging";
        case PortraitVerdict::Periodic: return "periodic";
        case PortraitVerdict::Bounded: return "bounded";
        case PortraitVerdict::Escaping: return "escaping";
        case PortraitVerdict::Invalid: return "invalid";
    }
    return "unknown";
}

namespace {

// s is extremal exactly where q changes sign
const std::string kSExtremum = "\x01s-extremum";

struct Chart {
    double n, kappa, c;

    double radius(double q, double s) const { return std::sqrt(q * q + kappa * (s + c / n)); }
    double q_of(double x, double l) const { return x * std::exp(l); }
    double s_of(double x, double l) const { return (1.0 - x * x) * std::exp(2.0 * l) / kappa - c / n; }

    // State (x, l, t) in tau.
    OdeSystem compact() const {
        const double nn = n, K = kappa * c / n;
        return {3, [nn, K](double, const double* y, double* f) {
                    const double x = y[0], l = y[1];
                    const double e = K * std::exp(-2.0 * l);
                    const double x2 = x * x;
                    f[0] = (1.0 - x2) * (1.0 - (2.0 - nn / 2.0) * x2 - e);
                    f[1] = x * (-x2 + 0.5 * (2.0 - nn) * (1.0 - x2)) - x * e;
                    f[2] = std::exp(-l);
                }};
    }
};

}  // namespace

QsRun integrate_qs(const ModelParams& params, double q0, double s0, const IntegratorConfig& config,
                   const std::vector<EventSpec>& events, const QsAtlasConfig& atlas) {
    params.validate();
    config.validate();
    const Chart ch{params.n, params.kappa, params.c};
    if (!(s0 + params.c / params.n > 0.0)) throw DomainError("s0 must exceed -c/n");
    const OdeSystem regular = qs_system(params);
    const OdeSystem compact = ch.compact();

    QsRun run;
    run.record = TrajectoryRecord(2);
    run.record.max_abs.assign(2, 0.0);
    run.max_s = s0;
    run.min_s = s0;
    auto note = [&](double q, double s) {
        run.max_abs_q = std::max(run.max_abs_q, std::abs(q));
        run.max_s = std::max(run.max_s, s);
        run.min_s = std::min(run.min_s, s);
        run.record.max_abs[0] = run.max_abs_q;
        run.record.max_abs[1] = std::max(run.record.max_abs[1], std::abs(s));
        run.record.max_norm = std::max(run.record.max_norm, std::max(std::abs(q), std::abs(s)));
    };
    auto append = [&](double t, double q, double s) {
        if (!run.record.empty() && !(t > run.record.final_time())) return;
        double y[2] = {q, s}, f[2];
        regular.rhs(t, y, f);
        run.record.push(t, y, f);
    };

    double t = 0.0, q = q0, s = s0;
    bool in_compact = ch.radius(q, s) > atlas.switch_up;
    while (true) {
        if (!in_compact) {
            IntegrateOptions opts;
            opts.t0 = t;
            opts.events = events;
            opts.events.push_back({kSExtremum, [](double, const double* y) { return y[0]; }, 0, false});
            opts.stop_name = "chart";
            const double up = atlas.switch_up;
            opts.stop = [&ch, up](double, const double* y) { return ch.radius(y[0], y[1]) > up; };
            const TrajectoryRecord rec = integrate(regular, {q, s}, config, opts);
            for (std::size_t k = 0; k < rec.size(); ++k) {
                note(rec.value(k, 0), rec.value(k, 1));
                if (run.record.empty() || rec.time(k) > run.record.final_time()) {
                    auto yk = rec.state(k);
                    auto fk = rec.derivative(k);
                    run.record.push(rec.time(k), yk.data(), fk.data());
                }
            }
            for (const auto& e : rec.events) {
                if (e.name == kSExtremum)
                    note(e.y[0], e.y[1]);
                else
                    run.record.events.push_back(e);
            }
            run.record.steps += rec.steps;
            run.record.rejected += rec.rejected;
            run.record.rhs_evals += rec.rhs_evals;
            run.record.termination = rec.termination;
            if (rec.termination.kind == Termination::Event && rec.termination.event == "chart" &&
                run.chart_switches < atlas.max_switches) {
                t = rec.final_time();
                q = rec.final_state()[0];
                s = rec.final_state()[1];
                in_compact = true;
                ++run.chart_switches;
                continue;
            }
            return run;
        }

        const double R = ch.radius(q, s);
        IntegrateOptions opts;
        const double t_end = config.t_max, down = std::log(atlas.switch_down), esc = atlas.l_escape;
        opts.events.push_back({"horizon", [t_end](double, const double* y) { return y[2] - t_end; }, +1, true});
        opts.events.push_back({"chart", [down](double, const double* y) { return down - y[1]; }, +1, true});
        opts.events.push_back({"escape", [esc](double, const double* y) { return y[1] - esc; }, +1, true});
        opts.events.push_back({kSExtremum, [](double, const double* y) { return y[0]; }, 0, false});
        for (const auto& ev : events) {
            EventSpec w = ev;
            const auto g = ev.g;
            w.g = [g, &ch](double, const double* y) {
                const double qs[2] = {ch.q_of(y[0], y[1]), ch.s_of(y[0], y[1])};
                return g(y[2], qs);
            };
            opts.events.push_back(w);
        }
        IntegratorConfig cc = config;
        cc.t_max = 1e12;
        const TrajectoryRecord rec = integrate(compact, {q / R, std::log(R), t}, cc, opts);
        for (std::size_t k = 0; k < rec.size(); ++k) {
            const double x = rec.value(k, 0), l = rec.value(k, 1);
            const double qk = ch.q_of(x, l), sk = ch.s_of(x, l);
            note(qk, sk);
            append(rec.value(k, 2), qk, sk);
        }
        for (const auto& e : rec.events) {
            if (e.name == kSExtremum) note(ch.q_of(e.y[0], e.y[1]), ch.s_of(e.y[0], e.y[1]));
            if (e.name == "horizon" || e.name == "chart" || e.name == "escape" || e.name == kSExtremum) continue;
            run.record.events.push_back({e.name, e.y[2], {ch.q_of(e.y[0], e.y[1]), ch.s_of(e.y[0], e.y[1])}});
        }
        run.record.steps += rec.steps;
        run.record.rejected += rec.rejected;
        run.record.rhs_evals += rec.rhs_evals;
        const State last = rec.final_state();
        TerminationInfo info = rec.termination;
        info.t = last[2];
        if (info.kind == Termination::Event) {
            if (info.event == "horizon") {
                info.kind = Termination::ReachedHorizon;
                info.event.clear();
            } else if (info.event == "chart") {
                t = last[2];
                q = ch.q_of(last[0], last[1]);
                s = ch.s_of(last[0], last[1]);
                if (run.chart_switches < atlas.max_switches) {
                    in_compact = false;
                    ++run.chart_switches;
                    continue;
                }
                info.kind = Termination::StepCollapse;
                info.message = "chart switch budget exhausted";
            } else if (info.event == "escape") {
                info.event.clear();
                info.component = last[0] < 0.0 ? 0 : 1;
                if (params.n < 2.0) {
                    info.kind = Termination::BlowupDetected;
                    info.t_estimate = last[2];
                } else {
                    info.kind = Termination::CapExceeded;
                    info.message = "ln R exceeded the representable range";
                }
            }
        }
        run.record.termination = info;
        return run;
    }
}

PeriodicOrbit detect_periodic_orbit(const ModelParams& params, double q0, double s0, const IntegratorConfig& config) {
    PeriodicOrbit orbit;
    const EventSpec section{"section", [](double, const double* y) { return y[0]; }, +1, true};
    const QsRun first = integrate_qs(params, q0, s0, config, {section});
    if (first.record.termination.kind != Termination::Event) return orbit;
    const auto& hit1 = first.record.events.back();
    orbit.t_first = hit1.t;
    // Start exactly on the section so the first step cannot retrigger it.
    const QsRun second = integrate_qs(params, 0.0, hit1.y[1], config, {section});
    if (second.record.termination.kind != Termination::Event) return orbit;
    const auto& hit2 = second.record.events.back();
    orbit.period = hit2.t;
    orbit.return_distance = std::hypot(hit2.y[0] - 0.0, hit2.y[1] - hit1.y[1]);
    IntegratorConfig c3 = config;
    c3.t_max = orbit.period;
    const QsRun closing = integrate_qs(params, q0, s0, c3);
    const State end = closing.record.final_state();
    orbit.closure = std::hypot(end[0] - q0, end[1] - s0);
    orbit.found = true;
    return orbit;
}

std::vector<PortraitEntry> qs_phase_portrait(const ModelParams& params,
                                             const std::vector<std::pair<double, double>>& seeds,
                                             const IntegratorConfig& config, const PortraitOptions& options) {
    if (options.rescaled && params.c != 0.0) throw UnsupportedRegime("rescaled portrait needs c = 0");
    std::vector<PortraitEntry> out;
    out.reserve(seeds.size());
    for (const auto& [q0, s0] : seeds) {
        PortraitEntry e;
        e.q0 = q0;
        e.s0 = s0;
        const bool valid = params.c == 0.0 ? s0 > 0.0 : s0 > -params.c / params.n;
        if (!valid || !std::isfinite(q0)) {
            e.reason = "seed violates s0 > 0 (c = 0) or s0 > -c/n";
            out.push_back(std::move(e));
            continue;
        }
        if (options.rescaled) {
            e.run.record = qshat_integrate(params, q0, s0, config).record;
            const State end = e.run.record.final_state();
            const bool near = std::hypot(end[0] - 1.0, end[1]) < options.converge_radius;
            e.verdict = near ? PortraitVerdict::Converging : PortraitVerdict::Bounded;
            out.push_back(std::move(e));
            continue;
        }
        e.run = integrate_qs(params, q0, s0, config);
        const auto kind = e.run.record.termination.kind;
        if (kind == Termination::BlowupDetected || kind == Termination::CapExceeded) {
            e.verdict = PortraitVerdict::Escaping;
            e.reason = to_string(kind);
        } else if (params.c == 0.0) {
            const State end = e.run.record.final_state();
            e.verdict = std::hypot(end[0], end[1]) < options.converge_radius ? PortraitVerdict::Converging
                                                                              : PortraitVerdict::Bounded;
        } else {
            e.orbit = detect_periodic_orbit(params, q0, s0, config);
            e.verdict = e.orbit.found && e.orbit.return_distance < 1e-4 ? PortraitVerdict::Periodic
                                                                       : PortraitVerdict::Bounded;
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace ctflow
