#include "ctflow/ode.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/toms748_solve.hpp>

#include "ctflow/model_core.hpp"

namespace ctflow {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("tolerances must be positive");
    if (!(h_min > 0.0) || !(h_min <= h_init) || !(h_init <= h_max))
        throw DomainError("step bounds must satisfy 0 < h_min <= h_init <= h_max");
    if (!(magnitude_cap > 0.0)) throw DomainError("magnitude cap must be positive");
    if (!(t_max > 0.0)) throw DomainError("horizon must be positive");
}

IntegratorConfig IntegratorConfig::tightened(double factor) const {
    IntegratorConfig c = *this;
    c.rel_tol /= factor;
    c.abs_tol /= factor;
    c.h_min = std::min(c.h_min, c.h_init);
    return c;
}

std::string to_string(Termination kind) {
    switch (kind) {
        case Termination::ReachedHorizon: return "ReachedHorizon";
        case Termination::Event: return "Event";
        case Termination::BlowupDetected: return "BlowupDetected";
        case Termination::CapExceeded: return "CapExceeded";
        case Termination::StepCollapse: return "StepCollapse";
    }
    return "Unknown";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::GlobalBounded: return "GlobalBounded";
        case Verdict::FiniteTimeBlowup: return "FiniteTimeBlowup";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Unknown";
}

int exit_code(Verdict v) {
    switch (v) {
        case Verdict::GlobalBounded: return 0;
        case Verdict::FiniteTimeBlowup: return 2;
        case Verdict::Inconclusive: return 3;
    }
    return 3;
}

TrajectoryRecord TrajectoryRecord::from_samples(std::size_t dimension, const std::vector<double>& t,
                                                const std::vector<State>& y, const std::vector<State>& dy) {
    TrajectoryRecord rec(dimension);
    rec.max_abs.assign(dimension, 0.0);
    for (std::size_t k = 0; k < t.size(); ++k) {
        rec.push(t[k], y[k].data(), dy[k].data());
        for (std::size_t i = 0; i < dimension; ++i) {
            rec.max_abs[i] = std::max(rec.max_abs[i], std::abs(y[k][i]));
            rec.max_norm = std::max(rec.max_norm, std::abs(y[k][i]));
        }
    }
    return rec;
}

State TrajectoryRecord::final_state() const {
    auto s = state(size() - 1);
    return State(s.begin(), s.end());
}

void TrajectoryRecord::push(double t, const double* y, const double* dy) {
    t_.push_back(t);
    y_.insert(y_.end(), y, y + dim_);
    dy_.insert(dy_.end(), dy, dy + dim_);
}

void TrajectoryRecord::trim_front(std::size_t keep) {
    if (size() <= keep) return;
    const std::size_t drop = size() - keep;
    t_.erase(t_.begin(), t_.begin() + static_cast<std::ptrdiff_t>(drop));
    y_.erase(y_.begin(), y_.begin() + static_cast<std::ptrdiff_t>(drop * dim_));
    dy_.erase(dy_.begin(), dy_.begin() + static_cast<std::ptrdiff_t>(drop * dim_));
}

double TrajectoryRecord::at(double t, std::size_t comp) const {
    if (empty()) throw DomainError("dense output on an empty record");
    const double span = std::max(1.0, std::abs(t_.back()));
    if (t < t_.front() - 1e-12 * span || t > t_.back() + 1e-12 * span)
        throw DomainError("dense output requested outside the recorded range");
    if (size() == 1) return y_[comp];
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t k = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    k = std::min(k, size() - 2);
    const double t0 = t_[k], t1 = t_[k + 1], h = t1 - t0;
    const double s = std::clamp((t - t0) / h, 0.0, 1.0);
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    const double y0 = y_[k * dim_ + comp], y1 = y_[(k + 1) * dim_ + comp];
    const double f0 = dy_[k * dim_ + comp], f1 = dy_[(k + 1) * dim_ + comp];
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1;
}

State TrajectoryRecord::at(double t) const {
    State out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = at(t, i);
    return out;
}

namespace {

// Dormand-Prince 5(4).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Stepper {
public:
    Stepper(const OdeSystem& sys) : sys_(sys), n_(sys.dimension) {
        for (auto* v : {&k2_, &k3_, &k4_, &k5_, &k6_, &tmp_}) v->assign(n_, 0.0);
    }

    // One step of size h from (t, y) with f0 = f(t, y). Writes the 5th-order
    // solution to ynew, f(t+h, ynew) to fnew and the embedded error to err.
    void step(double t, const double* y, const double* f0, double h, double* ynew, double* fnew, double* err) {
        const auto& f = sys_.rhs;
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * a21 * f0[i];
        f(t + c2 * h, tmp_.data(), k2_.data());
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a31 * f0[i] + a32 * k2_[i]);
        f(t + c3 * h, tmp_.data(), k3_.data());
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a41 * f0[i] + a42 * k2_[i] + a43 * k3_[i]);
        f(t + c4 * h, tmp_.data(), k4_.data());
        for (std::size_t i = 0; i < n_; ++i)
            tmp_[i] = y[i] + h * (a51 * f0[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        f(t + c5 * h, tmp_.data(), k5_.data());
        for (std::size_t i = 0; i < n_; ++i)
            tmp_[i] = y[i] + h * (a61 * f0[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        f(t + h, tmp_.data(), k6_.data());
        for (std::size_t i = 0; i < n_; ++i)
            ynew[i] = y[i] + h * (b1 * f0[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
        f(t + h, ynew, fnew);
        if (err)
            for (std::size_t i = 0; i < n_; ++i)
                err[i] = h * (e1 * f0[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * fnew[i]);
        evals_ += 6;
    }

    std::size_t evals() const { return evals_; }

private:
    const OdeSystem& sys_;
    std::size_t n_;
    State k2_, k3_, k4_, k5_, k6_, tmp_;
    std::size_t evals_ = 0;
};

bool all_finite(const double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(y[i])) return false;
    return true;
}

constexpr std::size_t kTail = 64;

}  // namespace

double reciprocal_blowup_time(const TrajectoryRecord& record, std::size_t component, std::size_t samples) {
    const std::size_t m = std::min(samples, record.size());
    if (m < 3) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t first = record.size() - m;
    const double tref = record.final_time();
    double st = 0, sz = 0, stt = 0, stz = 0;
    for (std::size_t k = first; k < record.size(); ++k) {
        const double t = record.time(k) - tref;
        const double z = 1.0 / std::abs(record.value(k, component));
        st += t;
        sz += z;
        stt += t * t;
        stz += t * z;
    }
    const double den = m * stt - st * st;
    if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double slope = (m * stz - st * sz) / den;
    const double icpt = (sz - slope * st) / m;
    if (!(slope < 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return tref - icpt / slope;
}

double power_blowup_time(const TrajectoryRecord& record, std::size_t component, std::size_t samples,
                         double* exponent) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::size_t m = std::min(samples, record.size());
    if (m < 3) return nan;
    const std::size_t first = record.size() - m;
    const double tref = record.final_time();
    double st = 0, sz = 0, stt = 0, stz = 0;
    for (std::size_t k = first; k < record.size(); ++k) {
        const double dy = record.derivative(k)[component];
        if (dy == 0.0) return nan;
        const double t = record.time(k) - tref;
        const double z = record.value(k, component) / dy;
        st += t;
        sz += z;
        stt += t * t;
        stz += t * z;
    }
    const double den = m * stt - st * st;
    if (!(den > 0.0)) return nan;
    const double slope = (m * stz - st * sz) / den;
    const double icpt = (sz - slope * st) / m;
    if (!(slope < 0.0)) return nan;
    if (exponent) *exponent = -1.0 / slope;
    return tref - icpt / slope;
}

TrajectoryRecord integrate(const OdeSystem& system, const State& y0, const IntegratorConfig& config,
                           const IntegrateOptions& options) {
    config.validate();
    const std::size_t n = system.dimension;
    if (y0.size() != n) throw DomainError("initial state has the wrong dimension");
    if (!all_finite(y0.data(), n)) throw DomainError("initial state must be finite");

    TrajectoryRecord rec(n);
    rec.max_abs.assign(n, 0.0);
    Stepper stepper(system);

    double t = options.t0;
    const double t_end = config.t_max;
    State y = y0, f(n), ynew(n), fnew(n), err(n);
    system.rhs(t, y.data(), f.data());
    if (!all_finite(f.data(), n)) {
        rec.push(t, y.data(), f.data());
        rec.termination = {Termination::StepCollapse, t, "", NAN, 0, "non-finite derivative at the initial state"};
        return rec;
    }
    rec.push(t, y.data(), f.data());
    auto track = [&](const double* v) {
        for (std::size_t i = 0; i < n; ++i) {
            rec.max_abs[i] = std::max(rec.max_abs[i], std::abs(v[i]));
            rec.max_norm = std::max(rec.max_norm, std::abs(v[i]));
        }
    };
    track(y.data());

    std::vector<double> g_prev(options.events.size());
    for (std::size_t e = 0; e < options.events.size(); ++e) g_prev[e] = options.events[e].g(t, y.data());

    double h = std::min(config.h_init, config.h_max);
    bool have_ref = false;
    double t_ref = 0.0, f_ref = 0.0;
    const double cap_watch = config.magnitude_cap * 1e-3;
    {
        double norm = 0.0;
        for (double v : y) norm = std::max(norm, std::abs(v));
        if (norm > cap_watch) {
            have_ref = true;
            t_ref = t;
            for (double v : f) f_ref = std::max(f_ref, std::abs(v));
        }
    }

    auto finish = [&](Termination kind, const std::string& msg) {
        rec.termination.kind = kind;
        rec.termination.t = t;
        rec.termination.message = msg;
        rec.rhs_evals = stepper.evals() + 1;
    };

    if (!(t < t_end)) {
        finish(Termination::ReachedHorizon, "");
        return rec;
    }

    while (true) {
        if (rec.steps >= config.max_steps) {
            finish(Termination::StepCollapse, "step budget exhausted");
            return rec;
        }
        bool last = false;
        if (t + h >= t_end) {
            h = t_end - t;
            last = true;
        }
        if (!(t + h > t)) {
            finish(Termination::StepCollapse, "step size below time resolution");
            return rec;
        }
        stepper.step(t, y.data(), f.data(), h, ynew.data(), fnew.data(), err.data());

        double enorm = 0.0;
        bool finite = all_finite(ynew.data(), n) && all_finite(fnew.data(), n);
        if (finite) {
            for (std::size_t i = 0; i < n; ++i) {
                const double sc = config.abs_tol + config.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                const double r = err[i] / sc;
                enorm += r * r;
            }
            enorm = std::sqrt(enorm / static_cast<double>(n));
            if (!std::isfinite(enorm)) finite = false;
        }
        if (!finite || enorm > 1.0) {
            ++rec.rejected;
            const double fac = finite ? std::max(0.2, 0.9 * std::pow(enorm, -0.2)) : 0.2;
            h *= std::min(fac, 0.9);
            if (h < config.h_min) {
                finish(Termination::StepCollapse, finite ? "step size fell below h_min"
                                                         : "non-finite derivative near t = " + std::to_string(t));
                return rec;
            }
            continue;
        }

        // Accepted step [t, t + h].
        const double t_new = last ? t_end : t + h;
        const double h_acc = h;
        ++rec.steps;

        // Events inside the step.
        int term_event = -1;
        double term_tau = h_acc;
        State term_y;
        std::vector<EventHit> hits;
        for (std::size_t e = 0; e < options.events.size(); ++e) {
            const auto& ev = options.events[e];
            const double g0 = g_prev[e];
            const double g1 = ev.g(t_new, ynew.data());
            g_prev[e] = g1;
            const bool rising = g0 < 0.0 && g1 >= 0.0;
            const bool falling = g0 > 0.0 && g1 <= 0.0;
            if (!(rising || falling)) continue;
            if ((ev.direction > 0 && !rising) || (ev.direction < 0 && !falling)) continue;
            State yt(n), ft(n);
            auto G = [&](double tau) {
                if (tau <= 0.0) return g0;
                stepper.step(t, y.data(), f.data(), tau, yt.data(), ft.data(), nullptr);
                return ev.g(t + tau, yt.data());
            };
            double tau = h_acc;
            if (g1 != 0.0) {
                std::uintmax_t iters = 200;
                auto tol = [](double a, double b) { return std::abs(b - a) < 1e-14; };
                auto root = boost::math::tools::toms748_solve(G, 0.0, h_acc, g0, g1, tol, iters);
                tau = 0.5 * (root.first + root.second);
            }
            stepper.step(t, y.data(), f.data(), tau, yt.data(), ft.data(), nullptr);
            hits.push_back({ev.name, t + tau, yt});
            if (ev.terminal && (term_event < 0 || tau < term_tau)) {
                term_event = static_cast<int>(e);
                term_tau = tau;
                term_y = yt;
            }
        }
        std::sort(hits.begin(), hits.end(), [](const EventHit& a, const EventHit& b) { return a.t < b.t; });
        for (auto& hit : hits) {
            if (term_event >= 0 && hit.t > t + term_tau) continue;
            rec.events.push_back(hit);
        }
        if (term_event >= 0) {
            State ft(n);
            system.rhs(t + term_tau, term_y.data(), ft.data());
            t = t + term_tau;
            rec.push(t, term_y.data(), ft.data());
            track(term_y.data());
            finish(Termination::Event, "");
            rec.termination.event = options.events[static_cast<std::size_t>(term_event)].name;
            return rec;
        }

        t = t_new;
        y.swap(ynew);
        f.swap(fnew);
        rec.push(t, y.data(), f.data());
        if (!options.store && rec.size() > 2 * kTail) rec.trim_front(kTail);
        track(y.data());

        double norm = 0.0;
        std::size_t comp = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(y[i]) > norm) {
                norm = std::abs(y[i]);
                comp = i;
            }
        double fnorm = 0.0;
        for (double v : f) fnorm = std::max(fnorm, std::abs(v));
        if (!have_ref && norm > cap_watch) {
            have_ref = true;
            t_ref = t;
            f_ref = fnorm;
        }
        if (norm > config.magnitude_cap) {
            const bool feedback = y[comp] * f[comp] > 0.0;
            const bool growing = fnorm > f_ref;
            const double t_est = power_blowup_time(rec, comp);
            // the predicted remaining time must be short against the climb from the watch level
            const bool converging = t_est >= t && t_est - t < 0.5 * (t - t_ref);
            rec.termination.component = comp;
            if (feedback && growing && converging) {
                finish(Termination::BlowupDetected, "");
                rec.termination.t_estimate = t_est;
            } else {
                finish(Termination::CapExceeded, "magnitude cap exceeded without a finite-time signature");
            }
            return rec;
        }

        if (options.stop && options.stop(t, y.data())) {
            finish(Termination::Event, "");
            rec.termination.event = options.stop_name;
            return rec;
        }
        if (last) {
            finish(Termination::ReachedHorizon, "");
            return rec;
        }

        const double fac = enorm > 0.0 ? std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0) : 5.0;
        h = std::min(h_acc * fac, config.h_max);
        if (h < config.h_min) {
            // Error control wants steps below h_min: report as collapse, or as
            // blowup when the state is already large and still feeding itself.
            const bool feedback = y[comp] * f[comp] > 0.0;
            rec.termination.component = comp;
            const double t_est = power_blowup_time(rec, comp);
            if (norm > std::sqrt(config.magnitude_cap) && feedback && std::isfinite(t_est)) {
                finish(Termination::BlowupDetected, "");
                rec.termination.t_estimate = t_est;
            } else {
                finish(Termination::StepCollapse, "step size fell below h_min");
            }
            return rec;
        }
    }
}

TrajectoryRecord integrate_until_event(const OdeSystem& system, const State& y0, const IntegratorConfig& config,
                                       const EventSpec& event) {
    IntegrateOptions opts;
    EventSpec ev = event;
    ev.terminal = true;
    opts.events.push_back(ev);
    return integrate(system, y0, config, opts);
}

double estimate_decay_exponent(const TrajectoryRecord& record, std::size_t component, double t_a, double t_b) {
    if (!(t_b > t_a) || !(t_a >= 1.0)) throw DomainError("decay window must satisfy t_b > t_a >= 1");
    if (record.empty() || record.times().front() > t_a || record.final_time() < t_b)
        throw DomainError("decay window not covered by the record");
    constexpr int m = 200;
    const double la = std::log(t_a + 1.0), lb = std::log(t_b + 1.0);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < m; ++k) {
        const double lx = la + (lb - la) * k / (m - 1);
        const double t = std::min(std::max(std::exp(lx) - 1.0, t_a), t_b);
        const double v = record.at(t, component);
        if (!(v > 0.0)) throw DomainError("non-positive sample in decay window");
        const double ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace ctflow
