#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ctflow {

using State = std::vector<double>;
using Rhs = std::function<void(double t, const double* y, double* dydt)>;

struct OdeSystem {
    std::size_t dimension = 0;
    Rhs rhs;
};

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-14;
    double h_max = 1.0;
    double t_max = 200.0;
    double magnitude_cap = 1e8;
    std::size_t max_steps = 20'000'000;

    void validate() const;
    IntegratorConfig tightened(double factor) const;
};

enum class Termination { ReachedHorizon, Event, BlowupDetected, CapExceeded, StepCollapse };

std::string to_string(Termination kind);

struct TerminationInfo {
    Termination kind = Termination::ReachedHorizon;
    double t = 0.0;
    std::string event;  // event name for Termination::Event
    double t_estimate = std::numeric_limits<double>::quiet_NaN();
    std::size_t component = 0;  // dominant component at the cap
    std::string message;
};

struct EventHit {
    std::string name;
    double t = 0.0;
    State y;
};

// Fires on a sign change of g between accepted steps. direction +1 keeps
// rising crossings only, -1 falling only, 0 both.
struct EventSpec {
    std::string name;
    std::function<double(double t, const double* y)> g;
    int direction = 0;
    bool terminal = true;
};

struct IntegrateOptions {
    double t0 = 0.0;
    std::vector<EventSpec> events;
    std::function<bool(double t, const double* y)> stop;  // checked after each accepted step
    std::string stop_name = "stop";
    bool store = true;  // false keeps only a short tail (enough for blowup fits)
};

class TrajectoryRecord {
public:
    explicit TrajectoryRecord(std::size_t dimension = 0) : dim_(dimension) {}

    static TrajectoryRecord from_samples(std::size_t dimension, const std::vector<double>& t,
                                         const std::vector<State>& y, const std::vector<State>& dy);

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return t_.size(); }
    bool empty() const { return t_.empty(); }
    double time(std::size_t k) const { return t_[k]; }
    std::span<const double> state(std::size_t k) const { return {y_.data() + k * dim_, dim_}; }
    std::span<const double> derivative(std::size_t k) const { return {dy_.data() + k * dim_, dim_}; }
    const std::vector<double>& times() const { return t_; }
    double value(std::size_t k, std::size_t comp) const { return y_[k * dim_ + comp]; }

    double final_time() const { return t_.back(); }
    State final_state() const;
    // Cubic Hermite dense output; t must lie inside the recorded range.
    State at(double t) const;
    double at(double t, std::size_t comp) const;

    void push(double t, const double* y, const double* dy);
    void trim_front(std::size_t keep);

    TerminationInfo termination;
    std::vector<EventHit> events;
    std::vector<double> max_abs;  // per component over every accepted step
    double max_norm = 0.0;        // max over steps of |y|_inf
    std::size_t steps = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;

private:
    std::size_t dim_;
    std::vector<double> t_;
    std::vector<double> y_;
    std::vector<double> dy_;
};

enum class Verdict { GlobalBounded, FiniteTimeBlowup, Inconclusive };

std::string to_string(Verdict v);
// 0 bounded, 2 blowup, 3 inconclusive.
int exit_code(Verdict v);

struct ClassificationOutcome {
    Verdict verdict = Verdict::Inconclusive;
    double t_estimate = std::numeric_limits<double>::quiet_NaN();
    std::string reason;
    Termination termination = Termination::ReachedHorizon;
    double t_final = 0.0;
    double max_norm = 0.0;
    State final_state;
};

TrajectoryRecord integrate(const OdeSystem& system, const State& y0, const IntegratorConfig& config,
                           const IntegrateOptions& options = {});

TrajectoryRecord integrate_until_event(const OdeSystem& system, const State& y0, const IntegratorConfig& config,
                                       const EventSpec& event);

// Least-squares slope of log y versus log(t+1) on 200 log-spaced points of [t_a, t_b].
double estimate_decay_exponent(const TrajectoryRecord& record, std::size_t component, double t_a, double t_b);

// Zero of a straight-line fit of 1/|y_comp| over the last `samples` records.
double reciprocal_blowup_time(const TrajectoryRecord& record, std::size_t component, std::size_t samples = 8);

// Zero of a straight-line fit of y / y' over the last `samples` records. Exact
// for y ~ (T - t)^(-alpha); the fitted alpha goes to `exponent` when given.
double power_blowup_time(const TrajectoryRecord& record, std::size_t component, std::size_t samples = 8,
                         double* exponent = nullptr);

}  // namespace ctflow
