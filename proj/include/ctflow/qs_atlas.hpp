#pragma once

#include <string>
#include <vector>

#include "ctflow/model_core.hpp"
#include "ctflow/ode.hpp"

namespace ctflow {

// (q, s) integration over two charts. While R = sqrt(q^2 + kappa (s + c/n))
// stays below switch_up the state is (q, s) in t. Beyond it the solver uses
// x = q / R, l = ln R with dtau = R dt, and returns below switch_down.
struct QsAtlasConfig {
    double switch_up = 1e4;
    double switch_down = 1e3;
    double l_escape = 340.0;  // s overflows shortly after
    std::size_t max_switches = 1000;
};

struct QsRun {
    TrajectoryRecord record;  // (q, s) in t
    double max_abs_q = 0.0;
    double max_s = 0.0;
    double min_s = 0.0;
    std::size_t chart_switches = 0;
};

// Events use (t, y = {q, s}). Blowup (l -> infinity at finite t) is reported
// only for n < 2; for n >= 2 reaching l_escape ends as CapExceeded.
QsRun integrate_qs(const ModelParams& params, double q0, double s0, const IntegratorConfig& config,
                   const std::vector<EventSpec>& events = {}, const QsAtlasConfig& atlas = {});

struct PeriodicOrbit {
    bool found = false;
    double t_first = 0.0;         // first upward crossing of q = 0
    double period = 0.0;
    double return_distance = 0.0;  // between successive section points
    double closure = 0.0;          // |y(T) - y0|
};

PeriodicOrbit detect_periodic_orbit(const ModelParams& params, double q0, double s0, const IntegratorConfig& config);

enum class PortraitVerdict { Converging, Periodic, Bounded, Escaping, Invalid };

std::string to_string(PortraitVerdict v);

struct PortraitEntry {
    double q0 = 0.0;
    double s0 = 0.0;
    PortraitVerdict verdict = PortraitVerdict::Invalid;
    std::string reason;
    QsRun run;
    PeriodicOrbit orbit;
};

struct PortraitOptions {
    bool rescaled = false;          // integrate (qhat, shat) in ln(t+1) instead
    double converge_radius = 1e-2;  // c = 0 verdict
};

std::vector<PortraitEntry> qs_phase_portrait(const ModelParams& params,
                                             const std::vector<std::pair<double, double>>& seeds,
                                             const IntegratorConfig& config, const PortraitOptions& options = {});

}  // namespace ctflow
