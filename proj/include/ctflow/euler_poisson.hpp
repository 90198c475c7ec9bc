#pragma once

#include <vector>

#include "ctflow/model_core.hpp"
#include "ctflow/ode.hpp"
#include "ctflow/profile.hpp"

namespace ctflow {

// State layout (p, q, s, rho). Euler-Poisson, or the Burgers limits selected
// by params.model. For n = 1 only (p, rho) evolve.
OdeSystem ep_char_system(const ModelParams& params);

// State layout (q, s): q' = -q^2 + kappa s, s' = -(n s + c) q.
OdeSystem qs_system(const ModelParams& params);

// State layout (w, v, q, s) with w = p / rho, v = 1 / rho.
OdeSystem wv_system(const ModelParams& params, double s0);

// Integrates (w, v) jointly with (q, s) from an Euler-Poisson state.
TrajectoryRecord integrate_wv(const ModelParams& params, const CharState& y0, const IntegratorConfig& config);

double initial_s_from_density(const RadialProfile& rho0, double c, double r, double n);
// Same integral for a closed-form density.
double initial_s_from_density(const RadialFunction& rho0, double c, double r, double n);

struct ClassifyOptions {
    bool tolerance_check = true;  // rerun at 10x tighter tolerances, Inconclusive on a flip
    bool early_exit = true;
    double basin = 1e-3;
};

ClassificationOutcome classify_ep(const CharState& y0, const ModelParams& params, const IntegratorConfig& config,
                                  const ClassifyOptions& options = {});

Region sigma_1d(double p0, double rho0, double kappa, double c);

// Rescaled system in that = ln(t + 1), state (qhat, shat), c = 0.
struct QshatRun {
    TrajectoryRecord record;
    double shat_max = 0.0;
    double t_star = 0.0;
    double qhat_max = 0.0;
};

OdeSystem qshat_system(const ModelParams& params);
QshatRun qshat_integrate(const ModelParams& params, double qhat0, double shat0, const IntegratorConfig& config);

struct ThresholdConstants {
    double C_q = 0.0;
    double C_s = 0.0;
    double C = 0.0;
    double gamma = 0.0;
    double shat_max = 0.0;
    double t_star = 0.0;
};

ThresholdConstants compute_threshold_constants(const ModelParams& params, double q0, double s0,
                                               const IntegratorConfig& config);

double compute_Dcrit(double v0, double gamma, double kappa);

// Returns -sigma_+(v0): states with w0 = p0 / rho0 above it are subcritical.
double explicit_sigma_plus(double v0, const ThresholdConstants& k, double kappa, double n);

}  // namespace ctflow
