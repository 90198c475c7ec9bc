#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ctflow/euler_alignment.hpp"
#include "ctflow/model_core.hpp"
#include "ctflow/ode.hpp"
#include "ctflow/profile.hpp"

namespace ctflow {

struct CrossingError : std::runtime_error {
    CrossingError(double t_, std::size_t index_, double r_)
        : std::runtime_error("characteristic paths crossed"), t(t_), index(index_), r(r_) {}
    double t;
    std::size_t index;  // paths index and index + 1
    double r;
};

struct CharacteristicEnsemble {
    double t = 0.0;
    int n = 1;
    std::vector<double> r;
    std::vector<double> u;
    std::vector<double> m;
    // Exact per-path (p, q, rho) when the model carries them (Euler-Poisson); empty otherwise.
    std::vector<double> p;
    std::vector<double> q;
    std::vector<double> rho;
    std::vector<double> psi;  // Euler-alignment kernel sums at the paths
};

struct FieldSnapshot {
    double t = 0.0;
    std::vector<double> r;
    std::vector<double> rho;
    std::vector<double> u;
    std::vector<double> p;
    std::vector<double> q;
    std::vector<double> d;
    std::vector<double> eta;
    std::vector<double> psi;  // empty for Euler-Poisson
    std::vector<double> G;    // p + psi, empty for Euler-Poisson
    double max_grad = 0.0;    // max |p|, |q| = operator norm of grad u
    double V = 0.0;           // velocity oscillation 2 max |u|
    double support = 0.0;     // outer shell edge
    double mass = 0.0;

    RadialProfile rho_profile() const;
    RadialProfile u_profile() const;  // monotone cubic through (0, 0) and the paths
};

// Shell edges: 0, then cubic interpolation in the path index at i + 1/2 (midpoints
// for evenly spaced paths, and wherever the cubic leaves [r_i, r_i+1]).
std::vector<double> shell_edges(const std::vector<double>& r);
double shell_volume(double a, double b, int n);

FieldSnapshot reconstruct_fields(const CharacteristicEnsemble& ensemble);

struct SimulationConfig {
    std::size_t paths = 200;
    double radius = 1.0;           // paths start at (i + 1/2) radius / paths
    double t_end = 10.0;
    double snapshot_every = 0.1;
    double dt = 0.0;               // Euler-alignment step; 0 selects 0.1 / psi_max
    int angular_order = 16;        // Euler-alignment spherical average nodes
    IntegratorConfig ode;          // Euler-Poisson path integrations
};

struct DiagnosticsRow {
    double t = 0.0;
    double max_grad = 0.0;
    double V = 0.0;
    double support = 0.0;
    double min_r = 0.0;
    double mass = 0.0;
    double bkm = 0.0;  // int_0^t max_grad
};

struct SimulationResult {
    std::vector<FieldSnapshot> snapshots;
    Verdict verdict = Verdict::GlobalBounded;
    double t_blowup = std::numeric_limits<double>::quiet_NaN();
    bool crossed = false;
    double crossing_t = std::numeric_limits<double>::quiet_NaN();
    double crossing_r = std::numeric_limits<double>::quiet_NaN();
    std::size_t crossing_index = 0;
    std::vector<double> path_blowup;  // per-path blowup time estimate, NaN when none
    std::vector<double> r0;
    std::vector<double> mass_weights;
    std::string reason;
};

SimulationResult simulate_ep(const RadialFunction& rho0, const RadialFunction& u0, const ModelParams& params,
                             const SimulationConfig& config);

SimulationResult simulate_ea(const RadialFunction& rho0, const RadialFunction& u0, const ModelParams& params,
                             const InfluenceSpec& phi, const SimulationConfig& config);

std::vector<DiagnosticsRow> diagnostics_series(const std::vector<FieldSnapshot>& snapshots);

}  // namespace ctflow
