#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctflow/model_core.hpp"
#include "ctflow/ode.hpp"
#include "ctflow/profile.hpp"

namespace ctflow {

struct InfluenceSpec {
    std::string name;
    std::function<double(double)> phi;
    std::function<double(double)> phi_prime;
    double sup_phi = 0.0;
    double sup_phi_prime = 0.0;
    bool non_increasing = true;
    bool slow_decay = false;  // int^infinity phi = infinity

    double operator()(double r) const { return phi(r); }
    // Throws DomainError when phi < 0, monotonicity or the derivative bound fail on samples.
    void validate(double r_max = 10.0) const;
};

InfluenceSpec constant_influence(double strength);
// a (1 + r)^(-beta)
InfluenceSpec inverse_power_influence(double strength, double beta);
// a exp(-lambda r)
InfluenceSpec exponential_influence(double strength, double lambda);

struct AlignmentBounds {
    double mass = 0.0;
    double u_max = 0.0;
    double D = 0.0;
    double nu = 0.0;
    double psi_min = 0.0;
    double psi_max = 0.0;
    double C0 = 0.0;

    void validate() const;
};

struct KernelQuadrature {
    int angular_order = 64;
    int graded_order = 16;
    int radial_order = 16;
    double rel_tol = 1e-11;
    int max_doublings = 6;
};

// Reduced kernels: omega_{n-2} int_0^pi phi(|r e1 - s w(theta)|) [cos theta] sin^{n-2} theta dtheta.
double psi_kernel(const InfluenceSpec& phi, double r, double s, double n, int level = 1,
                  const KernelQuadrature& quad = {});
double zeta_kernel(const InfluenceSpec& phi, double r, double s, double n, int level = 1,
                   const KernelQuadrature& quad = {});

double eval_psi(const RadialFunction& rho, const InfluenceSpec& phi, double r, int n,
                const KernelQuadrature& quad = {});
double eval_zeta(const RadialFunction& rho, const RadialFunction& u, const InfluenceSpec& phi, double r, int n,
                 const KernelQuadrature& quad = {});

// L1 mass in R^n: closed form when available, else quadrature.
double density_mass(const RadialFunction& rho, double n);

AlignmentBounds compute_bounds(const RadialFunction& rho0, const RadialFunction& u0, const InfluenceSpec& phi,
                               double D, int n);

struct RoughBounds {
    double subcritical = 0.0;    // NaN when the smallness condition on C0 fails
    double supercritical = 0.0;
};

RoughBounds rough_q_bounds(double psi_min, double psi_max, double C0);
RoughBounds rough_G_bounds(double psi_min, double psi_max, double C0, double n);

Region rough_threshold_q(double q0, const AlignmentBounds& bounds);
Region rough_threshold_G(double G0, const AlignmentBounds& bounds, double n);

enum class CurveKind { SigmaQPlus, SigmaQMinus, SigmaGPlus, SigmaGMinus };

std::string to_string(CurveKind k);
CurveKind curve_kind_from_string(const std::string& name);

struct EnhancedCurve {
    CurveKind kind = CurveKind::SigmaQPlus;
    std::vector<double> x;
    std::vector<double> sigma;
    double sigma0 = 0.0;
    double slope0 = 0.0;
    double x_switch = -1.0;  // sigma_q^+ branch change, negative when absent
    double x_end = 0.0;      // last x reached; below x_max when the curve escapes
    bool complete = true;
};

EnhancedCurve enhanced_curve(CurveKind kind, const AlignmentBounds& bounds, double n, double x_max,
                             const IntegratorConfig& config, std::size_t samples = 201);

// Linear interpolation on the sampled curve; NaN beyond x_end.
double curve_value(const EnhancedCurve& curve, double x);

enum class ComparisonKind { Q, G };

ClassificationOutcome comparison_classify(ComparisonKind kind, double y0, double C0, const AlignmentBounds& bounds,
                                          double n, const IntegratorConfig& config, bool tolerance_check = true);

}  // namespace ctflow
