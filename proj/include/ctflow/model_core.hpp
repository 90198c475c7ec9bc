#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ctflow {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct UnsupportedRegime : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ModelKind { EulerPoisson, EulerAlignment, InviscidBurgers, DampedBurgers };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelParams {
    double n = 1.0;
    double kappa = 1.0;
    double c = 0.0;
    ModelKind model = ModelKind::EulerPoisson;
    double kappa_damp = 1.0;  // only read for DampedBurgers

    void validate() const;
};

enum class Region { Subcritical, Supercritical, Gap };

std::string to_string(Region r);

// (p, q, s, rho) along one characteristic; s is unused outside Euler-Poisson.
struct CharState {
    double p = 0.0;
    double q = 0.0;
    double s = 0.0;
    double rho = 0.0;
};

// Surface measure of the unit sphere S^k in R^{k+1}; real k allowed.
double sphere_area(double k);

double divergence(double p, double q, double n);

// (n-1)(p-q)^2, i.e. 1/2 sum_ij (lambda_i - lambda_j)^2 over {p, q x (n-1)}.
double spectral_gap(double p, double q, double n);

Eigen::MatrixXd grad_u_matrix(const Eigen::VectorXd& x, double p, double q);

struct VelocityGradientSample {
    Eigen::VectorXd x;
    double p = 0.0;
    double q = 0.0;
    Eigen::MatrixXd matrix;
};

VelocityGradientSample sample_velocity_gradient(const Eigen::VectorXd& x, double p, double q);

struct GapIdentity {
    double left = 0.0;   // 2(n-1)pq + (n-1)(n-2)q^2
    double right = 0.0;  // (n-1)/n d^2 - eta/n
    double scale = 1.0;
    double residual = 0.0;  // |left - right| / scale
};

GapIdentity gap_identity(double p, double q, int n);
double gap_consistency_check(double p, double q, int n);

}  // namespace ctflow
