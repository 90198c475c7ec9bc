#include "ctflow/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctflow {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::EulerPoisson: return "euler-poisson";
        case ModelKind::EulerAlignment: return "euler-alignment";
        case ModelKind::InviscidBurgers: return "inviscid-burgers";
        case ModelKind::DampedBurgers: return "damped-burgers";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "euler-poisson") return ModelKind::EulerPoisson;
    if (name == "euler-alignment") return ModelKind::EulerAlignment;
    if (name == "inviscid-burgers") return ModelKind::InviscidBurgers;
    if (name == "damped-burgers") return ModelKind::DampedBurgers;
    throw DomainError("unknown model type '" + name + "'");
}

std::string to_string(Region r) {
    switch (r) {
        case Region::Subcritical: return "subcritical";
        case Region::Supercritical: return "supercritical";
        case Region::Gap: return "gap";
    }
    return "unknown";
}

void ModelParams::validate() const {
    if (!(n >= 1.0)) throw DomainError("dimension n must be >= 1");
    if (!(kappa > 0.0)) throw DomainError("kappa must be > 0");
    if (!(c >= 0.0)) throw DomainError("background c must be >= 0");
    if (model == ModelKind::DampedBurgers && !(kappa_damp > 0.0))
        throw DomainError("damping constant must be > 0");
}

double sphere_area(double k) {
    const double m = k + 1.0;
    return 2.0 * std::pow(std::numbers::pi, m / 2.0) / std::tgamma(m / 2.0);
}

double divergence(double p, double q, double n) { return p + (n - 1.0) * q; }

double spectral_gap(double p, double q, double n) {
    const double diff = p - q;
    return (n - 1.0) * diff * diff;
}

Eigen::MatrixXd grad_u_matrix(const Eigen::VectorXd& x, double p, double q) {
    const double r2 = x.squaredNorm();
    if (!(r2 > 0.0)) throw DomainError("grad_u_matrix: direction undefined at |x| = 0");
    const Eigen::Index n = x.size();
    Eigen::MatrixXd radial = x * x.transpose() / r2;
    return radial * p + (Eigen::MatrixXd::Identity(n, n) - radial) * q;
}

VelocityGradientSample sample_velocity_gradient(const Eigen::VectorXd& x, double p, double q) {
    return {x, p, q, grad_u_matrix(x, p, q)};
}

GapIdentity gap_identity(double p, double q, int n) {
    if (n < 2) throw DomainError("gap identity needs integer n >= 2");
    const double nn = n;
    GapIdentity g;
    const double cross = 2.0 * (nn - 1.0) * p * q;
    const double quad = (nn - 1.0) * (nn - 2.0) * q * q;
    g.left = cross + quad;
    const double d = divergence(p, q, nn);
    const double eta = spectral_gap(p, q, nn);
    g.right = (nn - 1.0) / nn * d * d - eta / nn;
    g.scale = std::max({1.0, d * d, eta, std::abs(cross), std::abs(quad)});
    g.residual = std::abs(g.left - g.right) / g.scale;
    return g;
}

double gap_consistency_check(double p, double q, int n) { return gap_identity(p, q, n).residual; }

}  // namespace ctflow
