#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace ctflow {

enum class ProfileKind { Density, Velocity, PotentialSlope };
enum class Interpolation { Spline, Monotone };

// Sampled radial function r_0 = 0 < r_1 < ... < r_N.
// Spline interpolation uses the origin condition of the kind: zero slope for
// densities (even), zero curvature for velocities and potential slopes (odd).
// The outer end is clamped to the slope of a cubic through the last four nodes.
class RadialProfile {
public:
    RadialProfile(std::vector<double> nodes, std::vector<double> values, ProfileKind kind,
                  Interpolation interp = Interpolation::Spline);

    static RadialProfile sample(const std::function<double(double)>& f, double r_max, std::size_t count,
                                ProfileKind kind, Interpolation interp = Interpolation::Spline);
    // Two columns r,value; '#' lines and a non-numeric header line are skipped.
    static RadialProfile from_csv(const std::string& path, ProfileKind kind,
                                  Interpolation interp = Interpolation::Spline);

    double operator()(double r) const;
    double derivative(double r) const;

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& values() const { return values_; }
    ProfileKind kind() const { return kind_; }
    double r_max() const { return nodes_.back(); }

    // Throws DomainError when the origin condition or node ordering fails.
    // slope_tol bounds the one-sided origin slope of a density relative to its
    // steepest secant.
    void validate(double slope_tol = 0.6) const;

private:
    std::size_t interval(double r) const;

    std::vector<double> nodes_;
    std::vector<double> values_;
    ProfileKind kind_;
    Interpolation interp_;
    std::vector<double> m2_;  // spline second derivatives
    struct Monotone;
    std::shared_ptr<const Monotone> mono_;
};

// Callable view used by the quadrature code.
struct RadialFunction {
    std::function<double(double)> f;
    std::function<double(double)> df;  // may be empty
    double support = std::numeric_limits<double>::infinity();
    std::vector<double> breaks;                  // interior non-smooth points
    std::function<double(double)> closed_mass;   // n -> L1 mass, may be empty

    double operator()(double r) const { return r > support ? 0.0 : f(r); }
};

RadialFunction as_function(const RadialProfile& profile);

// Built-in closed-form profiles.
// Densities: gaussian-bump A exp(-(r/w)^2), indicator A 1[r<=R], polynomial-decay A (1+(r/w)^2)^(-k),
// constant A; all cut off at `radius` when it is finite.
// Velocities: linear A r, rexp A r exp(-r/w), tanh A tanh(r/w), rational A r/(1+(r/w)^2), zero.
struct ProfileSpec {
    std::string name = "gaussian-bump";
    ProfileKind kind = ProfileKind::Density;
    double amplitude = 1.0;
    double width = 1.0;
    double radius = std::numeric_limits<double>::infinity();
    double exponent = 2.0;

    void validate() const;
    double value(double r) const;
    double derivative(double r) const;
    double support() const;
    // L1 mass in R^n; infinite for untruncated constant densities.
    double mass(double n) const;
    RadialFunction function() const;
    RadialProfile sample(double r_max, std::size_t count) const;
};

bool is_density_profile_name(const std::string& name);
bool is_velocity_profile_name(const std::string& name);

}  // namespace ctflow
