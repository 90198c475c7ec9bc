#include "ctflow/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "ctflow/model_core.hpp"

namespace ctflow {

struct RadialProfile::Monotone {
    boost::math::interpolators::pchip<std::vector<double>> interp;
};

namespace {

// Thomas algorithm; a = sub, b = diag, c = super.
std::vector<double> solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                      std::vector<double> d) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

bool parse_double(const std::string& text, double& out) {
    auto first = text.data();
    auto last = text.data() + text.size();
    while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
    while (last > first && std::isspace(static_cast<unsigned char>(*(last - 1)))) --last;
    if (first == last) return false;
    if (*first == '+') ++first;
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

RadialProfile::RadialProfile(std::vector<double> nodes, std::vector<double> values, ProfileKind kind,
                             Interpolation interp)
    : nodes_(std::move(nodes)), values_(std::move(values)), kind_(kind), interp_(interp) {
    if (nodes_.size() != values_.size()) throw DomainError("profile: nodes and values differ in length");
    if (nodes_.size() < 2) throw DomainError("profile: need at least two nodes");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (!(nodes_[i] > nodes_[i - 1])) throw DomainError("profile: nodes must be strictly increasing");
    if (nodes_.front() != 0.0) throw DomainError("profile: first node must be r = 0");

    const std::size_t n = nodes_.size();
    if (interp_ == Interpolation::Monotone && n >= 4) {
        auto x = nodes_;
        auto y = values_;
        mono_ = std::make_shared<const Monotone>(Monotone{{std::move(x), std::move(y)}});
        return;
    }
    m2_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = nodes_[i] - nodes_[i - 1], h1 = nodes_[i + 1] - nodes_[i];
        a[i] = h0;
        b[i] = 2.0 * (h0 + h1);
        c[i] = h1;
        d[i] = 6.0 * ((values_[i + 1] - values_[i]) / h1 - (values_[i] - values_[i - 1]) / h0);
    }
    if (kind_ == ProfileKind::Density) {
        const double h0 = nodes_[1] - nodes_[0];
        b[0] = 2.0 * h0;
        c[0] = h0;
        d[0] = 6.0 * (values_[1] - values_[0]) / h0;
    }
    if (n >= 4) {
        // clamped outer end, slope of the cubic through the last four nodes
        const double xk = nodes_[n - 1];
        double slope = 0.0;
        for (std::size_t j = n - 4; j < n; ++j) {
            double w = 0.0;
            if (j == n - 1) {
                for (std::size_t m = n - 4; m + 1 < n; ++m) w += 1.0 / (xk - nodes_[m]);
            } else {
                double num = 1.0, den = 1.0;
                for (std::size_t m = n - 4; m < n; ++m) {
                    if (m == j) continue;
                    den *= nodes_[j] - nodes_[m];
                    if (m != n - 1) num *= xk - nodes_[m];
                }
                w = num / den;
            }
            slope += w * values_[j];
        }
        const double h = nodes_[n - 1] - nodes_[n - 2];
        a[n - 1] = h;
        b[n - 1] = 2.0 * h;
        d[n - 1] = 6.0 * (slope - (values_[n - 1] - values_[n - 2]) / h);
    }
    m2_ = solve_tridiagonal(a, b, c, d);
}

RadialProfile RadialProfile::sample(const std::function<double(double)>& f, double r_max, std::size_t count,
                                    ProfileKind kind, Interpolation interp) {
    if (count < 2 || !(r_max > 0.0)) throw DomainError("profile sample: need count >= 2 and r_max > 0");
    std::vector<double> r(count), v(count);
    for (std::size_t i = 0; i < count; ++i) {
        r[i] = r_max * static_cast<double>(i) / static_cast<double>(count - 1);
        v[i] = f(r[i]);
    }
    return RadialProfile(std::move(r), std::move(v), kind, interp);
}

RadialProfile RadialProfile::from_csv(const std::string& path, ProfileKind kind, Interpolation interp) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open profile file '" + path + "'");
    std::vector<double> r, v;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        double a = 0.0, b = 0.0;
        const bool ok = comma != std::string::npos && parse_double(line.substr(0, comma), a) &&
                        parse_double(line.substr(comma + 1), b);
        if (!ok) {
            if (first) {
                first = false;
                continue;
            }
            throw DomainError("profile file '" + path + "': bad line '" + line + "'");
        }
        first = false;
        r.push_back(a);
        v.push_back(b);
    }
    return RadialProfile(std::move(r), std::move(v), kind, interp);
}

std::size_t RadialProfile::interval(double r) const {
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
    std::size_t i = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
    return std::min(i, nodes_.size() - 2);
}

double RadialProfile::operator()(double r) const {
    if (r < 0.0 || r > r_max() * (1.0 + 1e-14)) throw DomainError("profile evaluated outside [0, r_max]");
    if (mono_) return mono_->interp(std::min(r, r_max()));
    const std::size_t i = interval(r);
    const double x0 = nodes_[i], x1 = nodes_[i + 1], h = x1 - x0;
    const double a = x1 - r, b = r - x0;
    return m2_[i] * a * a * a / (6.0 * h) + m2_[i + 1] * b * b * b / (6.0 * h) +
           (values_[i] / h - m2_[i] * h / 6.0) * a + (values_[i + 1] / h - m2_[i + 1] * h / 6.0) * b;
}

double RadialProfile::derivative(double r) const {
    if (r < 0.0 || r > r_max() * (1.0 + 1e-14)) throw DomainError("profile evaluated outside [0, r_max]");
    if (mono_) return mono_->interp.prime(std::min(r, r_max()));
    const std::size_t i = interval(r);
    const double x0 = nodes_[i], x1 = nodes_[i + 1], h = x1 - x0;
    const double a = x1 - r, b = r - x0;
    return -m2_[i] * a * a / (2.0 * h) + m2_[i + 1] * b * b / (2.0 * h) - (values_[i] / h - m2_[i] * h / 6.0) +
           (values_[i + 1] / h - m2_[i + 1] * h / 6.0);
}

void RadialProfile::validate(double slope_tol) const {
    double vmax = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v)) throw DomainError("profile: non-finite value");
        vmax = std::max(vmax, std::abs(v));
    }
    if (kind_ == ProfileKind::Density) {
        for (double v : values_)
            if (v < 0.0) throw DomainError("profile: negative density");
        double steepest = 0.0;
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
            steepest = std::max(steepest, std::abs((values_[i + 1] - values_[i]) / (nodes_[i + 1] - nodes_[i])));
        const double origin = std::abs((values_[1] - values_[0]) / nodes_[1]);
        if (steepest > 0.0 && origin > slope_tol * steepest)
            throw DomainError("profile: density slope at the origin is not flat");
    } else if (std::abs(values_[0]) > 1e-12 * std::max(1.0, vmax)) {
        throw DomainError("profile: velocity-type profile must vanish at r = 0");
    }
}

RadialFunction as_function(const RadialProfile& profile) {
    RadialFunction out;
    auto shared = std::make_shared<RadialProfile>(profile);
    const double rmax = profile.r_max();
    out.f = [shared, rmax](double r) { return r > rmax ? 0.0 : (*shared)(r); };
    out.df = [shared, rmax](double r) { return r > rmax ? 0.0 : shared->derivative(r); };
    out.support = profile.kind() == ProfileKind::Density ? rmax : std::numeric_limits<double>::infinity();
    out.breaks = profile.nodes();
    return out;
}

bool is_density_profile_name(const std::string& name) {
    return name == "gaussian-bump" || name == "indicator" || name == "polynomial-decay" || name == "constant";
}

bool is_velocity_profile_name(const std::string& name) {
    return name == "linear" || name == "rexp" || name == "tanh" || name == "rational" || name == "zero";
}

void ProfileSpec::validate() const {
    const bool density = kind == ProfileKind::Density;
    if (density && !is_density_profile_name(name)) throw DomainError("unknown density profile '" + name + "'");
    if (!density && !is_velocity_profile_name(name)) throw DomainError("unknown velocity profile '" + name + "'");
    if (!std::isfinite(amplitude)) throw DomainError("profile amplitude must be finite");
    if (density && amplitude < 0.0) throw DomainError("density amplitude must be >= 0");
    if (!(width > 0.0)) throw DomainError("profile width must be > 0");
    if (!(radius > 0.0)) throw DomainError("profile radius must be > 0");
    if (name == "indicator" && !std::isfinite(radius)) throw DomainError("indicator profile needs a finite radius");
    if (name == "polynomial-decay" && !(exponent > 0.0)) throw DomainError("polynomial-decay exponent must be > 0");
}

double ProfileSpec::value(double r) const {
    if (kind == ProfileKind::Density) {
        if (r > radius) return 0.0;
        const double x = r / width;
        if (name == "gaussian-bump") return amplitude * std::exp(-x * x);
        if (name == "indicator" || name == "constant") return amplitude;
        if (name == "polynomial-decay") return amplitude * std::pow(1.0 + x * x, -exponent);
    } else {
        const double x = r / width;
        if (name == "linear") return amplitude * r;
        if (name == "rexp") return amplitude * r * std::exp(-x);
        if (name == "tanh") return amplitude * std::tanh(x);
        if (name == "rational") return amplitude * r / (1.0 + x * x);
        if (name == "zero") return 0.0;
    }
    throw DomainError("unknown profile '" + name + "'");
}

double ProfileSpec::derivative(double r) const {
    const double x = r / width;
    if (kind == ProfileKind::Density) {
        if (r > radius) return 0.0;
        if (name == "gaussian-bump") return -2.0 * amplitude * x / width * std::exp(-x * x);
        if (name == "indicator" || name == "constant") return 0.0;
        if (name == "polynomial-decay")
            return -2.0 * exponent * amplitude * x / width * std::pow(1.0 + x * x, -exponent - 1.0);
    } else {
        if (name == "linear") return amplitude;
        if (name == "rexp") return amplitude * (1.0 - x) * std::exp(-x);
        if (name == "tanh") {
            const double ch = std::cosh(x);
            return amplitude / (width * ch * ch);
        }
        if (name == "rational") return amplitude * (1.0 - x * x) / ((1.0 + x * x) * (1.0 + x * x));
        if (name == "zero") return 0.0;
    }
    throw DomainError("unknown profile '" + name + "'");
}

double ProfileSpec::support() const {
    return kind == ProfileKind::Density ? radius : std::numeric_limits<double>::infinity();
}

double ProfileSpec::mass(double n) const {
    if (kind != ProfileKind::Density) throw DomainError("mass is defined for densities only");
    const double omega = sphere_area(n - 1.0);
    const double w = width;
    if (name == "gaussian-bump") {
        const double frac = std::isfinite(radius) ? boost::math::gamma_p(n / 2.0, (radius / w) * (radius / w)) : 1.0;
        return amplitude * std::pow(std::numbers::pi, n / 2.0) * std::pow(w, n) * frac;
    }
    if (name == "indicator" || name == "constant") {
        if (!std::isfinite(radius)) return std::numeric_limits<double>::infinity();
        return amplitude * omega * std::pow(radius, n) / n;
    }
    if (name == "polynomial-decay") {
        const double a = n / 2.0, b = exponent - n / 2.0;
        if (!(b > 0.0)) {
            if (!std::isfinite(radius)) return std::numeric_limits<double>::infinity();
            throw DomainError("polynomial-decay closed-form mass needs exponent > n/2");
        }
        double frac = 1.0;
        if (std::isfinite(radius)) {
            const double t = (radius / w) * (radius / w);
            frac = boost::math::ibeta(a, b, t / (1.0 + t));
        }
        return amplitude * omega * std::pow(w, n) / 2.0 * boost::math::beta(a, b) * frac;
    }
    throw DomainError("unknown profile '" + name + "'");
}

RadialFunction ProfileSpec::function() const {
    validate();
    RadialFunction out;
    const ProfileSpec self = *this;
    out.f = [self](double r) { return self.value(r); };
    out.df = [self](double r) { return self.derivative(r); };
    out.support = support();
    if (kind == ProfileKind::Density) out.closed_mass = [self](double n) { return self.mass(n); };
    return out;
}

RadialProfile ProfileSpec::sample(double r_max, std::size_t count) const {
    validate();
    const ProfileSpec self = *this;
    return RadialProfile::sample([self](double r) { return self.value(r); }, r_max, count, kind);
}

}  // namespace ctflow
