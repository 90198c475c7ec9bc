#include "ctflow/quadrature.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

#include "ctflow/model_core.hpp"

namespace ctflow {

namespace {

GaussRule build_rule(int order) {
    GaussRule rule;
    const auto zeros = boost::math::legendre_p_zeros<double>(order);
    for (double z : zeros) {
        const double dp = boost::math::legendre_p_prime(order, z);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        if (z == 0.0) {
            rule.x.push_back(0.0);
            rule.w.push_back(w);
        } else {
            rule.x.push_back(-z);
            rule.w.push_back(w);
            rule.x.push_back(z);
            rule.w.push_back(w);
        }
    }
    std::vector<std::size_t> idx(rule.x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rule.x[a] < rule.x[b]; });
    GaussRule sorted;
    for (auto i : idx) {
        sorted.x.push_back(rule.x[i]);
        sorted.w.push_back(rule.w[i]);
    }
    return sorted;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
    if (order < 1) throw DomainError("Gauss-Legendre order must be >= 1");
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mtx);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GaussRule>(build_rule(order));
    return *slot;
}

double integrate_panels(const std::function<double(double)>& f, const std::vector<double>& breaks, int order,
                        int pieces) {
    const GaussRule& g = gauss_legendre(order);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        if (!(b > a)) continue;
        const double h = (b - a) / pieces;
        for (int j = 0; j < pieces; ++j) {
            const double lo = a + j * h;
            const double mid = lo + 0.5 * h, half = 0.5 * h;
            double acc = 0.0;
            for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * f(mid + half * g.x[i]);
            total += half * acc;
        }
    }
    return total;
}

std::vector<double> graded_breaks(double a, double b, double toward, double ratio, int levels) {
    std::vector<double> out{a, b};
    const double len = b - a;
    double step = len;
    for (int k = 0; k < levels; ++k) {
        step *= ratio;
        out.push_back(toward == a ? a + step : b - step);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace ctflow
