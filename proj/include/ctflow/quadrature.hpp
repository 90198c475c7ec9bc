#pragma once

#include <functional>
#include <vector>

namespace ctflow {

// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

// Cached per order; safe to call concurrently.
const GaussRule& gauss_legendre(int order);

// Sum of order-point Gauss-Legendre rules over consecutive intervals of `breaks`,
// each interval cut into `pieces` equal subintervals.
double integrate_panels(const std::function<double(double)>& f, const std::vector<double>& breaks, int order,
                        int pieces = 1);

// Breakpoints in [a, b] graded geometrically toward `toward` (one of a, b).
std::vector<double> graded_breaks(double a, double b, double toward, double ratio, int levels);

}  // namespace ctflow
