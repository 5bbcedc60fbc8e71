#pragma once

// shared fixtures for the unit tests
#include <cmath>

#include "hwctl/config.hpp"
#include "hwctl/rng.hpp"

namespace tu {

using namespace hwctl;

inline ModelParams ref_model() { return reference_config().model; }
inline CostSpec ref_cost() { return reference_config().cost; }

// d=1: no cross-pool controls exist, handy for closed-form oracles
inline ModelParams model_1d(double ell = 0.0) {
    ModelParams p;
    p.d = 1;
    p.lambda = {1.0};
    p.mu = {{1.0}};
    p.gamma = {1.0};
    p.ell = {ell};
    p.mask = {{false}};
    return p;
}

inline CostSpec cost_1d() {
    CostSpec c;
    c.h = {1.0};
    c.m = {1.0};
    return c;
}

inline Vec rand_box(RngStream& s, int d, double R) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = (2.0 * s.u() - 1.0) * R;
    return x;
}

inline double linf(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline double norm2(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

inline ControlMatrix mat2(double u12, double u21) {
    ControlMatrix u(2);
    u(0, 1) = u12;
    u(1, 0) = u21;
    return u;
}

}  // namespace tu
