#include "hwctl/cost.hpp"

#include <cmath>

namespace hwctl {

namespace {
double pow_m(double base, double expo) {
    if (expo == 1.0) return base;
    if (expo == 2.0) return base * base;
    return std::pow(base, expo);
}
}  // namespace

double running_cost(const CostSpec& c, const Vec& q) {
    double r = 0.0;
    for (size_t i = 0; i < q.size(); ++i) r += c.h[i] * pow_m(pos(q[i]), c.m[i]);
    return r;
}

double control_cost(const ControlMatrix& u) {
    double s = 0.0;
    for (double v : u.a) s += v * v;
    return s;
}

double perturbed_cost(const CostSpec& c, const Vec& x, const ControlMatrix& u, double eps) {
    return running_cost(c, queue_map(x, u)) + eps * control_cost(u);
}

Vec running_cost_gradient(const CostSpec& c, const Vec& q) {
    Vec g(q.size(), 0.0);
    for (size_t i = 0; i < q.size(); ++i) {
        if (q[i] > 0.0) g[i] = c.h[i] * c.m[i] * pow_m(q[i], c.m[i] - 1.0);
    }
    return g;
}

std::vector<std::string> validate_cost(const CostSpec& c, int d, const std::string& where) {
    std::vector<std::string> bad;
    if (static_cast<int>(c.h.size()) != d)
        bad.push_back(where + ".h: expected length " + std::to_string(d));
    if (static_cast<int>(c.m.size()) != d)
        bad.push_back(where + ".m: expected length " + std::to_string(d));
    if (!bad.empty()) return bad;
    for (int i = 0; i < d; ++i) {
        if (c.h[i] < 0.0)
            bad.push_back(where + ".h[" + std::to_string(i) + "]: must be >= 0");
        if (c.m[i] < 1.0)
            bad.push_back(where + ".m[" + std::to_string(i) + "]: must be >= 1");
    }
    return bad;
}

}  // namespace hwctl
