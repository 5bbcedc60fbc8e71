#pragma once

#include <string>
#include <vector>

#include "hwctl/model.hpp"

namespace hwctl {

// Holding cost r(q) = sum_i h[i] * q_i^{m[i]}; h >= 0, exponents m >= 1.
struct CostSpec {
    Vec h;
    Vec m;
    bool linear() const {
        for (double e : m)
            if (e != 1.0) return false;
        return true;
    }
};

// r evaluated at the componentwise positive part of q.
double running_cost(const CostSpec& c, const Vec& q);

// Squared Frobenius norm of the routing matrix (diagonal is zero by type).
double control_cost(const ControlMatrix& u);

// r(q^+(x,u)) + eps * ||u||^2
double perturbed_cost(const CostSpec& c, const Vec& x, const ControlMatrix& u, double eps);

// d/dq_i of r(q^+): h_i m_i (q_i^+)^{m_i-1} for q_i > 0, else 0.
Vec running_cost_gradient(const CostSpec& c, const Vec& q);

std::vector<std::string> validate_cost(const CostSpec& c, int d, const std::string& where = "cost");

}  // namespace hwctl
