#include "hwctl/policy.hpp"

#include <algorithm>
#include <cmath>

#include "hwctl/errors.hpp"

namespace hwctl {

MarkovPolicy MarkovPolicy::zero(const ModelParams& p) {
    MarkovPolicy mp;
    mp.kind_ = Kind::Zero;
    mp.params_ = p;
    return mp;
}

MarkovPolicy MarkovPolicy::fixed_projected(const ModelParams& p, const ControlMatrix& u0) {
    if (u0.d != p.d) throw ConfigError("fixed_projected: matrix dimension mismatch");
    MarkovPolicy mp;
    mp.kind_ = Kind::FixedProjected;
    mp.params_ = p;
    mp.fixed_ = u0;
    return mp;
}

MarkovPolicy MarkovPolicy::hjb_extracted(const ModelParams& p, const CostSpec& c,
                                         std::shared_ptr<const HjbSolution> sol,
                                         const ArgminConfig& argmin) {
    if (!sol) throw ConfigError("hjb_extracted: null solution");
    if (sol->grid.d != p.d) throw ConfigError("hjb_extracted: solution dimension mismatch");
    MarkovPolicy mp;
    mp.kind_ = Kind::HjbField;
    mp.params_ = p;
    mp.cost_ = c;
    mp.argmin_ = argmin;
    mp.argmin_.epsilon = sol->epsilon;
    mp.sol_ = std::move(sol);
    return mp;
}

std::string MarkovPolicy::provenance() const {
    switch (kind_) {
        case Kind::Zero: return "zero";
        case Kind::FixedProjected: return "fixed_matrix_projected";
        case Kind::HjbField: return "hjb_extracted";
    }
    return "?";
}

ControlMatrix MarkovPolicy::evaluate(const Vec& x) const {
    const int d = params_.d;
    if (static_cast<int>(x.size()) != d)
        throw ConfigError("policy evaluate: state dimension mismatch");
    switch (kind_) {
        case Kind::Zero: return ControlMatrix(d);
        case Kind::FixedProjected: {
            FeasibilityContext ctx = make_context(params_, x);
            return project_to_feasible(ctx, fixed_);
        }
        case Kind::HjbField: break;
    }
    const HjbSolution& s = *sol_;
    const Grid& g = s.grid;

    // cell location on the clamped state; gradient interpolated multilinearly
    std::vector<int> base(d);
    Vec frac(d);
    for (int i = 0; i < d; ++i) {
        double xi = std::min(g.L, std::max(-g.L, x[i]));
        double t = (xi + g.L) / g.h;
        int b = std::min(g.npts - 2, std::max(0, static_cast<int>(std::floor(t))));
        base[i] = b;
        frac[i] = std::min(1.0, std::max(0.0, t - b));
    }
    Vec p(d, 0.0);
    std::vector<int> corner(d);
    for (int mask = 0; mask < (1 << d); ++mask) {
        double wgt = 1.0;
        for (int i = 0; i < d; ++i) {
            bool hi = mask & (1 << i);
            wgt *= hi ? frac[i] : 1.0 - frac[i];
            corner[i] = base[i] + (hi ? 1 : 0);
        }
        if (wgt == 0.0) continue;
        long long node = g.index(corner);
        for (int i = 0; i < d; ++i) p[i] += wgt * s.grad[static_cast<size_t>(node) * d + i];
    }

    FeasibilityContext ctx = make_context(params_, x);
    // nearest node's stored control seeds the solve
    std::vector<int> nearest(d);
    for (int i = 0; i < d; ++i) nearest[i] = base[i] + (frac[i] > 0.5 ? 1 : 0);
    ControlMatrix warm = s.policy_at(g.index(nearest));

    if (s.epsilon > 0.0) {
        ArgminConfig ac = argmin_;
        ac.epsilon = s.epsilon;
        return argmin_hamiltonian(params_, cost_, ctx, p, ac, &warm).u;
    }
    ControlMatrix u;
    hamiltonian_H(params_, cost_, ctx, p, argmin_, &u);
    return u;
}

MarkovPolicy extract_policy(const ModelParams& p, const CostSpec& c,
                            std::shared_ptr<const HjbSolution> sol, const ArgminConfig& argmin) {
    return MarkovPolicy::hjb_extracted(p, c, std::move(sol), argmin);
}

}  // namespace hwctl
