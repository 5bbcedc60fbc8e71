#pragma once

#include <memory>
#include <string>

#include "hwctl/hjb.hpp"

namespace hwctl {

// Stationary Markov control: state -> feasible routing matrix. Self-contained
// (owns copies of everything it needs) so simulators can carry it around.
class MarkovPolicy {
  public:
    enum class Kind { Zero, FixedProjected, HjbField };

    static MarkovPolicy zero(const ModelParams& p);
    // Projects the given matrix onto M(x) at every queried state.
    static MarkovPolicy fixed_projected(const ModelParams& p, const ControlMatrix& u0);
    // Near-optimal feedback from a solved HJB field: multilinear interpolation
    // of the stored gradient, then a fresh argmin at the exact state. States
    // outside the box use the gradient at the box projection.
    static MarkovPolicy hjb_extracted(const ModelParams& p, const CostSpec& c,
                                      std::shared_ptr<const HjbSolution> sol,
                                      const ArgminConfig& argmin);

    ControlMatrix evaluate(const Vec& x) const;
    Kind kind() const { return kind_; }
    std::string provenance() const;
    const ModelParams& params() const { return params_; }
    double epsilon() const { return sol_ ? sol_->epsilon : 0.0; }

  private:
    Kind kind_ = Kind::Zero;
    ModelParams params_;
    CostSpec cost_;
    ArgminConfig argmin_;
    ControlMatrix fixed_;
    std::shared_ptr<const HjbSolution> sol_;
};

// extract_policy: bundle a solved field into a feedback control.
MarkovPolicy extract_policy(const ModelParams& p, const CostSpec& c,
                            std::shared_ptr<const HjbSolution> sol, const ArgminConfig& argmin);

}  // namespace hwctl
