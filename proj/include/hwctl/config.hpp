#pragma once

#include <string>
#include <vector>

#include "hwctl/cost.hpp"
#include "hwctl/diffusion_sim.hpp"
#include "hwctl/hjb.hpp"
#include "hwctl/model.hpp"
#include "hwctl/queue_sim.hpp"

namespace hwctl {

struct GridSpec {
    double L = 6.0;
    double h = 0.05;
};

// Everything a run needs, parsed from one JSON document. The hat vectors fix
// the pre-limit scaling; model.ell must equal lambda_hat - mu_hat (either may
// be omitted and is then derived from the other).
struct ExperimentConfig {
    ModelParams model;
    HatVectors hats;
    CostSpec cost;
    GridSpec grid;
    std::vector<double> epsilons{0.1, 0.03, 0.01};  // strictly decreasing, > 0
    std::vector<double> alphas{0.2, 0.1, 0.05};     // vanishing-discount checks
    SolverConfig solver;
    SimConfig sim;
    QueueSimConfig queue_sim;
    std::vector<long long> queue_n{25, 100, 400};  // strictly increasing
    long long queue_K = 0;                         // oracle truncation, 0 = skip
    std::string output = "out";

    bool operator==(const ExperimentConfig& o) const;
};

// Parses and validates; throws ConfigError listing every violation with its
// JSON path, not just the first.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::string serialize_config(const ExperimentConfig& cfg);

// The d=2 system used throughout the docs and the release checks.
ExperimentConfig reference_config();

}  // namespace hwctl
