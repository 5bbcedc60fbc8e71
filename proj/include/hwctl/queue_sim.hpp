#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hwctl/policy.hpp"
#include "hwctl/rng.hpp"

namespace hwctl {

// Headcount process of the n-th system. X_i = customers of class i present,
// Z[i][j] = class-i customers in service at pool j, Q_i = queued class i.
struct QueueState {
    long long n = 0;
    int d = 0;
    std::vector<long long> X;
    std::vector<long long> Z;  // row-major d x d
    std::vector<long long> Q;

    long long z(int i, int j) const { return Z[static_cast<size_t>(i) * d + j]; }
    long long& z(int i, int j) { return Z[static_cast<size_t>(i) * d + j]; }
};

// Diffusion-scaled snapshot of a QueueState.
struct ScaledView {
    Vec xhat, qhat;
    Vec zhat;          // row-major; diagonal is (Z_ii - n)/sqrt(n)
    ControlMatrix uhat;  // realized help fractions, in M(xhat) by construction
};

// Scheduling rule for the pre-limit system. zero_help never routes across
// pools; floor_feedback rounds a diffusion-scale Markov policy down to integer
// assignments (so it is always capacity- and queue-feasible).
class QueuePolicy {
  public:
    static QueuePolicy zero_help(const ModelParams& p);
    static QueuePolicy floor_feedback(const MarkovPolicy& pol);

    bool is_zero() const { return zero_; }
    const MarkovPolicy& markov() const { return markov_; }
    std::string provenance() const { return zero_ ? "zero_help" : "floor_feedback"; }

  private:
    bool zero_ = true;
    MarkovPolicy markov_;
};

struct VecHash {
    size_t operator()(const std::vector<long long>& v) const {
        uint64_t h = 0x9e3779b97f4a7c15ull;
        for (long long x : v) h = CounterRng::mix(h ^ static_cast<uint64_t>(x));
        return static_cast<size_t>(h);
    }
};
// Memo for policy evaluations keyed by the integer headcount vector; states
// recur constantly near the fluid point, so this turns the per-event argmin
// into a lookup. One cache per replication (no sharing across threads).
using PolicyCache = std::unordered_map<std::vector<long long>, ControlMatrix, VecHash>;

// Recompute (Z, Q) from X under the policy: Z_ii = min(X_i, n),
// Z_ki = floor(u_ki(xhat) * (X_i - n)^-), Q_i = X_i - sum_j Z_ij.
void apply_policy(const ScaledSystemParams& s, QueueState& st, const QueuePolicy& pol,
                  PolicyCache* cache = nullptr);

QueueState initial_state(const ScaledSystemParams& s, const QueuePolicy& pol,
                         PolicyCache* cache = nullptr);

ScaledView scaled_view(const QueueState& st);

// One CTMC transition: exponential holding time (one uniform) + categorical
// event pick (one uniform). Returns the holding time and advances the state.
double ctmc_step(const ScaledSystemParams& s, QueueState& st, const QueuePolicy& pol,
                 RngStream& stream, PolicyCache* cache = nullptr);

// Zero-tolerance structural audit of a state; throws DiagnosticError.
void audit_state(const ScaledSystemParams& s, const QueueState& st, const QueuePolicy& pol,
                 PolicyCache* cache = nullptr);

struct QueueSimConfig {
    double T = 4000.0;
    double burn_in = 400.0;
    int replications = 8;
    uint64_t seed = 1;
    bool parallel = true;
    double audit_fraction = 0.01;
};

struct QueueRepSummary {
    double avg_cost = 0.0;   // time average of r(qhat) over (burn_in, T]
    double avg_m2 = 0.0;     // time average of |xhat|^2
    uint64_t events = 0;
    int audited = 0;
};

struct QueueCostEstimate {
    double mean = 0.0;
    double ci_halfwidth = 0.0;
    std::vector<QueueRepSummary> reps;
};

// Time-weighted average of r(Q/sqrt(n)) across replications; replication r
// uses stream (seed, r), reduction in replication order.
QueueCostEstimate estimate_cost(const ScaledSystemParams& s, const CostSpec& c,
                                const QueuePolicy& pol, const QueueSimConfig& cfg);

struct StationaryOracle {
    double cost = 0.0;       // sum_pi r(Q(state)/sqrt(n))
    double residual = 0.0;   // || pi G ||_inf
    long long states = 0;
    Vec pi;                  // stationary distribution, mixed-radix indexed
};

// Exact stationary distribution of the policy-induced CTMC on the truncated
// box {0..K}^d (arrivals suppressed at X_i = K). Sparse direct solve of
// pi G = 0, sum pi = 1. State count capped at 2e6.
StationaryOracle exact_stationary_oracle(const ScaledSystemParams& s, const CostSpec& c,
                                         const QueuePolicy& pol, long long K);

struct OccupationHistogram {
    int d = 0;
    int bins_per_dim = 0;
    double lo = 0.0, hi = 0.0;  // bin range per coordinate (scaled units)
    Vec mass;                   // dwell time per bin, clamped at the edges
    double total_time = 0.0;
    double cost_integral = 0.0;  // integral of r(qhat) dt over [0, T]
};

OccupationHistogram occupation_histogram(const ScaledSystemParams& s, const CostSpec& c,
                                         const QueuePolicy& pol, double T, int bins_per_dim,
                                         double lo, double hi, uint64_t seed);

}  // namespace hwctl
