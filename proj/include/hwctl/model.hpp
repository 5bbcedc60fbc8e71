#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace hwctl {

using Vec = std::vector<double>;

inline double pos(double v) { return v > 0.0 ? v : 0.0; }
inline double neg(double v) { return v < 0.0 ? -v : 0.0; }

// Routing matrix u: u[i][j] is the fraction of pool j's surplus servers helping
// class i. Row-major d x d, zero diagonal by construction.
struct ControlMatrix {
    int d = 0;
    std::vector<double> a;  // row-major, size d*d

    ControlMatrix() = default;
    explicit ControlMatrix(int dim) : d(dim), a(static_cast<size_t>(dim) * dim, 0.0) {}

    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * d + j]; }
    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * d + j]; }

    static ControlMatrix zero(int dim) { return ControlMatrix(dim); }

    double max_abs_diff(const ControlMatrix& o) const {
        double m = 0.0;
        for (size_t k = 0; k < a.size(); ++k) m = std::max(m, std::fabs(a[k] - o.a[k]));
        return m;
    }
};

// Limiting (diffusion-scale) system parameters.
//   lambda[i]  arrival rate, also sets the diffusion coefficient a_ii = 2*lambda[i]
//   mu[i][j]   service rate of class i at pool j (diagonal = own pool)
//   gamma[i]   abandonment rate
//   ell[i]     second-order drift offset
//   mask[i][j] whether pool j may help class i at all (diagonal always false)
struct ModelParams {
    int d = 0;
    Vec lambda;
    std::vector<Vec> mu;  // d x d
    Vec gamma;
    Vec ell;
    std::vector<std::vector<bool>> mask;  // d x d

    bool help_allowed(int i, int j) const { return i != j && mask[i][j]; }
};

// Pre-limit (n-th system) parameters produced by scaling_sequence.
struct ScaledSystemParams {
    long long n = 0;
    Vec lambda_n;
    std::vector<Vec> mu_n;  // d x d
    Vec gamma_n;
    Vec ell_n;
    int d() const { return static_cast<int>(lambda_n.size()); }
};

// Second-order perturbation vectors for the arrival/service rates along the
// scaling sequence.
struct HatVectors {
    Vec lambda_hat;
    Vec mu_hat;
};

// q_i(x,u) = x_i^+ - sum_{j != i} u_ij * x_j^-  (limiting queue-length map)
Vec queue_map(const Vec& x, const ControlMatrix& u);

// b_i(x,u) = ell_i + mu_ii x_i^- - sum_{j != i} mu_ij u_ij x_j^- - gamma_i q_i(x,u)
Vec limiting_drift(const ModelParams& p, const Vec& x, const ControlMatrix& u);

// Same form with the n-th system's coefficients.
Vec prelimit_drift(const ScaledSystemParams& s, const Vec& x, const ControlMatrix& u);

// Per-coordinate diffusion standard deviations sqrt(2*lambda_i).
Vec diffusion_coeff(const ModelParams& p);

// n-th system rates: lambda_i^n = n*lambda_i + sqrt(n)*lambda_hat_i,
// mu_ii^n = mu_ii + mu_hat_i/sqrt(n), mu_ij^n = mu_ij (i != j), gamma_i^n = gamma_i,
// ell_i^n = (lambda_i^n - mu_ii^n * n)/sqrt(n).
// Requires lambda_i == mu_ii (the sequence diverges otherwise) and positive
// resulting arrival rates.
ScaledSystemParams scaling_sequence(const ModelParams& p, const HatVectors& hats, long long n);

// Structural validation; returns one message per violation (empty if valid).
// `where` prefixes each message (a json path in config parsing).
std::vector<std::string> validate_model(const ModelParams& p, const std::string& where = "model");

}  // namespace hwctl
