#include "hwctl/model.hpp"

#include <cmath>
#include <string>

#include "hwctl/errors.hpp"

namespace hwctl {

Vec queue_map(const Vec& x, const ControlMatrix& u) {
    const int d = static_cast<int>(x.size());
    Vec q(d);
    for (int i = 0; i < d; ++i) {
        double s = pos(x[i]);
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            s -= u(i, j) * neg(x[j]);
        }
        q[i] = s;
    }
    return q;
}

Vec limiting_drift(const ModelParams& p, const Vec& x, const ControlMatrix& u) {
    const Vec q = queue_map(x, u);
    Vec b(p.d);
    for (int i = 0; i < p.d; ++i) {
        double s = p.ell[i] + p.mu[i][i] * neg(x[i]);
        for (int j = 0; j < p.d; ++j) {
            if (j == i) continue;
            s -= p.mu[i][j] * u(i, j) * neg(x[j]);
        }
        s -= p.gamma[i] * q[i];
        b[i] = s;
    }
    return b;
}

Vec prelimit_drift(const ScaledSystemParams& s, const Vec& x, const ControlMatrix& u) {
    const int d = s.d();
    const Vec q = queue_map(x, u);
    Vec b(d);
    for (int i = 0; i < d; ++i) {
        double v = s.ell_n[i] + s.mu_n[i][i] * neg(x[i]);
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            v -= s.mu_n[i][j] * u(i, j) * neg(x[j]);
        }
        v -= s.gamma_n[i] * q[i];
        b[i] = v;
    }
    return b;
}

Vec diffusion_coeff(const ModelParams& p) {
    Vec s(p.d);
    for (int i = 0; i < p.d; ++i) s[i] = std::sqrt(2.0 * p.lambda[i]);
    return s;
}

ScaledSystemParams scaling_sequence(const ModelParams& p, const HatVectors& hats, long long n) {
    if (n < 1) throw ConfigError("scaling_sequence: n must be >= 1, got " + std::to_string(n));
    if (static_cast<int>(hats.lambda_hat.size()) != p.d ||
        static_cast<int>(hats.mu_hat.size()) != p.d)
        throw ConfigError("scaling_sequence: hat vector dimension mismatch");
    const double rn = std::sqrt(static_cast<double>(n));
    ScaledSystemParams s;
    s.n = n;
    s.lambda_n.resize(p.d);
    s.gamma_n = p.gamma;
    s.ell_n.resize(p.d);
    s.mu_n.assign(p.d, Vec(p.d, 0.0));
    for (int i = 0; i < p.d; ++i) {
        if (std::fabs(p.lambda[i] - p.mu[i][i]) > 0.0)
            throw ConfigError("scaling_sequence: lambda[" + std::to_string(i) +
                              "] != mu[" + std::to_string(i) + "][" + std::to_string(i) +
                              "]; the pre-limit drift sequence diverges without this balance");
        s.lambda_n[i] = n * p.lambda[i] + rn * hats.lambda_hat[i];
        if (s.lambda_n[i] <= 0.0)
            throw ConfigError("scaling_sequence: lambda_n[" + std::to_string(i) +
                              "] <= 0 at n=" + std::to_string(n));
        for (int j = 0; j < p.d; ++j) {
            if (j == i)
                s.mu_n[i][j] = p.mu[i][j] + hats.mu_hat[i] / rn;
            else
                s.mu_n[i][j] = p.help_allowed(i, j) ? p.mu[i][j] : 0.0;
        }
        s.ell_n[i] = (s.lambda_n[i] - s.mu_n[i][i] * n) / rn;
    }
    return s;
}

std::vector<std::string> validate_model(const ModelParams& p, const std::string& where) {
    std::vector<std::string> bad;
    auto idx = [&](const std::string& f, int i) { return where + "." + f + "[" + std::to_string(i) + "]"; };
    auto idx2 = [&](const std::string& f, int i, int j) {
        return where + "." + f + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
    };
    if (p.d < 1) {
        bad.push_back(where + ".d: must be >= 1");
        return bad;
    }
    auto check_len = [&](const std::string& f, size_t got) {
        if (got != static_cast<size_t>(p.d))
            bad.push_back(where + "." + f + ": expected length " + std::to_string(p.d) +
                          ", got " + std::to_string(got));
    };
    check_len("lambda", p.lambda.size());
    check_len("gamma", p.gamma.size());
    check_len("ell", p.ell.size());
    check_len("mu", p.mu.size());
    check_len("routing_mask", p.mask.size());
    if (!bad.empty()) return bad;
    for (int i = 0; i < p.d; ++i) {
        check_len("mu[" + std::to_string(i) + "]", p.mu[i].size());
        check_len("routing_mask[" + std::to_string(i) + "]", p.mask[i].size());
    }
    if (!bad.empty()) return bad;
    for (int i = 0; i < p.d; ++i) {
        if (!(p.lambda[i] > 0.0)) bad.push_back(idx("lambda", i) + ": must be > 0");
        if (!(p.gamma[i] > 0.0)) bad.push_back(idx("gamma", i) + ": must be > 0");
        if (!(p.mu[i][i] > 0.0)) bad.push_back(idx2("mu", i, i) + ": diagonal must be > 0");
        if (!std::isfinite(p.ell[i])) bad.push_back(idx("ell", i) + ": must be finite");
        for (int j = 0; j < p.d; ++j) {
            if (j != i && p.mu[i][j] < 0.0) bad.push_back(idx2("mu", i, j) + ": must be >= 0");
            if (j == i && p.mask[i][j])
                bad.push_back(idx2("routing_mask", i, j) + ": diagonal must be false");
        }
    }
    return bad;
}

}  // namespace hwctl
