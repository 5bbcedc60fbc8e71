#include "hwctl/queue_sim.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <string>

#include "hwctl/errors.hpp"

namespace hwctl {

QueuePolicy QueuePolicy::zero_help(const ModelParams& p) {
    QueuePolicy q;
    q.zero_ = true;
    q.markov_ = MarkovPolicy::zero(p);
    return q;
}

QueuePolicy QueuePolicy::floor_feedback(const MarkovPolicy& pol) {
    QueuePolicy q;
    q.zero_ = false;
    q.markov_ = pol;
    return q;
}

namespace {
ControlMatrix policy_at_state(const ScaledSystemParams& s, const std::vector<long long>& X,
                              const QueuePolicy& pol, PolicyCache* cache) {
    if (pol.is_zero()) return ControlMatrix(static_cast<int>(X.size()));
    if (cache) {
        auto it = cache->find(X);
        if (it != cache->end()) return it->second;
    }
    const double rn = std::sqrt(static_cast<double>(s.n));
    Vec xhat(X.size());
    for (size_t i = 0; i < X.size(); ++i)
        xhat[i] = (static_cast<double>(X[i]) - static_cast<double>(s.n)) / rn;
    ControlMatrix u = pol.markov().evaluate(xhat);
    if (cache) cache->emplace(X, u);
    return u;
}
}  // namespace

void apply_policy(const ScaledSystemParams& s, QueueState& st, const QueuePolicy& pol,
                  PolicyCache* cache) {
    const int d = st.d;
    const long long n = st.n;
    for (int i = 0; i < d; ++i) st.z(i, i) = std::min(st.X[i], n);
    if (pol.is_zero()) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j) st.z(i, j) = 0;
    } else {
        ControlMatrix u = policy_at_state(s, st.X, pol, cache);
        for (int j = 0; j < d; ++j) {
            const long long idle = std::max(0ll, n - st.X[j]);  // pool j surplus
            for (int k = 0; k < d; ++k) {
                if (k == j) continue;
                // floor keeps every assignment integer-feasible; the 1e-9 nudge
                // only absorbs fp noise from u entries that are exactly 0 or 1
                st.z(k, j) = static_cast<long long>(
                    std::floor(u(k, j) * static_cast<double>(idle) + 1e-9));
            }
        }
    }
    for (int i = 0; i < d; ++i) {
        long long srv = 0;
        for (int j = 0; j < d; ++j) srv += st.z(i, j);
        st.Q[i] = st.X[i] - srv;
        if (st.Q[i] < 0)
            throw DiagnosticError("apply_policy: negative queue for class " + std::to_string(i));
    }
}

QueueState initial_state(const ScaledSystemParams& s, const QueuePolicy& pol,
                         PolicyCache* cache) {
    QueueState st;
    st.d = s.d();
    st.n = s.n;
    st.X.assign(st.d, s.n);  // start at the fluid point, xhat = 0
    st.Z.assign(static_cast<size_t>(st.d) * st.d, 0);
    st.Q.assign(st.d, 0);
    apply_policy(s, st, pol, cache);
    return st;
}

ScaledView scaled_view(const QueueState& st) {
    const int d = st.d;
    const double rn = std::sqrt(static_cast<double>(st.n));
    ScaledView v;
    v.xhat.resize(d);
    v.qhat.resize(d);
    v.zhat.assign(static_cast<size_t>(d) * d, 0.0);
    v.uhat = ControlMatrix(d);
    for (int i = 0; i < d; ++i) {
        v.xhat[i] = (static_cast<double>(st.X[i]) - st.n) / rn;
        v.qhat[i] = static_cast<double>(st.Q[i]) / rn;
        for (int j = 0; j < d; ++j)
            v.zhat[static_cast<size_t>(i) * d + j] =
                i == j ? (static_cast<double>(st.z(i, i)) - st.n) / rn
                       : static_cast<double>(st.z(i, j)) / rn;
    }
    for (int j = 0; j < d; ++j) {
        double idle = neg(v.xhat[j]);
        if (idle <= 0.0) continue;
        for (int k = 0; k < d; ++k)
            if (k != j) v.uhat(k, j) = v.zhat[static_cast<size_t>(k) * d + j] / idle;
    }
    return v;
}

double ctmc_step(const ScaledSystemParams& s, QueueState& st, const QueuePolicy& pol,
                 RngStream& stream, PolicyCache* cache) {
    const int d = st.d;
    // fixed event order: arrivals, services row-major, abandonments
    double total = 0.0;
    for (int i = 0; i < d; ++i) total += s.lambda_n[i];
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) total += s.mu_n[i][j] * static_cast<double>(st.z(i, j));
    for (int i = 0; i < d; ++i) total += s.gamma_n[i] * static_cast<double>(st.Q[i]);

    const double dt = stream.expo() / total;
    double pick = stream.u() * total;
    int cls = -1, delta = 0;
    for (int i = 0; i < d && cls < 0; ++i) {
        pick -= s.lambda_n[i];
        if (pick < 0.0) { cls = i; delta = +1; }
    }
    for (int i = 0; i < d && cls < 0; ++i)
        for (int j = 0; j < d && cls < 0; ++j) {
            pick -= s.mu_n[i][j] * static_cast<double>(st.z(i, j));
            if (pick < 0.0) { cls = i; delta = -1; }
        }
    for (int i = 0; i < d && cls < 0; ++i) {
        pick -= s.gamma_n[i] * static_cast<double>(st.Q[i]);
        if (pick < 0.0) { cls = i; delta = -1; }
    }
    if (cls < 0) { cls = d - 1; delta = st.X[d - 1] > 0 ? -1 : +1; }  // fp edge
    st.X[cls] += delta;
    apply_policy(s, st, pol, cache);
    return dt;
}

void audit_state(const ScaledSystemParams& s, const QueueState& st, const QueuePolicy& pol,
                 PolicyCache* cache) {
    const int d = st.d;
    const long long n = st.n;
    auto fail = [](const std::string& m) { throw DiagnosticError("queue audit: " + m); };
    for (int i = 0; i < d; ++i) {
        if (st.X[i] < 0 || st.Q[i] < 0) fail("negative headcount or queue");
        if (st.z(i, i) != std::min(st.X[i], n)) fail("own-pool assignment != min(X, n)");
        long long row = 0, col = 0, off = 0;
        for (int j = 0; j < d; ++j) {
            if (st.z(i, j) < 0) fail("negative assignment");
            row += st.z(i, j);
            col += st.z(j, i);
            if (j != i) off += st.z(i, j);
        }
        if (st.Q[i] + row != st.X[i]) fail("class balance X = Q + sum_j Z");
        if (col > n) fail("pool capacity exceeded");
        if (st.Q[i] + off != std::max(0ll, st.X[i] - n)) fail("surplus balance (X-n)^+ = Q + help");
    }
    ScaledView v = scaled_view(st);
    FeasibilityContext ctx = make_context(pol.markov().params(), v.xhat);
    if (!contains(ctx, v.uhat, 1e-9)) fail("realized help fractions leave M(xhat)");
    if (!pol.is_zero()) {
        ControlMatrix u = policy_at_state(s, st.X, pol, cache);
        const double rn = std::sqrt(static_cast<double>(st.n));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (i == j) continue;
                double gap = std::fabs(v.zhat[static_cast<size_t>(i) * d + j] -
                                       u(i, j) * neg(v.xhat[j]));
                if (gap > 1.0 / rn + 1e-9) fail("floor gap exceeds 1/sqrt(n)");
            }
    }
}

QueueCostEstimate estimate_cost(const ScaledSystemParams& s, const CostSpec& c,
                                const QueuePolicy& pol, const QueueSimConfig& cfg) {
    if (!(cfg.T > 0.0) || cfg.burn_in < 0.0 || cfg.burn_in >= cfg.T)
        throw ConfigError("queue sim: need 0 <= burn_in < T");
    if (cfg.replications < 1) throw ConfigError("queue sim: replications must be >= 1");
    const int R = cfg.replications;
    QueueCostEstimate est;
    est.reps.resize(R);
    std::vector<std::string> errors(R);
    const double rn = std::sqrt(static_cast<double>(s.n));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel)
#endif
    for (int r = 0; r < R; ++r) {
        try {
            PolicyCache cache;
            QueueState st = initial_state(s, pol, &cache);
            CounterRng root(cfg.seed, static_cast<uint64_t>(r));
            RngStream stream(root.substream(0));
            CounterRng auditor = root.substream(1);
            double t = 0.0, cost_acc = 0.0, m2_acc = 0.0;
            uint64_t events = 0;
            int audited = 0;
            Vec qhat(st.d), xhat(st.d);
            while (t < cfg.T) {
                if (cfg.audit_fraction > 0.0 && auditor.uniform01(events) < cfg.audit_fraction) {
                    audit_state(s, st, pol, &cache);
                    ++audited;
                }
                for (int i = 0; i < st.d; ++i) {
                    qhat[i] = static_cast<double>(st.Q[i]) / rn;
                    xhat[i] = (static_cast<double>(st.X[i]) - st.n) / rn;
                }
                const double rq = running_cost(c, qhat);
                double m2 = 0.0;
                for (int i = 0; i < st.d; ++i) m2 += xhat[i] * xhat[i];
                const double dt = ctmc_step(s, st, pol, stream, &cache);
                const double hi = std::min(t + dt, cfg.T);
                const double lo = std::max(t, cfg.burn_in);
                if (hi > lo) {
                    cost_acc += rq * (hi - lo);
                    m2_acc += m2 * (hi - lo);
                }
                t += dt;
                ++events;
            }
            est.reps[r].avg_cost = cost_acc / (cfg.T - cfg.burn_in);
            est.reps[r].avg_m2 = m2_acc / (cfg.T - cfg.burn_in);
            est.reps[r].events = events;
            est.reps[r].audited = audited;
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    }
    for (int r = 0; r < R; ++r)
        if (!errors[r].empty())
            throw DiagnosticError("replication " + std::to_string(r) + ": " + errors[r]);
    double mean = 0.0;
    for (int r = 0; r < R; ++r) mean += est.reps[r].avg_cost;
    mean /= R;
    double var = 0.0;
    for (int r = 0; r < R; ++r) {
        double dr = est.reps[r].avg_cost - mean;
        var += dr * dr;
    }
    var = R > 1 ? var / (R - 1) : 0.0;
    est.mean = mean;
    est.ci_halfwidth = R > 1 ? 1.96 * std::sqrt(var / R) : 0.0;
    return est;
}

StationaryOracle exact_stationary_oracle(const ScaledSystemParams& s, const CostSpec& c,
                                         const QueuePolicy& pol, long long K) {
    const int d = s.d();
    if (K < 1) throw ConfigError("oracle: K must be >= 1");
    double count = 1.0;
    for (int i = 0; i < d; ++i) {
        count *= static_cast<double>(K + 1);
        if (count > 2e6) throw CapacityError("oracle: truncated state space exceeds 2e6 states");
    }
    const long long S = static_cast<long long>(count);
    const double rn = std::sqrt(static_cast<double>(s.n));

    // recompute (Z, Q) per state once; cache keyed by X is pointless here
    std::vector<long long> X(d);
    QueueState st;
    st.d = d;
    st.n = s.n;
    st.Z.assign(static_cast<size_t>(d) * d, 0);
    st.Q.assign(d, 0);

    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trip, resid_trip;
    trip.reserve(static_cast<size_t>(S) * (2 * d + 1));
    Vec cost_of(S);
    PolicyCache cache;
    for (long long sid = 0; sid < S; ++sid) {
        long long rem = sid;
        for (int i = d - 1; i >= 0; --i) {
            X[i] = rem % (K + 1);
            rem /= (K + 1);
        }
        st.X = X;
        apply_policy(s, st, pol, &cache);
        Vec qhat(d);
        for (int i = 0; i < d; ++i) qhat[i] = static_cast<double>(st.Q[i]) / rn;
        cost_of[sid] = running_cost(c, qhat);
        double out = 0.0;
        for (int i = 0; i < d; ++i) {
            if (X[i] < K) {  // arrivals at the ceiling are suppressed
                long long to = sid;
                long long stride = 1;
                for (int q = d - 1; q > i; --q) stride *= (K + 1);
                to += stride;
                trip.emplace_back(to, sid, s.lambda_n[i]);
                out += s.lambda_n[i];
            }
            double dep = s.gamma_n[i] * static_cast<double>(st.Q[i]);
            for (int j = 0; j < d; ++j) dep += s.mu_n[i][j] * static_cast<double>(st.z(i, j));
            if (dep > 0.0) {
                long long stride = 1;
                for (int q = d - 1; q > i; --q) stride *= (K + 1);
                trip.emplace_back(sid - stride, sid, dep);
                out += dep;
            }
        }
        trip.emplace_back(sid, sid, -out);
    }
    resid_trip = trip;  // keep the untouched transpose-generator for the residual

    // replace the last row with the normalization sum(pi) = 1
    std::vector<Trip> sys;
    sys.reserve(trip.size() + S);
    for (const auto& t : trip)
        if (t.row() != S - 1) sys.push_back(t);
    for (long long j = 0; j < S; ++j) sys.emplace_back(S - 1, j, 1.0);

    Eigen::SparseMatrix<double> A(S, S), G(S, S);
    A.setFromTriplets(sys.begin(), sys.end());
    G.setFromTriplets(resid_trip.begin(), resid_trip.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
    rhs[S - 1] = 1.0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw SolverError("oracle: stationary solve failed (reducible chain?)");
    Eigen::VectorXd pi = lu.solve(rhs);

    StationaryOracle out;
    out.states = S;
    out.residual = (G * pi).cwiseAbs().maxCoeff();
    if (out.residual > 1e-10)
        throw DiagnosticError("oracle: stationary residual " + std::to_string(out.residual) +
                              " exceeds 1e-10");
    out.pi.assign(pi.data(), pi.data() + S);
    double cost = 0.0;
    for (long long sid = 0; sid < S; ++sid) cost += pi[sid] * cost_of[sid];
    out.cost = cost;
    return out;
}

OccupationHistogram occupation_histogram(const ScaledSystemParams& s, const CostSpec& c,
                                         const QueuePolicy& pol, double T, int bins_per_dim,
                                         double lo, double hi, uint64_t seed) {
    if (T < 0.0) throw ConfigError("histogram: T must be >= 0");
    if (bins_per_dim < 1 || !(hi > lo)) throw ConfigError("histogram: bad bin spec");
    const int d = s.d();
    OccupationHistogram hgm;
    hgm.d = d;
    hgm.bins_per_dim = bins_per_dim;
    hgm.lo = lo;
    hgm.hi = hi;
    long long nbins = 1;
    for (int i = 0; i < d; ++i) nbins *= bins_per_dim;
    hgm.mass.assign(nbins, 0.0);

    PolicyCache cache;
    QueueState st = initial_state(s, pol, &cache);
    CounterRng root(seed, 0);
    RngStream stream(root.substream(0));
    const double rn = std::sqrt(static_cast<double>(s.n));
    const double w = (hi - lo) / bins_per_dim;
    double t = 0.0;
    Vec qhat(d);
    while (t < T) {
        long long bin = 0;
        for (int i = 0; i < d; ++i) {
            double xh = (static_cast<double>(st.X[i]) - s.n) / rn;
            int b = static_cast<int>(std::floor((xh - lo) / w));
            b = std::max(0, std::min(bins_per_dim - 1, b));
            bin = bin * bins_per_dim + b;
        }
        for (int i = 0; i < d; ++i) qhat[i] = static_cast<double>(st.Q[i]) / rn;
        const double rq = running_cost(c, qhat);
        const double dt = ctmc_step(s, st, pol, stream, &cache);
        const double dwell = std::min(t + dt, T) - t;
        hgm.mass[bin] += dwell;
        hgm.cost_integral += rq * dwell;
        t += dt;
    }
    hgm.total_time = T;
    return hgm;
}

}  // namespace hwctl
