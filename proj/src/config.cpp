#include "hwctl/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "hwctl/errors.hpp"

namespace hwctl {

using nlohmann::json;

namespace {

struct Reader {
    const json& root;
    std::vector<std::string> errs;

    const json* object(const json& j, const std::string& path, const std::string& key,
                       bool required) {
        if (!j.contains(key)) {
            if (required) errs.push_back(path + "." + key + ": missing");
            return nullptr;
        }
        const json& v = j.at(key);
        if (!v.is_object()) {
            errs.push_back(path + "." + key + ": expected an object");
            return nullptr;
        }
        return &v;
    }

    bool number(const json& j, const std::string& path, const std::string& key, double& out,
                bool required) {
        if (!j.contains(key)) {
            if (required) errs.push_back(path + "." + key + ": missing");
            return false;
        }
        if (!j.at(key).is_number()) {
            errs.push_back(path + "." + key + ": expected a number");
            return false;
        }
        out = j.at(key).get<double>();
        return true;
    }

    bool integer(const json& j, const std::string& path, const std::string& key, long long& out,
                 bool required) {
        if (!j.contains(key)) {
            if (required) errs.push_back(path + "." + key + ": missing");
            return false;
        }
        if (!j.at(key).is_number_integer()) {
            errs.push_back(path + "." + key + ": expected an integer");
            return false;
        }
        out = j.at(key).get<long long>();
        return true;
    }

    bool vec(const json& j, const std::string& path, const std::string& key, int d, Vec& out,
             bool required) {
        if (!j.contains(key)) {
            if (required) errs.push_back(path + "." + key + ": missing");
            return false;
        }
        const json& v = j.at(key);
        if (!v.is_array() || static_cast<int>(v.size()) != d) {
            errs.push_back(path + "." + key + ": expected an array of length " +
                           std::to_string(d));
            return false;
        }
        out.resize(d);
        for (int i = 0; i < d; ++i) {
            if (!v[i].is_number()) {
                errs.push_back(path + "." + key + "[" + std::to_string(i) + "]: not a number");
                return false;
            }
            out[i] = v[i].get<double>();
        }
        return true;
    }

    bool matrix(const json& j, const std::string& path, const std::string& key, int d,
                std::vector<Vec>& out, bool required) {
        if (!j.contains(key)) {
            if (required) errs.push_back(path + "." + key + ": missing");
            return false;
        }
        const json& v = j.at(key);
        if (!v.is_array() || static_cast<int>(v.size()) != d) {
            errs.push_back(path + "." + key + ": expected a " + std::to_string(d) + "x" +
                           std::to_string(d) + " array");
            return false;
        }
        out.assign(d, Vec(d, 0.0));
        for (int i = 0; i < d; ++i) {
            if (!v[i].is_array() || static_cast<int>(v[i].size()) != d) {
                errs.push_back(path + "." + key + "[" + std::to_string(i) + "]: expected " +
                               std::to_string(d) + " entries");
                return false;
            }
            for (int q = 0; q < d; ++q) {
                if (!v[i][q].is_number()) {
                    errs.push_back(path + "." + key + "[" + std::to_string(i) + "][" +
                                   std::to_string(q) + "]: not a number");
                    return false;
                }
                out[i][q] = v[i][q].get<double>();
            }
        }
        return true;
    }
};

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
    return model.d == o.model.d && model.lambda == o.model.lambda && model.mu == o.model.mu &&
           model.gamma == o.model.gamma && model.ell == o.model.ell && model.mask == o.model.mask &&
           hats.lambda_hat == o.hats.lambda_hat && hats.mu_hat == o.hats.mu_hat &&
           cost.h == o.cost.h && cost.m == o.cost.m && grid.L == o.grid.L && grid.h == o.grid.h &&
           epsilons == o.epsilons && alphas == o.alphas && solver.tol_pde == o.solver.tol_pde &&
           solver.tol_policy == o.solver.tol_policy &&
           solver.max_policy_iters == o.solver.max_policy_iters &&
           solver.max_nodes == o.solver.max_nodes && sim.T == o.sim.T && sim.dt == o.sim.dt &&
           sim.burn_in == o.sim.burn_in && sim.replications == o.sim.replications &&
           sim.seed == o.sim.seed && queue_sim.T == o.queue_sim.T &&
           queue_sim.burn_in == o.queue_sim.burn_in &&
           queue_sim.replications == o.queue_sim.replications &&
           queue_sim.seed == o.queue_sim.seed && queue_n == o.queue_n && queue_K == o.queue_K &&
           output == o.output;
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");

    Reader rd{root, {}};
    ExperimentConfig cfg;
    cfg.epsilons.clear();
    cfg.alphas.clear();
    cfg.queue_n.clear();

    int d = 0;
    if (const json* model = rd.object(root, "$", "model", true)) {
        long long dl = 0;
        if (rd.integer(*model, "model", "d", dl, true)) {
            if (dl < 1 || dl > 64) {
                rd.errs.push_back("model.d: must be in [1, 64]");
            } else {
                d = static_cast<int>(dl);
            }
        }
        if (d > 0) {
            cfg.model.d = d;
            rd.vec(*model, "model", "lambda", d, cfg.model.lambda, true);
            rd.matrix(*model, "model", "mu", d, cfg.model.mu, true);
            rd.vec(*model, "model", "gamma", d, cfg.model.gamma, true);

            cfg.model.mask.assign(d, std::vector<bool>(d, true));
            for (int i = 0; i < d; ++i) cfg.model.mask[i][i] = false;
            if (model->contains("mask")) {
                const json& mk = model->at("mask");
                if (!mk.is_array() || static_cast<int>(mk.size()) != d) {
                    rd.errs.push_back("model.mask: expected a " + std::to_string(d) + "x" +
                                      std::to_string(d) + " boolean array");
                } else {
                    for (int i = 0; i < d; ++i) {
                        if (!mk[i].is_array() || static_cast<int>(mk[i].size()) != d) {
                            rd.errs.push_back("model.mask[" + std::to_string(i) + "]: expected " +
                                              std::to_string(d) + " entries");
                            continue;
                        }
                        for (int q = 0; q < d; ++q) {
                            if (!mk[i][q].is_boolean()) {
                                rd.errs.push_back("model.mask[" + std::to_string(i) + "][" +
                                                  std::to_string(q) + "]: not a boolean");
                                continue;
                            }
                            bool b = mk[i][q].get<bool>();
                            if (i == q && b) {
                                rd.errs.push_back("model.mask[" + std::to_string(i) + "][" +
                                                  std::to_string(q) +
                                                  "]: diagonal must be false");
                                b = false;
                            }
                            cfg.model.mask[i][q] = b;
                        }
                    }
                }
            }

            Vec ell_given;
            const bool has_ell = rd.vec(*model, "model", "ell", d, ell_given, false);
            bool has_hats = false;
            if (const json* hats = rd.object(root, "$", "hats", false)) {
                bool a = rd.vec(*hats, "hats", "lambda_hat", d, cfg.hats.lambda_hat, true);
                bool b = rd.vec(*hats, "hats", "mu_hat", d, cfg.hats.mu_hat, true);
                has_hats = a && b;
            }
            if (has_hats) {
                cfg.model.ell.resize(d);
                for (int i = 0; i < d; ++i)
                    cfg.model.ell[i] = cfg.hats.lambda_hat[i] - cfg.hats.mu_hat[i];
                if (has_ell) {
                    for (int i = 0; i < d; ++i)
                        if (std::fabs(ell_given[i] - cfg.model.ell[i]) > 1e-12)
                            rd.errs.push_back("model.ell[" + std::to_string(i) +
                                              "]: inconsistent with hats (lambda_hat - mu_hat)");
                }
            } else if (has_ell) {
                cfg.model.ell = ell_given;
                cfg.hats.lambda_hat = ell_given;
                cfg.hats.mu_hat.assign(d, 0.0);
            } else {
                rd.errs.push_back("model.ell: missing (provide model.ell or hats)");
            }
        }
    }

    if (const json* cost = rd.object(root, "$", "cost", true)) {
        if (d > 0) {
            rd.vec(*cost, "cost", "h", d, cfg.cost.h, true);
            rd.vec(*cost, "cost", "m", d, cfg.cost.m, true);
        }
    }
    if (const json* grid = rd.object(root, "$", "grid", true)) {
        rd.number(*grid, "grid", "L", cfg.grid.L, true);
        rd.number(*grid, "grid", "h", cfg.grid.h, true);
        if (!(cfg.grid.L > 0.0)) rd.errs.push_back("grid.L: must be > 0");
        if (!(cfg.grid.h > 0.0)) {
            rd.errs.push_back("grid.h: must be > 0");
        } else {
            double ratio = cfg.grid.L / cfg.grid.h;
            if (std::fabs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio))
                rd.errs.push_back("grid.h: L/h must be an integer");
        }
    }

    if (const json* solver = rd.object(root, "$", "solver", false)) {
        if (solver->contains("epsilons")) {
            const json& es = solver->at("epsilons");
            if (!es.is_array() || es.empty()) {
                rd.errs.push_back("solver.epsilons: expected a non-empty array");
            } else {
                for (size_t i = 0; i < es.size(); ++i) {
                    if (!es[i].is_number()) {
                        rd.errs.push_back("solver.epsilons[" + std::to_string(i) +
                                          "]: not a number");
                        break;
                    }
                    cfg.epsilons.push_back(es[i].get<double>());
                }
                for (size_t i = 0; i < cfg.epsilons.size(); ++i) {
                    if (!(cfg.epsilons[i] > 0.0))
                        rd.errs.push_back("solver.epsilons[" + std::to_string(i) +
                                          "]: must be > 0");
                    if (i > 0 && !(cfg.epsilons[i] < cfg.epsilons[i - 1]))
                        rd.errs.push_back("solver.epsilons[" + std::to_string(i) +
                                          "]: must be strictly decreasing");
                }
            }
        }
        if (solver->contains("alphas")) {
            const json& as = solver->at("alphas");
            if (!as.is_array()) {
                rd.errs.push_back("solver.alphas: expected an array");
            } else {
                for (size_t i = 0; i < as.size(); ++i) {
                    if (!as[i].is_number()) {
                        rd.errs.push_back("solver.alphas[" + std::to_string(i) +
                                          "]: not a number");
                        break;
                    }
                    double a = as[i].get<double>();
                    if (!(a > 0.0))
                        rd.errs.push_back("solver.alphas[" + std::to_string(i) +
                                          "]: must be > 0");
                    if (!cfg.alphas.empty() && !(a < cfg.alphas.back()))
                        rd.errs.push_back("solver.alphas[" + std::to_string(i) +
                                          "]: must be strictly decreasing");
                    cfg.alphas.push_back(a);
                }
            }
        }
        rd.number(*solver, "solver", "tol_pde", cfg.solver.tol_pde, false);
        rd.number(*solver, "solver", "tol_policy", cfg.solver.tol_policy, false);
        long long it = cfg.solver.max_policy_iters;
        if (rd.integer(*solver, "solver", "max_policy_iters", it, false)) {
            if (it < 1)
                rd.errs.push_back("solver.max_policy_iters: must be >= 1");
            else
                cfg.solver.max_policy_iters = static_cast<int>(it);
        }
        rd.integer(*solver, "solver", "max_nodes", cfg.solver.max_nodes, false);
        if (cfg.solver.max_nodes < 1) rd.errs.push_back("solver.max_nodes: must be >= 1");
        if (!(cfg.solver.tol_pde > 0.0)) rd.errs.push_back("solver.tol_pde: must be > 0");
        if (!(cfg.solver.tol_policy > 0.0)) rd.errs.push_back("solver.tol_policy: must be > 0");
    }
    if (cfg.epsilons.empty()) cfg.epsilons = {0.1, 0.03, 0.01};
    if (cfg.alphas.empty()) cfg.alphas = {0.2, 0.1, 0.05};
    cfg.solver.epsilon = cfg.epsilons.back();

    if (const json* sim = rd.object(root, "$", "sim", false)) {
        rd.number(*sim, "sim", "T", cfg.sim.T, false);
        rd.number(*sim, "sim", "dt", cfg.sim.dt, false);
        rd.number(*sim, "sim", "burn_in", cfg.sim.burn_in, false);
        long long reps = cfg.sim.replications, seed = static_cast<long long>(cfg.sim.seed);
        if (rd.integer(*sim, "sim", "replications", reps, false)) {
            if (reps < 1)
                rd.errs.push_back("sim.replications: must be >= 1");
            else
                cfg.sim.replications = static_cast<int>(reps);
        }
        if (rd.integer(*sim, "sim", "seed", seed, false))
            cfg.sim.seed = static_cast<uint64_t>(seed);
        if (!(cfg.sim.dt > 0.0) || cfg.sim.dt > 1e-2)
            rd.errs.push_back("sim.dt: must be in (0, 1e-2]");
        if (!(cfg.sim.T > 0.0)) rd.errs.push_back("sim.T: must be > 0");
        if (cfg.sim.burn_in < 0.0 || cfg.sim.burn_in >= cfg.sim.T)
            rd.errs.push_back("sim.burn_in: must satisfy 0 <= burn_in < T");
    }

    if (const json* q = rd.object(root, "$", "queue", false)) {
        if (q->contains("n")) {
            const json& ns = q->at("n");
            if (!ns.is_array() || ns.empty()) {
                rd.errs.push_back("queue.n: expected a non-empty array");
            } else {
                for (size_t i = 0; i < ns.size(); ++i) {
                    if (!ns[i].is_number_integer()) {
                        rd.errs.push_back("queue.n[" + std::to_string(i) + "]: not an integer");
                        break;
                    }
                    long long n = ns[i].get<long long>();
                    if (n < 1) rd.errs.push_back("queue.n[" + std::to_string(i) +
                                                 "]: must be >= 1");
                    if (!cfg.queue_n.empty() && n <= cfg.queue_n.back())
                        rd.errs.push_back("queue.n: must be strictly increasing");
                    cfg.queue_n.push_back(n);
                }
            }
        }
        rd.number(*q, "queue", "T", cfg.queue_sim.T, false);
        rd.number(*q, "queue", "burn_in", cfg.queue_sim.burn_in, false);
        long long reps = cfg.queue_sim.replications;
        long long seed = static_cast<long long>(cfg.queue_sim.seed);
        if (rd.integer(*q, "queue", "replications", reps, false)) {
            if (reps < 1)
                rd.errs.push_back("queue.replications: must be >= 1");
            else
                cfg.queue_sim.replications = static_cast<int>(reps);
        }
        if (rd.integer(*q, "queue", "seed", seed, false))
            cfg.queue_sim.seed = static_cast<uint64_t>(seed);
        rd.integer(*q, "queue", "K", cfg.queue_K, false);
        if (cfg.queue_K < 0) rd.errs.push_back("queue.K: must be >= 0");
        if (!(cfg.queue_sim.T > 0.0)) rd.errs.push_back("queue.T: must be > 0");
        if (cfg.queue_sim.burn_in < 0.0 || cfg.queue_sim.burn_in >= cfg.queue_sim.T)
            rd.errs.push_back("queue.burn_in: must satisfy 0 <= burn_in < T");
    }
    if (cfg.queue_n.empty()) cfg.queue_n = {25, 100, 400};

    if (root.contains("output")) {
        if (!root.at("output").is_string())
            rd.errs.push_back("output: expected a string");
        else
            cfg.output = root.at("output").get<std::string>();
    }

    if (d > 0) {
        // run even when structural errors were already collected: the contract
        // is the full violation list, not the first problem found
        for (const auto& v : validate_model(cfg.model, "model")) rd.errs.push_back(v);
        for (const auto& v : validate_cost(cfg.cost, d, "cost")) rd.errs.push_back(v);
    }
    if (!rd.errs.empty()) throw ConfigError(rd.errs);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json root;
    json model;
    model["d"] = cfg.model.d;
    model["lambda"] = cfg.model.lambda;
    model["mu"] = cfg.model.mu;
    model["gamma"] = cfg.model.gamma;
    model["ell"] = cfg.model.ell;
    json mask = json::array();
    for (const auto& row : cfg.model.mask) {
        json r = json::array();
        for (bool b : row) r.push_back(b);
        mask.push_back(r);
    }
    model["mask"] = mask;
    root["model"] = model;
    root["hats"] = {{"lambda_hat", cfg.hats.lambda_hat}, {"mu_hat", cfg.hats.mu_hat}};
    root["cost"] = {{"h", cfg.cost.h}, {"m", cfg.cost.m}};
    root["grid"] = {{"L", cfg.grid.L}, {"h", cfg.grid.h}};
    root["solver"] = {{"epsilons", cfg.epsilons},
                      {"alphas", cfg.alphas},
                      {"tol_pde", cfg.solver.tol_pde},
                      {"tol_policy", cfg.solver.tol_policy},
                      {"max_policy_iters", cfg.solver.max_policy_iters},
                      {"max_nodes", cfg.solver.max_nodes}};
    root["sim"] = {{"T", cfg.sim.T},
                   {"dt", cfg.sim.dt},
                   {"burn_in", cfg.sim.burn_in},
                   {"replications", cfg.sim.replications},
                   {"seed", cfg.sim.seed}};
    root["queue"] = {{"n", cfg.queue_n},
                     {"T", cfg.queue_sim.T},
                     {"burn_in", cfg.queue_sim.burn_in},
                     {"replications", cfg.queue_sim.replications},
                     {"seed", cfg.queue_sim.seed},
                     {"K", cfg.queue_K}};
    root["output"] = cfg.output;
    return root.dump(2) + "\n";
}

ExperimentConfig reference_config() {
    ExperimentConfig cfg;
    cfg.model.d = 2;
    cfg.model.lambda = {1.0, 1.0};
    cfg.model.mu = {{1.0, 0.6}, {0.6, 1.0}};
    cfg.model.gamma = {1.0, 1.0};
    cfg.model.ell = {-1.0, -1.0};
    cfg.model.mask = {{false, true}, {true, false}};
    cfg.hats.lambda_hat = {-1.0, -1.0};
    cfg.hats.mu_hat = {0.0, 0.0};
    cfg.cost.h = {1.0, 1.0};
    cfg.cost.m = {1.0, 1.0};
    cfg.grid.L = 6.0;
    cfg.grid.h = 0.05;
    cfg.epsilons = {0.1, 0.03, 0.01};
    cfg.alphas = {0.2, 0.1, 0.05};
    cfg.solver.epsilon = 0.01;
    cfg.queue_n = {25, 100, 400};
    cfg.output = "out";
    return cfg;
}

}  // namespace hwctl
