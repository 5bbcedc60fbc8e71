#include "hwctl/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <memory>
#include <json.hpp>

#include "hwctl/diffusion_sim.hpp"
#include "hwctl/errors.hpp"
#include "hwctl/io.hpp"
#include "hwctl/queue_sim.hpp"

namespace hwctl {

using nlohmann::json;

namespace {

void persist(const ExperimentConfig& cfg, const ConvergenceResult& res,
             const std::vector<std::string>& done, const std::string& failed_stage) {
    json summary;
    summary["schema_version"] = 1;
    summary["epsilon"] = res.epsilon;
    summary["rho_star"] = res.rho_star;
    summary["rho_eps"] = res.rho_eps;
    summary["diffusion"] = {{"mean", res.diffusion_mean}, {"ci_halfwidth", res.diffusion_ci}};
    summary["stages_completed"] = done;
    if (!failed_stage.empty()) summary["failed_stage"] = failed_stage;
    summary["ordering_ok"] = res.ordering_ok;
    summary["gap_monotone_ok"] = res.gap_monotone_ok;
    json rows = json::array();
    for (const auto& r : res.rows)
        rows.push_back({{"n", r.n},
                        {"policy_cost", r.policy_cost},
                        {"policy_ci", r.policy_ci},
                        {"zero_cost", r.zero_cost},
                        {"zero_ci", r.zero_ci}});
    summary["rows"] = rows;
    std::filesystem::path base(cfg.output);
    write_text_file((base / "summary.json").string(), summary.dump(2) + "\n");

    CsvWriter csv((base / "convergence.csv").string(),
                  {"n", "policy_cost", "policy_ci", "zero_cost", "zero_ci", "rho_eps",
                   "rho_star"});
    for (const auto& r : res.rows)
        csv.row({std::to_string(r.n), fmt_double(r.policy_cost), fmt_double(r.policy_ci),
                 fmt_double(r.zero_cost), fmt_double(r.zero_ci), fmt_double(res.rho_eps),
                 fmt_double(res.rho_star)});
    csv.close();
}

}  // namespace

ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
    ConvergenceResult res;
    res.epsilon = cfg.epsilons.back();
    std::vector<std::string> done;
    std::string stage;

    try {
        stage = "hjb";
        Grid g = Grid::make(cfg.model.d, cfg.grid.L, cfg.grid.h, cfg.solver.max_nodes);
        SolverConfig sc = cfg.solver;
        sc.epsilon = res.epsilon;
        auto sol_eps = std::make_shared<HjbSolution>(solve_ergodic(cfg.model, cfg.cost, g, sc));
        res.rho_eps = sol_eps->rho;
        SolverConfig sc0 = sc;
        sc0.epsilon = 0.0;
        HjbSolution sol0 = solve_ergodic(cfg.model, cfg.cost, g, sc0, &sol_eps->policy);
        res.rho_star = sol0.rho;
        done.push_back(stage);
        persist(cfg, res, done, "");

        stage = "diffusion";
        MarkovPolicy pol = extract_policy(cfg.model, cfg.cost, sol_eps, sc.argmin);
        Vec x0(cfg.model.d, 0.0);
        CostEstimate ce =
            estimate_ergodic_cost(cfg.model, cfg.cost, pol, x0, cfg.sim, sol_eps->epsilon);
        res.diffusion_mean = ce.mean;
        res.diffusion_ci = ce.ci_halfwidth;
        const double band = 0.05 * std::fabs(res.rho_eps) + ce.ci_halfwidth + 1e-9;
        if (std::fabs(ce.mean - res.rho_eps) > band)
            throw DiagnosticError("diffusion estimate " + std::to_string(ce.mean) +
                                  " is not within 5% + CI of the grid gain " +
                                  std::to_string(res.rho_eps));
        done.push_back(stage);
        persist(cfg, res, done, "");

        QueuePolicy fb = QueuePolicy::floor_feedback(pol);
        QueuePolicy zh = QueuePolicy::zero_help(cfg.model);
        for (long long n : cfg.queue_n) {
            stage = "queue n=" + std::to_string(n);
            ScaledSystemParams s = scaling_sequence(cfg.model, cfg.hats, n);
            QueueCostEstimate qp = estimate_cost(s, cfg.cost, fb, cfg.queue_sim);
            QueueCostEstimate qz = estimate_cost(s, cfg.cost, zh, cfg.queue_sim);
            ConvergenceRow row;
            row.n = n;
            row.policy_cost = qp.mean;
            row.policy_ci = qp.ci_halfwidth;
            row.zero_cost = qz.mean;
            row.zero_ci = qz.ci_halfwidth;
            res.rows.push_back(row);
            done.push_back(stage);
            persist(cfg, res, done, "");
        }

        stage = "ordering";
        for (const auto& r : res.rows)
            if (r.policy_cost > r.zero_cost + r.policy_ci + r.zero_ci + 1e-12)
                res.ordering_ok = false;
        for (size_t i = 1; i < res.rows.size(); ++i) {
            const double prev = std::fabs(res.rows[i - 1].policy_cost - res.rho_star);
            const double cur = std::fabs(res.rows[i].policy_cost - res.rho_star);
            if (cur > prev + res.rows[i - 1].policy_ci + res.rows[i].policy_ci + 1e-12)
                res.gap_monotone_ok = false;
        }
        persist(cfg, res, done, "");
        if (!res.ordering_ok)
            throw DiagnosticError("helped policy failed to beat zero help within CI");
        if (!res.gap_monotone_ok)
            throw DiagnosticError("gap to the limiting gain grew with n beyond CI");
        done.push_back(stage);
        persist(cfg, res, done, "");
        return res;
    } catch (const ConfigError& e) {
        persist(cfg, res, done, stage);
        throw ConfigError("stage " + stage + ": " + e.what());
    } catch (const SolverError& e) {
        persist(cfg, res, done, stage);
        throw SolverError("stage " + stage + ": " + e.what(), e.history);
    } catch (const CapacityError& e) {
        persist(cfg, res, done, stage);
        throw CapacityError("stage " + stage + ": " + e.what());
    } catch (const std::exception& e) {
        persist(cfg, res, done, stage);
        throw DiagnosticError("stage " + stage + ": " + e.what());
    }
}

}  // namespace hwctl
