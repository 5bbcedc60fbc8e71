#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hwctl/config.hpp"
#include "hwctl/diffusion_sim.hpp"
#include "hwctl/errors.hpp"
#include "hwctl/experiments.hpp"
#include "hwctl/io.hpp"
#include "hwctl/queue_sim.hpp"

using namespace hwctl;
using nlohmann::json;

namespace {

Vec parse_vec(const std::string& text, int d, const std::string& flag) {
    Vec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t used = 0;
        out.push_back(std::stod(item, &used));
    }
    if (static_cast<int>(out.size()) != d)
        throw ConfigError(flag + ": expected " + std::to_string(d) + " comma-separated numbers");
    return out;
}

std::string matrix_csv(const ControlMatrix& u) {
    std::string s;
    for (int i = 0; i < u.d; ++i) {
        for (int j = 0; j < u.d; ++j) {
            if (j) s += ',';
            s += fmt_double(u(i, j));
        }
        s += '\n';
    }
    return s;
}

struct Options {
    std::string config_path;
    std::string out_dir;
    std::string solution_path;
    std::string policy = "hjb";
    std::string xs, ps;
    double epsilon = -1.0;
    int grid_points = 21;
    int hist_bins = 0;
    uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

ExperimentConfig load_with_overrides(const Options& opt) {
    ExperimentConfig cfg = load_config(opt.config_path);
    if (!opt.out_dir.empty()) cfg.output = opt.out_dir;
    if (opt.seed_set) {
        cfg.sim.seed = opt.seed;
        cfg.queue_sim.seed = opt.seed;
    }
    return cfg;
}

std::shared_ptr<HjbSolution> obtain_solution(const ExperimentConfig& cfg, const Options& opt) {
    if (!opt.solution_path.empty()) {
        SolutionBundle b = load_solution(opt.solution_path);
        return std::make_shared<HjbSolution>(std::move(b.sol));
    }
    Grid g = Grid::make(cfg.model.d, cfg.grid.L, cfg.grid.h, cfg.solver.max_nodes);
    SolverConfig sc = cfg.solver;
    if (opt.epsilon >= 0.0) sc.epsilon = opt.epsilon;
    return std::make_shared<HjbSolution>(solve_ergodic(cfg.model, cfg.cost, g, sc));
}

int cmd_hjb_solve(const Options& opt) {
    ExperimentConfig cfg = load_with_overrides(opt);
    Grid g = Grid::make(cfg.model.d, cfg.grid.L, cfg.grid.h, cfg.solver.max_nodes);
    SolverConfig sc = cfg.solver;
    if (opt.epsilon >= 0.0) sc.epsilon = opt.epsilon;
    HjbSolution sol = solve_ergodic(cfg.model, cfg.cost, g, sc);
    save_solution({cfg.model, cfg.cost, sol}, cfg.output, "solution");
    std::printf("rho = %.12g  residual = %.3g  iterations = %d  nodes = %lld\n", sol.rho,
                sol.residual, sol.iterations, g.total);
    std::printf("wrote %s/solution.json\n", cfg.output.c_str());
    return 0;
}

int cmd_diffusion_sim(const Options& opt) {
    ExperimentConfig cfg = load_with_overrides(opt);
    auto sol = obtain_solution(cfg, opt);
    MarkovPolicy pol = extract_policy(cfg.model, cfg.cost, sol, cfg.solver.argmin);
    Vec x0(cfg.model.d, 0.0);
    CostEstimate ce = estimate_ergodic_cost(cfg.model, cfg.cost, pol, x0, cfg.sim, sol->epsilon);

    std::filesystem::path base(cfg.output);
    CsvWriter csv((base / "diffusion_reps.csv").string(),
                  {"rep", "seed", "avg_cost", "avg_m2", "avg_mk", "steps", "audited"});
    for (size_t r = 0; r < ce.reps.size(); ++r) {
        const PathSummary& s = ce.reps[r];
        csv.row({std::to_string(r), std::to_string(cfg.sim.seed), fmt_double(s.avg_cost),
                 fmt_double(s.avg_m2), fmt_double(s.avg_mk), std::to_string(s.steps),
                 std::to_string(s.audited)});
    }
    csv.close();
    json summary;
    summary["schema_version"] = 1;
    summary["mean"] = ce.mean;
    summary["ci_halfwidth"] = ce.ci_halfwidth;
    summary["epsilon"] = sol->epsilon;
    summary["rho_grid"] = sol->rho;
    summary["replications"] = cfg.sim.replications;
    write_text_file((base / "diffusion_summary.json").string(), summary.dump(2) + "\n");
    std::printf("diffusion mean = %.6g +- %.3g (grid rho = %.6g)\n", ce.mean, ce.ci_halfwidth,
                sol->rho);
    return 0;
}

int cmd_queue_sim(const Options& opt) {
    ExperimentConfig cfg = load_with_overrides(opt);
    QueuePolicy qp = QueuePolicy::zero_help(cfg.model);
    if (opt.policy == "hjb") {
        auto sol = obtain_solution(cfg, opt);
        qp = QueuePolicy::floor_feedback(
            extract_policy(cfg.model, cfg.cost, sol, cfg.solver.argmin));
    } else if (opt.policy != "zero") {
        throw ConfigError("--policy: expected 'hjb' or 'zero'");
    }

    std::filesystem::path base(cfg.output);
    CsvWriter csv((base / "queue_reps.csv").string(),
                  {"n", "rep", "seed", "T", "avg_cost", "avg_m2", "events", "audited"});
    json summary;
    summary["schema_version"] = 1;
    summary["policy"] = qp.provenance();
    json per_n = json::array();
    for (long long n : cfg.queue_n) {
        ScaledSystemParams s = scaling_sequence(cfg.model, cfg.hats, n);
        QueueCostEstimate est = estimate_cost(s, cfg.cost, qp, cfg.queue_sim);
        for (size_t r = 0; r < est.reps.size(); ++r) {
            const QueueRepSummary& q = est.reps[r];
            csv.row({std::to_string(n), std::to_string(r), std::to_string(cfg.queue_sim.seed),
                     fmt_double(cfg.queue_sim.T), fmt_double(q.avg_cost), fmt_double(q.avg_m2),
                     std::to_string(q.events), std::to_string(q.audited)});
        }
        per_n.push_back({{"n", n}, {"mean", est.mean}, {"ci_halfwidth", est.ci_halfwidth}});
        std::printf("n = %lld  mean = %.6g +- %.3g\n", n, est.mean, est.ci_halfwidth);
        if (opt.hist_bins > 0 && n == cfg.queue_n.back()) {
            OccupationHistogram hg =
                occupation_histogram(s, cfg.cost, qp, cfg.queue_sim.T, opt.hist_bins,
                                     -cfg.grid.L, cfg.grid.L, cfg.queue_sim.seed);
            std::vector<std::string> cols;
            for (int i = 0; i < hg.d; ++i) cols.push_back("x" + std::to_string(i));
            cols.push_back("mass");
            CsvWriter hcsv((base / "histogram.csv").string(), cols);
            const double w = (hg.hi - hg.lo) / hg.bins_per_dim;
            std::vector<int> bidx(hg.d, 0);
            for (size_t b = 0; b < hg.mass.size(); ++b) {
                size_t rem = b;
                for (int i = hg.d - 1; i >= 0; --i) {
                    bidx[i] = static_cast<int>(rem % hg.bins_per_dim);
                    rem /= hg.bins_per_dim;
                }
                std::vector<std::string> cells;
                for (int i = 0; i < hg.d; ++i)
                    cells.push_back(fmt_double(hg.lo + (bidx[i] + 0.5) * w));
                cells.push_back(fmt_double(hg.mass[b]));
                hcsv.row(cells);
            }
            hcsv.close();
        }
    }
    csv.close();
    summary["results"] = per_n;
    write_text_file((base / "queue_summary.json").string(), summary.dump(2) + "\n");
    return 0;
}

int cmd_oracle_check(const Options& opt) {
    ExperimentConfig cfg = load_with_overrides(opt);
    if (cfg.queue_K < 1) throw ConfigError("queue.K: oracle-check needs a truncation level >= 1");
    QueuePolicy qp = QueuePolicy::zero_help(cfg.model);
    if (opt.policy == "hjb") {
        auto sol = obtain_solution(cfg, opt);
        qp = QueuePolicy::floor_feedback(
            extract_policy(cfg.model, cfg.cost, sol, cfg.solver.argmin));
    } else if (opt.policy != "zero") {
        throw ConfigError("--policy: expected 'hjb' or 'zero'");
    }
    std::filesystem::path base(cfg.output);
    CsvWriter csv((base / "oracle_check.csv").string(),
                  {"n", "K", "states", "exact_cost", "sim_mean", "sim_ci", "abs_diff",
                   "covered", "residual"});
    bool all_covered = true;
    for (long long n : cfg.queue_n) {
        ScaledSystemParams s = scaling_sequence(cfg.model, cfg.hats, n);
        StationaryOracle oc = exact_stationary_oracle(s, cfg.cost, qp, cfg.queue_K);
        QueueCostEstimate est = estimate_cost(s, cfg.cost, qp, cfg.queue_sim);
        const double diff = std::fabs(est.mean - oc.cost);
        const bool covered = diff <= est.ci_halfwidth;
        all_covered = all_covered && covered;
        csv.row({std::to_string(n), std::to_string(cfg.queue_K), std::to_string(oc.states),
                 fmt_double(oc.cost), fmt_double(est.mean), fmt_double(est.ci_halfwidth),
                 fmt_double(diff), covered ? "1" : "0", fmt_double(oc.residual)});
        std::printf("n = %lld  exact = %.9g  sim = %.6g +- %.3g  %s\n", n, oc.cost, est.mean,
                    est.ci_halfwidth, covered ? "covered" : "NOT covered");
    }
    csv.close();
    if (!all_covered) std::printf("note: some estimates fell outside their own CI\n");
    return 0;
}

int cmd_converge(const Options& opt) {
    ExperimentConfig cfg = load_with_overrides(opt);
    ConvergenceResult res = run_convergence(cfg);
    std::printf("rho* = %.6g  rho_eps = %.6g (eps = %g)\n", res.rho_star, res.rho_eps,
                res.epsilon);
    std::printf("diffusion = %.6g +- %.3g\n", res.diffusion_mean, res.diffusion_ci);
    for (const auto& r : res.rows)
        std::printf("n = %4lld  policy = %.6g +- %.3g  zero = %.6g +- %.3g\n", r.n,
                    r.policy_cost, r.policy_ci, r.zero_cost, r.zero_ci);
    std::printf("wrote %s/convergence.csv and summary.json\n", cfg.output.c_str());
    return 0;
}

int cmd_oracle(const Options& opt) {
    ExperimentConfig cfg = load_with_overrides(opt);
    const int d = cfg.model.d;
    if (opt.xs.empty() || opt.ps.empty())
        throw ConfigError("oracle: --x and --p are required (comma-separated coordinates)");
    Vec x = parse_vec(opt.xs, d, "--x");
    Vec p = parse_vec(opt.ps, d, "--p");
    const double eps = opt.epsilon >= 0.0 ? opt.epsilon : cfg.solver.epsilon;
    FeasibilityContext ctx = make_context(cfg.model, x);
    ArgminResult bf = brute_force_argmin(cfg.model, cfg.cost, ctx, p, eps, opt.grid_points);
    std::printf("# brute force (grid %d per free coordinate), value = %.12g\n", opt.grid_points,
                bf.value);
    std::fputs(matrix_csv(bf.u).c_str(), stdout);
    if (eps > 0.0) {
        ArgminConfig ac = cfg.solver.argmin;
        ac.epsilon = eps;
        ArgminResult fast = argmin_hamiltonian(cfg.model, cfg.cost, ctx, p, ac);
        std::printf("# solver argmin, value = %.12g, max |diff| = %.3g\n", fast.value,
                    fast.u.max_abs_diff(bf.u));
        std::fputs(matrix_csv(fast.u).c_str(), stdout);
    } else {
        ControlMatrix mu(d);
        double v = hamiltonian_H(cfg.model, cfg.cost, ctx, p, cfg.solver.argmin, &mu);
        std::printf("# solver H (eps = 0), value = %.12g, max |diff| = %.3g\n", v,
                    mu.max_abs_diff(bf.u));
        std::fputs(matrix_csv(mu).c_str(), stdout);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergodic scheduling-control laboratory for many-server queues with help"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", opt.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", opt.seed, "seed override for all simulations")
            ->each([&](const std::string&) { opt.seed_set = true; });
        sub->add_option("--threads", opt.threads, "OpenMP thread count (0 = runtime default)");
    };

    CLI::App* hjb = app.add_subcommand("hjb-solve", "solve the ergodic equation, persist V/policy");
    add_common(hjb);
    hjb->add_option("--epsilon", opt.epsilon, "override the control-cost perturbation");

    CLI::App* dsim = app.add_subcommand("diffusion-sim", "simulate the limiting diffusion");
    add_common(dsim);
    dsim->add_option("--solution", opt.solution_path, "reuse a persisted solution header (JSON)");
    dsim->add_option("--epsilon", opt.epsilon, "epsilon for an in-memory solve");

    CLI::App* qsim = app.add_subcommand("queue-sim", "simulate the pre-limit CTMC across n");
    add_common(qsim);
    qsim->add_option("--solution", opt.solution_path, "reuse a persisted solution header (JSON)");
    qsim->add_option("--policy", opt.policy, "'hjb' (floor feedback) or 'zero'");
    qsim->add_option("--histogram-bins", opt.hist_bins,
                     "emit an occupation histogram for the largest n");

    CLI::App* ocheck = app.add_subcommand("oracle-check", "CTMC simulator vs exact stationary law");
    add_common(ocheck);
    ocheck->add_option("--solution", opt.solution_path, "reuse a persisted solution header");
    ocheck->add_option("--policy", opt.policy, "'hjb' or 'zero'");

    CLI::App* conv = app.add_subcommand("converge", "full pipeline: solve, cross-check, sweep n");
    add_common(conv);

    CLI::App* orc = app.add_subcommand("oracle", "brute-force Hamiltonian argmin at one state");
    add_common(orc);
    orc->add_option("--x", opt.xs, "state coordinates, comma-separated")->required();
    orc->add_option("--p", opt.ps, "gradient vector, comma-separated")->required();
    orc->add_option("--epsilon", opt.epsilon, "perturbation (default: config smallest)");
    orc->add_option("--grid-points", opt.grid_points, "oracle grid per free coordinate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

#ifdef _OPENMP
    if (opt.threads > 0) omp_set_num_threads(opt.threads);
#endif

    try {
        if (app.got_subcommand("hjb-solve")) return cmd_hjb_solve(opt);
        if (app.got_subcommand("diffusion-sim")) return cmd_diffusion_sim(opt);
        if (app.got_subcommand("queue-sim")) return cmd_queue_sim(opt);
        if (app.got_subcommand("oracle-check")) return cmd_oracle_check(opt);
        if (app.got_subcommand("converge")) return cmd_converge(opt);
        if (app.got_subcommand("oracle")) return cmd_oracle(opt);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        if (!e.history.empty()) {
            std::fprintf(stderr, "gain history:");
            for (double v : e.history) std::fprintf(stderr, " %.9g", v);
            std::fprintf(stderr, "\n");
        }
        return 3;
    } catch (const DiagnosticError& e) {
        std::fprintf(stderr, "diagnostic failure: %s\n", e.what());
        return 4;
    } catch (const CapacityError& e) {
        std::fprintf(stderr, "capacity error: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
