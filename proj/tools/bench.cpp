#include <chrono>
#include <cstdio>
#include <memory>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hwctl/config.hpp"
#include "hwctl/diffusion_sim.hpp"
#include "hwctl/queue_sim.hpp"

using namespace hwctl;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void report(const char* kernel, double t_serial, double t_parallel, double max_diff) {
    std::printf("%-24s %10.3fs %10.3fs %8.2fx   max |diff| = %.3g %s\n", kernel, t_serial,
                t_parallel, t_serial / t_parallel, max_diff,
                max_diff == 0.0 ? "(identical)" : "(MISMATCH)");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns run serial code\n");
#endif
    ExperimentConfig cfg = reference_config();

    // policy-improvement sweep inside the ergodic solve
    {
        Grid g = Grid::make(2, 4.0, 0.1);
        SolverConfig sc = cfg.solver;
        sc.epsilon = 0.01;
        sc.parallel = false;
        double t0 = now_s();
        HjbSolution a = solve_ergodic(cfg.model, cfg.cost, g, sc);
        double t1 = now_s();
        sc.parallel = true;
        HjbSolution b = solve_ergodic(cfg.model, cfg.cost, g, sc);
        double t2 = now_s();
        double diff = std::fabs(a.rho - b.rho);
        for (size_t k = 0; k < a.V.size(); ++k) diff = std::max(diff, std::fabs(a.V[k] - b.V[k]));
        for (size_t k = 0; k < a.policy.size(); ++k)
            diff = std::max(diff, std::fabs(a.policy[k] - b.policy[k]));
        report("hjb improvement sweep", t1 - t0, t2 - t1, diff);

        // diffusion replications under the extracted policy
        auto sol = std::make_shared<HjbSolution>(std::move(b));
        MarkovPolicy pol = extract_policy(cfg.model, cfg.cost, sol, sc.argmin);
        SimConfig sim;
        sim.T = 500.0;
        sim.burn_in = 50.0;
        sim.replications = 8;
        sim.parallel = false;
        Vec x0(2, 0.0);
        t0 = now_s();
        CostEstimate ca = estimate_ergodic_cost(cfg.model, cfg.cost, pol, x0, sim, sc.epsilon);
        t1 = now_s();
        sim.parallel = true;
        CostEstimate cb = estimate_ergodic_cost(cfg.model, cfg.cost, pol, x0, sim, sc.epsilon);
        t2 = now_s();
        diff = std::fabs(ca.mean - cb.mean);
        for (int r = 0; r < sim.replications; ++r)
            diff = std::max(diff, std::fabs(ca.reps[r].avg_cost - cb.reps[r].avg_cost));
        report("diffusion replications", t1 - t0, t2 - t1, diff);

        // pre-limit CTMC replications under floor feedback
        QueuePolicy fb = QueuePolicy::floor_feedback(pol);
        ScaledSystemParams s = scaling_sequence(cfg.model, cfg.hats, 100);
        QueueSimConfig qc;
        qc.T = 300.0;
        qc.burn_in = 30.0;
        qc.replications = 8;
        qc.parallel = false;
        t0 = now_s();
        QueueCostEstimate qa = estimate_cost(s, cfg.cost, fb, qc);
        t1 = now_s();
        qc.parallel = true;
        QueueCostEstimate qb = estimate_cost(s, cfg.cost, fb, qc);
        t2 = now_s();
        diff = std::fabs(qa.mean - qb.mean);
        for (int r = 0; r < qc.replications; ++r)
            diff = std::max(diff, std::fabs(qa.reps[r].avg_cost - qb.reps[r].avg_cost));
        report("ctmc replications", t1 - t0, t2 - t1, diff);
    }
    return 0;
}
