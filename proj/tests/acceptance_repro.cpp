// Opt-in reproduction runs (desk scale, CPU). Each criterion prints one
// PASS/FAIL line; the exit code is the number of failures. Enable with
//   ctest -L repro   (the test is registered DISABLED by default)
// or run the binary directly. Expect minutes-to-hours runtimes.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "rydopt/evaluation.hpp"

using namespace rydopt;

namespace {

int n_failures = 0;

void report(int criterion, const char* label, bool ok, const std::string& why)
{
    std::printf("%s criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion,
                label, why.empty() ? "" : " -- ", why.c_str());
    std::fflush(stdout);
    if (!ok) {
        ++n_failures;
    }
}

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

// 7. Fixed-angle C1Z oracle at B = 21.1: 1 - F < 1e-4 without decay, and of
//    order a few 1e-4 with the finite Rydberg lifetime.
void criterion_fixed_angle()
{
    AtomSystem sys;
    sys.n_atoms = 2;
    sys.blockade_b = 21.1;

    TrainConfig cfg;
    cfg.seed = 11;
    cfg.max_iters = 4000;
    cfg.learning_rate = 3e-3;
    cfg.n_steps = 192;
    cfg.mu = 0.0;  // pure fidelity target at a single angle
    cfg.mu_anneal_below = 0.0;

    const auto run = fixed_angle_optimize(1, M_PI, 24, cfg, sys);
    const double infid = 1.0 - run.fidelity;

    AtomSystem with_decay = sys;
    with_decay.gamma = 1.0 / 6063.0;
    const SplineBasis basis(static_cast<int>(run.pulse.knots.size()));
    const auto rep = infidelity_decomposition(run.pulse, basis, with_decay, 1,
                                              cfg.n_steps);

    const bool ok = infid < 1e-4 && rep.infid_total > 5e-5 &&
            rep.infid_total < 5e-3;
    report(7, "fixed-angle C1Z at phi = pi", ok,
           "1-F = " + fmt(infid) + " without decay, " +
                   fmt(rep.infid_total) + " with decay");
}

// 8. Mini family: one C1P interval [pi/2, pi] with a reduced network reaches
//    mean infidelity < 1e-3 on fresh samples, and its durations follow the
//    a*arcsinh(b phi) shape.
void criterion_mini_family()
{
    AtomSystem sys;
    sys.n_atoms = 2;
    sys.blockade_b = 21.1;

    TrainConfig cfg;
    cfg.seed = 5;
    cfg.arch = {3, 24, 6, 128};
    cfg.n_knots = 24;
    cfg.batch_m = 40;
    cfg.max_iters = 6000;
    cfg.n_steps = 192;
    cfg.n_threads = 0;
    cfg.learning_rate = 1e-3;
    // fidelity converges within ~500 iterations; the remaining budget lets the
    // time penalty pull the durations onto the time-optimal arcsinh curve.
    // Batch resampling makes the windowed loss too noisy for the plateau rule
    // at this scale, so run the full budget.
    cfg.mu = 1e-3;
    cfg.mu_anneal_below = 2e-3;
    cfg.plateau_threshold = -1.0;

    auto net = ChainedNetwork::create(1, cfg.arch, cfg.n_knots,
                                      cfg.t_bound > 0.0 ? cfg.t_bound
                                                        : default_t_bound(1),
                                      cfg.seed);
    const auto result = train_interval(net, {M_PI / 2.0, M_PI}, cfg, sys);
    net.phi_lo = M_PI / 2.0;
    net.phi_hi = M_PI;

    // fresh angles, decay off for the fidelity target
    std::mt19937_64 rng(99);
    const auto phis = sample_angles(M_PI / 2.0, M_PI, 50, rng);
    const SplineBasis basis(cfg.n_knots);
    double mean_infid = 0.0;
    std::vector<double> durations;
    for (double phi : phis) {
        const PulseSpec pulse = net.forward(phi);
        const auto rep =
                infidelity_decomposition(pulse, basis, sys, 1, cfg.n_steps);
        mean_infid += rep.infid_total / 50.0;
        durations.push_back(pulse.duration);
    }
    const auto fit = fit_times({phis.begin(), phis.end()}, durations,
                               FitModel::Arcsinh);

    const bool ok = mean_infid < 1e-3 && fit.r_squared > 0.98;
    report(8, "mini C1P family on [pi/2, pi]", ok,
           "<1-F> = " + fmt(mean_infid) + ", arcsinh fit r^2 = " +
                   fmt(fit.r_squared) + " (status " +
                   (result.status == TrainStatus::Converged ? "converged"
                                                            : "capped") +
                   ")");
}

// 9. C2P blockade curriculum at phi = pi: the perfect-blockade stage-1 pulse
//    carries >= 10x the blockade infidelity of the re-trained stage-2 pulse,
//    and the stage-2 duration lands near the 16.87/Omega_max mark.
void criterion_curriculum()
{
    AtomSystem sys;
    sys.n_atoms = 3;
    sys.blockade_b = 21.1;

    TrainConfig cfg;
    cfg.seed = 2;
    cfg.max_iters = 6000;
    cfg.learning_rate = 3e-3;
    cfg.n_steps = 384;
    cfg.eval_b = 21.1;
    cfg.mu = 1e-4;  // annealed time penalty pulls T toward the optimum

    // fixed-angle oracle per stage: stage 2 warm-starts from the stage-1
    // pulse, exactly like the weight-level curriculum. A cold finite-B run
    // would instead exploit finite-blockade dynamics and land far from the
    // perfect-blockade solution.
    AtomSystem inf_sys = sys;
    inf_sys.blockade_b = kInfiniteBlockade;
    const auto run1 = fixed_angle_optimize(2, M_PI, 32, cfg, inf_sys);

    TrainConfig stage2 = cfg;
    stage2.seed = 3;
    const auto run2 =
            fixed_angle_optimize(2, M_PI, 32, stage2, sys, &run1.pulse);

    // stage-1 is near-perfect under its own (B -> infinity) model, so its
    // blockade-attributed infidelity at the eval B is essentially its whole
    // infidelity there; stage-2's residual total infidelity at the eval B is
    // what the curriculum leaves unfixed
    const SplineBasis basis(32);
    const auto rep1 =
            infidelity_decomposition(run1.pulse, basis, sys, 2, cfg.n_steps);
    const auto rep2 =
            infidelity_decomposition(run2.pulse, basis, sys, 2, cfg.n_steps);

    const double b1 = std::abs(rep1.infid_blockade);
    const double b2 = rep2.infid_total;  // gamma = 0 here: pure blockade term
    const double t_err = std::abs(run2.pulse.duration - 16.87) / 16.87;

    const bool ok = b1 >= 10.0 * b2 && t_err < 0.10;
    report(9, "C2P blockade curriculum at phi = pi", ok,
           "blockade infid " + fmt(b1) + " (stage 1) vs residual " + fmt(b2) +
                   " (stage 2), T = " + fmt(run2.pulse.duration));
}

}  // namespace

int main()
{
    criterion_fixed_angle();
    criterion_mini_family();
    criterion_curriculum();
    return n_failures;
}
