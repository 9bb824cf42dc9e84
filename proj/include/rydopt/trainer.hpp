#ifndef RYDOPT_TRAINER_HPP
#define RYDOPT_TRAINER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rydopt/ansatz.hpp"
#include "rydopt/model.hpp"
#include "rydopt/objective.hpp"

namespace rydopt {

// Known time-optimal C_kZ durations at fixed drive amplitude (literature
// values, in 1/Omega_max); used for the default T_phi bounds 1.2 * T_opt.
constexpr double kTimeOptimalC1Z = 7.612;
constexpr double kTimeOptimalC2Z = 16.44;

double default_t_bound(int gate_k);

enum class BlockadeStage {
    InfiniteFirst,  // perfect-blockade stage, then re-train at eval_b
    FiniteOnly,
};

struct TrainConfig {
    int batch_m = 80;
    double learning_rate = 3e-4;
    double mu = kDefaultMu;
    // Hold mu at 0 until J drops below this, so the time penalty cannot trap
    // short low-fidelity pulses; <= 0 disables annealing.
    double mu_anneal_below = 1e-3;
    int max_iters = 2000;
    int plateau_window = 50;
    double plateau_threshold = 1e-4;  // relative improvement of the J_opt
                                      // moving average
    std::uint64_t seed = 0;
    int n_intervals = 5;  // 5 for C1P, 14 for C2P
    BlockadeStage blockade_stage = BlockadeStage::FiniteOnly;
    double eval_b = 21.1;
    int n_steps = 0;    // propagation steps per pulse; 0 = duration-based
    int n_threads = 0;  // 0 = hardware concurrency
    std::string checkpoint_dir;  // empty disables checkpointing
    int checkpoint_every = 100;
    std::array<int, 4> arch{3, 45, 10, 300};
    int n_knots = 48;
    double t_bound = 0.0;  // 0 = default_t_bound(gate_k)
};

struct AdamState {
    VectorXd m;
    VectorXd v;
    int step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(int n_params)
            : m(VectorXd::Zero(n_params)), v(VectorXd::Zero(n_params))
    {
    }

    void update(VectorXd& params, const VectorXd& grad, double lr);
};

struct IterRecord {
    int iter = 0;
    double j = 0.0;
    double j_opt = 0.0;
    double mean_duration = 0.0;
    double wall_seconds = 0.0;
};

enum class TrainStatus { Converged, MaxIters, Diverged };

struct IntervalResult {
    TrainStatus status = TrainStatus::MaxIters;
    std::vector<IterRecord> trace;
};

struct TrainRun {
    std::vector<ChainedNetwork> nets;  // one per interval, ascending in phi
    std::vector<IntervalResult> results;
    std::vector<std::string> stage_log;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;

    bool all_converged() const;
};

// m i.i.d. uniform draws from (lo, hi]; rejects degenerate intervals.
std::vector<double> sample_angles(double lo, double hi, int m,
                                  std::mt19937_64& rng);

// Uniform partition of (0, pi] into n intervals, returned as (lo, hi] pairs.
std::vector<std::pair<double, double>> uniform_intervals(int n);

// Batch loss and flattened weight gradient of J_opt over the given angles.
// Per-sample evaluations run on a worker pool; contributions are reduced in
// fixed sample order.
struct BatchEval {
    double j = 0.0;
    double j_opt = 0.0;
    double mean_duration = 0.0;
    VectorXd grad;  // layout of ChainedNetwork::flatten
};
BatchEval batch_loss_grad(const ChainedNetwork& net,
                          const std::vector<double>& phis,
                          const AtomSystem& sys, double mu, int n_steps,
                          int n_threads);

// Adam loop over one phi interval; stops on the plateau criterion or
// max_iters. Diverging batches (NaN loss) restore the last good weights.
IntervalResult train_interval(ChainedNetwork& net,
                              std::pair<double, double> interval,
                              const TrainConfig& cfg, const AtomSystem& sys);

// Trains the full (0, pi] family: the interval containing pi from scratch,
// every subsequent interval warm-started from its converged neighbor.
TrainRun train_family(int gate_k, const TrainConfig& cfg,
                      const AtomSystem& sys);

// Two-stage curriculum for k = 2: perfect-blockade training first, then
// re-training of the same weights at the finite eval_b.
TrainRun two_stage_blockade(const TrainConfig& cfg, const AtomSystem& sys);

// GRAPE-style oracle: direct optimization of knots, duration and theta_c at
// one fixed angle, no network. Also used to calibrate T_opt defaults.
struct FixedAngleResult {
    PulseSpec pulse;
    double fidelity = 0.0;
    TrainStatus status = TrainStatus::MaxIters;
    std::vector<IterRecord> trace;
};
// `warm_start` (optional) seeds the raw parameters from an existing pulse by
// inverting the sigmoid squashing; this is how a blockade-curriculum stage 2
// stays in the basin of its stage-1 solution.
FixedAngleResult fixed_angle_optimize(int gate_k, double phi, int n_knots,
                                      const TrainConfig& cfg,
                                      const AtomSystem& sys,
                                      const PulseSpec* warm_start = nullptr);

}  // namespace rydopt

#endif
