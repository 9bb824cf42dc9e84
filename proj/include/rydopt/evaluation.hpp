#ifndef RYDOPT_EVALUATION_HPP
#define RYDOPT_EVALUATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rydopt/objective.hpp"
#include "rydopt/trainer.hpp"

namespace rydopt {

struct EvalRecord {
    double phi = 0.0;
    double duration = 0.0;
    double infid_total = 0.0;
    double infid_decay = 0.0;
    double infid_blockade = 0.0;
    double infid_haar = 0.0;
    double theta_c = 0.0;
};

struct EvalReport {
    std::vector<EvalRecord> records;
    double mean_infid_total = 0.0;
    double mean_infid_decay = 0.0;
    double mean_infid_blockade = 0.0;
    double mean_infid_haar = 0.0;
    double mean_duration = 0.0;
};

// Samples n angles uniformly over (0, pi], routes each to the covering
// interval's network, and fills the per-angle infidelity decomposition.
// Throws when an angle falls outside every net's interval.
EvalReport evaluate_family(const std::vector<ChainedNetwork>& nets,
                           const AtomSystem& sys, int n_samples,
                           std::uint64_t seed, int n_steps = 0,
                           int n_threads = 0);

enum class FitModel { Arcsinh, Poly2 };

struct FitResult {
    FitModel model = FitModel::Arcsinh;
    std::vector<double> params;  // (a, b) or (a, b, c)
    double residual_norm = 0.0;
    double r_squared = 0.0;
    bool converged = true;
};

double fit_predict(const FitResult& fit, double phi);

// Least squares fit of (phi, T_phi) records: Levenberg-Marquardt for the
// a*arcsinh(b phi) model, closed-form normal equations for the quadratic.
// Requires >= 4 points with distinct abscissae.
FitResult fit_times(const std::vector<double>& phis,
                    const std::vector<double>& times, FitModel model);

// Comparison ratio between decomposition-based and native
// gate implementation time. Both inputs must be positive.
double decomposition_ratio(double t_decomposition_total, double t_native_avg);

// Built-in decompositions into two-qubit gates (one-qubit gates excluded
// from the total): C1P needs 2 C1Z-equivalents, C2P needs 8.
int decomposition_gate_count(int gate_k);

// Total two-qubit time of the preset decomposition: count * per-gate time.
double decomposition_time(int gate_k, double t_per_gate = kTimeOptimalC1Z);

// Domain average over (0, pi] of a fitted duration model (closed form).
double native_time_average(const FitResult& fit);

}  // namespace rydopt

#endif
