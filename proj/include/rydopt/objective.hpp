#ifndef RYDOPT_OBJECTIVE_HPP
#define RYDOPT_OBJECTIVE_HPP

#include <vector>

#include "rydopt/ansatz.hpp"
#include "rydopt/model.hpp"
#include "rydopt/propagator.hpp"

namespace rydopt {

// Controlled phase gate with k controls at angle phi in (0, pi].
struct GateTarget {
    int k = 1;
    double phi = M_PI;

    int n_atoms() const
    {
        return k + 1;
    }
};

// 2^(k+1)-dim diagonal: e^{i phi} on the all-ones state, 1 elsewhere.
CMatrix target_unitary(const GateTarget& target);

// Trace fidelity F = |Tr(U_tgt^dag RZ(theta_c)^xN M)|^2 / d^2 where M is the
// computational block of P u_out P and d = 2^(k+1). u_out lives on the full
// 3^N space.
double gate_fidelity(const CMatrix& u_out, const GateTarget& target,
                     double theta_c);

// Haar-averaged gate fidelity with leakage through the non-unitary block M:
// F' = (Tr(M^dag M) + |Tr(U_tgt^dag RZ M)|^2) / (d (d + 1)).
double haar_avg_fidelity(const CMatrix& u_out, const GateTarget& target,
                         double theta_c);

// Gradient seed for the propagator: for J = 1 - F, fills u_bar = dJ/d(conj U)
// on the full space (dJ = 2 Re Tr(u_bar^dag dU)) and dJ/d(theta_c).
struct FidelitySeed {
    double fidelity = 0.0;
    CMatrix u_bar;
    double d_theta_c = 0.0;
};
FidelitySeed infidelity_seed(const CMatrix& u_out, const GateTarget& target,
                             double theta_c);

// theta_c maximizing F on an n_grid-point grid over (-pi, pi].
double grid_optimal_theta_c(const CMatrix& u_out, const GateTarget& target,
                            int n_grid = 4096);

struct FidelitySample {
    double phi = 0.0;
    CMatrix u_out;
    double theta_c = 0.0;
};

// Batch cost: mean over samples of 1 - F.
double cost_J(const std::vector<FidelitySample>& samples, int k);

// Time-penalized cost J + mu * mean(durations).
double cost_J_opt(double j, const std::vector<double>& durations, double mu);

// Heuristic default for the duration multiplier, in Omega_max/1 units:
// keeps the time term comparable to the target infidelity scale.
constexpr double kDefaultMu = 1e-4;

struct FidelityReport {
    double infid_total = 0.0;     // 1 - F under H_Nq,Gamma at the eval B
    double infid_decay = 0.0;     // F - F_decay
    double infid_blockade = 0.0;  // F_inf - F_fin
    double infid_haar = 0.0;      // 1 - F' under H_Nq,Gamma
    double theta_c_used = 0.0;
};

// Runs the three propagations (finite B without decay, finite B with decay,
// perfect blockade) and fills the decomposed report.
FidelityReport infidelity_decomposition(const PulseSpec& pulse,
                                        const SplineBasis& basis,
                                        const AtomSystem& sys, int gate_k,
                                        int n_steps = 0);

}  // namespace rydopt

#endif
