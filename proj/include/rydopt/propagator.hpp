#ifndef RYDOPT_PROPAGATOR_HPP
#define RYDOPT_PROPAGATOR_HPP

#include <functional>
#include <memory>
#include <vector>

#include "rydopt/model.hpp"

namespace rydopt {

enum class StepScheme {
    MidpointExponential,  // exact exp of H at the step midpoint, 2nd order
    Rk4,
};

struct TimeGrid {
    double duration = 0.0;  // in 1/Omega_max
    int n_steps = 64;
    StepScheme scheme = StepScheme::MidpointExponential;

    double dt() const
    {
        return duration / n_steps;
    }
};

// Default step count: resolves the fastest in-scope frequency
// (sqrt(3) Omega and |Delta| <= 2.5 Omega) with >= ~12 points per cycle.
int default_n_steps(double duration);

// Reverse-mode record of a midpoint-exponential evolution. Holds per-step
// propagators and prefix products; memory O(n_steps * dim^2).
struct EvolveTape {
    std::vector<CMatrix> step_props;  // G_s = exp(-i dt H_s)
    std::vector<CMatrix> prefixes;    // prefixes[s] = G_{s-1} ... G_1 (prefixes[0] = 1)
    std::vector<double> deltas;       // midpoint control values
    double dt = 0.0;
    int n_steps = 0;
    CMatrix drift;
    CMatrix control;
};

struct Propagation {
    CMatrix final_unitary;
    // Trajectory-averaged integrated Rydberg population:
    // (1/dim) sum_s dt Tr(U_s^dag N_r U_s), nonnegative.
    double integrated_rydberg_population = 0.0;
    std::shared_ptr<const EvolveTape> tape;  // null unless recorded
};

// Time-ordered evolution U(T) = T exp(-i int H dt). duration 0 gives
// the identity. Throws std::runtime_error when the controls produce NaN.
// `rydberg_op` (optional) enables the trajectory-population accumulator.
Propagation evolve(const std::function<CMatrix(double)>& h_of_t,
                   const TimeGrid& grid, const CMatrix* rydberg_op = nullptr);

// Affine-Hamiltonian evolution, H(t) = drift + delta_s * control with the
// control sampled per step midpoint; records a tape when `record` is set.
// Only the midpoint-exponential scheme is taped.
Propagation evolve_affine(const AffineHamiltonian& ham,
                          const std::vector<double>& step_deltas,
                          double duration, bool record = false,
                          const CMatrix* rydberg_op = nullptr);

struct EvolveGradient {
    std::vector<double> d_deltas;  // dJ/d(delta_s), one per step
    double d_duration = 0.0;       // dJ/dT at fixed normalized control shape
};

// Reverse pass through a recorded evolution. `u_bar` is dJ/d(conj U) of the
// real cost J, i.e. dJ = 2 Re Tr(u_bar^dag dU). Gradients are exact for the
// discretized product of midpoint exponentials.
EvolveGradient evolve_backprop(const EvolveTape& tape, const CMatrix& u_bar);

}  // namespace rydopt

#endif
