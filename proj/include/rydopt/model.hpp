#ifndef RYDOPT_MODEL_HPP
#define RYDOPT_MODEL_HPP

#include <limits>

#include "rydopt/linalg.hpp"

namespace rydopt {

// Register of equidistant three-level atoms driven by a single global laser.
// Internal units: hbar = 1, frequencies in Omega_max, time in 1/Omega_max.
struct AtomSystem {
    int n_atoms = 2;
    double omega_max = 1.0;
    // Blockade strength B = V/Omega_max. Infinity selects the projected
    // (perfect-blockade) model.
    double blockade_b = 21.1;
    // Decay rate of |r> in units of Omega_max. 0 disables decay.
    double gamma = 0.0;
    bool equidistant = true;

    bool infinite_blockade() const
    {
        return std::isinf(blockade_b);
    }
};

constexpr double kInfiniteBlockade = std::numeric_limits<double>::infinity();

// Instantaneous laser controls. omega stays pinned to Omega_max in all
// in-scope protocols; delta is the only time-dependent control.
struct ControlValue {
    double omega = 1.0;
    double delta = 0.0;
};

// 3x3 single-atom Hamiltonian on {|0>,|1>,|r>}:
// (Omega/2)(|1><r| + h.c.) - Delta |r><r|.
CMatrix h_single(const ControlValue& cv);

// Full N-atom Hamiltonian: embedded single-atom terms plus the pairwise
// B*Omega_max |rr><rr| interaction, equal for all pairs.
// Requires finite blockade_b and equidistant geometry.
CMatrix h_full(const AtomSystem& sys, const ControlValue& cv);

// Perfect-blockade (B -> infinity) three-qubit Hamiltonian assembled from
// the bright-state couplings: rows/columns of every basis state with two or
// more Rydberg excitations are identically zero.
CMatrix h_effective_3q(const ControlValue& cv);

// Perfect-blockade model for any N: the interaction-free h_full with all
// multiply-excited rows/columns zeroed. Coincides with h_effective_3q at N=3.
CMatrix h_blockaded(int n_atoms, const ControlValue& cv);

// Selects h_full or h_blockaded according to sys.blockade_b.
CMatrix h_system(const AtomSystem& sys, const ControlValue& cv);

// Adds the non-Hermitian decay term -i(Gamma/2) sum_i |r><r|_i, so that
// single-Rydberg amplitudes decay as exp(-Gamma t / 2) under evolution.
CMatrix add_decay(const CMatrix& h, const AtomSystem& sys);

// sum_i |r><r|_i on the 3^N space (Rydberg number operator).
CMatrix rydberg_number_op(int n_atoms);

// Symmetric single-excitation bright state |b_n|, n in {2, 3}.
CVector bright_state(int n_atoms);

// Splits H(delta) into drift + delta * control for the chosen model; the
// control part is the -sum_i |r><r|_i diagonal (restricted to surviving
// states in the blockaded models).
struct AffineHamiltonian {
    CMatrix drift;    // delta-independent part (includes decay if any)
    CMatrix control;  // dH/d(delta)
};

AffineHamiltonian affine_hamiltonian(const AtomSystem& sys);

}  // namespace rydopt

#endif
