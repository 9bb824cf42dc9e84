#include "rydopt/model.hpp"

#include <cmath>
#include <stdexcept>

namespace rydopt {

namespace {

// Embeds a 3x3 single-atom operator at position `atom` (0-based) in the
// 3^N space, using the big-endian digit convention of linalg.hpp.
CMatrix embed_single(const CMatrix& op, int atom, int n_atoms)
{
    CMatrix out = CMatrix::Identity(1, 1);
    for (int i = 0; i < n_atoms; ++i) {
        out = kron(out, i == atom ? op : CMatrix::Identity(3, 3));
    }
    return out;
}

CMatrix rr_projector_3()
{
    CMatrix p = CMatrix::Zero(3, 3);
    p(2, 2) = 1.0;
    return p;
}

void zero_multi_excited(CMatrix& h, int n_atoms)
{
    const int dim = pow3(n_atoms);
    for (int i = 0; i < dim; ++i) {
        if (rydberg_count(i, n_atoms) >= 2) {
            h.row(i).setZero();
            h.col(i).setZero();
        }
    }
}

}  // namespace

CMatrix h_single(const ControlValue& cv)
{
    CMatrix h = CMatrix::Zero(3, 3);
    h(1, 2) = cv.omega / 2.0;
    h(2, 1) = cv.omega / 2.0;
    h(2, 2) = -cv.delta;
    return h;
}

CMatrix h_full(const AtomSystem& sys, const ControlValue& cv)
{
    if (sys.infinite_blockade()) {
        throw std::invalid_argument(
                "h_full: blockade_b must be finite; use h_blockaded for the "
                "perfect-blockade model");
    }
    if (!sys.equidistant || sys.blockade_b <= 0.0) {
        throw std::invalid_argument("h_full: requires equidistant geometry "
                                    "and positive blockade strength");
    }
    const int n = sys.n_atoms;
    const int dim = pow3(n);
    const CMatrix h1 = h_single(cv);
    CMatrix h = CMatrix::Zero(dim, dim);
    for (int i = 0; i < n; ++i) {
        h += embed_single(h1, i, n);
    }
    // Equal pair interaction V = B * Omega_max on every |..r..r..| diagonal.
    const double v = sys.blockade_b * sys.omega_max;
    const CMatrix rr = rr_projector_3();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            CMatrix term = CMatrix::Identity(1, 1);
            for (int a = 0; a < n; ++a) {
                term = kron(term, (a == i || a == j) ? rr
                                                     : CMatrix::Identity(3, 3));
            }
            h += v * term;
        }
    }
    return h;
}

CMatrix h_effective_3q(const ControlValue& cv)
{
    const int n = 3;
    const int dim = pow3(n);
    CMatrix h = CMatrix::Zero(dim, dim);

    // Couplings between each computational state and its single-excitation
    // image: |d1 d2 d3> with one 1 flipped to r picks up Omega/2 per atom.
    // Summed over atoms this reproduces the bright-state couplings
    // Omega/2, sqrt(2) Omega/2, sqrt(3) Omega/2 of the three TLS ladders.
    const double g = cv.omega / 2.0;
    for (int idx = 0; idx < dim; ++idx) {
        if (!is_computational(idx, n)) {
            continue;
        }
        auto digits = basis_digits(idx, n);
        for (int atom = 0; atom < n; ++atom) {
            if (digits[atom] != 1) {
                continue;
            }
            auto excited = digits;
            excited[atom] = 2;
            const int jdx = basis_index(excited);
            h(idx, jdx) += g;
            h(jdx, idx) += g;
        }
    }
    // -Delta on every single-Rydberg diagonal.
    for (int idx = 0; idx < dim; ++idx) {
        if (rydberg_count(idx, n) == 1) {
            h(idx, idx) = -cv.delta;
        }
    }
    return h;
}

CMatrix h_blockaded(int n_atoms, const ControlValue& cv)
{
    const int dim = pow3(n_atoms);
    const CMatrix h1 = h_single(cv);
    CMatrix h = CMatrix::Zero(dim, dim);
    for (int i = 0; i < n_atoms; ++i) {
        h += embed_single(h1, i, n_atoms);
    }
    zero_multi_excited(h, n_atoms);
    return h;
}

CMatrix h_system(const AtomSystem& sys, const ControlValue& cv)
{
    return sys.infinite_blockade() ? h_blockaded(sys.n_atoms, cv)
                                   : h_full(sys, cv);
}

CMatrix add_decay(const CMatrix& h, const AtomSystem& sys)
{
    if (sys.gamma < 0.0) {
        throw std::invalid_argument("add_decay: gamma must be nonnegative");
    }
    if (sys.gamma == 0.0) {
        return h;
    }
    CMatrix out = h;
    CMatrix nr = rydberg_number_op(sys.n_atoms);
    if (sys.infinite_blockade()) {
        zero_multi_excited(nr, sys.n_atoms);
    }
    out -= Complex(0.0, sys.gamma / 2.0) * nr;
    return out;
}

CMatrix rydberg_number_op(int n_atoms)
{
    const int dim = pow3(n_atoms);
    CMatrix nr = CMatrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        nr(i, i) = rydberg_count(i, n_atoms);
    }
    return nr;
}

CVector bright_state(int n_atoms)
{
    if (n_atoms != 2 && n_atoms != 3) {
        throw std::invalid_argument("bright_state: only n = 2, 3 supported");
    }
    const int dim = pow3(n_atoms);
    CVector b = CVector::Zero(dim);
    std::vector<int> digits(n_atoms, 1);
    for (int atom = 0; atom < n_atoms; ++atom) {
        auto d = digits;
        d[atom] = 2;
        b(basis_index(d)) = 1.0;
    }
    b /= std::sqrt(static_cast<double>(n_atoms));
    return b;
}

AffineHamiltonian affine_hamiltonian(const AtomSystem& sys)
{
    AffineHamiltonian ah;
    const ControlValue zero_delta{sys.omega_max, 0.0};
    ah.drift = add_decay(h_system(sys, zero_delta), sys);
    CMatrix nr = rydberg_number_op(sys.n_atoms);
    if (sys.infinite_blockade()) {
        const int dim = pow3(sys.n_atoms);
        for (int i = 0; i < dim; ++i) {
            if (rydberg_count(i, sys.n_atoms) >= 2) {
                nr(i, i) = 0.0;
            }
        }
    }
    ah.control = -nr;
    return ah;
}

}  // namespace rydopt
