#ifndef RYDOPT_LINALG_HPP
#define RYDOPT_LINALG_HPP

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace rydopt {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Basis convention for registers of three-level atoms {|0>, |1>, |r>}:
// big-endian ternary, atom 1 is the most significant digit.
// index = sum_i digits[i] * 3^(N-1-i), digits[i] in {0,1,2}, 2 meaning |r>.
std::vector<int> basis_digits(int index, int n_atoms);
int basis_index(const std::vector<int>& digits);

// Number of atoms in |r> for a given basis index.
int rydberg_count(int index, int n_atoms);

// True when no atom occupies |r> (all digits in {0,1}).
bool is_computational(int index, int n_atoms);

// Maps a computational 3^N basis index to its 2^N binary index.
// Precondition: is_computational(index, n_atoms).
int computational_rank(int index, int n_atoms);

// Enumerates the 3^N indices of the computational subspace in increasing order.
std::vector<int> computational_indices(int n_atoms);

CMatrix kron(const CMatrix& a, const CMatrix& b);

// Tr(a^dag b). Throws std::invalid_argument on dimension mismatch.
Complex hs_overlap(const CMatrix& a, const CMatrix& b);

// Projector P onto the computational subspace of N three-level atoms:
// diagonal 0/1 matrix of dimension 3^N with rank 2^N.
CMatrix computational_projector(int n_atoms);

// diag over 2^N computational states of exp(i theta * #ones), i.e. the
// global correction RZ(theta) applied to every atom (up to global phase).
CMatrix rz_global(int n_atoms, double theta);

int pow3(int n);
int pow2(int n);

}  // namespace rydopt

#endif
