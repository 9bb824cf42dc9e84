#include "rydopt/linalg.hpp"

#include <stdexcept>

namespace rydopt {

int pow3(int n)
{
    int p = 1;
    for (int i = 0; i < n; ++i) {
        p *= 3;
    }
    return p;
}

int pow2(int n)
{
    return 1 << n;
}

std::vector<int> basis_digits(int index, int n_atoms)
{
    std::vector<int> digits(n_atoms);
    for (int i = n_atoms - 1; i >= 0; --i) {
        digits[i] = index % 3;
        index /= 3;
    }
    return digits;
}

int basis_index(const std::vector<int>& digits)
{
    int index = 0;
    for (int d : digits) {
        index = 3 * index + d;
    }
    return index;
}

int rydberg_count(int index, int n_atoms)
{
    int count = 0;
    for (int i = 0; i < n_atoms; ++i) {
        if (index % 3 == 2) {
            ++count;
        }
        index /= 3;
    }
    return count;
}

bool is_computational(int index, int n_atoms)
{
    return rydberg_count(index, n_atoms) == 0;
}

int computational_rank(int index, int n_atoms)
{
    int rank = 0;
    for (int i = 0; i < n_atoms; ++i, index /= 3) {
        const int digit = index % 3;
        if (digit == 2) {
            throw std::invalid_argument(
                    "computational_rank: state has a Rydberg excitation");
        }
        rank |= digit << i;
    }
    return rank;
}

std::vector<int> computational_indices(int n_atoms)
{
    const int dim = pow3(n_atoms);
    std::vector<int> idx;
    idx.reserve(pow2(n_atoms));
    for (int i = 0; i < dim; ++i) {
        if (is_computational(i, n_atoms)) {
            idx.push_back(i);
        }
    }
    return idx;
}

CMatrix kron(const CMatrix& a, const CMatrix& b)
{
    const Eigen::Index ra = a.rows();
    const Eigen::Index ca = a.cols();
    const Eigen::Index rb = b.rows();
    const Eigen::Index cb = b.cols();
    CMatrix out(ra * rb, ca * cb);
    for (Eigen::Index i = 0; i < ra; ++i) {
        for (Eigen::Index j = 0; j < ca; ++j) {
            out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
        }
    }
    return out;
}

Complex hs_overlap(const CMatrix& a, const CMatrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("hs_overlap: dimension mismatch");
    }
    return (a.adjoint() * b).trace();
}

CMatrix computational_projector(int n_atoms)
{
    const int dim = pow3(n_atoms);
    CMatrix p = CMatrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        if (is_computational(i, n_atoms)) {
            p(i, i) = 1.0;
        }
    }
    return p;
}

CMatrix rz_global(int n_atoms, double theta)
{
    const int dim = pow2(n_atoms);
    CMatrix r = CMatrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        int ones = 0;
        for (int bit = 0; bit < n_atoms; ++bit) {
            ones += (i >> bit) & 1;
        }
        r(i, i) = std::exp(Complex(0.0, theta * ones));
    }
    return r;
}

}  // namespace rydopt
