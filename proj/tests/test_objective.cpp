#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rydopt/objective.hpp"

using namespace rydopt;

namespace {

// embeds a 2^N computational unitary into the 3^N space (identity elsewhere)
CMatrix embed(const CMatrix& m, int n_atoms)
{
    const int dim = pow3(n_atoms);
    CMatrix out = CMatrix::Identity(dim, dim);
    const auto idx = computational_indices(n_atoms);
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            out(idx[a], idx[b]) = m(a, b);
        }
    }
    return out;
}

CMatrix random_contraction(int dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist;
    CMatrix g = CMatrix::NullaryExpr(dim, dim, [&]() {
        return Complex(dist(rng), dist(rng));
    });
    Eigen::JacobiSVD<CMatrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd s = svd.singularValues();
    s /= std::max(1.0, s.maxCoeff());  // clamp into the unit ball
    return svd.matrixU() * s.asDiagonal().toDenseMatrix().cast<Complex>() *
            svd.matrixV().adjoint();
}

}  // namespace

TEST_CASE("target unitaries")
{
    const CMatrix c1z = target_unitary({1, M_PI});
    CHECK(c1z.rows() == 4);
    CHECK(c1z(3, 3).real() == doctest::Approx(-1.0));
    CHECK((c1z.cwiseAbs() -
           Eigen::Matrix4d::Identity().cast<double>()).cwiseAbs().maxCoeff() <
          1e-15);

    const double phi = 0.8;
    const CMatrix c2p = target_unitary({2, phi});
    CHECK(c2p.rows() == 8);
    CHECK(c2p(7, 7) == std::exp(Complex(0.0, phi)));
    CHECK((c2p - CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() ==
          doctest::Approx(std::abs(std::exp(Complex(0, phi)) - 1.0)));

    const CMatrix near_id = target_unitary({1, 1e-12});
    CHECK((near_id - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-11);

    CHECK_THROWS_AS(target_unitary({3, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(target_unitary({1, 0.0}), std::invalid_argument);
}

TEST_CASE("perfect gate has unit fidelity")
{
    const GateTarget t{1, 1.2};
    const CMatrix u = embed(target_unitary(t), 2);
    CHECK(gate_fidelity(u, t, 0.0) == doctest::Approx(1.0));
    CHECK(haar_avg_fidelity(u, t, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("global RZ correction recovers unit fidelity")
{
    const double phi = 0.9;
    const double theta = 0.37;
    const GateTarget t{1, phi};
    CMatrix m = CMatrix::Zero(4, 4);
    m(0, 0) = 1.0;
    m(1, 1) = std::exp(Complex(0.0, -theta));
    m(2, 2) = std::exp(Complex(0.0, -theta));
    m(3, 3) = std::exp(Complex(0.0, -(2.0 * theta) + phi));
    CHECK(gate_fidelity(embed(m, 2), t, theta) == doctest::Approx(1.0));
}

TEST_CASE("total leakage from |11> gives 9/16")
{
    const GateTarget t{1, M_PI};
    CMatrix m = target_unitary(t);
    m.row(3).setZero();
    m.col(3).setZero();
    CHECK(gate_fidelity(embed(m, 2), t, 0.0) == doctest::Approx(9.0 / 16.0));
}

TEST_CASE("global phase invariance")
{
    std::mt19937_64 rng(17);
    const GateTarget t{1, 2.0};
    const CMatrix u = embed(random_contraction(4, rng), 2);
    const CMatrix v = std::exp(Complex(0.0, 0.83)) * u;
    CHECK(std::abs(gate_fidelity(u, t, 0.2) - gate_fidelity(v, t, 0.2)) <
          1e-12);
    CHECK(std::abs(haar_avg_fidelity(u, t, 0.2) -
                   haar_avg_fidelity(v, t, 0.2)) < 1e-12);
}

TEST_CASE("fidelities live in [0, 1] for random contractions")
{
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const GateTarget t{1, 0.1 + 3.0 * (trial % 10) / 10.0};
        const CMatrix u = embed(random_contraction(4, rng), 2);
        const double f = gate_fidelity(u, t, 0.1 * trial);
        const double fp = haar_avg_fidelity(u, t, 0.1 * trial);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0 + 1e-12);
        CHECK(fp >= 0.0);
        CHECK(fp <= 1.0 + 1e-12);
    }
}

TEST_CASE("Haar formula reduces to (d F_trace + 1)/(d + 1) for unitary M")
{
    std::mt19937_64 rng(29);
    std::normal_distribution<double> dist;
    CMatrix g = CMatrix::NullaryExpr(4, 4, [&]() {
        return Complex(dist(rng), dist(rng));
    });
    const CMatrix q = Eigen::HouseholderQR<CMatrix>(g).householderQ();
    const GateTarget t{1, 1.5};
    const CMatrix u = embed(q, 2);
    const double f_trace = gate_fidelity(u, t, 0.4);
    const double expect = (4.0 * f_trace + 1.0) / 5.0;
    CHECK(haar_avg_fidelity(u, t, 0.4) == doctest::Approx(expect));
}

TEST_CASE("infidelity seed matches finite differences")
{
    std::mt19937_64 rng(31);
    const GateTarget t{1, 1.1};
    const CMatrix u = embed(random_contraction(4, rng), 2);
    const double theta = 0.25;
    const auto seed = infidelity_seed(u, t, theta);
    CHECK(seed.fidelity == doctest::Approx(gate_fidelity(u, t, theta)));

    // d(theta_c) against finite differences
    const double eps = 1e-6;
    const double fd = ((1.0 - gate_fidelity(u, t, theta + eps)) -
                       (1.0 - gate_fidelity(u, t, theta - eps))) / (2 * eps);
    CHECK(seed.d_theta_c == doctest::Approx(fd).epsilon(1e-6));

    // complex entry derivatives: dJ = 2 Re Tr(u_bar^dag dU)
    const auto idx = computational_indices(2);
    for (int a : {0, 3}) {
        CMatrix up = u;
        up(idx[a], idx[a]) += eps;
        CMatrix um = u;
        um(idx[a], idx[a]) -= eps;
        const double fd_re = ((1.0 - gate_fidelity(up, t, theta)) -
                              (1.0 - gate_fidelity(um, t, theta))) / (2 * eps);
        CHECK(2.0 * seed.u_bar(idx[a], idx[a]).real() ==
              doctest::Approx(fd_re).epsilon(1e-6));
        up = u;
        up(idx[a], idx[a]) += Complex(0.0, eps);
        um = u;
        um(idx[a], idx[a]) -= Complex(0.0, eps);
        const double fd_im = ((1.0 - gate_fidelity(up, t, theta)) -
                              (1.0 - gate_fidelity(um, t, theta))) / (2 * eps);
        CHECK(2.0 * seed.u_bar(idx[a], idx[a]).imag() ==
              doctest::Approx(fd_im).epsilon(1e-6));
    }
}

TEST_CASE("grid theta_c maximizer")
{
    const double phi = 1.3;
    const GateTarget t{1, phi};
    const double theta_true = -0.8;
    CMatrix m = CMatrix::Zero(4, 4);
    m(0, 0) = 1.0;
    m(1, 1) = std::exp(Complex(0.0, -theta_true));
    m(2, 2) = std::exp(Complex(0.0, -theta_true));
    m(3, 3) = std::exp(Complex(0.0, -(2.0 * theta_true) + phi));
    const CMatrix u = embed(m, 2);
    const double theta_grid = grid_optimal_theta_c(u, t);
    CHECK(gate_fidelity(u, t, theta_grid) >
          gate_fidelity(u, t, theta_true) - 1e-6);
    CHECK(std::abs(theta_grid - theta_true) < 2.0 * M_PI / 4096 + 1e-12);
}

TEST_CASE("batch costs")
{
    const GateTarget t{1, 1.0};
    const CMatrix perfect = embed(target_unitary(t), 2);
    std::vector<FidelitySample> batch = {{1.0, perfect, 0.0},
                                         {1.0, perfect, 0.0}};
    CHECK(cost_J(batch, 1) == doctest::Approx(0.0));

    // F = 1 and F = 0.5 average to J = 0.25: scaling the diagonal by s
    // gives z = 4s and F = s^2
    CMatrix half = perfect;
    const auto idx = computational_indices(2);
    for (int a = 0; a < 4; ++a) {
        half(idx[a], idx[a]) *= std::sqrt(0.5);
    }
    batch[1].u_out = half;
    CHECK(cost_J(batch, 1) == doctest::Approx(0.25));

    CHECK_THROWS_AS(cost_J({}, 1), std::invalid_argument);

    CHECK(cost_J_opt(0.1, {}, 0.0) == doctest::Approx(0.1));
    CHECK(cost_J_opt(0.1, {2.0, 4.0}, 0.0) == doctest::Approx(0.1));
    CHECK(cost_J_opt(0.0, {10.0}, 1e-3) == doctest::Approx(0.01));
    CHECK_THROWS_AS(cost_J_opt(0.0, {1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("monotone decay: larger Gamma never raises fidelity")
{
    AtomSystem sys;
    sys.n_atoms = 2;
    sys.blockade_b = 21.1;
    const int n_steps = 64;
    std::vector<double> deltas(n_steps);
    for (int s = 0; s < n_steps; ++s) {
        deltas[s] = 0.8 * std::sin(M_PI * (s + 0.5) / n_steps);
    }
    const GateTarget t{1, M_PI};
    double prev = 2.0;
    for (double gamma : {0.0, 1e-4, 1e-3, 1e-2, 1e-1}) {
        AtomSystem g = sys;
        g.gamma = gamma;
        const auto prop = evolve_affine(affine_hamiltonian(g), deltas, 7.6);
        const double f = gate_fidelity(prop.final_unitary, t, 0.0);
        CHECK(f <= prev + 1e-12);
        prev = f;
    }
}

TEST_CASE("infidelity decomposition limits")
{
    SplineBasis basis(6);
    PulseSpec pulse;
    pulse.phi = M_PI;
    pulse.duration = 7.6;
    pulse.knots.assign(6, 0.3);

    AtomSystem sys;
    sys.n_atoms = 2;
    sys.blockade_b = 21.1;
    sys.gamma = 0.0;
    const auto r0 = infidelity_decomposition(pulse, basis, sys, 1, 128);
    CHECK(r0.infid_decay == doctest::Approx(0.0).epsilon(1e-12));

    AtomSystem inf_sys = sys;
    inf_sys.blockade_b = kInfiniteBlockade;
    const auto r1 = infidelity_decomposition(pulse, basis, inf_sys, 1, 128);
    CHECK(r1.infid_blockade == doctest::Approx(0.0).epsilon(1e-12));

    sys.gamma = 1.0 / 6063.0;
    const auto r2 = infidelity_decomposition(pulse, basis, sys, 1, 128);
    CHECK(r2.infid_decay > 0.0);
    CHECK(r2.infid_total >= r2.infid_decay - 1e-12);
}
