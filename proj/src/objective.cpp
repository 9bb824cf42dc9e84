#include "rydopt/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace rydopt {

namespace {

int ones_count(int rank, int n_atoms)
{
    int ones = 0;
    for (int bit = 0; bit < n_atoms; ++bit) {
        ones += (rank >> bit) & 1;
    }
    return ones;
}

// Computational block M of P u_out P, reindexed to 2^N.
CMatrix computational_block(const CMatrix& u_out, int n_atoms)
{
    if (u_out.rows() != pow3(n_atoms) || u_out.cols() != pow3(n_atoms)) {
        throw std::invalid_argument("gate_fidelity: u_out has wrong dimension "
                                    "for the atom count");
    }
    const auto idx = computational_indices(n_atoms);
    const int d = static_cast<int>(idx.size());
    CMatrix m(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            m(a, b) = u_out(idx[a], idx[b]);
        }
    }
    return m;
}

// z = Tr(U_tgt^dag RZ(theta_c) M); both factors are diagonal, so only the
// diagonal of M contributes.
Complex trace_overlap(const CMatrix& m, const GateTarget& target,
                      double theta_c)
{
    const int n = target.n_atoms();
    const int d = pow2(n);
    Complex z = 0.0;
    for (int a = 0; a < d; ++a) {
        const Complex t = (a == d - 1) ? std::exp(Complex(0.0, target.phi))
                                       : Complex(1.0);
        const Complex r = std::exp(Complex(0.0, theta_c * ones_count(a, n)));
        z += std::conj(t) * r * m(a, a);
    }
    return z;
}

}  // namespace

CMatrix target_unitary(const GateTarget& target)
{
    if (target.k != 1 && target.k != 2) {
        throw std::invalid_argument("target_unitary: k must be 1 or 2");
    }
    if (!(target.phi > 0.0) || target.phi > M_PI) {
        throw std::invalid_argument("target_unitary: phi outside (0, pi]");
    }
    const int d = pow2(target.n_atoms());
    CMatrix u = CMatrix::Identity(d, d);
    u(d - 1, d - 1) = std::exp(Complex(0.0, target.phi));
    return u;
}

double gate_fidelity(const CMatrix& u_out, const GateTarget& target,
                     double theta_c)
{
    const int n = target.n_atoms();
    const CMatrix m = computational_block(u_out, n);
    const double d = pow2(n);
    const Complex z = trace_overlap(m, target, theta_c);
    return std::norm(z) / (d * d);
}

double haar_avg_fidelity(const CMatrix& u_out, const GateTarget& target,
                         double theta_c)
{
    const int n = target.n_atoms();
    const CMatrix m = computational_block(u_out, n);
    const double d = pow2(n);
    const Complex z = trace_overlap(m, target, theta_c);
    const double purity = (m.adjoint() * m).trace().real();
    return (purity + std::norm(z)) / (d * (d + 1.0));
}

FidelitySeed infidelity_seed(const CMatrix& u_out, const GateTarget& target,
                             double theta_c)
{
    const int n = target.n_atoms();
    const auto idx = computational_indices(n);
    const CMatrix m = computational_block(u_out, n);
    const int d = pow2(n);
    const double d2 = static_cast<double>(d) * d;
    const Complex z = trace_overlap(m, target, theta_c);

    FidelitySeed seed;
    seed.fidelity = std::norm(z) / d2;
    seed.u_bar = CMatrix::Zero(u_out.rows(), u_out.cols());
    Complex dz_dtheta = 0.0;
    for (int a = 0; a < d; ++a) {
        const Complex t = (a == d - 1) ? std::exp(Complex(0.0, target.phi))
                                       : Complex(1.0);
        const int ones = ones_count(a, n);
        const Complex r = std::exp(Complex(0.0, theta_c * ones));
        // J = 1 - |z|^2/d^2, dJ/d(conj M_aa) = -(z/d^2) conj(conj(t) r)
        seed.u_bar(idx[a], idx[a]) = -(z / d2) * t * std::conj(r);
        dz_dtheta += std::conj(t) * Complex(0.0, static_cast<double>(ones)) * r *
                m(a, a);
    }
    seed.d_theta_c =
            -2.0 * (std::conj(z) * dz_dtheta).real() / d2;
    return seed;
}

double grid_optimal_theta_c(const CMatrix& u_out, const GateTarget& target,
                            int n_grid)
{
    double best_theta = 0.0;
    double best_f = -1.0;
    for (int i = 0; i < n_grid; ++i) {
        const double theta = -M_PI + 2.0 * M_PI * (i + 1) / n_grid;
        const double f = gate_fidelity(u_out, target, theta);
        if (f > best_f) {
            best_f = f;
            best_theta = theta;
        }
    }
    return best_theta;
}

double cost_J(const std::vector<FidelitySample>& samples, int k)
{
    if (samples.empty()) {
        throw std::invalid_argument("cost_J: empty batch");
    }
    double sum = 0.0;
    for (const auto& s : samples) {
        sum += 1.0 - gate_fidelity(s.u_out, GateTarget{k, s.phi}, s.theta_c);
    }
    return sum / samples.size();
}

double cost_J_opt(double j, const std::vector<double>& durations, double mu)
{
    if (mu < 0.0) {
        throw std::invalid_argument("cost_J_opt: mu must be nonnegative");
    }
    if (durations.empty()) {
        return j;
    }
    double mean_t = 0.0;
    for (double t : durations) {
        mean_t += t;
    }
    mean_t /= durations.size();
    return j + mu * mean_t;
}

FidelityReport infidelity_decomposition(const PulseSpec& pulse,
                                        const SplineBasis& basis,
                                        const AtomSystem& sys, int gate_k,
                                        int n_steps)
{
    if (n_steps <= 0) {
        n_steps = default_n_steps(pulse.duration);
    }
    std::vector<double> deltas(n_steps);
    for (int s = 0; s < n_steps; ++s) {
        const double u = (s + 0.5) / n_steps;
        const VectorXd w = basis.weights(u);
        double v = 0.0;
        for (int i = 0; i < basis.n_knots(); ++i) {
            v += w(i) * pulse.knots[i];
        }
        deltas[s] = v;
    }

    const GateTarget target{gate_k, pulse.phi};
    auto fidelity_under = [&](const AtomSystem& variant) {
        const auto prop = evolve_affine(affine_hamiltonian(variant), deltas,
                                        pulse.duration);
        return gate_fidelity(prop.final_unitary, target, pulse.theta_c);
    };

    AtomSystem fin_nodecay = sys;
    fin_nodecay.gamma = 0.0;
    AtomSystem infinite = fin_nodecay;
    infinite.blockade_b = kInfiniteBlockade;

    const double f_fin = sys.infinite_blockade()
            ? fidelity_under(infinite)
            : fidelity_under(fin_nodecay);
    const double f_inf = fidelity_under(infinite);

    AtomSystem with_decay = sys;
    if (sys.infinite_blockade()) {
        with_decay.blockade_b = kInfiniteBlockade;
    }
    const auto prop_decay = evolve_affine(affine_hamiltonian(with_decay),
                                          deltas, pulse.duration);
    const double f_decay =
            gate_fidelity(prop_decay.final_unitary, target, pulse.theta_c);

    FidelityReport report;
    report.theta_c_used = pulse.theta_c;
    report.infid_total = 1.0 - f_decay;
    report.infid_decay = f_fin - f_decay;
    report.infid_blockade = f_inf - f_fin;
    report.infid_haar = 1.0 - haar_avg_fidelity(prop_decay.final_unitary,
                                                target, pulse.theta_c);
    return report;
}

}  // namespace rydopt
