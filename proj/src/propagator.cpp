#include "rydopt/propagator.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace rydopt {

namespace {

constexpr Complex kMinusI{0.0, -1.0};

CMatrix step_exponential(const CMatrix& h, double dt)
{
    return (kMinusI * dt * h).exp();
}

// Frechet derivative L_X(E) of the matrix exponential via the block trick:
// exp([[X, E], [0, X]]) = [[exp(X), L_X(E)], [0, exp(X)]].
CMatrix expm_frechet(const CMatrix& x, const CMatrix& e)
{
    const Eigen::Index d = x.rows();
    CMatrix block = CMatrix::Zero(2 * d, 2 * d);
    block.topLeftCorner(d, d) = x;
    block.bottomRightCorner(d, d) = x;
    block.topRightCorner(d, d) = e;
    return block.exp().topRightCorner(d, d);
}

void check_finite(double delta)
{
    if (!std::isfinite(delta)) {
        throw std::runtime_error("evolve: control waveform produced a "
                                 "non-finite detuning value");
    }
}

CMatrix rk4_step(const std::function<CMatrix(double)>& h_of_t, const CMatrix& u,
                 double t, double dt)
{
    auto rhs = [&](double tt, const CMatrix& uu) -> CMatrix {
        return kMinusI * (h_of_t(tt) * uu);
    };
    const CMatrix k1 = rhs(t, u);
    const CMatrix k2 = rhs(t + dt / 2.0, u + (dt / 2.0) * k1);
    const CMatrix k3 = rhs(t + dt / 2.0, u + (dt / 2.0) * k2);
    const CMatrix k4 = rhs(t + dt, u + dt * k3);
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double trajectory_population(const CMatrix& u, const CMatrix& nr)
{
    return ((u.adjoint() * nr * u).trace().real()) / static_cast<double>(u.rows());
}

}  // namespace

int default_n_steps(double duration)
{
    const int resolved = static_cast<int>(
            std::ceil(50.0 * duration / (2.0 * M_PI)));
    return std::max(64, resolved);
}

Propagation evolve(const std::function<CMatrix(double)>& h_of_t,
                   const TimeGrid& grid, const CMatrix* rydberg_op)
{
    if (grid.duration < 0.0) {
        throw std::invalid_argument("evolve: negative duration");
    }
    const CMatrix h0 = h_of_t(0.0);
    const Eigen::Index dim = h0.rows();
    Propagation prop;
    prop.final_unitary = CMatrix::Identity(dim, dim);
    if (grid.duration == 0.0) {
        return prop;
    }
    const double dt = grid.dt();
    for (int s = 0; s < grid.n_steps; ++s) {
        const double t_mid = (s + 0.5) * dt;
        if (rydberg_op != nullptr) {
            prop.integrated_rydberg_population +=
                    dt * trajectory_population(prop.final_unitary, *rydberg_op);
        }
        if (grid.scheme == StepScheme::MidpointExponential) {
            const CMatrix h = h_of_t(t_mid);
            if (!h.allFinite()) {
                throw std::runtime_error(
                        "evolve: non-finite Hamiltonian entries at t = " +
                        std::to_string(t_mid));
            }
            prop.final_unitary = step_exponential(h, dt) * prop.final_unitary;
        } else {
            prop.final_unitary =
                    rk4_step(h_of_t, prop.final_unitary, s * dt, dt);
        }
    }
    return prop;
}

Propagation evolve_affine(const AffineHamiltonian& ham,
                          const std::vector<double>& step_deltas,
                          double duration, bool record,
                          const CMatrix* rydberg_op)
{
    if (duration < 0.0) {
        throw std::invalid_argument("evolve_affine: negative duration");
    }
    const Eigen::Index dim = ham.drift.rows();
    const int n_steps = static_cast<int>(step_deltas.size());
    Propagation prop;
    prop.final_unitary = CMatrix::Identity(dim, dim);

    auto tape = record ? std::make_shared<EvolveTape>() : nullptr;
    if (tape) {
        tape->dt = (n_steps > 0) ? duration / n_steps : 0.0;
        tape->n_steps = n_steps;
        tape->deltas = step_deltas;
        tape->drift = ham.drift;
        tape->control = ham.control;
        tape->step_props.reserve(n_steps);
        tape->prefixes.reserve(n_steps);
    }
    if (duration == 0.0 || n_steps == 0) {
        prop.tape = tape;
        return prop;
    }
    const double dt = duration / n_steps;
    for (int s = 0; s < n_steps; ++s) {
        check_finite(step_deltas[s]);
        if (tape) {
            tape->prefixes.push_back(prop.final_unitary);
        }
        if (rydberg_op != nullptr) {
            prop.integrated_rydberg_population +=
                    dt * trajectory_population(prop.final_unitary, *rydberg_op);
        }
        const CMatrix h = ham.drift + step_deltas[s] * ham.control;
        const CMatrix g = step_exponential(h, dt);
        if (tape) {
            tape->step_props.push_back(g);
        }
        prop.final_unitary = g * prop.final_unitary;
    }
    prop.tape = tape;
    return prop;
}

EvolveGradient evolve_backprop(const EvolveTape& tape, const CMatrix& u_bar)
{
    EvolveGradient grad;
    grad.d_deltas.assign(tape.n_steps, 0.0);
    if (tape.n_steps == 0 || tape.dt == 0.0) {
        return grad;
    }
    if (tape.step_props.empty()) {
        throw std::logic_error("evolve_backprop: tape missing step records");
    }
    const double dt = tape.dt;
    // M_s = L_s^dag u_bar R_s^dag with L_s = G_n...G_{s+1}, R_s the stored
    // prefix. The adjoint of the exponential's Frechet derivative at X is
    // the Frechet derivative at X^dag, so each step needs one block-expm.
    CMatrix left_adj = u_bar;  // L_s^dag u_bar, starting at s = n
    for (int s = tape.n_steps - 1; s >= 0; --s) {
        const CMatrix m = left_adj * tape.prefixes[s].adjoint();
        const CMatrix h = tape.drift + tape.deltas[s] * tape.control;
        const CMatrix x = Complex(0.0, -1.0) * dt * h;
        const CMatrix gbar = expm_frechet(x.adjoint(), m);
        // dX/d(delta_s) = -i dt * control; dX/dT = -i H_s / n_steps.
        const Complex ip_control =
                (gbar.adjoint() * (Complex(0.0, -dt) * tape.control)).trace();
        const Complex ip_duration =
                (gbar.adjoint() * (Complex(0.0, -1.0 / tape.n_steps) * h))
                        .trace();
        grad.d_deltas[s] = 2.0 * ip_control.real();
        grad.d_duration += 2.0 * ip_duration.real();
        left_adj = tape.step_props[s].adjoint() * left_adj;
    }
    return grad;
}

}  // namespace rydopt
