#ifndef RYDOPT_ANSATZ_HPP
#define RYDOPT_ANSATZ_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rydopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double sigmoid(double y);

// Fully connected feedforward network: ReLU hidden layers, sigmoid output.
struct MLP {
    struct Layer {
        MatrixXd weight;  // out x in
        VectorXd bias;
    };
    std::vector<Layer> layers;

    int input_dim() const;
    int output_dim() const;

    // total layer count (input + hidden + output) as used in arch tuples
    int n_layer_count() const
    {
        return static_cast<int>(layers.size()) + 1;
    }

    VectorXd forward(const VectorXd& in) const;

    struct Cache {
        std::vector<VectorXd> activations;  // [0] = input, last = output
    };
    VectorXd forward_cached(const VectorXd& in, Cache& cache) const;

    // d_out is dJ/d(output after the sigmoid). Returns dJ/d(input) and
    // accumulates weight/bias gradients into `grad` (same shapes as *this).
    VectorXd backward(const Cache& cache, const VectorXd& d_out,
                      MLP& grad) const;

    static MLP glorot(const std::vector<int>& dims, std::mt19937_64& rng);
    static MLP zeros_like(const MLP& other);

    int n_params() const;
    void flatten(double* out) const;
    void unflatten(const double* in);
    void add_scaled(const MLP& other, double scale);
};

// Natural cubic spline basis on K uniform knots over [0, 1]. Evaluation is
// linear in the knot values; weights(u) gives the K interpolation weights.
class SplineBasis {
public:
    explicit SplineBasis(int n_knots);

    int n_knots() const
    {
        return n_knots_;
    }

    VectorXd weights(double u) const;

    // n_eval x K weight matrix at the given normalized abscissae.
    MatrixXd weight_matrix(const std::vector<double>& us) const;

private:
    int n_knots_ = 0;
    MatrixXd second_deriv_map_;  // K x K, knot values -> second derivatives
};

// One pulse of the family: duration, detuning knots (uniform on [0, T]) and
// the global correction angle appended after the pulse.
struct PulseSpec {
    double phi = 0.0;
    double duration = 0.0;
    std::vector<double> knots;
    double theta_c = 0.0;
};

// Detuning at time t in [0, duration], natural cubic interpolation of the
// knots on the normalized time axis. Throws std::out_of_range outside.
double waveform(const PulseSpec& spec, const SplineBasis& basis, double t);

// The chained pair N_T (phi -> duration) and N_C (phi, duration -> knots
// and correction angle), with sigmoid squashing onto the physical bounds:
//   duration = t_bound * sigma(raw),        in (0, t_bound)
//   knot     = delta_bound * (2 sigma - 1), in (-delta_bound, delta_bound)
//   theta_c  = pi * (2 sigma - 1),          in (-pi, pi)
struct ChainedNetwork {
    MLP n_t;
    MLP n_c;
    int gate_k = 1;
    double phi_lo = 0.0;  // trained interval (phi_lo, phi_hi]
    double phi_hi = M_PI;
    int n_knots = 48;
    double delta_bound = 2.5;  // in Omega_max
    double t_bound = 0.0;      // 1.2 * T_opt(pi), in 1/Omega_max
    bool correction_head = true;

    // arch = (m_L^T, m_N^T, m_L^C, m_N^C); m_L counts input and output layers.
    static ChainedNetwork create(int gate_k, const std::array<int, 4>& arch,
                                 int n_knots, double t_bound, std::uint64_t seed,
                                 bool correction_head = true);

    std::array<int, 4> arch() const;

    struct ForwardCache {
        MLP::Cache t_cache;
        MLP::Cache c_cache;
        double y_t = 0.0;  // N_T sigmoid output
        VectorXd y_c;      // N_C sigmoid outputs
    };

    PulseSpec forward(double phi) const;
    PulseSpec forward_cached(double phi, ForwardCache& cache) const;

    // Reverse pass: cost gradients w.r.t. the pulse parameters in, weight
    // gradients out. d_duration must be the *total* dJ/dT (the chain through
    // N_C's duration input is added here).
    struct Gradient {
        MLP d_n_t;
        MLP d_n_c;
    };
    Gradient zero_gradient() const;
    void backward(const ForwardCache& cache, double d_duration,
                  const std::vector<double>& d_knots, double d_theta_c,
                  Gradient& grad) const;

    int n_params() const;
    VectorXd flatten() const;
    void unflatten(const VectorXd& params);
};

// Versioned binary weights container plus a JSON sidecar manifest
// ("<path>.manifest.json"). Round-trip exact.
void save_network(const ChainedNetwork& net, const std::string& path);
ChainedNetwork load_network(const std::string& path);

}  // namespace rydopt

#endif
