#include "rydopt/ansatz.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rydopt {

double sigmoid(double y)
{
    return 1.0 / (1.0 + std::exp(-y));
}

int MLP::input_dim() const
{
    return static_cast<int>(layers.front().weight.cols());
}

int MLP::output_dim() const
{
    return static_cast<int>(layers.back().weight.rows());
}

VectorXd MLP::forward(const VectorXd& in) const
{
    Cache cache;
    return forward_cached(in, cache);
}

VectorXd MLP::forward_cached(const VectorXd& in, Cache& cache) const
{
    cache.activations.clear();
    cache.activations.reserve(layers.size() + 1);
    cache.activations.push_back(in);
    VectorXd x = in;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        VectorXd z = layers[l].weight * x + layers[l].bias;
        if (l + 1 == layers.size()) {
            x = z.unaryExpr([](double v) { return sigmoid(v); });
        } else {
            x = z.cwiseMax(0.0);
        }
        cache.activations.push_back(x);
    }
    return x;
}

VectorXd MLP::backward(const Cache& cache, const VectorXd& d_out,
                       MLP& grad) const
{
    if (cache.activations.size() != layers.size() + 1) {
        throw std::logic_error("MLP::backward: cache does not match network");
    }
    VectorXd delta = d_out;
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        const VectorXd& post = cache.activations[l + 1];
        if (l + 1 == static_cast<int>(layers.size())) {
            // sigmoid'(z) from the post-activation value
            delta = delta.cwiseProduct(
                    post.cwiseProduct(VectorXd::Ones(post.size()) - post));
        } else {
            delta = delta.cwiseProduct(
                    post.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        }
        grad.layers[l].weight += delta * cache.activations[l].transpose();
        grad.layers[l].bias += delta;
        delta = layers[l].weight.transpose() * delta;
    }
    return delta;
}

MLP MLP::glorot(const std::vector<int>& dims, std::mt19937_64& rng)
{
    if (dims.size() < 2) {
        throw std::invalid_argument("MLP::glorot: need at least two dims");
    }
    MLP net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Layer layer;
        layer.weight = MatrixXd::NullaryExpr(
                fan_out, fan_in, [&]() { return dist(rng); });
        // Zero biases keep sigmoid outputs near 0.5 at init, away from the
        // saturated region where gradients vanish.
        layer.bias = VectorXd::Zero(fan_out);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

MLP MLP::zeros_like(const MLP& other)
{
    MLP net;
    for (const auto& layer : other.layers) {
        net.layers.push_back({MatrixXd::Zero(layer.weight.rows(),
                                             layer.weight.cols()),
                              VectorXd::Zero(layer.bias.size())});
    }
    return net;
}

int MLP::n_params() const
{
    int n = 0;
    for (const auto& layer : layers) {
        n += static_cast<int>(layer.weight.size() + layer.bias.size());
    }
    return n;
}

void MLP::flatten(double* out) const
{
    for (const auto& layer : layers) {
        std::memcpy(out, layer.weight.data(),
                    sizeof(double) * layer.weight.size());
        out += layer.weight.size();
        std::memcpy(out, layer.bias.data(), sizeof(double) * layer.bias.size());
        out += layer.bias.size();
    }
}

void MLP::unflatten(const double* in)
{
    for (auto& layer : layers) {
        std::memcpy(layer.weight.data(), in,
                    sizeof(double) * layer.weight.size());
        in += layer.weight.size();
        std::memcpy(layer.bias.data(), in, sizeof(double) * layer.bias.size());
        in += layer.bias.size();
    }
}

void MLP::add_scaled(const MLP& other, double scale)
{
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weight += scale * other.layers[l].weight;
        layers[l].bias += scale * other.layers[l].bias;
    }
}

SplineBasis::SplineBasis(int n_knots) : n_knots_(n_knots)
{
    if (n_knots < 1) {
        throw std::invalid_argument("SplineBasis: need at least one knot");
    }
    if (n_knots == 1) {
        second_deriv_map_ = MatrixXd::Zero(1, 1);
        return;
    }
    const int k = n_knots;
    const double h = 1.0 / (k - 1);
    MatrixXd a = MatrixXd::Zero(k, k);
    MatrixXd rhs = MatrixXd::Zero(k, k);
    a(0, 0) = 1.0;
    a(k - 1, k - 1) = 1.0;
    for (int i = 1; i + 1 < k; ++i) {
        a(i, i - 1) = h / 6.0;
        a(i, i) = 2.0 * h / 3.0;
        a(i, i + 1) = h / 6.0;
        rhs(i, i - 1) = 1.0 / h;
        rhs(i, i) = -2.0 / h;
        rhs(i, i + 1) = 1.0 / h;
    }
    second_deriv_map_ = a.partialPivLu().solve(rhs);
}

VectorXd SplineBasis::weights(double u) const
{
    if (n_knots_ == 1) {
        return VectorXd::Ones(1);
    }
    if (u < -1e-12 || u > 1.0 + 1e-12) {
        throw std::out_of_range("SplineBasis: abscissa outside [0, 1]");
    }
    u = std::clamp(u, 0.0, 1.0);
    const int k = n_knots_;
    const double h = 1.0 / (k - 1);
    const int seg = std::min(static_cast<int>(u / h), k - 2);
    const double a = ((seg + 1) * h - u) / h;
    const double b = 1.0 - a;
    VectorXd w = VectorXd::Zero(k);
    w(seg) += a;
    w(seg + 1) += b;
    const double ca = (a * a * a - a) * h * h / 6.0;
    const double cb = (b * b * b - b) * h * h / 6.0;
    w += ca * second_deriv_map_.row(seg).transpose();
    w += cb * second_deriv_map_.row(seg + 1).transpose();
    return w;
}

MatrixXd SplineBasis::weight_matrix(const std::vector<double>& us) const
{
    MatrixXd w(us.size(), n_knots_);
    for (std::size_t i = 0; i < us.size(); ++i) {
        w.row(i) = weights(us[i]).transpose();
    }
    return w;
}

double waveform(const PulseSpec& spec, const SplineBasis& basis, double t)
{
    if (t < 0.0 || t > spec.duration) {
        throw std::out_of_range("waveform: t outside [0, duration]");
    }
    if (static_cast<int>(spec.knots.size()) != basis.n_knots()) {
        throw std::invalid_argument("waveform: knot count mismatch");
    }
    const double u = (spec.duration > 0.0) ? t / spec.duration : 0.0;
    const VectorXd w = basis.weights(u);
    double value = 0.0;
    for (int i = 0; i < basis.n_knots(); ++i) {
        value += w(i) * spec.knots[i];
    }
    return value;
}

ChainedNetwork ChainedNetwork::create(int gate_k,
                                      const std::array<int, 4>& arch,
                                      int n_knots, double t_bound,
                                      std::uint64_t seed, bool correction_head)
{
    const auto [ml_t, mn_t, ml_c, mn_c] = arch;
    if (ml_t < 2 || ml_c < 2 || mn_t < 1 || mn_c < 1) {
        throw std::invalid_argument("ChainedNetwork: bad architecture tuple");
    }
    ChainedNetwork net;
    net.gate_k = gate_k;
    net.n_knots = n_knots;
    net.t_bound = t_bound;
    net.correction_head = correction_head;

    std::mt19937_64 rng(seed);
    std::vector<int> dims_t(ml_t, mn_t);
    dims_t.front() = 1;
    dims_t.back() = 1;
    std::vector<int> dims_c(ml_c, mn_c);
    dims_c.front() = 2;
    dims_c.back() = n_knots + (correction_head ? 1 : 0);
    net.n_t = MLP::glorot(dims_t, rng);
    net.n_c = MLP::glorot(dims_c, rng);
    // bias the duration head long: short initial pulses start optimization
    // inside the near-identity basin, which gradient descent cannot leave
    net.n_t.layers.back().bias(0) = 1.5;
    return net;
}

std::array<int, 4> ChainedNetwork::arch() const
{
    const int mn_t = n_t.layers.size() > 1
            ? static_cast<int>(n_t.layers.front().weight.rows())
            : 1;
    const int mn_c = n_c.layers.size() > 1
            ? static_cast<int>(n_c.layers.front().weight.rows())
            : 1;
    return {n_t.n_layer_count(), mn_t, n_c.n_layer_count(), mn_c};
}

PulseSpec ChainedNetwork::forward(double phi) const
{
    ForwardCache cache;
    return forward_cached(phi, cache);
}

PulseSpec ChainedNetwork::forward_cached(double phi, ForwardCache& cache) const
{
    if (!(phi > 0.0) || phi > M_PI) {
        throw std::domain_error("ChainedNetwork::forward: phi outside (0, pi]");
    }
    VectorXd in_t(1);
    in_t << phi;
    cache.y_t = n_t.forward_cached(in_t, cache.t_cache)(0);

    PulseSpec spec;
    spec.phi = phi;
    spec.duration = t_bound * cache.y_t;

    VectorXd in_c(2);
    in_c << phi, spec.duration;
    cache.y_c = n_c.forward_cached(in_c, cache.c_cache);

    spec.knots.resize(n_knots);
    for (int i = 0; i < n_knots; ++i) {
        spec.knots[i] = delta_bound * (2.0 * cache.y_c(i) - 1.0);
    }
    spec.theta_c = correction_head
            ? M_PI * (2.0 * cache.y_c(n_knots) - 1.0)
            : 0.0;
    return spec;
}

ChainedNetwork::Gradient ChainedNetwork::zero_gradient() const
{
    return {MLP::zeros_like(n_t), MLP::zeros_like(n_c)};
}

void ChainedNetwork::backward(const ForwardCache& cache, double d_duration,
                              const std::vector<double>& d_knots,
                              double d_theta_c, Gradient& grad) const
{
    VectorXd d_y_c = VectorXd::Zero(n_c.output_dim());
    for (int i = 0; i < n_knots; ++i) {
        d_y_c(i) = 2.0 * delta_bound * d_knots[i];
    }
    if (correction_head) {
        d_y_c(n_knots) = 2.0 * M_PI * d_theta_c;
    }
    const VectorXd d_in_c = n_c.backward(cache.c_cache, d_y_c, grad.d_n_c);

    // duration feeds both the evolution and N_C's second input
    const double d_t_total = d_duration + d_in_c(1);
    VectorXd d_y_t(1);
    d_y_t << t_bound * d_t_total;
    n_t.backward(cache.t_cache, d_y_t, grad.d_n_t);
}

int ChainedNetwork::n_params() const
{
    return n_t.n_params() + n_c.n_params();
}

VectorXd ChainedNetwork::flatten() const
{
    VectorXd params(n_params());
    n_t.flatten(params.data());
    n_c.flatten(params.data() + n_t.n_params());
    return params;
}

void ChainedNetwork::unflatten(const VectorXd& params)
{
    if (params.size() != n_params()) {
        throw std::invalid_argument("ChainedNetwork::unflatten: size mismatch");
    }
    n_t.unflatten(params.data());
    n_c.unflatten(params.data() + n_t.n_params());
}

namespace {

constexpr char kMagic[4] = {'R', 'Y', 'D', 'W'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "weights container assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& os, const T& value)
{
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is)
{
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) {
        throw std::runtime_error("weights file: truncated payload");
    }
    return value;
}

void write_mlp(std::ostream& os, const MLP& net)
{
    write_pod(os, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& layer : net.layers) {
        write_pod(os, static_cast<std::uint32_t>(layer.weight.rows()));
        write_pod(os, static_cast<std::uint32_t>(layer.weight.cols()));
        os.write(reinterpret_cast<const char*>(layer.weight.data()),
                 sizeof(double) * layer.weight.size());
        os.write(reinterpret_cast<const char*>(layer.bias.data()),
                 sizeof(double) * layer.bias.size());
    }
}

MLP read_mlp(std::istream& is)
{
    MLP net;
    const auto n_layers = read_pod<std::uint32_t>(is);
    if (n_layers == 0 || n_layers > 1024) {
        throw std::runtime_error("weights file: implausible layer count");
    }
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        const auto rows = read_pod<std::uint32_t>(is);
        const auto cols = read_pod<std::uint32_t>(is);
        if (rows == 0 || cols == 0 || rows > 100000 || cols > 100000) {
            throw std::runtime_error("weights file: implausible layer shape");
        }
        MLP::Layer layer;
        layer.weight.resize(rows, cols);
        layer.bias.resize(rows);
        is.read(reinterpret_cast<char*>(layer.weight.data()),
                sizeof(double) * layer.weight.size());
        is.read(reinterpret_cast<char*>(layer.bias.data()),
                sizeof(double) * layer.bias.size());
        if (!is) {
            throw std::runtime_error("weights file: truncated payload");
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace

void save_network(const ChainedNetwork& net, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("save_network: cannot open " + path);
    }
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint32_t>(net.gate_k));
    write_pod(os, net.phi_lo);
    write_pod(os, net.phi_hi);
    const auto arch = net.arch();
    for (int v : arch) {
        write_pod(os, static_cast<std::uint32_t>(v));
    }
    write_pod(os, static_cast<std::uint32_t>(net.n_knots));
    write_pod(os, net.delta_bound);
    write_pod(os, net.t_bound);
    write_pod(os, static_cast<std::uint8_t>(net.correction_head ? 1 : 0));
    write_mlp(os, net.n_t);
    write_mlp(os, net.n_c);
    if (!os) {
        throw std::runtime_error("save_network: write failed for " + path);
    }

    nlohmann::json manifest = {
            {"format_version", kVersion},
            {"gate_k", net.gate_k},
            {"interval", {net.phi_lo, net.phi_hi}},
            {"arch", arch},
            {"n_knots", net.n_knots},
            {"delta_bound", net.delta_bound},
            {"t_bound", net.t_bound},
            {"correction_head", net.correction_head},
    };
    std::ofstream ms(path + ".manifest.json");
    ms << manifest.dump(2) << "\n";
}

ChainedNetwork load_network(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("load_network: cannot open " + path);
    }
    char magic[4];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("load_network: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion) {
        throw std::runtime_error("load_network: unsupported format version " +
                                 std::to_string(version));
    }
    ChainedNetwork net;
    net.gate_k = static_cast<int>(read_pod<std::uint32_t>(is));
    net.phi_lo = read_pod<double>(is);
    net.phi_hi = read_pod<double>(is);
    std::array<int, 4> arch{};
    for (int& v : arch) {
        v = static_cast<int>(read_pod<std::uint32_t>(is));
    }
    net.n_knots = static_cast<int>(read_pod<std::uint32_t>(is));
    net.delta_bound = read_pod<double>(is);
    net.t_bound = read_pod<double>(is);
    net.correction_head = read_pod<std::uint8_t>(is) != 0;
    net.n_t = read_mlp(is);
    net.n_c = read_mlp(is);
    if (net.arch() != arch) {
        throw std::runtime_error("load_network: arch tuple does not match "
                                 "stored layers in " + path);
    }
    return net;
}

}  // namespace rydopt
