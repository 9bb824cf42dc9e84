#include "rydopt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "rydopt/propagator.hpp"

namespace rydopt {

namespace fs = std::filesystem;

double default_t_bound(int gate_k)
{
    switch (gate_k) {
    case 1:
        return 1.2 * kTimeOptimalC1Z;
    case 2:
        return 1.2 * kTimeOptimalC2Z;
    default:
        throw std::invalid_argument("default_t_bound: k must be 1 or 2");
    }
}

void AdamState::update(VectorXd& params, const VectorXd& grad, double lr)
{
    if (grad.size() != params.size() || m.size() != params.size()) {
        throw std::invalid_argument("AdamState::update: shape mismatch");
    }
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1, step);
    const double bc2 = 1.0 - std::pow(beta2, step);
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double mh = m(i) / bc1;
        const double vh = v(i) / bc2;
        params(i) -= lr * mh / (std::sqrt(vh) + eps);
    }
}

bool TrainRun::all_converged() const
{
    for (const auto& r : results) {
        if (r.status != TrainStatus::Converged) {
            return false;
        }
    }
    return true;
}

std::vector<double> sample_angles(double lo, double hi, int m,
                                  std::mt19937_64& rng)
{
    if (m < 1) {
        throw std::invalid_argument("sample_angles: need m >= 1");
    }
    if (!(hi > lo)) {
        throw std::invalid_argument("sample_angles: degenerate interval");
    }
    // uniform on (lo, hi]: mirror [lo, hi) draws
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> phis(m);
    for (auto& phi : phis) {
        phi = hi + lo - dist(rng);
    }
    return phis;
}

std::vector<std::pair<double, double>> uniform_intervals(int n)
{
    if (n < 1) {
        throw std::invalid_argument("uniform_intervals: n >= 1 required");
    }
    std::vector<std::pair<double, double>> parts(n);
    for (int i = 0; i < n; ++i) {
        parts[i] = {M_PI * i / n, M_PI * (i + 1) / n};
    }
    return parts;
}

namespace {

struct SampleEval {
    double j = 1.0;
    double duration = 0.0;
};

int resolve_threads(int n_threads)
{
    if (n_threads > 0) {
        return n_threads;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Loss and gradient of 1 - F (+ mu T) for one angle, accumulated into the
// caller's gradient buffer. Shared by the family trainer; the fixed-angle
// oracle repeats the same chain without the network layer.
SampleEval eval_sample(const ChainedNetwork& net, const SplineBasis& basis,
                       const AffineHamiltonian& ham, double phi, double mu,
                       int n_steps_cfg, ChainedNetwork::Gradient& grad)
{
    ChainedNetwork::ForwardCache cache;
    const PulseSpec pulse = net.forward_cached(phi, cache);
    const int n_steps = n_steps_cfg > 0 ? n_steps_cfg
                                        : default_n_steps(pulse.duration);

    std::vector<double> us(n_steps);
    for (int s = 0; s < n_steps; ++s) {
        us[s] = (s + 0.5) / n_steps;
    }
    const MatrixXd w = basis.weight_matrix(us);
    const Eigen::Map<const VectorXd> knots(pulse.knots.data(),
                                           pulse.knots.size());
    const VectorXd deltas_vec = w * knots;
    const std::vector<double> deltas(deltas_vec.data(),
                                     deltas_vec.data() + n_steps);

    const auto prop = evolve_affine(ham, deltas, pulse.duration, true);
    const GateTarget target{net.gate_k, phi};
    const auto seed = infidelity_seed(prop.final_unitary, target,
                                      pulse.theta_c);

    const auto evo_grad = evolve_backprop(*prop.tape, seed.u_bar);
    const Eigen::Map<const VectorXd> d_deltas(evo_grad.d_deltas.data(),
                                              n_steps);
    const VectorXd d_knots_vec = w.transpose() * d_deltas;
    const std::vector<double> d_knots(d_knots_vec.data(),
                                      d_knots_vec.data() + d_knots_vec.size());
    const double d_duration = evo_grad.d_duration + mu;
    net.backward(cache, d_duration, d_knots, seed.d_theta_c, grad);

    return {1.0 - seed.fidelity, pulse.duration};
}

VectorXd flatten_gradient(const ChainedNetwork& net,
                          const ChainedNetwork::Gradient& grad)
{
    VectorXd flat(net.n_params());
    grad.d_n_t.flatten(flat.data());
    grad.d_n_c.flatten(flat.data() + grad.d_n_t.n_params());
    return flat;
}

void atomic_save(const ChainedNetwork& net, const fs::path& path)
{
    const fs::path tmp = path.string() + ".tmp";
    save_network(net, tmp.string());
    fs::rename(tmp, path);
    fs::rename(tmp.string() + ".manifest.json",
               path.string() + ".manifest.json");
}

void save_adam(const AdamState& adam, int iter, const fs::path& path)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        const std::int64_t n = adam.m.size();
        os.write(reinterpret_cast<const char*>(&iter), sizeof(iter));
        os.write(reinterpret_cast<const char*>(&adam.step), sizeof(adam.step));
        os.write(reinterpret_cast<const char*>(&n), sizeof(n));
        os.write(reinterpret_cast<const char*>(adam.m.data()),
                 sizeof(double) * n);
        os.write(reinterpret_cast<const char*>(adam.v.data()),
                 sizeof(double) * n);
    }
    fs::rename(tmp, path);
}

bool load_adam(AdamState& adam, int& iter, const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        return false;
    }
    std::int64_t n = 0;
    is.read(reinterpret_cast<char*>(&iter), sizeof(iter));
    is.read(reinterpret_cast<char*>(&adam.step), sizeof(adam.step));
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!is || n != adam.m.size()) {
        return false;
    }
    is.read(reinterpret_cast<char*>(adam.m.data()), sizeof(double) * n);
    is.read(reinterpret_cast<char*>(adam.v.data()), sizeof(double) * n);
    return static_cast<bool>(is);
}

double window_mean(const std::vector<double>& xs, std::size_t begin,
                   std::size_t count)
{
    return std::accumulate(xs.begin() + begin, xs.begin() + begin + count,
                           0.0) / count;
}

}  // namespace

BatchEval batch_loss_grad(const ChainedNetwork& net,
                          const std::vector<double>& phis,
                          const AtomSystem& sys, double mu, int n_steps,
                          int n_threads)
{
    const int m = static_cast<int>(phis.size());
    if (m == 0) {
        throw std::invalid_argument("batch_loss_grad: empty batch");
    }
    const SplineBasis basis(net.n_knots);
    const AffineHamiltonian ham = affine_hamiltonian(sys);

    const int workers = std::min(resolve_threads(n_threads), m);
    std::vector<ChainedNetwork::Gradient> partial_grads;
    partial_grads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        partial_grads.push_back(net.zero_gradient());
    }
    std::vector<SampleEval> evals(m);
    std::vector<std::string> errors(workers);

    // Contiguous chunks per worker; each chunk accumulates in sample order
    // and the chunk partials are reduced in index order below.
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            const int lo = m * w / workers;
            const int hi = m * (w + 1) / workers;
            try {
                for (int i = lo; i < hi; ++i) {
                    evals[i] = eval_sample(net, basis, ham, phis[i], mu,
                                           n_steps, partial_grads[w]);
                }
            } catch (const std::exception& e) {
                errors[w] = e.what();
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    for (const auto& err : errors) {
        if (!err.empty()) {
            throw std::runtime_error("batch_loss_grad: " + err);
        }
    }

    BatchEval out;
    for (const auto& e : evals) {
        out.j += e.j;
        out.mean_duration += e.duration;
    }
    out.j /= m;
    out.mean_duration /= m;
    out.j_opt = out.j + mu * out.mean_duration;

    auto total = net.zero_gradient();
    for (const auto& partial : partial_grads) {
        total.d_n_t.add_scaled(partial.d_n_t, 1.0);
        total.d_n_c.add_scaled(partial.d_n_c, 1.0);
    }
    out.grad = flatten_gradient(net, total) / static_cast<double>(m);
    return out;
}

IntervalResult train_interval(ChainedNetwork& net,
                              std::pair<double, double> interval,
                              const TrainConfig& cfg, const AtomSystem& sys)
{
    IntervalResult result;
    const auto t0 = std::chrono::steady_clock::now();

    // per-interval stream decorrelated from the family seed
    const auto interval_tag = static_cast<std::uint64_t>(
            std::llround(interval.second * 1e9));
    std::mt19937_64 rng(cfg.seed ^ (interval_tag * 0x9e3779b97f4a7c15ull));

    VectorXd params = net.flatten();
    AdamState adam(static_cast<int>(params.size()));
    double lr = cfg.learning_rate;
    bool mu_enabled = cfg.mu_anneal_below <= 0.0;
    int plateau_count = 0;
    int start_iter = 0;

    fs::path weights_path;
    fs::path adam_path;
    if (!cfg.checkpoint_dir.empty()) {
        fs::create_directories(cfg.checkpoint_dir);
        char tag[64];
        std::snprintf(tag, sizeof(tag), "phi_%.6f_%.6f", interval.first,
                      interval.second);
        weights_path = fs::path(cfg.checkpoint_dir) /
                (std::string("ckpt_") + tag + ".weights");
        adam_path = fs::path(cfg.checkpoint_dir) /
                (std::string("ckpt_") + tag + ".adam");
        if (fs::exists(weights_path) && load_adam(adam, start_iter, adam_path)) {
            net = load_network(weights_path.string());
            params = net.flatten();
        }
    }

    VectorXd last_good = params;
    std::vector<double> j_opt_history;

    for (int iter = start_iter; iter < cfg.max_iters; ++iter) {
        const auto phis = sample_angles(interval.first, interval.second,
                                        cfg.batch_m, rng);
        net.unflatten(params);
        const double mu_eff = mu_enabled ? cfg.mu : 0.0;
        BatchEval batch;
        try {
            batch = batch_loss_grad(net, phis, sys, mu_eff, cfg.n_steps,
                                    cfg.n_threads);
        } catch (const std::runtime_error&) {
            // non-finite controls; restore the last good weights and stop
            params = last_good;
            net.unflatten(params);
            result.status = TrainStatus::Diverged;
            return result;
        }
        const double wall = std::chrono::duration<double>(
                std::chrono::steady_clock::now() - t0).count();
        result.trace.push_back(
                {iter, batch.j, batch.j_opt, batch.mean_duration, wall});

        if (!std::isfinite(batch.j_opt)) {
            params = last_good;
            net.unflatten(params);
            result.status = TrainStatus::Diverged;
            return result;
        }
        last_good = params;
        if (!mu_enabled && batch.j < cfg.mu_anneal_below) {
            mu_enabled = true;
        }

        adam.update(params, batch.grad, lr);
        j_opt_history.push_back(batch.j_opt);

        if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
            (iter + 1) % cfg.checkpoint_every == 0) {
            net.unflatten(params);
            atomic_save(net, weights_path);
            save_adam(adam, iter + 1, adam_path);
        }

        const std::size_t w = static_cast<std::size_t>(cfg.plateau_window);
        if (j_opt_history.size() >= 2 * w && j_opt_history.size() % w == 0) {
            const double prev =
                    window_mean(j_opt_history, j_opt_history.size() - 2 * w, w);
            const double now =
                    window_mean(j_opt_history, j_opt_history.size() - w, w);
            const double rel = (prev - now) / std::max(std::abs(prev), 1e-300);
            if (rel < cfg.plateau_threshold) {
                ++plateau_count;
                if (plateau_count >= 2) {
                    net.unflatten(params);
                    result.status = TrainStatus::Converged;
                    return result;
                }
                lr *= 0.5;
            }
        }
    }
    net.unflatten(params);
    result.status = TrainStatus::MaxIters;
    return result;
}

TrainRun train_family(int gate_k, const TrainConfig& cfg,
                      const AtomSystem& sys)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto intervals = uniform_intervals(cfg.n_intervals);
    const double t_bound =
            cfg.t_bound > 0.0 ? cfg.t_bound : default_t_bound(gate_k);

    TrainRun run;
    run.seed = cfg.seed;
    run.nets.resize(intervals.size());
    run.results.resize(intervals.size());

    // The interval containing pi trains from random initialization; each
    // lower interval warm-starts from its converged upper neighbor.
    const int first = static_cast<int>(intervals.size()) - 1;
    for (int i = first; i >= 0; --i) {
        ChainedNetwork net;
        if (i == first) {
            net = ChainedNetwork::create(gate_k, cfg.arch, cfg.n_knots,
                                         t_bound, cfg.seed);
        } else {
            net = run.nets[i + 1];  // warm start
        }
        net.phi_lo = intervals[i].first;
        net.phi_hi = intervals[i].second;
        run.results[i] = train_interval(net, intervals[i], cfg, sys);
        run.nets[i] = std::move(net);
        run.stage_log.push_back(
                "interval [" + std::to_string(intervals[i].first) + ", " +
                std::to_string(intervals[i].second) + "] status " +
                std::to_string(static_cast<int>(run.results[i].status)));
    }
    run.wall_seconds = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - t0).count();
    return run;
}

TrainRun two_stage_blockade(const TrainConfig& cfg, const AtomSystem& sys)
{
    if (sys.n_atoms != 3) {
        throw std::invalid_argument("two_stage_blockade: requires 3 atoms");
    }
    const auto t0 = std::chrono::steady_clock::now();

    AtomSystem stage1_sys = sys;
    stage1_sys.blockade_b = kInfiniteBlockade;
    TrainRun run = train_family(2, cfg, stage1_sys);
    run.stage_log.push_back("stage 1 (perfect blockade) complete");

    AtomSystem stage2_sys = sys;
    stage2_sys.blockade_b = cfg.eval_b;
    TrainConfig stage2_cfg = cfg;
    if (!cfg.checkpoint_dir.empty()) {
        stage2_cfg.checkpoint_dir = cfg.checkpoint_dir + "/stage2";
    }
    for (std::size_t i = 0; i < run.nets.size(); ++i) {
        const auto interval = std::make_pair(run.nets[i].phi_lo,
                                             run.nets[i].phi_hi);
        run.results[i] = train_interval(run.nets[i], interval, stage2_cfg,
                                        stage2_sys);
    }
    run.stage_log.push_back("stage 2 (finite blockade) complete");
    run.wall_seconds = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - t0).count();
    return run;
}

namespace {

// Inverse of the sigmoid squashing, clamped away from the saturated ends.
double logit_of(double y)
{
    const double x = std::clamp(y, 1e-9, 1.0 - 1e-9);
    return std::log(x / (1.0 - x));
}

}  // namespace

FixedAngleResult fixed_angle_optimize(int gate_k, double phi, int n_knots,
                                      const TrainConfig& cfg,
                                      const AtomSystem& sys,
                                      const PulseSpec* warm_start)
{
    if (!(phi > 0.0) || phi > M_PI) {
        throw std::domain_error("fixed_angle_optimize: phi outside (0, pi]");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const double t_bound =
            cfg.t_bound > 0.0 ? cfg.t_bound : default_t_bound(gate_k);
    const double delta_bound = 2.5 * sys.omega_max;
    const SplineBasis basis(n_knots);
    const AffineHamiltonian ham = affine_hamiltonian(sys);
    const GateTarget target{gate_k, phi};

    // parameters: [raw_T, raw_theta_c, raw knots...], all sigmoid-squashed
    // onto the same bounds the network ansatz uses
    std::mt19937_64 rng(cfg.seed + 1);
    std::uniform_real_distribution<double> init(-0.3, 0.3);
    VectorXd p = VectorXd::Zero(n_knots + 2);
    // start near the duration bound: short pulses sit in the near-identity
    // basin (F = 1/2 for C1Z), which gradient descent cannot leave
    p(0) = 1.5;
    for (int i = 2; i < p.size(); ++i) {
        p(i) = init(rng);
    }
    if (warm_start != nullptr) {
        if (static_cast<int>(warm_start->knots.size()) != n_knots) {
            throw std::invalid_argument(
                    "fixed_angle_optimize: warm start knot count mismatch");
        }
        p(0) = logit_of(warm_start->duration / t_bound);
        p(1) = logit_of(0.5 * (warm_start->theta_c / M_PI + 1.0));
        for (int i = 0; i < n_knots; ++i) {
            p(i + 2) = logit_of(
                    0.5 * (warm_start->knots[i] / delta_bound + 1.0));
        }
    }

    auto to_pulse = [&](const VectorXd& raw) {
        PulseSpec pulse;
        pulse.phi = phi;
        pulse.duration = t_bound * sigmoid(raw(0));
        pulse.theta_c = M_PI * (2.0 * sigmoid(raw(1)) - 1.0);
        pulse.knots.resize(n_knots);
        for (int i = 0; i < n_knots; ++i) {
            pulse.knots[i] = delta_bound * (2.0 * sigmoid(raw(i + 2)) - 1.0);
        }
        return pulse;
    };

    AdamState adam(static_cast<int>(p.size()));
    double lr = cfg.learning_rate;
    bool mu_enabled = cfg.mu_anneal_below <= 0.0;
    int plateau_count = 0;
    std::vector<double> history;

    FixedAngleResult result;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const PulseSpec pulse = to_pulse(p);
        const int n_steps = cfg.n_steps > 0
                ? cfg.n_steps
                : default_n_steps(pulse.duration);
        std::vector<double> us(n_steps);
        for (int s = 0; s < n_steps; ++s) {
            us[s] = (s + 0.5) / n_steps;
        }
        const MatrixXd w = basis.weight_matrix(us);
        const Eigen::Map<const VectorXd> knots(pulse.knots.data(), n_knots);
        const VectorXd deltas_vec = w * knots;
        const std::vector<double> deltas(deltas_vec.data(),
                                         deltas_vec.data() + n_steps);
        const auto prop = evolve_affine(ham, deltas, pulse.duration, true);
        const auto seed = infidelity_seed(prop.final_unitary, target,
                                          pulse.theta_c);
        const double mu_eff = mu_enabled ? cfg.mu : 0.0;
        const double j = 1.0 - seed.fidelity;
        const double j_opt = j + mu_eff * pulse.duration;
        const double wall = std::chrono::duration<double>(
                std::chrono::steady_clock::now() - t0).count();
        result.trace.push_back({iter, j, j_opt, pulse.duration, wall});
        if (!std::isfinite(j_opt)) {
            result.status = TrainStatus::Diverged;
            break;
        }
        if (!mu_enabled && j < cfg.mu_anneal_below) {
            mu_enabled = true;
        }

        const auto evo_grad = evolve_backprop(*prop.tape, seed.u_bar);
        const Eigen::Map<const VectorXd> d_deltas(evo_grad.d_deltas.data(),
                                                  n_steps);
        const VectorXd d_knots = w.transpose() * d_deltas;

        VectorXd grad(p.size());
        const double y_t = sigmoid(p(0));
        grad(0) = (evo_grad.d_duration + mu_eff) * t_bound * y_t * (1.0 - y_t);
        const double y_th = sigmoid(p(1));
        grad(1) = seed.d_theta_c * 2.0 * M_PI * y_th * (1.0 - y_th);
        for (int i = 0; i < n_knots; ++i) {
            const double y = sigmoid(p(i + 2));
            grad(i + 2) = d_knots(i) * 2.0 * delta_bound * y * (1.0 - y);
        }
        adam.update(p, grad, lr);
        history.push_back(j_opt);

        const std::size_t win = static_cast<std::size_t>(cfg.plateau_window);
        if (history.size() >= 2 * win && history.size() % win == 0) {
            const double prev =
                    window_mean(history, history.size() - 2 * win, win);
            const double now = window_mean(history, history.size() - win, win);
            if ((prev - now) / std::max(std::abs(prev), 1e-300) <
                cfg.plateau_threshold) {
                ++plateau_count;
                if (plateau_count >= 2) {
                    result.status = TrainStatus::Converged;
                    break;
                }
                lr *= 0.5;
            }
        }
    }

    result.pulse = to_pulse(p);
    const int n_steps = cfg.n_steps > 0
            ? cfg.n_steps
            : default_n_steps(result.pulse.duration);
    std::vector<double> us(n_steps);
    for (int s = 0; s < n_steps; ++s) {
        us[s] = (s + 0.5) / n_steps;
    }
    const MatrixXd w = basis.weight_matrix(us);
    const Eigen::Map<const VectorXd> knots(result.pulse.knots.data(), n_knots);
    const VectorXd deltas_vec = w * knots;
    const std::vector<double> deltas(deltas_vec.data(),
                                     deltas_vec.data() + n_steps);
    const auto prop = evolve_affine(ham, deltas, result.pulse.duration);
    result.fidelity = gate_fidelity(prop.final_unitary, target,
                                    result.pulse.theta_c);
    return result;
}

}  // namespace rydopt
