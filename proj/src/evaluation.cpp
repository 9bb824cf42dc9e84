#include "rydopt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace rydopt {

namespace {

const ChainedNetwork* covering_net(const std::vector<ChainedNetwork>& nets,
                                   double phi)
{
    for (const auto& net : nets) {
        if (phi > net.phi_lo && phi <= net.phi_hi) {
            return &net;
        }
    }
    return nullptr;
}

double mean_of(const std::vector<EvalRecord>& records,
               double EvalRecord::* field)
{
    double sum = 0.0;
    for (const auto& r : records) {
        sum += r.*field;
    }
    return sum / records.size();
}

}  // namespace

EvalReport evaluate_family(const std::vector<ChainedNetwork>& nets,
                           const AtomSystem& sys, int n_samples,
                           std::uint64_t seed, int n_steps, int n_threads)
{
    if (nets.empty()) {
        throw std::invalid_argument("evaluate_family: no networks");
    }
    if (n_samples < 1) {
        throw std::invalid_argument("evaluate_family: need >= 1 sample");
    }
    std::mt19937_64 rng(seed);
    const auto phis = sample_angles(0.0, M_PI, n_samples, rng);
    for (double phi : phis) {
        if (covering_net(nets, phi) == nullptr) {
            throw std::runtime_error(
                    "evaluate_family: no network covers phi = " +
                    std::to_string(phi));
        }
    }
    const int gate_k = nets.front().gate_k;
    const SplineBasis basis(nets.front().n_knots);

    EvalReport report;
    report.records.resize(n_samples);
    int workers = n_threads > 0
            ? n_threads
            : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_samples);
    std::vector<std::thread> threads;
    std::vector<std::string> errors(workers);
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            try {
                for (int i = w; i < n_samples; i += workers) {
                    const auto* net = covering_net(nets, phis[i]);
                    const PulseSpec pulse = net->forward(phis[i]);
                    const auto fr = infidelity_decomposition(pulse, basis, sys,
                                                             gate_k, n_steps);
                    report.records[i] = {phis[i],        pulse.duration,
                                         fr.infid_total, fr.infid_decay,
                                         fr.infid_blockade, fr.infid_haar,
                                         fr.theta_c_used};
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
            throw std::runtime_error("evaluate_family: " + err);
        }
    }

    report.mean_infid_total = mean_of(report.records, &EvalRecord::infid_total);
    report.mean_infid_decay = mean_of(report.records, &EvalRecord::infid_decay);
    report.mean_infid_blockade =
            mean_of(report.records, &EvalRecord::infid_blockade);
    report.mean_infid_haar = mean_of(report.records, &EvalRecord::infid_haar);
    report.mean_duration = mean_of(report.records, &EvalRecord::duration);
    return report;
}

double fit_predict(const FitResult& fit, double phi)
{
    if (fit.model == FitModel::Arcsinh) {
        return fit.params[0] * std::asinh(fit.params[1] * phi);
    }
    return fit.params[0] * phi * phi + fit.params[1] * phi + fit.params[2];
}

namespace {

double sum_sq_residuals(const std::vector<double>& phis,
                        const std::vector<double>& times, const FitResult& fit)
{
    double ss = 0.0;
    for (std::size_t i = 0; i < phis.size(); ++i) {
        const double r = times[i] - fit_predict(fit, phis[i]);
        ss += r * r;
    }
    return ss;
}

void finish_fit(const std::vector<double>& phis,
                const std::vector<double>& times, FitResult& fit)
{
    const double ss_res = sum_sq_residuals(phis, times, fit);
    double mean = 0.0;
    for (double t : times) {
        mean += t;
    }
    mean /= times.size();
    double ss_tot = 0.0;
    for (double t : times) {
        ss_tot += (t - mean) * (t - mean);
    }
    fit.residual_norm = std::sqrt(ss_res);
    fit.r_squared = ss_tot > 1e-30 ? 1.0 - ss_res / ss_tot
                                   : (ss_res < 1e-20 ? 1.0 : 0.0);
}

FitResult fit_poly2(const std::vector<double>& phis,
                    const std::vector<double>& times)
{
    const int n = static_cast<int>(phis.size());
    MatrixXd design(n, 3);
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        design(i, 0) = phis[i] * phis[i];
        design(i, 1) = phis[i];
        design(i, 2) = 1.0;
        y(i) = times[i];
    }
    const VectorXd coef =
            (design.transpose() * design).ldlt().solve(design.transpose() * y);
    FitResult fit;
    fit.model = FitModel::Poly2;
    fit.params = {coef(0), coef(1), coef(2)};
    finish_fit(phis, times, fit);
    return fit;
}

FitResult fit_arcsinh(const std::vector<double>& phis,
                      const std::vector<double>& times)
{
    const int n = static_cast<int>(phis.size());
    // coarse b scan with the conditionally optimal linear a, then LM
    auto best_a_for = [&](double b) {
        double num = 0.0;
        double den = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = std::asinh(b * phis[i]);
            num += times[i] * g;
            den += g * g;
        }
        return den > 0.0 ? num / den : 0.0;
    };
    double a = 1.0;
    double b = 1.0;
    double best_ss = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 60; ++k) {
        const double bk = std::pow(10.0, -1.0 + 6.0 * k / 60.0);
        const double ak = best_a_for(bk);
        FitResult trial;
        trial.model = FitModel::Arcsinh;
        trial.params = {ak, bk};
        const double ss = sum_sq_residuals(phis, times, trial);
        if (ss < best_ss) {
            best_ss = ss;
            a = ak;
            b = bk;
        }
    }

    double lambda = 1e-3;
    bool converged = false;
    for (int it = 0; it < 300; ++it) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (int i = 0; i < n; ++i) {
            const double x = phis[i];
            const double g = std::asinh(b * x);
            const double r = times[i] - a * g;
            const double da = g;
            const double db = a * x / std::sqrt(1.0 + b * b * x * x);
            jtj(0, 0) += da * da;
            jtj(0, 1) += da * db;
            jtj(1, 0) += da * db;
            jtj(1, 1) += db * db;
            jtr(0) += da * r;
            jtr(1) += db * r;
        }
        Eigen::Matrix2d damped = jtj;
        damped(0, 0) *= 1.0 + lambda;
        damped(1, 1) *= 1.0 + lambda;
        const Eigen::Vector2d step = damped.fullPivLu().solve(jtr);
        FitResult trial;
        trial.model = FitModel::Arcsinh;
        trial.params = {a + step(0), b + step(1)};
        const double ss = sum_sq_residuals(phis, times, trial);
        if (ss < best_ss) {
            const double improvement = (best_ss - ss) / std::max(best_ss, 1e-300);
            a = trial.params[0];
            b = trial.params[1];
            best_ss = ss;
            lambda = std::max(lambda * 0.5, 1e-12);
            if (improvement < 1e-14) {
                converged = true;
                break;
            }
        } else {
            lambda *= 4.0;
            if (lambda > 1e12) {
                converged = true;  // stalled at the minimum
                break;
            }
        }
    }

    FitResult fit;
    fit.model = FitModel::Arcsinh;
    fit.params = {a, b};
    fit.converged = converged;
    finish_fit(phis, times, fit);
    return fit;
}

}  // namespace

FitResult fit_times(const std::vector<double>& phis,
                    const std::vector<double>& times, FitModel model)
{
    if (phis.size() != times.size()) {
        throw std::invalid_argument("fit_times: size mismatch");
    }
    if (phis.size() < 4) {
        throw std::invalid_argument("fit_times: need at least 4 points");
    }
    auto sorted = phis;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("fit_times: phi values must be distinct");
    }
    return model == FitModel::Poly2 ? fit_poly2(phis, times)
                                    : fit_arcsinh(phis, times);
}

double decomposition_ratio(double t_decomposition_total, double t_native_avg)
{
    if (t_decomposition_total <= 0.0 || t_native_avg <= 0.0) {
        throw std::invalid_argument("decomposition_ratio: times must be "
                                    "positive");
    }
    return t_decomposition_total / t_native_avg;
}

int decomposition_gate_count(int gate_k)
{
    switch (gate_k) {
    case 1:
        return 2;  // two C1Z plus one-qubit gates
    case 2:
        return 8;  // two CNOT + three C1P, as C1Z-equivalents
    default:
        throw std::invalid_argument("decomposition_gate_count: k must be 1 "
                                    "or 2");
    }
}

double decomposition_time(int gate_k, double t_per_gate)
{
    if (t_per_gate <= 0.0) {
        throw std::invalid_argument("decomposition_time: nonpositive gate "
                                    "time");
    }
    return decomposition_gate_count(gate_k) * t_per_gate;
}

double native_time_average(const FitResult& fit)
{
    if (fit.model == FitModel::Arcsinh) {
        const double a = fit.params[0];
        const double b = fit.params[1];
        // (1/pi) int_0^pi a asinh(b x) dx, closed form
        return a * (std::asinh(b * M_PI) -
                    std::sqrt(M_PI * M_PI + 1.0 / (b * b)) / M_PI +
                    1.0 / (b * M_PI));
    }
    const double a = fit.params[0];
    const double b = fit.params[1];
    const double c = fit.params[2];
    return a * M_PI * M_PI / 3.0 + b * M_PI / 2.0 + c;
}

}  // namespace rydopt
