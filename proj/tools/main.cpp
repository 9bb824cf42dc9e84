// rydopt command-line front end: train / eval / export-pulse / fit / ratio.
// All physical-unit handling lives here; the library works in Omega_max = 1
// units throughout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rydopt/evaluation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rydopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;  // iteration-capped / fit stalled

constexpr int kPulseFormatVersion = 1;
constexpr int kReportFormatVersion = 1;
constexpr int kFitFormatVersion = 1;

// ---------------------------------------------------------------------------
// unit conversions (involutive by construction)

// Omega_max = 2 pi * f[MHz]; a lifetime tau[us] gives Gamma = 1/(tau Omega).
// MHz * us = 1, so the product below is dimensionless.
double gamma_internal(double lifetime_us, double omega_max_mhz)
{
    if (lifetime_us <= 0.0) {
        return 0.0;  // no decay
    }
    return 1.0 / (lifetime_us * 2.0 * M_PI * omega_max_mhz);
}

double time_to_us(double t_internal, double omega_max_mhz)
{
    return t_internal / (2.0 * M_PI * omega_max_mhz);
}

// Detunings are reported as ordinary frequencies: Delta = x Omega_max
// corresponds to x * f[MHz].
double delta_to_mhz(double delta_internal, double omega_max_mhz)
{
    return delta_internal * omega_max_mhz;
}

double delta_from_mhz(double delta_mhz, double omega_max_mhz)
{
    return delta_mhz / omega_max_mhz;
}

// ---------------------------------------------------------------------------
// config

struct RunConfig {
    int gate_k = 1;
    std::uint64_t seed = 1;
    double omega_max_mhz = 10.0;
    double lifetime_us = 96.5;
    double blockade_b = 21.1;  // <= 0 encodes a perfect blockade
    bool infinite_first = false;
    TrainConfig train;
    int eval_samples = 200;
    std::string eval_output = "report.json";
};

void require_keys(const json& obj, const std::string& section,
                  const std::vector<std::string>& allowed)
{
    if (!obj.is_object()) {
        throw std::runtime_error("config: '" + section +
                                 "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw std::runtime_error("config: unknown key '" + key +
                                     "' in section '" + section + "'");
        }
    }
}

int parse_gate(const std::string& name)
{
    if (name == "c1p") {
        return 1;
    }
    if (name == "c2p") {
        return 2;
    }
    throw std::runtime_error("config: gate must be 'c1p' or 'c2p', got '" +
                             name + "'");
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path);
    }
    json root = json::parse(in);
    require_keys(root, "<root>", {"gate", "seed", "physics", "train", "eval"});

    RunConfig rc;
    rc.gate_k = parse_gate(root.value("gate", "c1p"));
    rc.seed = root.value("seed", std::uint64_t{1});

    if (root.contains("physics")) {
        const json& ph = root["physics"];
        require_keys(ph, "physics",
                     {"omega_max_mhz", "lifetime_us", "blockade_b"});
        rc.omega_max_mhz = ph.value("omega_max_mhz", 10.0);
        rc.lifetime_us = ph.value("lifetime_us", 96.5);
        if (ph.contains("blockade_b")) {
            if (ph["blockade_b"].is_string()) {
                if (ph["blockade_b"] != "inf") {
                    throw std::runtime_error(
                            "config: blockade_b must be a number or \"inf\"");
                }
                rc.blockade_b = 0.0;
            } else {
                rc.blockade_b = ph["blockade_b"].get<double>();
            }
        }
        if (rc.omega_max_mhz <= 0.0) {
            throw std::runtime_error("config: omega_max_mhz must be > 0");
        }
    }

    if (root.contains("train")) {
        const json& tr = root["train"];
        require_keys(tr, "train",
                     {"batch_m", "learning_rate", "mu", "mu_anneal_below",
                      "max_iters", "plateau_window", "plateau_threshold",
                      "n_intervals", "n_steps", "n_knots", "t_bound",
                      "checkpoint_every", "arch", "stage"});
        TrainConfig& t = rc.train;
        t.batch_m = tr.value("batch_m", t.batch_m);
        t.learning_rate = tr.value("learning_rate", t.learning_rate);
        t.mu = tr.value("mu", t.mu);
        t.mu_anneal_below = tr.value("mu_anneal_below", t.mu_anneal_below);
        t.max_iters = tr.value("max_iters", t.max_iters);
        t.plateau_window = tr.value("plateau_window", t.plateau_window);
        t.plateau_threshold =
                tr.value("plateau_threshold", t.plateau_threshold);
        t.n_intervals = tr.value("n_intervals", t.n_intervals);
        t.n_steps = tr.value("n_steps", t.n_steps);
        t.n_knots = tr.value("n_knots", t.n_knots);
        t.t_bound = tr.value("t_bound", t.t_bound);
        t.checkpoint_every = tr.value("checkpoint_every", t.checkpoint_every);
        if (tr.contains("arch")) {
            const auto a = tr["arch"].get<std::vector<int>>();
            if (a.size() != 4) {
                throw std::runtime_error("config: arch must have 4 entries");
            }
            t.arch = {a[0], a[1], a[2], a[3]};
        }
        if (tr.contains("stage")) {
            const std::string stage = tr["stage"];
            if (stage == "infinite-first") {
                rc.infinite_first = true;
            } else if (stage != "finite-only") {
                throw std::runtime_error("config: stage must be "
                                         "'finite-only' or 'infinite-first'");
            }
        }
    }

    if (root.contains("eval")) {
        const json& ev = root["eval"];
        require_keys(ev, "eval", {"samples", "output"});
        rc.eval_samples = ev.value("samples", rc.eval_samples);
        rc.eval_output = ev.value("output", rc.eval_output);
    }
    return rc;
}

AtomSystem make_system(const RunConfig& rc)
{
    AtomSystem sys;
    sys.n_atoms = rc.gate_k + 1;
    sys.blockade_b = rc.blockade_b > 0.0 ? rc.blockade_b : kInfiniteBlockade;
    sys.gamma = gamma_internal(rc.lifetime_us, rc.omega_max_mhz);
    return sys;
}

// ---------------------------------------------------------------------------
// shared I/O helpers

void write_json(const std::string& path, const json& doc)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write: " + path);
    }
    out << doc.dump(2) << "\n";
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open: " + path);
    }
    return json::parse(in);
}

std::vector<ChainedNetwork> load_family(const std::string& dir)
{
    std::vector<ChainedNetwork> nets;
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".rydw") {
            paths.push_back(entry.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        nets.push_back(load_network(p));
    }
    if (nets.empty()) {
        throw std::runtime_error("no .rydw weight files in " + dir);
    }
    std::sort(nets.begin(), nets.end(),
              [](const ChainedNetwork& a, const ChainedNetwork& b) {
                  return a.phi_lo < b.phi_lo;
              });
    return nets;
}

// Gaps of (0, pi] not covered by any net interval, for the eval error path.
std::vector<std::pair<double, double>> coverage_gaps(
        const std::vector<ChainedNetwork>& nets)
{
    std::vector<std::pair<double, double>> gaps;
    double covered = 0.0;
    for (const auto& net : nets) {
        if (net.phi_lo > covered + 1e-12) {
            gaps.emplace_back(covered, net.phi_lo);
        }
        covered = std::max(covered, net.phi_hi);
    }
    if (covered < M_PI - 1e-12) {
        gaps.emplace_back(covered, M_PI);
    }
    return gaps;
}

std::string gate_name(int k)
{
    return k == 1 ? "c1p" : "c2p";
}

// ---------------------------------------------------------------------------
// train

void write_progress_log(const std::string& path, const TrainRun& run)
{
    std::ofstream out(path);
    for (std::size_t i = 0; i < run.results.size(); ++i) {
        for (const auto& rec : run.results[i].trace) {
            json line = {{"interval", i},
                         {"iter", rec.iter},
                         {"j", rec.j},
                         {"j_opt", rec.j_opt},
                         {"mean_duration", rec.mean_duration},
                         {"wall_seconds", rec.wall_seconds}};
            out << line.dump() << "\n";
        }
    }
}

int cmd_train(const RunConfig& rc, const std::string& out_dir)
{
    fs::create_directories(out_dir);
    TrainConfig cfg = rc.train;
    cfg.seed = rc.seed;
    cfg.eval_b = rc.blockade_b > 0.0 ? rc.blockade_b : 21.1;
    if (cfg.checkpoint_dir.empty()) {
        cfg.checkpoint_dir = out_dir + "/checkpoints";
    }
    cfg.blockade_stage = rc.infinite_first ? BlockadeStage::InfiniteFirst
                                           : BlockadeStage::FiniteOnly;

    const AtomSystem sys = make_system(rc);
    const TrainRun run = rc.infinite_first ? two_stage_blockade(cfg, sys)
                                           : train_family(rc.gate_k, cfg, sys);

    json summary = {{"format_version", 1},
                    {"gate", gate_name(rc.gate_k)},
                    {"seed", run.seed},
                    {"wall_seconds", run.wall_seconds},
                    {"stage_log", run.stage_log},
                    {"intervals", json::array()}};
    bool any_diverged = false;
    for (std::size_t i = 0; i < run.nets.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "interval_%02zu.rydw", i);
        save_network(run.nets[i], out_dir + "/" + name);
        const TrainStatus st = run.results[i].status;
        any_diverged = any_diverged || st == TrainStatus::Diverged;
        summary["intervals"].push_back(
                {{"file", name},
                 {"phi_lo", run.nets[i].phi_lo},
                 {"phi_hi", run.nets[i].phi_hi},
                 {"status", st == TrainStatus::Converged ? "converged"
                          : st == TrainStatus::MaxIters  ? "max-iters"
                                                         : "diverged"}});
    }
    write_json(out_dir + "/train_summary.json", summary);
    write_progress_log(out_dir + "/progress.ndjson", run);

    if (any_diverged) {
        std::cerr << "training diverged; see " << out_dir
                  << "/train_summary.json\n";
        return kExitError;
    }
    return run.all_converged() ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------------------
// eval

json record_to_json(const EvalRecord& r, double omega_max_mhz)
{
    return {{"phi", r.phi},
            {"duration", r.duration},
            {"duration_us", time_to_us(r.duration, omega_max_mhz)},
            {"infid_total", r.infid_total},
            {"infid_decay", r.infid_decay},
            {"infid_blockade", r.infid_blockade},
            {"infid_haar", r.infid_haar},
            {"theta_c", r.theta_c}};
}

int cmd_eval(const RunConfig& rc, const std::string& weights_dir,
             int n_samples, const std::string& out_path, bool no_decay,
             int n_threads)
{
    AtomSystem sys = make_system(rc);
    if (no_decay) {
        sys.gamma = 0.0;
    }
    const auto nets = load_family(weights_dir);
    const auto gaps = coverage_gaps(nets);
    if (!gaps.empty()) {
        std::cerr << "weight files do not cover (0, pi]; missing:\n";
        for (const auto& [lo, hi] : gaps) {
            std::cerr << "  (" << lo << ", " << hi << "]\n";
        }
        return kExitError;
    }
    if (nets.front().gate_k != rc.gate_k) {
        std::cerr << "weights were trained for "
                  << gate_name(nets.front().gate_k) << ", config says "
                  << gate_name(rc.gate_k) << "\n";
        return kExitError;
    }

    const EvalReport report = evaluate_family(nets, sys, n_samples, rc.seed,
                                              rc.train.n_steps, n_threads);
    json doc = {{"format_version", kReportFormatVersion},
                {"gate", gate_name(rc.gate_k)},
                {"seed", rc.seed},
                {"samples", n_samples},
                {"mean_infid_total", report.mean_infid_total},
                {"mean_infid_decay", report.mean_infid_decay},
                {"mean_infid_blockade", report.mean_infid_blockade},
                {"mean_infid_haar", report.mean_infid_haar},
                {"mean_duration", report.mean_duration},
                {"records", json::array()}};
    for (const auto& r : report.records) {
        doc["records"].push_back(record_to_json(r, rc.omega_max_mhz));
    }
    write_json(out_path, doc);
    std::cout << "mean infidelity " << report.mean_infid_total << " over "
              << n_samples << " samples -> " << out_path << "\n";
    return kExitOk;
}

// Re-simulates an exported pulse file from its sampled waveform alone (the
// network is not consulted); used to validate exports.
int cmd_eval_pulse(const RunConfig& rc, const std::string& pulse_path,
                   bool no_decay, double check_tol)
{
    const json doc = read_json(pulse_path);
    if (doc.value("format_version", 0) != kPulseFormatVersion) {
        std::cerr << "unsupported pulse file version\n";
        return kExitError;
    }
    const int gate_k = parse_gate(doc.at("gate"));
    const double phi = doc.at("phi");
    const double theta_c = doc.at("theta_c");
    const double duration = doc.at("duration").at("omega_max_units");
    const double file_omega_mhz = doc.at("omega_max_mhz");
    // read the physical-unit columns and convert back, so the file's MHz
    // figures (not just the internal copies) are what gets validated
    auto deltas = doc.at("delta").at("mhz").get<std::vector<double>>();
    for (double& d : deltas) {
        d = delta_from_mhz(d, file_omega_mhz);
    }
    if (deltas.size() < 2) {
        std::cerr << "pulse file needs at least two samples\n";
        return kExitError;
    }

    RunConfig sys_rc = rc;
    sys_rc.gate_k = gate_k;
    AtomSystem sys = make_system(sys_rc);
    if (no_decay) {
        sys.gamma = 0.0;
    }

    // One propagation step per sample interval; the midpoint control is the
    // linear interpolant between adjacent samples.
    const int n_steps = static_cast<int>(deltas.size()) - 1;
    std::vector<double> step_deltas(n_steps);
    for (int s = 0; s < n_steps; ++s) {
        step_deltas[s] = 0.5 * (deltas[s] + deltas[s + 1]);
    }
    const auto prop = evolve_affine(affine_hamiltonian(sys), step_deltas,
                                    duration);
    const double f =
            gate_fidelity(prop.final_unitary, GateTarget{gate_k, phi}, theta_c);
    const double f_header = doc.value("fidelity", f);
    json out = {{"phi", phi},
                {"fidelity", f},
                {"infid_total", 1.0 - f},
                {"n_steps", n_steps},
                {"file_fidelity", f_header},
                {"abs_diff", std::abs(f - f_header)}};
    std::cout << out.dump() << "\n";
    if (check_tol > 0.0 && std::abs(f - f_header) > check_tol) {
        std::cerr << "re-simulated fidelity differs from the file header by "
                  << std::abs(f - f_header) << " (> " << check_tol << ")\n";
        return kExitError;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// export-pulse

int cmd_export_pulse(const RunConfig& rc, const std::string& weights_path,
                     double phi, int resolution, const std::string& out_path)
{
    if (!(phi > 0.0 && phi <= M_PI)) {
        std::cerr << "phi must lie in (0, pi]\n";
        return kExitError;
    }
    if (resolution < 1) {
        std::cerr << "resolution must be >= 1\n";
        return kExitError;
    }
    const ChainedNetwork net = load_network(weights_path);
    const SplineBasis basis(net.n_knots);
    const PulseSpec pulse = net.forward(phi);

    RunConfig sys_rc = rc;
    sys_rc.gate_k = net.gate_k;
    const AtomSystem sys = make_system(sys_rc);

    // resolution + 1 uniform samples including both endpoints
    json times_internal = json::array();
    json times_us = json::array();
    json deltas_internal = json::array();
    json deltas_mhz = json::array();
    for (int k = 0; k <= resolution; ++k) {
        const double t = pulse.duration * k / resolution;
        const double d = waveform(pulse, basis, t);
        times_internal.push_back(t);
        times_us.push_back(time_to_us(t, rc.omega_max_mhz));
        deltas_internal.push_back(d);
        deltas_mhz.push_back(delta_to_mhz(d, rc.omega_max_mhz));
    }

    // reference fidelity on the same step count as the sampling grid, so a
    // re-simulation from the file differs only by waveform interpolation
    std::vector<double> step_deltas(resolution);
    for (int s = 0; s < resolution; ++s) {
        const double t = pulse.duration * (s + 0.5) / resolution;
        step_deltas[s] = waveform(pulse, basis, t);
    }
    const auto prop = evolve_affine(affine_hamiltonian(sys), step_deltas,
                                    pulse.duration);
    const double f = gate_fidelity(prop.final_unitary,
                                   GateTarget{net.gate_k, phi}, pulse.theta_c);

    json doc = {{"format_version", kPulseFormatVersion},
                {"gate", gate_name(net.gate_k)},
                {"phi", phi},
                {"theta_c", pulse.theta_c},
                {"omega_max_mhz", rc.omega_max_mhz},
                {"duration",
                 {{"omega_max_units", pulse.duration},
                  {"us", time_to_us(pulse.duration, rc.omega_max_mhz)}}},
                {"fidelity", f},
                {"time",
                 {{"omega_max_units", times_internal}, {"us", times_us}}},
                {"delta",
                 {{"omega_max_units", deltas_internal}, {"mhz", deltas_mhz}}}};
    write_json(out_path, doc);
    std::cout << "T = " << pulse.duration << "/Omega_max ("
              << time_to_us(pulse.duration, rc.omega_max_mhz)
              << " us), F = " << f << " -> " << out_path << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fit / ratio

FitModel parse_model(const std::string& name)
{
    if (name == "arcsinh") {
        return FitModel::Arcsinh;
    }
    if (name == "poly2") {
        return FitModel::Poly2;
    }
    throw std::runtime_error("model must be 'arcsinh' or 'poly2'");
}

json fit_to_json(const FitResult& fit)
{
    return {{"format_version", kFitFormatVersion},
            {"model", fit.model == FitModel::Arcsinh ? "arcsinh" : "poly2"},
            {"params", fit.params},
            {"residual_norm", fit.residual_norm},
            {"r_squared", fit.r_squared},
            {"converged", fit.converged}};
}

FitResult fit_from_json(const json& doc)
{
    FitResult fit;
    fit.model = parse_model(doc.at("model"));
    fit.params = doc.at("params").get<std::vector<double>>();
    fit.residual_norm = doc.value("residual_norm", 0.0);
    fit.r_squared = doc.value("r_squared", 0.0);
    fit.converged = doc.value("converged", true);
    return fit;
}

int cmd_fit(const std::string& report_path, const std::string& model_name,
            const std::string& out_path)
{
    const json doc = read_json(report_path);
    std::vector<double> phis;
    std::vector<double> times;
    for (const auto& rec : doc.at("records")) {
        phis.push_back(rec.at("phi"));
        times.push_back(rec.at("duration"));
    }
    const FitResult fit = fit_times(phis, times, parse_model(model_name));
    write_json(out_path, fit_to_json(fit));
    std::cout << "fit " << model_name << ": params "
              << json(fit.params).dump() << ", r^2 = " << fit.r_squared
              << "\n";
    if (!fit.converged) {
        std::cerr << "fit did not converge\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_ratio(const std::string& gate, const std::string& fit_path,
              double t_per_gate)
{
    const int gate_k = parse_gate(gate);
    const FitResult fit = fit_from_json(read_json(fit_path));
    const double t_dec = decomposition_time(gate_k, t_per_gate);
    const double t_native = native_time_average(fit);
    json out = {{"gate", gate},
                {"gate_count", decomposition_gate_count(gate_k)},
                {"t_per_gate", t_per_gate},
                {"t_decomposition", t_dec},
                {"t_native_avg", t_native},
                {"ratio", decomposition_ratio(t_dec, t_native)}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Neural pulse families for Rydberg C1P/C2P phase gates"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    int threads = 0;
    app.add_option("--seed", seed_override, "Override the config seed");
    app.add_option("--threads", threads, "Worker pool cap (0 = all cores)")
            ->envname("RYDOPT_THREADS");

    auto* train = app.add_subcommand("train", "Train a pulse family");
    std::string out_dir = "run";
    std::string gate_override;
    std::string stage_override;
    train->add_option("--config", config_path, "JSON run config")->required();
    train->add_option("--out", out_dir, "Output directory")
            ->envname("RYDOPT_OUT_DIR");
    train->add_option("--gate", gate_override, "Override config gate")
            ->check(CLI::IsMember({"c1p", "c2p"}));
    train->add_option("--stage", stage_override, "Blockade curriculum")
            ->check(CLI::IsMember({"finite-only", "infinite-first"}));

    auto* eval = app.add_subcommand("eval", "Evaluate a trained family");
    std::string weights_dir;
    std::string pulse_path;
    std::string eval_out;
    int samples = 0;
    bool no_decay = false;
    eval->add_option("--config", config_path, "JSON run config")->required();
    eval->add_option("--weights", weights_dir,
                     "Directory holding interval_*.rydw files");
    eval->add_option("--pulse", pulse_path,
                     "Re-simulate an exported pulse file instead");
    eval->add_option("--samples", samples, "Override eval sample count");
    eval->add_option("--out", eval_out, "Report path (default from config)");
    eval->add_flag("--no-decay", no_decay, "Force Gamma = 0");
    double check_tol = 0.0;
    eval->add_option("--check", check_tol,
                     "With --pulse: fail when the re-simulated fidelity "
                     "deviates from the file header by more than this");

    auto* exp = app.add_subcommand("export-pulse",
                                   "Export one pulse waveform to JSON");
    std::string weights_file;
    std::string pulse_out = "pulse.json";
    double phi = M_PI;
    int resolution = 2048;
    exp->add_option("--config", config_path, "JSON run config")->required();
    exp->add_option("--weights", weights_file, "A single .rydw file")
            ->required();
    exp->add_option("--phi", phi, "Gate angle in (0, pi]")->required();
    exp->add_option("--resolution", resolution,
                    "Sample intervals (resolution + 1 points)");
    exp->add_option("--out", pulse_out, "Output path");

    auto* fit = app.add_subcommand("fit", "Fit T(phi) from an eval report");
    std::string report_path;
    std::string model_name;
    std::string fit_out = "fit.json";
    fit->add_option("--report", report_path, "Eval report JSON")->required();
    fit->add_option("--model", model_name, "arcsinh or poly2")
            ->required()
            ->check(CLI::IsMember({"arcsinh", "poly2"}));
    fit->add_option("--out", fit_out, "Output path");

    auto* ratio = app.add_subcommand(
            "ratio", "Decomposition-vs-native gate time ratio");
    std::string ratio_gate;
    std::string ratio_fit;
    double t_per_gate = kTimeOptimalC1Z;
    ratio->add_option("--gate", ratio_gate, "c1p or c2p")
            ->required()
            ->check(CLI::IsMember({"c1p", "c2p"}));
    ratio->add_option("--fit", ratio_fit, "FitResult JSON")->required();
    ratio->add_option("--t-per-gate", t_per_gate,
                      "Two-qubit gate time in 1/Omega_max");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ratio->parsed()) {
            return cmd_ratio(ratio_gate, ratio_fit, t_per_gate);
        }
        if (fit->parsed()) {
            return cmd_fit(report_path, model_name, fit_out);
        }

        RunConfig rc = load_config(config_path);
        if (seed_override) {
            rc.seed = *seed_override;
        }
        rc.train.n_threads = threads;

        if (train->parsed()) {
            if (!gate_override.empty()) {
                rc.gate_k = parse_gate(gate_override);
            }
            if (!stage_override.empty()) {
                rc.infinite_first = stage_override == "infinite-first";
            }
            if (rc.infinite_first && rc.gate_k != 2) {
                std::cerr << "--stage infinite-first requires gate c2p\n";
                return kExitError;
            }
            return cmd_train(rc, out_dir);
        }
        if (eval->parsed()) {
            if (!pulse_path.empty()) {
                return cmd_eval_pulse(rc, pulse_path, no_decay, check_tol);
            }
            if (weights_dir.empty()) {
                std::cerr << "eval needs --weights or --pulse\n";
                return kExitError;
            }
            return cmd_eval(rc, weights_dir,
                            samples > 0 ? samples : rc.eval_samples,
                            eval_out.empty() ? rc.eval_output : eval_out,
                            no_decay, threads);
        }
        if (exp->parsed()) {
            return cmd_export_pulse(rc, weights_file, phi, resolution,
                                    pulse_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
