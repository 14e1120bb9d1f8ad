#include "bsc/commands.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <thread>

#include "bsc/expansion.hpp"
#include "bsc/forms.hpp"
#include "bsc/mintime.hpp"
#include "bsc/moments.hpp"
#include "bsc/oscillatory.hpp"
#include "bsc/simulator.hpp"
#include "bsc/synthesis.hpp"

namespace bsc {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

DipoleModel model_from_config(const RunConfig& cfg) {
    std::string name = cfg.get_string("dipole", "x_minus_half");
    int n = cfg.get_int("truncation", 64);
    if (name == "custom") {
        auto poly = cfg.get_list("dipole_poly");
        auto cosc = cfg.get_list("dipole_cos");
        if (poly.empty() && cosc.empty())
            throw ConfigError("custom dipole needs dipole_poly and/or dipole_cos");
        return DipoleModel(poly, cosc, n);
    }
    try {
        return DipoleModel::preset(name, n);
    } catch (const std::invalid_argument&) {
        throw ConfigError("unknown dipole: " + name);
    }
}

fs::path out_dir(const RunConfig& cfg) {
    fs::path dir = cfg.get_string("out", ".");
    fs::create_directories(dir);
    return dir;
}

json record_header(const RunConfig& cfg, const std::string& command) {
    json j;
    j["command"] = command;
    j["config_hash"] = cfg.content_hash();
    return j;
}

// a finished record is written atomically so failed runs leave nothing behind
void write_json(const fs::path& path, const json& j) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp);
        f << j.dump(2) << "\n";
    }
    fs::rename(tmp, path);
}

Control control_from_config(const RunConfig& cfg, double T, std::uint64_t seed) {
    std::string kind = cfg.get_string("control", "zero");
    int n = cfg.get_int("control_segments", 1024);
    double amp = cfg.get_double("control_amp", 0.1);
    if (kind == "zero") return sample_control(0.0, T, n, [](double) { return 0.0; });
    if (kind == "csv") {
        std::ifstream f(cfg.require_string("control_csv"));
        if (!f) throw ConfigError("cannot open control_csv");
        return read_control_csv(f);
    }
    if (kind == "random") {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 1.0);
        Control v = sample_control(0.0, T, n, [](double) { return 0.0; });
        for (int m = 1; m <= 12; ++m) {
            double a = g(rng) / m;
            for (int i = 0; i <= n; ++i) v.samples(i) += a * std::sin(m * M_PI * i * v.dt / T);
        }
        double nrm = v.l2_norm();
        if (nrm > 0) v.samples *= amp / nrm;
        return v;
    }
    if (kind == "vplus") return cosine_pulse(n);
    throw ConfigError("unknown control kind: " + kind);
}

void parallel_for(int items, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, items));
    if (threads == 1) {
        for (int i = 0; i < items; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < items; i = next++) body(i);
        });
    for (auto& th : pool) th.join();
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

} // namespace

int cmd_simulate(const RunConfig& cfg) {
    Timer timer;
    DipoleModel mu = model_from_config(cfg);
    double T = cfg.get_double("T", 1.0);
    if (T <= 0) throw ConfigError("T must be positive");
    Control u = control_from_config(cfg, T, cfg.get_seed());
    PropagateOptions opt;
    opt.dt = cfg.get_double("dt", -1.0);
    opt.store_every = cfg.get_int("store_every", 0);
    std::vector<Control> fam{u};
    Trajectory tr = propagate(ground_state(mu.truncation()), fam, mu, T, opt);

    fs::path dir = out_dir(cfg);
    {
        std::ofstream f(dir / "trajectory.csv");
        write_trajectory_csv(f, tr);
    }
    json j = record_header(cfg, "simulate");
    j["T"] = T;
    j["truncation"] = mu.truncation();
    j["norm_drift"] = tr.norm_drift;
    j["final_ground_population"] = std::abs(tr.final_state().coeffs(0));
    write_json(dir / "simulate.json", j);
    std::cerr << "simulate: wall " << timer.seconds() << " s\n";
    return kExitOk;
}

int cmd_expand(const RunConfig& cfg) {
    Timer timer;
    DipoleModel mu = model_from_config(cfg);
    double T = cfg.get_double("T", 0.3);
    int n = cfg.get_int("control_segments", 256);
    std::mt19937_64 rng(cfg.get_seed());
    std::normal_distribution<double> g(0.0, 1.0);
    auto band = [&](unsigned salt) {
        std::mt19937_64 r2(cfg.get_seed() + salt);
        Control v = sample_control(0.0, T, n, [](double) { return 0.0; });
        for (int m = 1; m <= 8; ++m) {
            double a = std::normal_distribution<double>(0.0, 1.0)(r2) / m;
            for (int i = 0; i <= n; ++i) v.samples(i) += a * std::sin(m * M_PI * i * v.dt / T);
        }
        return v;
    };
    (void)g;
    (void)rng;
    Control v = band(1), w = band(2), nu = band(3);
    std::vector<double> eps = cfg.get_list("eps");
    if (eps.empty())
        for (int p = 3; p <= 8; ++p) eps.push_back(std::pow(2.0, -p));
    OrderSlopes s = order_slopes(mu, v, w, nu, eps, T);

    json j = record_header(cfg, "expand");
    j["T"] = T;
    j["eps"] = s.eps;
    for (int o = 0; o < 4; ++o) {
        json rec;
        rec["order"] = o;
        rec["remainders"] = s.remainders[o];
        rec["slope"] = s.slopes[o];
        rec["r_squared"] = s.r_squared[o];
        j["fits"].push_back(rec);
    }
    write_json(out_dir(cfg) / "expand.json", j);
    std::cerr << "expand: wall " << timer.seconds() << " s\n";
    return kExitOk;
}

int cmd_forms(const RunConfig& cfg) {
    Timer timer;
    DipoleModel mu = model_from_config(cfg);
    int K = cfg.get_int("K", 1);
    double T = cfg.get_double("T", 2.0 / M_PI);
    int J = cfg.get_int("kernel_j", -1);
    Control u = control_from_config(cfg, T, cfg.get_seed());
    std::string proj = cfg.get_string("project", "none");
    if (proj == "vt") {
        auto lost = lost_directions(mu, mu.truncation());
        u = project_vt(u, controlled_frequencies(lost, cfg.get_int("freq_j_max", 40)));
    } else if (proj != "none") {
        throw ConfigError("project must be none or vt");
    }
    std::vector<Control> fam{u};
    auto r2 = q2(mu, K, T, fam, J);
    auto r2t = q2_tilde(mu, K, T, fam, J);
    Control S = u.primitive();
    auto rq = q_primitive(mu, K, T, S, J);
    auto r3 = q3(mu, K, T, fam, J);

    json j = record_header(cfg, "forms");
    j["K"] = K;
    j["T"] = T;
    j["kernel_truncation"] = r2.kernel_truncation;
    j["tail_coefficient"] = r2.tail_coefficient;
    j["lost_direction_warning"] = r2.lost_direction_warning;
    j["q2"] = {r2.value.real(), r2.value.imag()};
    j["q2_tilde"] = r2t.value.real();
    j["q_primitive"] = rq.value.real();
    j["q3"] = {r3.value.real(), r3.value.imag()};
    j["correspondence_gap"] = std::abs(r2t.value.real() - rq.value.real());
    if (cfg.get_string("control", "zero") == "vplus" && K == 1) {
        double series = cosine_pulse_series(mu, cfg.get_int("series_j", 500));
        j["series_value"] = series;
        j["series_relative_gap"] =
            series != 0.0 ? std::abs(r2t.value.real() - series) / std::abs(series) : 0.0;
    }
    auto order = classify_order(mu, K);
    j["recovery_order"] = order == RecoveryOrder::order2   ? "order2"
                          : order == RecoveryOrder::order3 ? "order3"
                                                           : "undecided";
    write_json(out_dir(cfg) / "forms.json", j);
    std::cerr << "forms: wall " << timer.seconds() << " s\n";
    return kExitOk;
}

int cmd_moments(const RunConfig& cfg) {
    Timer timer;
    double T = cfg.get_double("T", 1.0);
    int nf = cfg.get_int("n_frequencies", 12);
    MomentProblem p;
    p.T = T;
    p.frequencies.push_back(0.0);
    for (int jdx = 2; jdx <= nf; ++jdx) p.frequencies.push_back(transition_frequency(jdx));
    p.targets.resize(nf);
    std::mt19937_64 rng(cfg.get_seed());
    std::normal_distribution<double> g(0.0, 1.0);
    p.targets(0) = cplx(g(rng), 0.0);
    for (int i = 1; i < nf; ++i) p.targets(i) = cplx(g(rng), g(rng));

    MomentSolveInfo info;
    Control v = solve_moments(p, cfg.get_int("control_segments", 2048), &info);
    std::span<const Control> fam(&v, 1);
    double residual = 0.0;
    for (size_t i = 0; i < p.frequencies.size(); ++i)
        residual += std::norm(moment(fam, p.frequencies[i]) - p.targets(i));
    residual = std::sqrt(residual);

    fs::path dir = out_dir(cfg);
    {
        std::ofstream f(dir / "moment_control.csv");
        write_control_csv(f, v);
    }
    json j = record_header(cfg, "moments");
    j["T"] = T;
    j["n_frequencies"] = nf;
    j["round_trip_residual"] = residual;
    j["solver_residual"] = info.residual;
    j["gram_condition"] = info.condition;
    j["control_norm"] = info.control_norm;
    double ing = ingham_constant(p.frequencies, T, nf);
    j["ingham_constant"] = std::isfinite(ing) ? json(ing) : json("unbounded");
    write_json(dir / "moments.json", j);
    std::cerr << "moments: wall " << timer.seconds() << " s\n";
    return kExitOk;
}

int cmd_synthesize(const RunConfig& cfg) {
    Timer timer;
    RunConfig local = cfg;
    if (!cfg.has("dipole")) local.set("dipole", "two_lost_demo");
    DipoleModel mu = model_from_config(local);
    double T = cfg.get_double("T", 2.6);
    SynthesisOptions opt;
    opt.grid_n = cfg.get_int("control_segments", 384);
    opt.trials = cfg.get_int("trials", 16);
    opt.controlled_max = cfg.get_int("controlled_max", 24);
    opt.freq_j_max = cfg.get_int("freq_j_max", 32);
    opt.seed = cfg.get_seed() + 7;

    auto zlist = cfg.get_list("target"); // x_im, re_K2, im_K2
    Eigen::VectorXcd z = Eigen::VectorXcd::Zero(mu.truncation());
    if (zlist.size() >= 3) {
        auto lost = lost_directions(mu, mu.truncation());
        if (lost.indices.size() != 2)
            throw ConfigError("synthesize expects a model with two lost directions");
        z(0) = cplx(0.0, zlist[0]);
        z(lost.indices[1] - 1) = cplx(zlist[1], zlist[2]);
    } else if (!zlist.empty()) {
        throw ConfigError("target needs three entries: ground_im, re, im");
    }

    json j = record_header(cfg, "synthesize");
    j["T"] = T;
    fs::path dir = out_dir(cfg);
    if (z.norm() == 0.0) {
        j["plan"] = json::array();
        j["certificates"] = nullptr;
        write_json(dir / "plan.json", j);
        std::cerr << "synthesize: wall " << timer.seconds() << " s\n";
        return kExitOk;
    }
    SynthesisPlan plan = lambda_map(mu, z, T, opt);
    json blocks = json::array();
    int idx = 0;
    for (const auto& b : plan.blocks) {
        json rec;
        rec["role"] = b.role;
        rec["t0"] = b.v.t0;
        rec["duration"] = b.v.duration();
        rec["v_norm"] = b.v.l2_norm();
        rec["w_norm"] = b.w.l2_norm();
        std::string vname = "block_" + std::to_string(idx) + "_v.csv";
        std::string wname = "block_" + std::to_string(idx) + "_w.csv";
        {
            std::ofstream f(dir / vname);
            write_control_csv(f, b.v);
        }
        {
            std::ofstream f(dir / wname);
            write_control_csv(f, b.w);
        }
        rec["v_csv"] = vname;
        rec["w_csv"] = wname;
        blocks.push_back(rec);
        ++idx;
    }
    j["plan"] = blocks;
    j["target"] = {z(0).imag(), z(1).real(), z(1).imag()};
    j["certificates"] = {{"first_order_norm", plan.certificates.first_order_norm},
                         {"off_target", plan.certificates.off_target},
                         {"target_error", plan.certificates.target_error},
                         {"control_norm", plan.certificates.control_norm}};
    write_json(dir / "plan.json", j);
    std::cerr << "synthesize: wall " << timer.seconds() << " s\n";
    return kExitOk;
}

int cmd_mintime(const RunConfig& cfg) {
    Timer timer;
    DipoleModel mu = model_from_config(cfg);
    MintimeOptions opt;
    opt.grid_n = cfg.get_int("grid_n", 512);
    opt.kernel_j = cfg.get_int("kernel_j", 256);
    opt.freq_j_max = cfg.get_int("freq_j_max", 40);
    opt.sine_modes = cfg.get_int("sine_modes", 64);
    double tol = cfg.get_double("bisect_tol", 1e-3);

    double ts = t_star(mu, 1, cfg.get_int("series_j", 500));
    Bracket b1 = estimate_tmin1(mu, {0.99 * ts, 2.0 / M_PI}, tol, opt);
    Bracket b2 = estimate_tmin2(mu, {0.99 * ts, 2.0 / M_PI + 1e-3}, tol, opt);

    double eta = cfg.get_double("eta", 1e-4);
    auto eta_rep = coercivity_eta_check(mu, cfg.get_double("eta_T", 0.9 * b1.lo), eta,
                                        cfg.get_int("eta_samples", 1000), cfg.get_seed(), opt);

    json j = record_header(cfg, "mintime");
    j["t_star"] = ts;
    j["tmin1"] = {{"lo", b1.lo}, {"hi", b1.hi}, {"width", b1.width()}};
    j["tmin2"] = {{"lo", b2.lo}, {"hi", b2.hi}, {"width", b2.width()}};
    j["eta_check"] = {{"T", eta_rep.T},
                      {"eta", eta_rep.eta},
                      {"lambda", eta_rep.lambda},
                      {"samples", eta_rep.samples},
                      {"violations", eta_rep.violations},
                      {"eta_breakdown", std::isfinite(eta_rep.eta_breakdown)
                                            ? json(eta_rep.eta_breakdown)
                                            : json("none")},
                      {"eta_proof_bound", eta_rep.eta_proof_bound}};
    write_json(out_dir(cfg) / "mintime.json", j);
    std::cerr << "mintime: wall " << timer.seconds() << " s\n";
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
    Timer timer;
    DipoleModel mu = model_from_config(cfg);
    MintimeOptions opt;
    opt.grid_n = cfg.get_int("grid_n", 384);
    opt.kernel_j = cfg.get_int("kernel_j", 128);
    opt.freq_j_max = cfg.get_int("freq_j_max", 32);
    opt.sine_modes = cfg.get_int("sine_modes", 48);
    double lo = cfg.get_double("T_lo", 0.05);
    double hi = cfg.get_double("T_hi", 0.7);
    int points = cfg.get_int("points", 27);
    int threads = cfg.get_int("threads", 1);
    if (lo <= 0 || hi <= lo) throw ConfigError("need 0 < T_lo < T_hi");

    std::vector<SweepPoint> pts(points);
    parallel_for(points, threads, [&](int i) {
        double T = lo + (hi - lo) * i / std::max(1, points - 1);
        auto one = sweep(mu, T, T, 1, opt);
        pts[i] = one.front();
    });

    fs::path dir = out_dir(cfg);
    {
        std::ofstream f(dir / "sweep.csv");
        f << "T,lambda,top_h10,maximizer_end,maximizer_h1\n";
        f.precision(12);
        for (const auto& p : pts)
            f << p.T << "," << p.lambda << "," << p.top_h10 << "," << p.maximizer_end << ","
              << p.maximizer_h1 << "\n";
    }
    json j = record_header(cfg, "sweep");
    j["points"] = points;
    j["T_lo"] = lo;
    j["T_hi"] = hi;
    write_json(dir / "sweep.json", j);
    std::cerr << "sweep: wall " << timer.seconds() << " s\n";
    return kExitOk;
}

int run_command(const std::string& name, const RunConfig& cfg) {
    try {
        if (name == "simulate") return cmd_simulate(cfg);
        if (name == "expand") return cmd_expand(cfg);
        if (name == "forms") return cmd_forms(cfg);
        if (name == "moments") return cmd_moments(cfg);
        if (name == "synthesize") return cmd_synthesize(cfg);
        if (name == "mintime") return cmd_mintime(cfg);
        if (name == "sweep") return cmd_sweep(cfg);
        std::cerr << "unknown command: " << name << "\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

} // namespace bsc
