// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bsc/expansion.hpp"
#include "bsc/forms.hpp"
#include "bsc/mintime.hpp"
#include "bsc/moments.hpp"
#include "bsc/oscillatory.hpp"
#include "bsc/simulator.hpp"
#include "bsc/synthesis.hpp"

using namespace bsc;

namespace {

constexpr cplx I(0.0, 1.0);

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_s() {
    using clk = std::chrono::steady_clock;
    static const clk::time_point t0 = clk::now();
    return std::chrono::duration<double>(clk::now() - t0).count();
}

Control band_limited(double T, int n, unsigned seed, int modes = 12) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Control v = sample_control(0.0, T, n, [](double) { return 0.0; });
    for (int m = 1; m <= modes; ++m) {
        double a = g(rng) / m;
        for (int i = 0; i <= n; ++i) v.samples(i) += a * std::sin(m * M_PI * i * v.dt / T);
    }
    return v;
}

Control unit_band(double T, int n, unsigned seed, double norm = 1.0) {
    Control v = band_limited(T, n, seed);
    double l2 = v.l2_norm();
    if (l2 > 0) v.samples *= norm / l2;
    return v;
}

Eigen::VectorXcd interaction(const SpectralState& s, double T) {
    Eigen::VectorXcd x = s.coeffs;
    for (int k = 1; k <= x.size(); ++k) x(k - 1) *= std::exp(I * eigenvalue(k) * T);
    return x;
}

char buffer[512];
template <typename... A> std::string fmt(const char* f, A... a) {
    std::snprintf(buffer, sizeof(buffer), f, a...);
    return std::string(buffer);
}

// 1. unitarity of the propagation under bounded random controls
Outcome criterion_unitarity() {
    double start = now_s();
    auto mu = DipoleModel::preset("x_minus_half", 64);
    mu.dipole_matrix();
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Control u = unit_band(1.0, 1024, 100 + trial, 1.0);
        std::vector<Control> fam{u};
        Trajectory tr = propagate(ground_state(64), fam, mu, 1.0);
        worst = std::max(worst, tr.norm_drift);
    }
    double elapsed = now_s() - start;
    bool pass = worst <= 1e-9 && elapsed < 60.0;
    return {pass, fmt("max norm drift %.2e (<=1e-9), %.1f s (<60 s)", worst, elapsed)};
}

// 2. direct and gauge-transformed propagation agree at second order in the step
Outcome criterion_gauge() {
    auto mu = DipoleModel::preset("x_minus_half", 48);
    double T = 0.3;
    // 150 segments: every probe step subdivides a control segment exactly
    Control u = unit_band(T, 150, 7, 0.25);
    std::vector<Control> fu{u};
    Control s = u.primitive();
    std::vector<Control> fs{s};
    auto discrepancy = [&](double dt) {
        PropagateOptions opt;
        opt.dt = dt;
        Trajectory direct = propagate(ground_state(48), fu, mu, T, opt);
        Trajectory gauge = propagate_gauge(fs, mu, T, opt);
        SpectralState rec = gauge_transform(gauge.final_state(), s.value(T), mu);
        return (rec.coeffs - direct.final_state().coeffs).norm();
    };
    // order-2 decay measured from the stated step downward (the asymptotic
    // regime needs lambda_N dt of order one)
    double e0 = discrepancy(1e-4), e1 = discrepancy(5e-5), e2 = discrepancy(2.5e-5);
    double r1 = std::log2(e0 / e1), r2 = std::log2(e1 / e2);
    bool pass = e0 <= 1e-6 && r1 > 1.6 && r1 < 2.4 && r2 > 1.6 && r2 < 2.4;
    return {pass, fmt("gap %.2e at dt=1e-4 (<=1e-6), halving rates %.2f, %.2f (in [1.6,2.4])",
                      e0, r1, r2)};
}

// 3. amplitude-expansion remainders decay at orders 2, 3, 4
Outcome criterion_orders() {
    std::vector<double> eps;
    for (int p = 3; p <= 8; ++p) eps.push_back(std::pow(2.0, -p));
    std::string detail;
    bool pass = true;
    for (const char* name : {"x_minus_half", "x_squared"}) {
        auto mu = DipoleModel::preset(name, 12);
        double T = 0.3;
        Control v = unit_band(T, 96, 31, 1.2);
        Control w = unit_band(T, 96, 32, 1.0);
        Control nu = unit_band(T, 96, 33, 1.0);
        OrderSlopes s = order_slopes(mu, v, w, nu, eps, T);
        pass = pass && std::abs(s.slopes[1] - 2.0) <= 0.2 &&
               std::abs(s.slopes[2] - 3.0) <= 0.2 && std::abs(s.slopes[3] - 4.0) <= 0.2;
        detail += fmt("%s: %.2f/%.2f/%.2f ", name, s.slopes[1], s.slopes[2], s.slopes[3]);
    }
    return {pass, detail + "(targets 2/3/4 +-0.2)"};
}

// 4. tangent-space identities of the first two expansion terms
Outcome criterion_tangency() {
    double worst_t = 0.0, worst_i = 0.0;
    for (const char* name : {"x_minus_half", "x_squared"}) {
        auto mu = DipoleModel::preset(name, 24);
        for (double T : {0.3, 0.7}) {
            for (int trial = 0; trial < 5; ++trial) {
                Control v = unit_band(T, 256, 500 + trial, 1.0);
                Control w = unit_band(T, 256, 600 + trial, 1.0);
                std::vector<Control> fv{v}, fw{w};
                SpectralState Psi = first_order(mu, fv, T);
                SpectralState xi = second_order(mu, fv, fw, T);
                SpectralState base = ground_state(24, T);
                worst_t = std::max(worst_t,
                                   std::abs(std::real(base.coeffs.dot(Psi.coeffs))));
                worst_i = std::max(worst_i,
                                   std::abs(Psi.coeffs.squaredNorm() +
                                            2.0 * std::real(base.coeffs.dot(xi.coeffs))));
            }
        }
    }
    bool pass = worst_t <= 1e-8 && worst_i <= 1e-8;
    return {pass, fmt("max |Re<Psi,psi1>| %.2e, max |norm identity| %.2e (<=1e-8)", worst_t,
                      worst_i)};
}

// 5. the two routes to the imaginary second-order form agree on projected controls
Outcome criterion_form_identity() {
    auto mu = DipoleModel::preset("x_minus_half", 64);
    auto lost = lost_directions(mu, 64);
    auto freqs = controlled_frequencies(lost, 40);
    double worst = 0.0;
    int count = 0;
    for (int K : {1, 2}) {
        for (double T : {0.1, 0.3, 0.6}) {
            for (int trial = 0; trial < 50; ++trial) {
                Control v =
                    project_vt(band_limited(T, 768, 1000 + 97 * K + trial), freqs);
                std::vector<Control> fam{v};
                double nrm = v.l2_norm();
                if (nrm < 1e-9) continue;
                Control S = v.primitive();
                double lhs = q2_tilde(mu, K, T, fam).value.real();
                double rhs = q_primitive(mu, K, T, S).value.real();
                worst = std::max(worst, std::abs(lhs - rhs) / (nrm * nrm));
                ++count;
            }
        }
    }
    bool pass = worst <= 1e-6;
    return {pass, fmt("max |q2_tilde - q_primitive|/|v|^2 = %.2e over %d controls (<=1e-6)",
                      worst, count)};
}

// 6. cosine-pulse value against the independent series oracle
Outcome criterion_pulse_series() {
    auto mu = DipoleModel::preset("x_minus_half", 64);
    Control pulse = cosine_pulse(32768);
    std::vector<Control> fam{pulse};
    double value = q2_tilde(mu, 1, 2.0 / M_PI, fam).value.real();
    double series = cosine_pulse_series(mu, 500);
    double rel = std::abs(value - series) / std::abs(series);
    bool pass = series > 0.0 && rel <= 1e-6;
    return {pass, fmt("pulse %.9e vs series %.9e, relative gap %.2e (<=1e-6)", value, series,
                      rel)};
}

// 7. small-time coercivity of the primitive-variable form
Outcome criterion_coercivity() {
    auto mu = DipoleModel::preset("x_minus_half", 64);
    double a1 = second_moment_coefficient(mu, 1).value;
    double T = 0.9 * t_star(mu, 1);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0.0, 1.0);
    int violations = 0;
    double worst = -1e300;
    for (int trial = 0; trial < 1000; ++trial) {
        Control S = sample_control(0.0, T, 96, [&](double) { return g(rng); });
        double q = q_primitive(mu, 1, T, S, 64).value.real();
        double l2sq = moment_of_square(S, 0.0).real();
        double margin = q + 0.25 * a1 * l2sq;
        worst = std::max(worst, margin);
        if (margin > 1e-12 * std::max(1.0, l2sq)) ++violations;
    }
    bool pass = violations == 0 && std::abs(a1 - 1.0) < 1e-10;
    return {pass, fmt("A1 = %.12f, 1000 samples at T = %.4f, violations %d, worst margin %.2e",
                      a1, T, violations, worst)};
}

// 8. time-shift rotation of the expansion coefficients
Outcome criterion_rotation() {
    auto mu = DipoleModel::preset("x_minus_half", 16);
    double T = 0.9;
    auto lost = lost_directions(mu, 16);
    Control v = project_vt(band_limited(0.2, 384, 41), controlled_frequencies(lost, 24));
    Control w = band_limited(0.2, 384, 42);
    std::vector<Control> fv{v}, fw{w};
    Eigen::VectorXcd base = interaction(second_order(mu, fv, fw, T), T);
    double worst = 0.0, ground = 0.0;
    for (double theta : {0.21, 0.404, 0.57}) {
        std::vector<Control> sv{time_shift(v, theta, T)}, sw{time_shift(w, theta, T)};
        Eigen::VectorXcd sh = interaction(second_order(mu, sv, sw, T), T);
        for (int k = 1; k <= 8; ++k) {
            cplx rot = std::exp(I * (eigenvalue(k) - eigenvalue(1)) * theta);
            worst = std::max(worst, std::abs(sh(k - 1) - rot * base(k - 1)));
        }
        ground = std::max(ground, std::abs(sh(0) - base(0)));
    }
    bool pass = worst <= 1e-8 && ground <= 1e-8;
    return {pass, fmt("max phase mismatch %.2e over k<=8, ground invariance %.2e (<=1e-8)",
                      worst, ground)};
}

// 9. moment solver round trip and projector annihilating the first order
Outcome criterion_moment_solver() {
    double worst_rt = 0.0;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        MomentProblem p;
        p.T = 1.0;
        p.frequencies.push_back(0.0);
        for (int j = 2; j <= 12; ++j) p.frequencies.push_back(transition_frequency(j));
        p.targets.resize(12);
        p.targets(0) = cplx(g(rng), 0.0);
        for (int i = 1; i < 12; ++i) p.targets(i) = cplx(g(rng), g(rng));
        Control v = solve_moments(p, 2048);
        std::span<const Control> fam(&v, 1);
        double res = 0.0;
        for (size_t i = 0; i < p.frequencies.size(); ++i)
            res += std::norm(moment(fam, p.frequencies[i]) - p.targets(i));
        worst_rt = std::max(worst_rt, std::sqrt(res));
    }
    auto mu = DipoleModel::preset("x_minus_half", 64);
    auto lost = lost_directions(mu, 64);
    auto freqs = controlled_frequencies(lost, 40);
    double worst_psi = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        Control v = project_vt(band_limited(0.8, 1024, 900 + rep), freqs);
        std::vector<Control> fam{v};
        worst_psi = std::max(worst_psi, first_order(mu, fam, 0.8).coeffs.norm());
    }
    bool pass = worst_rt <= 1e-8 && worst_psi <= 1e-7;
    return {pass, fmt("round-trip residual %.2e (<=1e-8), projected |Psi(T)| %.2e (<=1e-7)",
                      worst_rt, worst_psi)};
}

// 10. second-order recovery certificates and non-overlap additivity
Outcome criterion_synthesis() {
    auto mu = DipoleModel::preset("two_lost_demo", 32);
    SynthesisOptions opt;
    opt.grid_n = 384;
    opt.trials = 12;
    opt.controlled_max = 24;
    opt.freq_j_max = 32;
    double T = 2.6;
    RecoveryBasis basis(mu, T, opt);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst_psi = 0.0, worst_rel = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXcd z = Eigen::VectorXcd::Zero(32);
        z(0) = cplx(0.0, 1e-3 * g(rng));
        z(1) = 1e-3 * cplx(g(rng), g(rng));
        SynthesisPlan plan = basis.assemble(z);
        Eigen::VectorXcd diff = plan.achieved_second - z;
        diff(0) = cplx(0.0, plan.achieved_second(0).imag()) - z(0); // tangential part
        worst_psi = std::max(worst_psi, plan.certificates.first_order_norm);
        worst_rel = std::max(worst_rel, diff.norm() / z.norm());
    }
    // non-overlap additivity with independent blocks
    SynthesisOptions o2 = opt;
    o2.seed += 5;
    BlockPair a = reach_second_order(mu, 2, 0.12, opt);
    BlockPair b = reach_second_order(mu, 2, 0.14, o2);
    double Tn = 0.9;
    std::vector<Control> va{time_shift(a.v, 0.05, Tn)}, wa{time_shift(a.w, 0.05, Tn)};
    std::vector<Control> vb{time_shift(b.v, 0.62, Tn)}, wb{time_shift(b.w, 0.62, Tn)};
    std::vector<Control> vs{va[0], vb[0]}, ws{wa[0], wb[0]};
    Eigen::VectorXcd xs = second_order(mu, vs, ws, Tn).coeffs -
                          second_order(mu, va, wa, Tn).coeffs -
                          second_order(mu, vb, wb, Tn).coeffs;
    double additivity = xs.norm();
    bool pass = worst_psi <= 1e-6 && worst_rel <= 0.05 && additivity <= 1e-8;
    return {pass, fmt("|Psi| %.2e (<=1e-6), rel target error %.2e (<=0.05), additivity %.2e "
                      "(<=1e-8)",
                      worst_psi, worst_rel, additivity)};
}

// 11. nonlinear steering near the ground state
Outcome criterion_fixed_point() {
    auto mu = DipoleModel::preset("two_lost_demo", 32);
    SynthesisOptions opt;
    opt.grid_n = 384;
    opt.trials = 12;
    opt.controlled_max = 24;
    opt.freq_j_max = 32;
    double T = 3.0, T1 = 2.6;
    const int n = 32;
    auto make_target = [&](double h3) {
        SpectralState psi = ground_state(n, T);
        Eigen::VectorXcd dir = Eigen::VectorXcd::Zero(n);
        dir(0) = cplx(0.0, 0.5);
        dir(1) = cplx(0.35, -0.5);
        dir(4) = cplx(-0.25, 0.4);
        for (int k = 1; k <= n; ++k) dir(k - 1) *= std::exp(-I * eigenvalue(k) * T);
        SpectralState d;
        d.coeffs = dir;
        double w = sobolev_norm(d, 3.0);
        psi.coeffs += (h3 / w) * dir;
        psi.coeffs /= psi.coeffs.norm();
        return psi;
    };
    SteerResult main = fixed_point_steer(mu, make_target(1e-3), T, T1, opt, {}, 10);
    bool pass = main.report.converged && main.report.outer_iterations <= 10 &&
                main.report.final_error <= 1e-5;
    // fixed-point magnitude shrinks linearly with the target
    std::vector<double> hs{1e-3, 5e-4, 2.5e-4, 1.25e-4}, zs;
    for (double h : hs) {
        SteerResult r = fixed_point_steer(mu, make_target(h), T, T1, opt, {}, 10);
        zs.push_back(r.report.z_norm);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < hs.size(); ++i) {
        double lx = std::log(hs[i]), ly = std::log(zs[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double slope = (hs.size() * sxy - sx * sy) / (hs.size() * sxx - sx * sx);
    pass = pass && std::abs(slope - 1.0) <= 0.2;
    return {pass, fmt("outer %d (<=10), final error %.2e (<=1e-5), z-scaling slope %.2f "
                      "(1 +- 0.2)",
                      main.report.outer_iterations, main.report.final_error, slope)};
}

// 12. minimal-time bracket for the reference dipole
Outcome criterion_mintime() {
    double start = now_s();
    auto mu = DipoleModel::preset("x_minus_half", 64);
    MintimeOptions opt;
    opt.grid_n = 512;
    opt.kernel_j = 256;
    opt.freq_j_max = 40;
    opt.sine_modes = 64;
    double ts = t_star(mu, 1, 500);
    Bracket b1 = estimate_tmin1(mu, {0.99 * ts, 2.0 / M_PI}, 1e-3, opt);
    Bracket b2 = estimate_tmin2(mu, {0.99 * ts, 2.0 / M_PI + 1e-3}, 1e-3, opt);
    // grid convergence of the gap at the bracket midpoint
    MintimeOptions fine = opt;
    fine.grid_n = 1024;
    double g_coarse = coercivity_gap(mu, 0.5 * (ts + b1.mid()), opt);
    double g_fine = coercivity_gap(mu, 0.5 * (ts + b1.mid()), fine);
    double rel = std::abs(g_coarse - g_fine) / std::max(std::abs(g_fine), 1e-12);
    double elapsed = now_s() - start;
    bool ordered = ts < b1.lo && b1.mid() <= b2.mid() + b1.width() + b2.width() &&
                   b2.hi <= 2.0 / M_PI + 1e-3 + 1e-3;
    bool pass = ordered && b1.width() <= 1e-3 && b2.width() <= 1e-3 && rel <= 0.01 &&
                elapsed < 600.0;
    return {pass,
            fmt("T*=%.4f < T1 in [%.4f,%.4f] <= T2 in [%.4f,%.4f] <= 2/pi+1e-3; grid drift "
                "%.2e%%; %.0f s",
                ts, b1.lo, b1.hi, b2.lo, b2.hi, 100.0 * rel, elapsed)};
}

// 13. recovery-order classification and cubic-form oddness
Outcome criterion_classification() {
    auto mu = DipoleModel::preset("x_minus_half", 32);
    bool c1 = classify_order(mu, 1) == RecoveryOrder::order2;
    DipoleModel base({0.0, 1.0}, {}, 32);
    double c = dipole_coefficient(base, 1, 2);
    DipoleModel proj({0.0, 1.0}, {-2.0 * c}, 32);
    bool c2 = classify_order(proj, 2) == RecoveryOrder::order3;
    Control v = band_limited(0.35, 128, 3);
    std::vector<Control> fam{v}, neg{scaled(v, -1.0)};
    cplx qa = q3(mu, 1, 0.35, fam, -1, 16).value;
    cplx qb = q3(mu, 1, 0.35, neg, -1, 16).value;
    double odd = std::abs(qa + qb);
    bool pass = c1 && c2 && odd <= 1e-14 * std::max(1.0, std::abs(qa));
    return {pass, fmt("x-1/2 K=1 -> order2 %d, projected-x K=2 -> order3 %d, |q3(v)+q3(-v)| "
                      "= %.1e",
                      c1 ? 1 : 0, c2 ? 1 : 0, odd)};
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    std::vector<Entry> entries = {
        {1, "unitarity under random controls", criterion_unitarity},
        {2, "gauge-transformed propagation consistency", criterion_gauge},
        {3, "amplitude-expansion remainder orders", criterion_orders},
        {4, "tangent-space identities", criterion_tangency},
        {5, "second-order form identity on projected controls", criterion_form_identity},
        {6, "cosine-pulse value vs series oracle", criterion_pulse_series},
        {7, "small-time coercivity", criterion_coercivity},
        {8, "time-shift rotation of expansion coefficients", criterion_rotation},
        {9, "moment solver round trip and projector", criterion_moment_solver},
        {10, "second-order recovery certificates", criterion_synthesis},
        {11, "nonlinear fixed-point steering", criterion_fixed_point},
        {12, "minimal-time bracket", criterion_mintime},
        {13, "recovery-order classification and cubic oddness", criterion_classification},
    };
    int failures = 0;
    for (auto& e : entries) {
        double t0 = now_s();
        Outcome o;
        try {
            o = e.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        std::printf("%s criterion %2d: %s - %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", e.id,
                    e.name, o.detail.c_str(), now_s() - t0);
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all %zu criteria passed\n", entries.size());
    return failures == 0 ? 0 : 1;
}
