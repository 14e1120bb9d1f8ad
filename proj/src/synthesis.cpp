#include "bsc/synthesis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "bsc/expansion.hpp"
#include "bsc/forms.hpp"
#include "bsc/mintime.hpp"
#include "bsc/oscillatory.hpp"

namespace bsc {

namespace {

constexpr cplx I(0.0, 1.0);

Eigen::VectorXcd interaction(const SpectralState& s, double T) {
    Eigen::VectorXcd x = s.coeffs;
    for (int k = 1; k <= x.size(); ++k) x(k - 1) *= std::exp(I * eigenvalue(k) * T);
    return x;
}

Control band_seed(std::mt19937_64& rng, double T, int n, int modes) {
    std::normal_distribution<double> g(0.0, 1.0);
    Control v = sample_control(0.0, T, n, [](double) { return 0.0; });
    for (int m = 1; m <= modes; ++m) {
        double a = g(rng) / std::sqrt(static_cast<double>(m));
        for (int i = 0; i <= n; ++i) v.samples(i) += a * std::sin(m * M_PI * i * v.dt / T);
    }
    return v;
}

std::vector<int> controlled_modes(const DipoleModel& mu, const LostDirectionSet& lost,
                                  int cap) {
    std::vector<int> out;
    for (int k = 1; k <= std::min(mu.truncation(), cap); ++k)
        if (!lost.contains(k)) out.push_back(k);
    return out;
}

// w on the given window cancelling the second-order components of the v-blocks
// on the controlled modes
Control cancel_w(const DipoleModel& mu, std::span<const Control> v_blocks,
                 const std::vector<int>& controlled, double horizon, double window_start,
                 double window_len, int grid_n) {
    Eigen::VectorXcd X = interaction(second_order(mu, v_blocks, {}, horizon), horizon);
    const auto& M = mu.dipole_matrix();
    MomentProblem p;
    p.T = window_len;
    p.frequencies.reserve(controlled.size());
    std::vector<cplx> targets;
    for (int k : controlled) {
        cplx d = -X(k - 1) / (I * M(k - 1, 0));
        if (k == 1) d = cplx(d.real(), 0.0);
        p.frequencies.push_back(transition_frequency(k));
        targets.push_back(d);
    }
    p.targets = Eigen::Map<Eigen::VectorXcd>(targets.data(), targets.size());
    return solve_moments(p, grid_n, nullptr, window_start);
}

double off_target_norm(const Eigen::VectorXcd& X, const std::vector<int>& controlled) {
    double worst = 0.0;
    for (int k : controlled) worst = std::max(worst, std::abs(X(k - 1)));
    return worst;
}

Eigen::MatrixXd vt_nullspace(const std::vector<double>& freqs, int n, double h) {
    std::vector<Eigen::VectorXd> rows;
    for (double f : freqs) {
        Eigen::VectorXcd m = hat_moments(n, h, f);
        rows.push_back(m.real());
        if (f > 0.0) rows.push_back(m.imag());
    }
    Eigen::MatrixXd C(static_cast<int>(rows.size()), n + 1);
    for (size_t r = 0; r < rows.size(); ++r) C.row(static_cast<int>(r)) = rows[r].transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
    double tol = 1e-12 * svd.singularValues().maxCoeff();
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++rank;
    return svd.matrixV().rightCols(C.cols() - rank);
}

Eigen::MatrixXd pl_mass(int n, double h) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int s = 0; s < n; ++s) {
        M(s, s) += h / 3.0;
        M(s + 1, s + 1) += h / 3.0;
        M(s, s + 1) += h / 6.0;
        M(s + 1, s) += h / 6.0;
    }
    return M;
}

// deterministic witnesses: extremal vectors of the complex second-order form
// restricted to the moment-constrained subspace, scanned over phase rotations
std::vector<Control> spectral_seeds(const DipoleModel& mu, int K, double T,
                                    const std::vector<double>& freqs, int grid_n) {
    const int n = grid_n;
    const double h = T / n;
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    for (int j = 1; j <= mu.truncation(); ++j) {
        double b = mu.coupling(K, j) * mu.coupling(j, 1);
        if (b == 0.0) continue;
        B -= b * hat_chain_matrix(n, h, eigenvalue(K) - eigenvalue(j), transition_frequency(j));
    }
    Eigen::MatrixXcd Bs = 0.5 * (B + B.transpose());
    Eigen::MatrixXd Z = vt_nullspace(freqs, n, h);
    Eigen::MatrixXd Mz = Z.transpose() * pl_mass(n, h) * Z;
    Eigen::MatrixXcd Bz = Z.transpose() * Bs * Z;
    std::vector<Control> out;
    for (int p = 0; p < 8; ++p) {
        double phi = p * M_PI / 8.0;
        Eigen::MatrixXd R = (std::exp(cplx(0.0, phi)) * Bz).real();
        R = 0.5 * (R + R.transpose());
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Mz);
        for (int side : {0, static_cast<int>(es.eigenvalues().size()) - 1}) {
            Eigen::VectorXd x = Z * es.eigenvectors().col(side);
            Control v{0.0, h, x};
            double nrm = v.l2_norm();
            if (nrm > 1e-12) out.push_back(scaled(v, 1.0 / nrm));
        }
    }
    return out;
}

} // namespace

Control time_shift(const Control& v, double theta, double T_new) {
    if (theta < 0.0) throw SynthesisError("time_shift needs a nonnegative shift");
    Control out = v;
    out.t0 = v.t0 + theta;
    if (out.t_end() > T_new + 1e-12 * std::max(1.0, T_new))
        throw SynthesisError("time_shift: shifted support overflows the horizon");
    return out;
}

std::vector<Control> SynthesisPlan::v_controls() const {
    std::vector<Control> out;
    for (const auto& b : blocks) out.push_back(b.v);
    return out;
}

std::vector<Control> SynthesisPlan::w_controls() const {
    std::vector<Control> out;
    for (const auto& b : blocks) out.push_back(b.w);
    return out;
}

std::vector<Control> SynthesisPlan::nu_controls() const {
    std::vector<Control> out;
    for (const auto& b : blocks)
        if (b.nu) out.push_back(*b.nu);
    return out;
}

std::vector<Control> SynthesisPlan::all_controls() const {
    std::vector<Control> out;
    for (const auto& b : blocks) {
        out.push_back(b.v);
        out.push_back(b.w);
        if (b.nu) out.push_back(*b.nu);
    }
    return out;
}

BlockPair reach_second_order(const DipoleModel& mu, int K, double T,
                             const SynthesisOptions& opt) {
    auto lost = lost_directions(mu, mu.truncation());
    if (!lost.contains(K))
        throw SynthesisError("mode is already controlled at first order");
    auto vt_freqs = controlled_frequencies(lost, opt.freq_j_max);
    auto controlled = controlled_modes(mu, lost, opt.controlled_max);

    std::mt19937_64 rng(opt.seed);
    std::vector<Control> seeds = spectral_seeds(mu, K, T, vt_freqs, opt.grid_n);
    for (int trial = 0; trial < opt.trials; ++trial)
        seeds.push_back(project_vt(band_seed(rng, T, opt.grid_n, opt.seed_modes), vt_freqs));
    Control best;
    double best_val = 0.0;
    for (const Control& v : seeds) {
        double nrm = v.l2_norm();
        if (nrm < 1e-12) continue;
        std::span<const Control> fam(&v, 1);
        double val = std::abs(q2(mu, K, T, fam).value) / (nrm * nrm);
        if (val > best_val) {
            best_val = val;
            best = scaled(v, 1.0 / nrm);
        }
    }
    if (best_val < opt.q_floor)
        throw SynthesisError(
            "no seed with a usable second-order response; the form may degenerate here");

    BlockPair out;
    out.v = best;
    std::span<const Control> fam(&out.v, 1);
    out.w = cancel_w(mu, fam, controlled, T, 0.0, T, opt.grid_n);
    Eigen::VectorXcd X = interaction(second_order(mu, {&out.v, 1}, {&out.w, 1}, T), T);
    out.xi = X;
    out.q_value = std::abs(X(K - 1));
    out.first_order_norm = first_order(mu, fam, T).coeffs.norm();
    out.off_target = off_target_norm(X, controlled);
    return out;
}

RotationBasis::Sector RotationBasis::decompose(cplx target) const {
    Sector best{-1, 0.0, 0.0};
    double best_min = -1e30;
    for (int j = 0; j < 4; ++j) {
        cplx a = f[j], b = f[(j + 1) % 4];
        double det = a.real() * b.imag() - a.imag() * b.real();
        if (std::abs(det) < 1e-14) continue;
        double d1 = (target.real() * b.imag() - target.imag() * b.real()) / det;
        double d2 = (a.real() * target.imag() - a.imag() * target.real()) / det;
        double mn = std::min(d1, d2);
        if (mn > best_min) {
            best_min = mn;
            best = Sector{j, std::max(0.0, d1), std::max(0.0, d2)};
        }
    }
    if (best.j < 0) throw SynthesisError("rotation basis is degenerate");
    return best;
}

RotationBasis basis_lost_direction(const DipoleModel& mu, int K, double T, double T_c,
                                   double T_theta, double pair_shift, double window_start,
                                   const SynthesisOptions& opt) {
    if (!(T_c < T_theta))
        throw SynthesisError("rotation basis needs T_c < T_theta");
    double delta = eigenvalue(K) - eigenvalue(1);
    double halfp = M_PI / delta;
    double ratio = pair_shift / halfp;
    long p = std::lround(ratio);
    if (p < 1 || p % 2 == 0 || std::abs(ratio - static_cast<double>(p)) > 1e-9)
        throw SynthesisError("pair_shift must be an odd multiple of the half period");
    if (!(T_c + T_theta < pair_shift))
        throw SynthesisError("rotation basis blocks would overlap across the pair shift");
    BlockPair base = reach_second_order(mu, K, T_c, opt);

    RotationBasis rb;
    rb.K = K;
    std::array<double, 4> shifts{0.0, T_theta, pair_shift, T_theta + pair_shift};
    for (int j = 0; j < 4; ++j) {
        PlannedBlock blk;
        blk.v = time_shift(base.v, window_start + shifts[j], T);
        blk.w = time_shift(base.w, window_start + shifts[j], T);
        blk.role = "rotation_" + std::to_string(j + 1);
        std::vector<Control> fv{blk.v}, fw{blk.w};
        Eigen::VectorXcd X = interaction(second_order(mu, fv, fw, T), T);
        rb.f[j] = X(K - 1);
        rb.f_tilde_im[j] = std::imag(X(0));
        rb.blocks[j] = std::move(blk);
    }
    return rb;
}

GroundPair reach_ground_pair(const DipoleModel& mu, int rotating_mode, double window,
                             double T_c1, const SynthesisOptions& opt) {
    auto lost = lost_directions(mu, mu.truncation());
    if (!lost.contains(1)) throw SynthesisError("ground mode is not lost for this model");
    auto vt_freqs = controlled_frequencies(lost, opt.freq_j_max);
    auto controlled = controlled_modes(mu, lost, opt.controlled_max);
    double delta = eigenvalue(rotating_mode) - eigenvalue(1);

    // odd multiple of the half period inside the admissible window
    double rot = M_PI / delta;
    int k_odd = -1;
    for (int k = 1;; k += 2) {
        double tshift = k * rot;
        if (tshift > T_c1 * (1.0 + 1e-9)) {
            if (tshift + T_c1 <= window * (1.0 + 1e-12)) k_odd = k;
            break;
        }
    }
    if (k_odd < 0)
        throw SynthesisError("no odd half-period shift fits the ground-pair window");
    double tshift = k_odd * rot;

    // seed search for both signs of the imaginary second-order form
    std::mt19937_64 rng(opt.seed + 1);
    std::vector<Control> seeds;
    if (T_c1 >= 2.0 / M_PI * (1.0 + 1e-9)) {
        Control cp = cosine_pulse(opt.grid_n);
        seeds.push_back(cp);
    }
    {
        // deterministic witness from the conforming-subspace maximizer
        MintimeOptions mo;
        mo.grid_n = std::min(opt.grid_n, 256);
        mo.kernel_j = std::min(mu.truncation(), 64);
        mo.freq_j_max = opt.freq_j_max;
        mo.sine_modes = 48;
        FormOperator op = build_form_operator(mu, T_c1, Subspace::h10_conforming, mo);
        Eigen::VectorXd w;
        if (top_rayleigh(op, &w) > 0.0) {
            Control v = sample_control(0.0, T_c1, opt.grid_n, [&](double t) {
                double acc = 0.0;
                for (int m = 1; m <= w.size(); ++m)
                    acc += w(m - 1) * (m * M_PI / T_c1) * std::cos(m * M_PI * t / T_c1);
                return acc;
            });
            seeds.push_back(v);
        }
    }
    for (int trial = 0; trial < opt.trials; ++trial)
        seeds.push_back(band_seed(rng, T_c1, opt.grid_n, opt.seed_modes));
    for (Control& s : spectral_seeds(mu, 1, T_c1, vt_freqs, opt.grid_n)) seeds.push_back(s);

    Control best_pos, best_neg;
    double val_pos = 0.0, val_neg = 0.0;
    for (const Control& s : seeds) {
        Control v = project_vt(s, vt_freqs);
        double nrm = v.l2_norm();
        if (nrm < 1e-12) continue;
        std::span<const Control> fam(&v, 1);
        double val = q2_tilde(mu, 1, T_c1, fam).value.real() / (nrm * nrm);
        if (val > val_pos) {
            val_pos = val;
            best_pos = scaled(v, 1.0 / nrm);
        }
        if (val < val_neg) {
            val_neg = val;
            best_neg = scaled(v, 1.0 / nrm);
        }
    }
    if (val_pos < opt.q_floor)
        throw SynthesisError("no positive witness of the imaginary form at this window");
    if (val_neg > -opt.q_floor)
        throw SynthesisError("no negative witness of the imaginary form at this window");

    GroundPair gp;
    gp.support_end = tshift + T_c1;
    auto build = [&](const Control& v_raw, double val, std::vector<Control>& vs,
                     std::vector<Control>& ws) {
        Control v = scaled(v_raw, 1.0 / std::sqrt(std::abs(val)));
        std::vector<Control> fam{v};
        Control w = cancel_w(mu, fam, controlled, T_c1, 0.0, T_c1, opt.grid_n);
        vs = {v, time_shift(v, tshift, window)};
        ws = {w, time_shift(w, tshift, window)};
    };
    build(best_pos, val_pos, gp.v_plus, gp.w_plus);
    build(best_neg, val_neg, gp.v_minus, gp.w_minus);
    double horizon = window;
    Eigen::VectorXcd Xp = interaction(second_order(mu, gp.v_plus, gp.w_plus, horizon), horizon);
    Eigen::VectorXcd Xm =
        interaction(second_order(mu, gp.v_minus, gp.w_minus, horizon), horizon);
    gp.achieved_plus = std::imag(Xp(0));
    gp.achieved_minus = std::imag(Xm(0));
    return gp;
}

RecoveryBasis::RecoveryBasis(const DipoleModel& mu, double T, const SynthesisOptions& opt)
    : mu_(mu), T_(T), opt_(opt) {
    auto lost = lost_directions(mu, mu.truncation());
    lost_ = lost.indices;
    if (lost_.size() != 2 || lost_[0] != 1)
        throw SynthesisError(
            "the constructive recovery expects the ground mode plus one rotating lost mode");
    int K2 = lost_[1];
    double delta = eigenvalue(K2) - eigenvalue(1);
    double halfp = M_PI / delta;

    // positivity time of the imaginary ground form, with a safety margin
    MintimeOptions mo;
    mo.grid_n = 256;
    mo.kernel_j = std::min(mu.truncation(), 64);
    mo.freq_j_max = opt.freq_j_max;
    mo.sine_modes = 48;
    double ts = t_star(mu, 1, 200);
    Bracket b2 = estimate_tmin2(mu, {0.9 * ts, 2.0 / M_PI + 1e-3}, 1e-3, mo);
    double t2 = opt.tmin2_margin * b2.hi;
    t2_ = t2;
    t_sharp_ = 2.0 * t2 + 3.0 * halfp;

    // ground pair occupies [0, ground_span]; the four rotation blocks sit after
    // it. The pair shifts are odd multiples of the half period: longer shifts
    // than the minimal one buy longer blocks, whose second-order response is
    // far better conditioned.
    double Tc1 = 1.02 * t2;
    double Tq = 0.0;
    for (int q = 1;; q += 2) {
        if (q * halfp > 1.05 * Tc1) {
            Tq = q * halfp;
            break;
        }
    }
    double ground_span = Tq + Tc1;

    double budget = T - ground_span;
    int best_p = 0;
    double best_tc = 0.0;
    for (int p = 1; p * halfp < budget; p += 2) {
        double room = std::min(0.95 * p * halfp, 0.98 * budget - p * halfp);
        double tc = std::min(0.22, room / 2.6);
        if (tc > best_tc) {
            best_tc = tc;
            best_p = p;
        }
    }
    t_schedule_ = ground_span + 3.0 * halfp + 0.05;
    if (best_p == 0 || best_tc < 1e-3)
        throw SynthesisError("horizon below the schedule length " +
                             std::to_string(t_schedule_));
    double pair_shift = best_p * halfp;
    double T_c = best_tc;
    // phase of the quarter shift tuned toward pi/2 within the admissible range
    double lo = 1.2 * T_c;
    double hi = std::min(0.95 * pair_shift, 0.98 * budget - pair_shift) - T_c;
    double T_theta = lo;
    double best_score = -2.0;
    for (int i = 0; i <= 200; ++i) {
        double cand = lo + (hi - lo) * i / 200.0;
        double score = std::sin(delta * cand); // want the rotated copy orthogonal-ish
        if (score > best_score) {
            best_score = score;
            T_theta = cand;
        }
    }
    double rot_span = pair_shift + T_theta + T_c;
    double window_start = T - rot_span;
    if (window_start < ground_span - 1e-12)
        throw SynthesisError("rotation and ground windows overlap; enlarge the horizon");

    rot_ = basis_lost_direction(mu, K2, T, T_c, T_theta, pair_shift, window_start, opt);
    ground_ = reach_ground_pair(mu, K2, window_start, Tc1, opt);
}

SynthesisPlan RecoveryBasis::assemble(const Eigen::VectorXcd& target) const {
    const int n = mu_.truncation();
    SynthesisPlan plan;
    plan.T = T_;
    plan.target = Eigen::VectorXcd::Zero(n);
    if (target.size() != n) throw SynthesisError("target dimension mismatch");
    for (int k = 1; k <= n; ++k) {
        bool is_lost = std::find(lost_.begin(), lost_.end(), k) != lost_.end();
        if (!is_lost && std::abs(target(k - 1)) > 1e-12)
            throw SynthesisError("target must live on the lost directions");
    }
    if (std::abs(target(0).real()) > 1e-12)
        throw SynthesisError("the ground component of a reachable target is imaginary");
    plan.target = target;

    double x = target(0).imag();
    int K2 = lost_[1];
    cplx tau = target(K2 - 1);

    if (target.norm() < 1e-300) {
        plan.achieved_second = Eigen::VectorXcd::Zero(n);
        return plan;
    }

    auto sector = rot_.decompose(tau);
    double g = x - sector.d1 * rot_.f_tilde_im[sector.j] -
               sector.d2 * rot_.f_tilde_im[(sector.j + 1) % 4];
    double achieved_unit = g >= 0.0 ? ground_.achieved_plus : ground_.achieved_minus;
    double c = g / achieved_unit; // nonnegative by the sign choice
    const auto& vs = g >= 0.0 ? ground_.v_plus : ground_.v_minus;
    const auto& ws = g >= 0.0 ? ground_.w_plus : ground_.w_minus;

    auto add_scaled = [&](const Control& v, const Control& w, double d, std::string role) {
        if (d <= 0.0) return;
        PlannedBlock blk;
        blk.v = scaled(v, std::sqrt(d));
        blk.w = scaled(w, d);
        blk.role = std::move(role);
        plan.blocks.push_back(std::move(blk));
    };
    for (size_t i = 0; i < vs.size(); ++i)
        add_scaled(vs[i], ws[i], c, g >= 0.0 ? "ground_plus" : "ground_minus");
    add_scaled(rot_.blocks[sector.j].v, rot_.blocks[sector.j].w, sector.d1,
               rot_.blocks[sector.j].role);
    add_scaled(rot_.blocks[(sector.j + 1) % 4].v, rot_.blocks[(sector.j + 1) % 4].w,
               sector.d2, rot_.blocks[(sector.j + 1) % 4].role);

    // certificates recomputed from the expansion of the assembled plan
    auto vlist = plan.v_controls();
    auto wlist = plan.w_controls();
    Eigen::VectorXcd X = interaction(second_order(mu_, vlist, wlist, T_), T_);
    plan.achieved_second = X;
    plan.certificates.first_order_norm = first_order(mu_, vlist, T_).coeffs.norm();
    auto lostset = lost_directions(mu_, n);
    plan.certificates.off_target =
        off_target_norm(X, controlled_modes(mu_, lostset, opt_.controlled_max));
    cplx ach_ground(0.0, std::imag(X(0)));
    double terr = std::norm(ach_ground - target(0)) + std::norm(X(K2 - 1) - tau);
    plan.certificates.target_error = std::sqrt(terr);
    plan.certificates.control_norm = l2_norm_sum(vlist) + l2_norm_sum(wlist);
    return plan;
}

SynthesisPlan lambda_map(const DipoleModel& mu, const Eigen::VectorXcd& target, double T,
                         const SynthesisOptions& opt) {
    RecoveryBasis basis(mu, T, opt);
    return basis.assemble(target);
}

ThirdOrderPlan reach_third_order(const DipoleModel& mu, int K, double T, cplx target,
                                 const SynthesisOptions& opt) {
    if (classify_order(mu, K) != RecoveryOrder::order3)
        throw SynthesisError("mode is not a third-order recovery case");
    auto lost = lost_directions(mu, mu.truncation());
    auto vt_freqs = controlled_frequencies(lost, opt.freq_j_max);
    auto controlled = controlled_modes(mu, lost, opt.controlled_max);
    double delta = eigenvalue(K) - eigenvalue(1);

    // a single block: amplitude fixes |zeta_K|, the sign flip and a time shift
    // (which rotates the response like every expansion coefficient) fix its
    // phase, and no cross terms arise between blocks
    double period = 2.0 * M_PI / delta;
    double span = T - period * 1.02;
    if (span < 0.1 * T)
        throw SynthesisError("horizon too short to place the shifted cubic block");
    std::mt19937_64 rng(opt.seed + 2);
    Control best;
    cplx best_q(0, 0);
    for (int trial = 0; trial < opt.trials; ++trial) {
        Control v = project_vt(band_seed(rng, span, opt.grid_n, opt.seed_modes), vt_freqs);
        double nrm = v.l2_norm();
        if (nrm < 1e-12) continue;
        Control vu = scaled(v, 1.0 / nrm);
        std::span<const Control> fam(&vu, 1);
        cplx q = q3(mu, K, T, fam).value;
        if (std::abs(q) > std::abs(best_q)) {
            best_q = q;
            best = vu;
        }
    }
    if (std::abs(best_q) < opt.q3_floor)
        throw SynthesisError("no seed with a usable cubic response");

    ThirdOrderPlan out;
    if (std::abs(target) < 1e-300) {
        out.v_blocks = {};
        out.w = Control{};
        out.nu = Control{};
        out.q3_value = 0.0;
        return out;
    }
    double amp = std::cbrt(std::abs(target) / std::abs(best_q));
    double phase = std::arg(target) - std::arg(best_q);
    double theta = phase / delta;
    while (theta < 0.0) theta += period;
    double sign = 1.0;
    // sign flip halves the largest required rotation
    if (theta > 0.5 * period) {
        sign = -1.0;
        theta -= 0.5 * period;
    }
    Control v = time_shift(scaled(best, sign * amp), theta, T);
    std::vector<Control> vfam{v};
    out.v_blocks = vfam;
    // w cancels the controlled second-order components; sharing the v grid
    // keeps the cross chains exact
    out.w = cancel_w(mu, vfam, controlled, T, v.t0, v.duration(), v.segments());
    std::vector<Control> wfam{out.w};
    // nu cancels the controlled third-order components (it only acts linearly)
    Eigen::VectorXcd Z = interaction(third_order(mu, vfam, wfam, {}, T), T);
    const auto& M = mu.dipole_matrix();
    MomentProblem p;
    p.T = v.duration();
    std::vector<cplx> targets;
    for (int k : controlled) {
        cplx d = -Z(k - 1) / (I * M(k - 1, 0));
        if (k == 1) d = cplx(d.real(), 0.0);
        p.frequencies.push_back(transition_frequency(k));
        targets.push_back(d);
    }
    p.targets = Eigen::Map<Eigen::VectorXcd>(targets.data(), targets.size());
    out.nu = solve_moments(p, v.segments(), nullptr, v.t0);

    std::vector<Control> nufam{out.nu};
    Eigen::VectorXcd Zf = interaction(third_order(mu, vfam, wfam, nufam, T), T);
    Eigen::VectorXcd Xf = interaction(second_order(mu, vfam, wfam, T), T);
    out.q3_value = Zf(K - 1);
    out.achieved_third = Zf;
    out.certificates.first_order_norm = first_order(mu, vfam, T).coeffs.norm();
    double off2 = off_target_norm(Xf, controlled) + std::abs(Xf(K - 1));
    double off3 = off_target_norm(Zf, controlled);
    out.certificates.off_target = std::max(off2, off3);
    out.certificates.target_error = std::abs(Zf(K - 1) - target);
    out.certificates.control_norm = l2_norm_sum(vfam);
    return out;
}

std::vector<Control> ThirdOrderPlan::all_controls() const {
    std::vector<Control> out = v_blocks;
    out.push_back(w);
    out.push_back(nu);
    return out;
}

Control linear_steer(const DipoleModel& mu, const SpectralState& target, double T,
                     const SynthesisOptions& opt, double window_start) {
    auto lost = lost_directions(mu, mu.truncation());
    Eigen::VectorXcd X = interaction(target, target.time_stamp);
    for (int K : lost.indices)
        if (K <= X.size() && std::abs(X(K - 1)) > 1e-9)
            throw SynthesisError("target has a component on a lost direction");
    auto controlled = controlled_modes(mu, lost, opt.controlled_max);
    const auto& M = mu.dipole_matrix();
    MomentProblem p;
    p.T = T;
    std::vector<cplx> targets;
    for (int k : controlled) {
        if (k - 1 >= X.size()) break;
        cplx d = X(k - 1) / (I * M(k - 1, 0));
        if (k == 1) {
            if (std::abs(d.imag()) > 1e-8)
                throw SynthesisError("ground target component violates the tangency constraint");
            d = cplx(d.real(), 0.0);
        }
        p.frequencies.push_back(transition_frequency(k));
        targets.push_back(d);
    }
    p.targets = Eigen::Map<Eigen::VectorXcd>(targets.data(), targets.size());
    return solve_moments(p, opt.grid_n, nullptr, window_start);
}

SteerResult fixed_point_steer(const DipoleModel& mu, const SpectralState& psi_f, double T,
                              double T1, const SynthesisOptions& opt,
                              const PropagateOptions& sim, int max_outer) {
    const int n = mu.truncation();
    if (psi_f.modes() != n) throw SynthesisError("target truncation mismatch");
    RecoveryBasis basis(mu, T1, opt);
    if (T1 >= T) throw SynthesisError("intermediate time must precede the horizon");
    auto lost = lost_directions(mu, n);
    auto controlled = controlled_modes(mu, lost, opt.controlled_max);

    Eigen::VectorXcd Xf = interaction(psi_f, T);
    auto project_m = [&](const Eigen::VectorXcd& X) {
        Eigen::VectorXcd z = Eigen::VectorXcd::Zero(n);
        z(0) = cplx(0.0, X(0).imag());
        for (size_t i = 1; i < lost.indices.size(); ++i)
            z(lost.indices[i] - 1) = X(lost.indices[i] - 1);
        return z;
    };
    Eigen::VectorXcd pm_target = project_m(Xf);

    SteerResult result;
    Eigen::VectorXcd z = Eigen::VectorXcd::Zero(n);
    std::vector<Control> best_controls;
    double best_error = std::numeric_limits<double>::infinity();

    for (int outer = 0; outer < max_outer; ++outer) {
        std::vector<Control> controls;
        if (z.norm() > 1e-14) {
            SynthesisPlan plan = basis.assemble(z);
            controls = plan.all_controls();
        }
        // Newton-refined window solve replacing the abstract right inverse
        std::vector<Control> tail;
        Eigen::VectorXcd X_T;
        for (int inner = 0; inner < opt.newton_max_iter; ++inner) {
            std::vector<Control> all = controls;
            all.insert(all.end(), tail.begin(), tail.end());
            Trajectory tr = propagate(ground_state(n), all, mu, T, sim);
            X_T = interaction(tr.final_state(), T);
            SpectralState delta;
            delta.time_stamp = T;
            delta.coeffs = Eigen::VectorXcd::Zero(n);
            double mismatch = 0.0;
            for (int k : controlled) {
                cplx d = Xf(k - 1) - X_T(k - 1);
                if (k == 1) d = cplx(0.0, d.imag());
                delta.coeffs(k - 1) = d * std::exp(-I * eigenvalue(k) * T);
                mismatch += std::norm(d);
            }
            mismatch = std::sqrt(mismatch);
            if (mismatch < opt.newton_tol) break;
            Control du = linear_steer(mu, delta, T - T1, opt, T1);
            if (tail.empty())
                tail.push_back(du);
            else
                tail[0].samples += du.samples;
        }
        std::vector<Control> all = controls;
        all.insert(all.end(), tail.begin(), tail.end());
        Trajectory tr = propagate(ground_state(n), all, mu, T, sim);
        X_T = interaction(tr.final_state(), T);
        double err = (tr.final_state().coeffs - psi_f.coeffs).norm();
        if (err < best_error) {
            best_error = err;
            best_controls = all;
        }
        Eigen::VectorXcd residual = pm_target - project_m(X_T);
        result.report.outer_residuals.push_back(residual.norm());
        result.report.outer_iterations = outer + 1;
        if (residual.norm() < 1e-10) break;
        z += residual;
    }
    result.controls = std::move(best_controls);
    result.report.final_error = best_error;
    result.report.z_norm = z.norm();
    result.report.converged = best_error < 1e-5;
    return result;
}

} // namespace bsc
