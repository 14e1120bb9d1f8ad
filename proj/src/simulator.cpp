#include "bsc/simulator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

namespace bsc {

namespace {

constexpr cplx I(0.0, 1.0);

struct DipoleExp {
    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;

    explicit DipoleExp(const Eigen::MatrixXd& M) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        vecs = es.eigenvectors();
        vals = es.eigenvalues();
    }

    // e^{i theta M} c
    Eigen::VectorXcd apply(double theta, const Eigen::VectorXcd& c) const {
        Eigen::VectorXcd tmp = vecs.transpose() * c;
        for (int i = 0; i < tmp.size(); ++i) tmp(i) *= std::exp(I * theta * vals(i));
        return vecs * tmp;
    }
};

double pick_dt(const PropagateOptions& opt, int n_modes) {
    if (opt.dt > 0.0) return opt.dt;
    return opt.step_safety / eigenvalue(n_modes);
}

struct Recorder {
    Trajectory tr;
    int store_every;
    double base_norm;

    void record(int step, double t, const Eigen::VectorXcd& c, bool force) {
        double norm = c.norm();
        tr.norm_drift = std::max(tr.norm_drift, std::abs(norm - base_norm));
        if (force || (store_every > 0 && step % store_every == 0)) {
            tr.times.push_back(t);
            tr.states.push_back(SpectralState{c, t});
        }
    }
};

} // namespace

Trajectory propagate(const SpectralState& psi0, std::span<const Control> u,
                     const DipoleModel& mu, double T, const PropagateOptions& opt,
                     const SpectralForcing* forcing) {
    const int n = mu.truncation();
    if (psi0.modes() > n)
        throw std::invalid_argument("state has more modes than the dipole truncation");
    if (T <= 0.0)
        for (const auto& b : u) T = std::max(T, b.t_end());
    if (T <= 0.0) throw std::invalid_argument("propagate needs a positive horizon");
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
    c.head(psi0.modes()) = psi0.coeffs;

    const double dt_target = pick_dt(opt, n);
    const long steps = std::max<long>(1, std::lround(std::ceil(T / dt_target)));
    const double dt = T / static_cast<double>(steps);

    DipoleExp expM(mu.dipole_matrix());
    Eigen::VectorXcd half_phase(n);
    for (int k = 1; k <= n; ++k) half_phase(k - 1) = std::exp(-I * eigenvalue(k) * 0.5 * dt);

    Recorder rec{{}, opt.store_every, c.norm()};
    rec.record(0, 0.0, c, true);
    double prev_norm = c.norm();
    for (long s = 0; s < steps; ++s) {
        double t_mid = (static_cast<double>(s) + 0.5) * dt;
        c = c.cwiseProduct(half_phase).eval();
        double u_mid = eval_sum(u, t_mid);
        if (u_mid != 0.0) c = expM.apply(u_mid * dt, c);
        if (forcing) c += dt * I * (*forcing)(t_mid);
        c = c.cwiseProduct(half_phase).eval();
        double norm = c.norm();
        if (!forcing && std::abs(norm - prev_norm) > opt.drift_reject)
            throw StepSizeError("per-step norm drift exceeded the rejection threshold");
        prev_norm = norm;
        rec.record(static_cast<int>(s + 1), (s + 1) * dt, c,
                   s + 1 == steps);
    }
    rec.tr.states.back().time_stamp = T;
    return rec.tr;
}

Trajectory propagate_gauge(std::span<const Control> s, const DipoleModel& mu, double T,
                           const PropagateOptions& opt) {
    const int n = mu.truncation();
    if (T <= 0.0)
        for (const auto& b : s) T = std::max(T, b.t_end());
    if (T <= 0.0) throw std::invalid_argument("propagate_gauge needs a positive horizon");
    for (const auto& b : s)
        if (b.t0 <= 1e-12 && std::abs(b.value(b.t0)) > 1e-10)
            throw std::invalid_argument("gauge propagation requires s(0) = 0");

    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
    c(0) = 1.0;

    const double dt_target = pick_dt(opt, n);
    const long steps = std::max<long>(1, std::lround(std::ceil(T / dt_target)));
    const double dt = T / static_cast<double>(steps);

    const Eigen::MatrixXd& G = mu.gradient_matrix();
    const Eigen::MatrixXd& R = mu.squared_slope_matrix();
    Eigen::VectorXcd half_phase(n);
    for (int k = 1; k <= n; ++k) half_phase(k - 1) = std::exp(-I * eigenvalue(k) * 0.5 * dt);

    Recorder rec{{}, opt.store_every, c.norm()};
    rec.record(0, 0.0, c, true);
    double prev_norm = c.norm();
    Eigen::MatrixXcd W(n, n);
    for (long step = 0; step < steps; ++step) {
        double t_mid = (static_cast<double>(step) + 0.5) * dt;
        double sv = eval_sum(s, t_mid);
        c = c.cwiseProduct(half_phase).eval();
        if (sv != 0.0) {
            // W = -i s G + s^2 R is Hermitian (G antisymmetric real, R symmetric real)
            W = -I * sv * G.cast<cplx>() + sv * sv * R.cast<cplx>();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W);
            Eigen::VectorXcd tmp = es.eigenvectors().adjoint() * c;
            for (int i = 0; i < n; ++i) tmp(i) *= std::exp(-I * es.eigenvalues()(i) * dt);
            c = es.eigenvectors() * tmp;
        }
        c = c.cwiseProduct(half_phase).eval();
        double norm = c.norm();
        if (std::abs(norm - prev_norm) > opt.drift_reject)
            throw StepSizeError("per-step norm drift exceeded the rejection threshold");
        prev_norm = norm;
        rec.record(static_cast<int>(step + 1), (step + 1) * dt, c, step + 1 == steps);
    }
    rec.tr.states.back().time_stamp = T;
    return rec.tr;
}

SpectralState gauge_transform(const SpectralState& psi_tilde, double s_T,
                              const DipoleModel& mu) {
    const int n = mu.truncation();
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
    c.head(psi_tilde.modes()) = psi_tilde.coeffs;
    DipoleExp expM(mu.dipole_matrix());
    SpectralState out;
    out.coeffs = expM.apply(s_T, c);
    out.time_stamp = psi_tilde.time_stamp;
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    const int n = tr.states.empty() ? 0 : tr.states.front().modes();
    os << "t";
    for (int k = 1; k <= n; ++k) os << ",re_c" << k << ",im_c" << k;
    os << "\n";
    os.precision(17);
    for (size_t i = 0; i < tr.times.size(); ++i) {
        os << tr.times[i];
        for (int k = 0; k < n; ++k)
            os << "," << tr.states[i].coeffs(k).real() << "," << tr.states[i].coeffs(k).imag();
        os << "\n";
    }
}

} // namespace bsc
