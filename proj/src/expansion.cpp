#include "bsc/expansion.hpp"

#include <cmath>
#include <stdexcept>

#include "bsc/oscillatory.hpp"

namespace bsc {

namespace {

constexpr cplx I(0.0, 1.0);

// interaction-picture coefficients X_k = <state(T), psi_k(T)> to plain coefficients
SpectralState from_interaction(Eigen::VectorXcd X, double T) {
    SpectralState s;
    s.time_stamp = T;
    for (int k = 1; k <= X.size(); ++k) X(k - 1) *= std::exp(-I * eigenvalue(k) * T);
    s.coeffs = std::move(X);
    return s;
}

std::vector<double> mode_eigenvalues(int n) {
    std::vector<double> lam(n);
    for (int k = 1; k <= n; ++k) lam[k - 1] = eigenvalue(k);
    return lam;
}

} // namespace

SpectralState first_order(const DipoleModel& mu, std::span<const Control> v, double T) {
    const int n = mu.truncation();
    const auto& M = mu.dipole_matrix();
    Eigen::VectorXcd X(n);
    for (int k = 1; k <= n; ++k)
        X(k - 1) = I * M(k - 1, 0) * moment(v, transition_frequency(k));
    return from_interaction(std::move(X), T);
}

SpectralState second_order(const DipoleModel& mu, std::span<const Control> v,
                           std::span<const Control> w, double T) {
    const int n = mu.truncation();
    const auto& M = mu.dipole_matrix();
    Eigen::VectorXcd X = Eigen::VectorXcd::Zero(n);
    for (int k = 1; k <= n; ++k)
        X(k - 1) = I * M(k - 1, 0) * moment(w, transition_frequency(k));

    auto lam = mode_eigenvalues(n);
    std::vector<cplx> weights(n);
    std::span<cplx> acc(X.data(), n);
    for (int j = 1; j <= n; ++j) {
        double mj1 = M(j - 1, 0);
        if (mj1 == 0.0) continue;
        for (int k = 1; k <= n; ++k) weights[k - 1] = -M(k - 1, j - 1) * mj1;
        chain2_all(v, lam, -eigenvalue(j), v, transition_frequency(j), acc, weights);
    }
    return from_interaction(std::move(X), T);
}

SpectralState third_order(const DipoleModel& mu, std::span<const Control> v,
                          std::span<const Control> w, std::span<const Control> nu, double T,
                          int J2) {
    const int n = mu.truncation();
    if (J2 < 0) J2 = n;
    J2 = std::min(J2, n);
    const auto& M = mu.dipole_matrix();
    Eigen::VectorXcd X = Eigen::VectorXcd::Zero(n);
    for (int k = 1; k <= n; ++k)
        X(k - 1) = I * M(k - 1, 0) * moment(nu, transition_frequency(k));

    auto lam = mode_eigenvalues(n);
    std::vector<cplx> weights(n);
    std::span<cplx> acc(X.data(), n);
    // quadratic cross terms between v and w
    for (int j = 1; j <= n; ++j) {
        double mj1 = M(j - 1, 0);
        if (mj1 != 0.0) {
            for (int k = 1; k <= n; ++k) weights[k - 1] = -M(k - 1, j - 1) * mj1;
            chain2_all(w, lam, -eigenvalue(j), v, transition_frequency(j), acc, weights);
            chain2_all(v, lam, -eigenvalue(j), w, transition_frequency(j), acc, weights);
        }
    }
    // cubic term in v
    for (int j1 = 1; j1 <= J2; ++j1) {
        for (int j2 = 1; j2 <= J2; ++j2) {
            double pair = M(j1 - 1, j2 - 1) * M(j2 - 1, 0);
            if (pair == 0.0) continue;
            for (int k = 1; k <= n; ++k) weights[k - 1] = -I * M(k - 1, j1 - 1) * pair;
            chain3_all(v, lam, -eigenvalue(j1), eigenvalue(j1) - eigenvalue(j2),
                       transition_frequency(j2), acc, weights);
        }
    }
    return from_interaction(std::move(X), T);
}

std::pair<SpectralState, SpectralState> gauge_expansion_terms(const DipoleModel& mu,
                                                              const Control& s, double T) {
    if (std::abs(s.value(s.t0)) > 1e-10)
        throw std::invalid_argument("gauge expansion requires s(0) = 0");
    const int n = mu.truncation();
    const auto& M = mu.dipole_matrix();
    const auto& G = mu.gradient_matrix();
    const auto& R = mu.squared_slope_matrix();
    std::span<const Control> fam(&s, 1);

    Eigen::VectorXcd X1(n);
    for (int k = 1; k <= n; ++k)
        X1(k - 1) = transition_frequency(k) * M(k - 1, 0) * moment(fam, transition_frequency(k));

    Eigen::VectorXcd X2 = Eigen::VectorXcd::Zero(n);
    for (int k = 1; k <= n; ++k)
        X2(k - 1) = -I * R(k - 1, 0) * moment_of_square(s, transition_frequency(k));
    auto lam = mode_eigenvalues(n);
    std::vector<cplx> weights(n);
    std::span<cplx> acc(X2.data(), n);
    for (int j = 1; j <= n; ++j) {
        double c = transition_frequency(j) * M(j - 1, 0);
        if (c == 0.0) continue;
        for (int k = 1; k <= n; ++k) weights[k - 1] = -G(k - 1, j - 1) * c;
        chain2_all(fam, lam, -eigenvalue(j), fam, transition_frequency(j), acc, weights);
    }
    return {from_interaction(std::move(X1), T), from_interaction(std::move(X2), T)};
}

namespace {

// amplitude-aware step: with one Richardson extrapolation the propagation error
// scales like eps * dt^4, so dt ~ eps^{3/4} keeps it proportional to the
// smallest remainder to be resolved (~ eps^4) with few steps
double pick_order_dt(double e, int n_modes) {
    double base = 2.6 / eigenvalue(n_modes);
    return std::min(base, 0.05 * std::pow(e, 0.75));
}

std::pair<double, double> loglog_fit(std::span<const double> x, std::span<const double> y) {
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double r_num = (n * sxy - sx * sy);
    double r_den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    double r2 = r_den > 0 ? (r_num / r_den) * (r_num / r_den) : 0.0;
    return {slope, r2};
}

} // namespace

OrderSlopes order_slopes(const DipoleModel& mu, const Control& v, const Control& w,
                         const Control& nu, std::span<const double> eps, double T,
                         const PropagateOptions& opt) {
    if (eps.size() < 3) throw std::invalid_argument("order_slopes needs at least 3 amplitudes");
    const int n = mu.truncation();
    std::vector<Control> fv{v}, fw{w}, fnu{nu};
    SpectralState Psi = first_order(mu, fv, T);
    SpectralState xi = second_order(mu, fv, fw, T);
    SpectralState zeta = third_order(mu, fv, fw, fnu, T);
    SpectralState base = ground_state(n, T);

    OrderSlopes out;
    out.eps.assign(eps.begin(), eps.end());
    for (double e : eps) {
        std::vector<Control> u{scaled(v, e), scaled(w, e * e), scaled(nu, e * e * e)};
        PropagateOptions local = opt;
        if (opt.dt <= 0.0) local.dt = pick_order_dt(e, n);
        // steps must subdivide the control segments: straddling a kink of the
        // piecewise-linear control breaks the smooth step-error expansion that
        // the extrapolation relies on
        local.dt = v.dt / std::ceil(v.dt / local.dt);
        Trajectory coarse = propagate(ground_state(n), u, mu, T, local);
        PropagateOptions half = local;
        half.dt = 0.5 * local.dt;
        Trajectory refined = propagate(ground_state(n), u, mu, T, half);
        // one Richardson step removes the leading second-order splitting error
        Eigen::VectorXcd psi =
            (4.0 * refined.final_state().coeffs - coarse.final_state().coeffs) / 3.0;
        Eigen::VectorXcd diff = psi - base.coeffs;
        out.remainders[0].push_back(diff.norm());
        diff -= e * Psi.coeffs;
        out.remainders[1].push_back(diff.norm());
        diff -= (e * e) * xi.coeffs;
        out.remainders[2].push_back(diff.norm());
        diff -= (e * e * e) * zeta.coeffs;
        out.remainders[3].push_back(diff.norm());
    }
    for (int o = 0; o < 4; ++o) {
        auto [slope, r2] = loglog_fit(out.eps, out.remainders[o]);
        out.slopes[o] = slope;
        out.r_squared[o] = r2;
    }
    return out;
}

} // namespace bsc
