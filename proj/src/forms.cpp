#include "bsc/forms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bsc/oscillatory.hpp"

namespace bsc {

double coupling_extended(const DipoleModel& mu, int a, int j) {
    if (a <= mu.truncation() && j <= mu.truncation()) return mu.coupling(a, j);
    GaussLegendre q{64, std::max(8, (a + j) / 24)};
    return q.integrate(
        [&](double x) { return mu.mu(x) * mode_function(a, x) * mode_function(j, x); }, 0.0,
        1.0);
}

namespace {

constexpr cplx I(0.0, 1.0);

std::vector<double> coupling_row(const DipoleModel& mu, int a, int J) {
    std::vector<double> row(J + 1, 0.0);
    for (int j = 1; j <= J; ++j) row[j] = coupling_extended(mu, a, j);
    return row;
}

double tail_coefficient(const std::vector<double>& m1, const std::vector<double>& mK, int J) {
    // |<mu phi_1, phi_j>| <= c1 / j^3 style bound extracted from the computed range
    double c1 = 0.0, cK = 0.0;
    for (int j = 1; j <= J; ++j) {
        c1 = std::max(c1, std::abs(m1[j]) * j * j * j);
        cK = std::max(cK, std::abs(mK[j]) * j * j * j);
    }
    // sum_{j>J} j^-6 < 1/(5 J^5)
    return c1 * cK / (5.0 * std::pow(static_cast<double>(J), 5.0));
}

} // namespace

FormReport q2(const DipoleModel& mu, int K, double T, std::span<const Control> v, int J) {
    if (J < 0) J = mu.truncation();
    FormReport rep;
    rep.kernel_truncation = J;
    auto m1 = coupling_row(mu, 1, J);
    auto mK = coupling_row(mu, K, J);
    rep.tail_coefficient = tail_coefficient(m1, mK, J);
    rep.lost_direction_warning = std::abs(m1[K]) * K * K * K > 1e-6;
    cplx acc(0, 0);
    for (int j = 1; j <= J; ++j) {
        double b = mK[j] * m1[j];
        if (b == 0.0) continue;
        acc -= b * chain2(v, eigenvalue(K) - eigenvalue(j), v, transition_frequency(j));
    }
    rep.value = acc;
    (void)T;
    return rep;
}

FormReport q2_tilde(const DipoleModel& mu, int K, double T, std::span<const Control> v, int J) {
    FormReport rep = q2(mu, K, T, v, J);
    double delta = eigenvalue(K) - eigenvalue(1);
    rep.value = cplx(std::imag(rep.value * std::exp(-I * delta * T)), 0.0);
    return rep;
}

FormReport q_primitive(const DipoleModel& mu, int K, double T, const Control& S, int J) {
    if (J < 0) J = mu.truncation();
    FormReport rep;
    rep.kernel_truncation = J;
    auto m1 = coupling_row(mu, 1, J);
    auto mK = coupling_row(mu, K, J);
    rep.tail_coefficient = tail_coefficient(m1, mK, J);
    rep.lost_direction_warning = std::abs(m1[K]) * K * K * K > 1e-6;

    const double delta = eigenvalue(K) - eigenvalue(1);
    double a_K = second_moment_coefficient(mu, K).value;
    // -A_K int S^2 cos[delta (t - T)]
    double value =
        -a_K * std::real(std::exp(-I * delta * T) * moment_of_square(S, delta));
    // + int int S S k(t,tau)
    std::span<const Control> fam(&S, 1);
    cplx phase = std::exp(I * delta * T);
    for (int j = 1; j <= J; ++j) {
        double c = (eigenvalue(j) - eigenvalue(K)) * transition_frequency(j) * m1[j] * mK[j];
        if (c == 0.0) continue;
        cplx ch = chain2(fam, eigenvalue(j) - eigenvalue(K), fam, -transition_frequency(j));
        value += c * std::imag(phase * ch);
    }
    rep.value = cplx(value, 0.0);
    return rep;
}

FormReport q3(const DipoleModel& mu, int K, double T, std::span<const Control> v, int J,
              int J2) {
    if (J < 0) J = mu.truncation();
    if (J2 < 0) J2 = std::min(mu.truncation(), 24);
    FormReport rep;
    rep.kernel_truncation = J2;
    const auto& M = mu.dipole_matrix();
    if (J2 > mu.truncation())
        throw std::invalid_argument("q3 kernel truncation exceeds the model truncation");
    rep.lost_direction_warning = std::abs(M(0, K - 1)) * K * K * K > 1e-6;
    cplx acc(0, 0);
    for (int j1 = 1; j1 <= J2; ++j1) {
        for (int j2 = 1; j2 <= J2; ++j2) {
            double B = M(K - 1, j1 - 1) * M(j1 - 1, j2 - 1) * M(j2 - 1, 0);
            if (B == 0.0) continue;
            acc += -I * B *
                   chain3(v, eigenvalue(K) - eigenvalue(j1),
                          eigenvalue(j1) - eigenvalue(j2), transition_frequency(j2));
        }
    }
    rep.value = acc;
    (void)T;
    return rep;
}

double coupling_series_constant(const DipoleModel& mu, int K, int J) {
    double acc = 0.0;
    for (int j = 1; j <= J; ++j) {
        double m1 = coupling_extended(mu, 1, j);
        double mK = (K == 1) ? m1 : coupling_extended(mu, K, j);
        acc += std::abs((eigenvalue(j) - eigenvalue(K)) * transition_frequency(j) * m1 * mK);
    }
    return acc;
}

double t_star(const DipoleModel& mu, int K, int J) {
    auto a = second_moment_coefficient(mu, K);
    if (a.degenerate)
        throw std::domain_error("t_star: the squared-slope overlap vanishes for this mode");
    double t = std::abs(a.value) / (2.0 * coupling_series_constant(mu, K, J));
    if (K >= 2) t = std::min(t, M_PI / (3.0 * (eigenvalue(K) - eigenvalue(1))));
    return t;
}

double second_moment_series(const DipoleModel& mu, int K, int J) {
    double acc = 0.0;
    double mid = 0.5 * (eigenvalue(1) + eigenvalue(K));
    for (int j = 1; j <= J; ++j) {
        double m1 = coupling_extended(mu, 1, j);
        double mK = (K == 1) ? m1 : coupling_extended(mu, K, j);
        acc += (eigenvalue(j) - mid) * m1 * mK;
    }
    return acc;
}

Control cosine_pulse(int segments) {
    return sample_control(0.0, 2.0 / M_PI, segments,
                          [](double t) { return std::cos(M_PI * M_PI * t); });
}

double cosine_pulse_series(const DipoleModel& mu, int J) {
    double acc = 0.0;
    for (int j = 2; j <= J; ++j) {
        double m1 = coupling_extended(mu, 1, j);
        double jj = static_cast<double>(j) * j;
        acc += m1 * m1 * (jj - 1.0) / (M_PI * M_PI * M_PI * jj * (jj - 2.0));
    }
    return acc;
}

RecoveryOrder classify_order(const DipoleModel& mu, int K, int J, double tol) {
    if (J < 0) J = mu.truncation();
    J = std::min(J, mu.truncation());
    const auto& M = mu.dipole_matrix();
    std::vector<double> b(J + 1, 0.0);
    double scale = 0.0;
    for (int j = 1; j <= J; ++j) {
        b[j] = M(K - 1, j - 1) * M(j - 1, 0);
        scale = std::max(scale, std::abs(M(j - 1, 0)) * std::abs(M(K - 1, std::min(j, K) - 1)));
    }
    double b_tol = tol * std::max(scale, 1e-6);

    // resonance pairs j*, k* <= K with lambda_{j*} - lambda_1 = lambda_K - lambda_{k*}
    auto resonant_partner = [&](int j) -> int {
        long long target = static_cast<long long>(K) * K + 1 - static_cast<long long>(j) * j;
        if (target < 1) return 0;
        auto k = static_cast<long long>(std::llround(std::sqrt(static_cast<double>(target))));
        for (long long c = std::max(1LL, k - 1); c <= k + 1; ++c)
            if (c * c == target && c <= K) return static_cast<int>(c);
        return 0;
    };

    bool degenerate = true;
    for (int j = 1; j <= J && degenerate; ++j) {
        if (std::abs(b[j]) <= b_tol) continue;
        if (j > K) {
            degenerate = false;
            break;
        }
        int k = resonant_partner(j);
        if (k == 0 || k > J || std::abs(b[j] - b[k]) > b_tol) degenerate = false;
    }
    if (!degenerate) return RecoveryOrder::order2;

    for (int j1 = K + 1; j1 <= J; ++j1) {
        if (std::abs(M(K - 1, j1 - 1)) <= tol) continue;
        for (int j2 = K + 1; j2 <= J; ++j2) {
            double triple = M(K - 1, j1 - 1) * M(j1 - 1, j2 - 1) * M(j2 - 1, 0);
            if (std::abs(triple) > tol * std::max(scale, 1e-6)) return RecoveryOrder::order3;
        }
    }
    return RecoveryOrder::undecided;
}

} // namespace bsc
