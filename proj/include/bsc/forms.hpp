#pragma once

#include <complex>
#include <span>

#include "bsc/control.hpp"
#include "bsc/spectral.hpp"

namespace bsc {

struct FormReport {
    cplx value{0.0, 0.0};
    int kernel_truncation = 0;
    double tail_coefficient = 0.0; ///< bound on the summed magnitude of dropped kernel terms
    bool lost_direction_warning = false; ///< set when <mu phi_1, phi_K> is not negligible
};

/// Second-order form along mode K: double time-ordered integral of v against the
/// truncated oscillatory kernel. Equals <xi(T), psi_K(T)> whenever mode K is
/// uncontrolled at first order.
FormReport q2(const DipoleModel& mu, int K, double T, std::span<const Control> v, int J = -1);

/// Imaginary-part variant: Im <xi(T), phi_K e^{-i lambda_1 T}>.
FormReport q2_tilde(const DipoleModel& mu, int K, double T, std::span<const Control> v,
                    int J = -1);

/// The primitive-variable form: -A_K int S^2 cos[(lambda_K-lambda_1)(t-T)]
/// plus the double integral of S against the frequency-weighted kernel.
FormReport q_primitive(const DipoleModel& mu, int K, double T, const Control& S, int J = -1);

/// Third-order form: triple time-ordered integral against the double-indexed kernel.
FormReport q3(const DipoleModel& mu, int K, double T, std::span<const Control> v, int J = -1,
              int J2 = -1);

/// C_K = sum_j |(lambda_j - lambda_K) omega_j <mu phi_1, phi_j><mu phi_K, phi_j>|,
/// truncated at J (monotone nondecreasing in J).
double coupling_series_constant(const DipoleModel& mu, int K, int J = 500);

/// Small-time coercivity threshold: |A_K| / (2 C_K), capped by
/// pi / (3 (lambda_K - lambda_1)) for K >= 2. Throws on degenerate A_K.
double t_star(const DipoleModel& mu, int K, int J = 500);

/// Partial sums of (lambda_j - (lambda_1+lambda_K)/2) <mu phi_1,phi_j><mu phi_K,phi_j>,
/// which converge to A_K; used as an independent consistency oracle.
double second_moment_series(const DipoleModel& mu, int K, int J);

/// The cosine pulse cos(pi^2 t) on [0, 2/pi], sampled on `segments` intervals.
Control cosine_pulse(int segments);

/// Series value of the imaginary second-order form for the cosine pulse at K=1:
/// sum_j <mu phi_1, phi_j>^2 (j^2-1) / (pi^3 j^2 (j^2-2)).
double cosine_pulse_series(const DipoleModel& mu, int J = 500);

/// <mu phi_a, phi_j> by frequency-scaled quadrature, valid beyond the cached
/// matrix truncation.
double coupling_extended(const DipoleModel& mu, int a, int j);

enum class RecoveryOrder { order2, order3, undecided };

/// Order at which mode K (uncontrolled at first order) is recovered:
/// order2 when the degeneracy criterion fails (some off-resonant product
/// coefficient is nonzero, or a resonant pair has unequal coefficients);
/// order3 when the second order degenerates but a nonzero triple product
/// exists above K; undecided when every tested product vanishes at truncation.
RecoveryOrder classify_order(const DipoleModel& mu, int K, int J = -1, double tol = 1e-9);

} // namespace bsc
