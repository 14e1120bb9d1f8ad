#pragma once

#include <Eigen/Core>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "bsc/quadrature.hpp"

namespace bsc {

using cplx = std::complex<double>;

/// lambda_k = (k pi)^2, eigenvalue of -d^2/dx^2 on (0,1) with Dirichlet conditions.
double eigenvalue(int k);

/// omega_j = lambda_j - lambda_1 = (j^2 - 1) pi^2.
double transition_frequency(int j);

/// phi_k(x) = sqrt(2) sin(k pi x).
double mode_function(int k, double x);

/// Dipole profile mu on (0,1): polynomial in x plus a cosine series sum_k c_k cos(k pi x).
/// Covers x - 1/2, x^2 and every "poly minus projection" variant used here
/// (phi_m / phi_1 is a finite cosine polynomial).
class DipoleModel {
  public:
    /// presets: "x_minus_half", "x_squared", "x_squared_corrected", "two_lost_demo"
    static DipoleModel preset(const std::string& name, int truncation = 64);
    DipoleModel(std::vector<double> poly_coeffs, std::vector<double> cos_coeffs,
                int truncation, GaussLegendre quad = {});

    double mu(double x) const;
    double mu_prime(double x) const;
    double mu_second(double x) const;

    int truncation() const { return n_modes_; }
    const std::string& name() const { return name_; }
    const std::vector<double>& poly_coeffs() const { return poly_; }
    const std::vector<double>& cos_coeffs() const { return cos_; }

    /// <mu phi_j, phi_k>, 1-based indices, cached N x N matrix for j,k <= truncation.
    const Eigen::MatrixXd& dipole_matrix() const;
    double coupling(int j, int k) const;

    /// Galerkin matrix of 2 mu' d/dx + mu'' (antisymmetric).
    const Eigen::MatrixXd& gradient_matrix() const;
    /// Galerkin matrix of (mu')^2 (symmetric).
    const Eigen::MatrixXd& squared_slope_matrix() const;

    const GaussLegendre& quadrature() const { return quad_; }

  private:
    std::vector<double> poly_;
    std::vector<double> cos_;
    int n_modes_;
    GaussLegendre quad_;
    std::string name_ = "custom";
    mutable std::optional<Eigen::MatrixXd> dipole_;
    mutable std::optional<Eigen::MatrixXd> gradient_;
    mutable std::optional<Eigen::MatrixXd> squared_slope_;
};

/// <mu phi_j, phi_k> by checked quadrature, independent of the cached matrix.
double dipole_coefficient(const DipoleModel& mu, int j, int k);

/// Leading-order prediction 4K[(-1)^{K+n} mu'(1) - mu'(0)] / (n^3 pi^2).
double dipole_coefficient_asymptotic(const DipoleModel& mu, int K, int n);

struct SecondMoment {
    double value = 0.0; ///< A_K = <(mu')^2 phi_1, phi_K>
    int sign = 0;       ///< sign(A_K); 0 when flagged degenerate
    bool degenerate = false;
};

/// A_K with degeneracy flag when |A_K| falls below tol.
SecondMoment second_moment_coefficient(const DipoleModel& mu, int K, double tol = 1e-12);

struct SpectralState {
    Eigen::VectorXcd coeffs; ///< c_k = <psi, phi_k>, k = 1..N
    double time_stamp = 0.0;

    int modes() const { return static_cast<int>(coeffs.size()); }
    double norm() const { return coeffs.norm(); }
};

/// Ground-state trajectory phi_1 e^{-i lambda_1 t} truncated to n modes.
SpectralState ground_state(int n_modes, double t = 0.0);
/// Eigenstate phi_k e^{-i lambda_k t}.
SpectralState eigenstate(int k, int n_modes, double t = 0.0);

/// Truncated Sobolev-type norm (sum |k^s c_k|^2)^{1/2}.
double sobolev_norm(const SpectralState& psi, double s);

struct LostDirectionSet {
    std::vector<int> indices;   ///< modes k with <mu phi_1, phi_k> ~ 0, ascending
    double tolerance = 0.0;     ///< threshold applied to |<mu phi_1,phi_k>| * k^3
    double decay_constant = 0.0;///< min over kept modes of |<mu phi_1,phi_k>| * k^3

    bool contains(int k) const;
    /// controlled modes <= N (complement of the lost set)
    std::vector<int> controlled(int N) const;
};

/// Scan k = 1..N for |<mu phi_1, phi_k>| * k^3 < tol.
LostDirectionSet lost_directions(const DipoleModel& mu, int N, double tol = 1e-9);

} // namespace bsc
