#pragma once

#include <Eigen/Core>
#include <span>
#include <stdexcept>
#include <vector>

#include "bsc/control.hpp"
#include "bsc/spectral.hpp"

namespace bsc {

/// Prescribed values for int_0^T v(t) e^{i omega_j t} dt over a finite frequency set.
struct MomentProblem {
    std::vector<double> frequencies; ///< strictly increasing, >= 0
    Eigen::VectorXcd targets;        ///< same length; target at frequency 0 must be real
    double T = 1.0;
    double regularization = -1.0;    ///< Tikhonov parameter; < 0 selects 1e-12 * T
};

struct MomentSolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// G_jk = int_0^T e^{i(omega_j - omega_k) t} dt in closed form. Hermitian positive
/// definite for distinct frequencies.
Eigen::MatrixXcd gram_matrix(std::span<const double> frequencies, double T);

struct MomentSolveInfo {
    double residual = 0.0;      ///< Euclidean moment mismatch of the returned control
    double condition = 0.0;     ///< condition number of the reduced normal matrix
    double control_norm = 0.0;  ///< trapezoid L2 norm of the solution
    bool used_pseudo_inverse = false;
};

/// Minimal-L2-norm real signal matching the prescribed moments. Realness is
/// enforced by solving the doubled +/- frequency system (one real equation for
/// frequency zero, real and imaginary pairs otherwise). The solve happens in
/// the piecewise-linear sample space so the returned control reproduces the
/// moments exactly, not just at the quadrature level.
/// `window_start` shifts the support to [window_start, window_start + T] while
/// the prescribed moments remain the global ones.
Control solve_moments(const MomentProblem& p, int grid_segments = 2048,
                      MomentSolveInfo* info = nullptr, double window_start = 0.0,
                      double residual_tol = 1e-8);

/// v minus the minimal-norm signal with v's own moments: the result has
/// vanishing moments on the given frequencies (an orthogonal projection).
Control project_vt(const Control& v, std::span<const double> frequencies,
                   MomentSolveInfo* info = nullptr);

/// 1 / lambda_min of the Gram matrix over the first N frequencies;
/// +infinity when the matrix is numerically singular at this (T, N).
double ingham_constant(std::span<const double> frequencies, double T, int N);

/// Frequencies omega_j for j in the controlled set (complement of `lost`),
/// j <= j_max; optionally prepends frequency zero even when mode 1 is lost.
std::vector<double> controlled_frequencies(const LostDirectionSet& lost, int j_max,
                                           bool include_zero = false);

} // namespace bsc
