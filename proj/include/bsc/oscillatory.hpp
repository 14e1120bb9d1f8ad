#pragma once

#include <Eigen/Core>
#include <complex>
#include <span>
#include <vector>

#include "bsc/control.hpp"

namespace bsc {

using cplx = std::complex<double>;

// Closed-form integration of piecewise-polynomial signals against oscillatory
// kernels. Every moment and iterated (time-ordered) integral below is exact
// for the piecewise representation, up to floating point. The only numerical
// care is the small-phase regime, handled by series expansions.

/// e_m = int_0^h s^m e^{i theta s} ds for m = 0..M (out must hold M+1 entries).
void phase_integrals(double theta, double h, int M, cplx* out);

/// J[p][m] = int_0^h s^p e^{i beta s} ( int_0^s r^m e^{i omega r} dr ) ds,
/// p = 0..P, m = 0..Minner. Stable for any phase combination.
void nested_phase_integrals(double beta, double omega, double h, int P, int Minner,
                            cplx J[][5]);

/// K[p][q][m] = int_0^h s^p e^{i beta s} int_0^s r^q e^{i gamma r}
///              ( int_0^r y^m e^{i omega y} dy ) dr ds, indices 0..1.
void triple_phase_integrals(double beta, double gamma, double omega, double h,
                            cplx K[2][2][2]);

/// int_0^T v(t) e^{i omega t} dt over the block sum.
cplx moment(std::span<const Control> blocks, double omega);
cplx moment(const Control& block, double omega);

/// Cumulative moments at the nodes of one block: out[i] = int_{t0}^{t_i} v e^{i omega t} dt.
Eigen::VectorXcd cumulative_moment(const Control& block, double omega);

/// Moment of the pointwise square of a (possibly quadratic) signal.
cplx moment_of_square(const Control& block, double omega);

/// chain2 = int v_out(t) e^{i beta t} [ int_0^t v_in(r) e^{i omega r} dr ] dt.
/// Blocks of out and in must share grids where they overlap (same t0, dt, length)
/// or be disjoint in time.
cplx chain2(std::span<const Control> out, double beta, std::span<const Control> in, double omega);

/// chain2 for one inner phase against many outer phases (out[k] += result for betas[k]).
void chain2_all(std::span<const Control> out, std::span<const double> betas, double beta_shift,
                std::span<const Control> in, double omega, std::span<cplx> acc,
                std::span<const cplx> weights);

/// chain3 over a single signal:
/// int v(t1) e^{i beta t1} int^t1 v(t2) e^{i gamma t2} int^t2 v(t3) e^{i omega t3}.
/// Accumulates acc[k] += weights[k] * chain3(betas[k] + beta_shift, gamma, omega).
void chain3_all(std::span<const Control> v, std::span<const double> betas, double beta_shift,
                double gamma, double omega, std::span<cplx> acc, std::span<const cplx> weights);

cplx chain3(std::span<const Control> v, double beta, double gamma, double omega);

/// H(a,b) = int_0^{n h} hat_a(t) e^{i beta t} [ int_0^t hat_b(r) e^{i omega r} dr ] dt
/// for the n+1 piecewise-linear hat functions on the uniform grid. Used by the
/// Nystrom build of quadratic-form operators.
Eigen::MatrixXcd hat_chain_matrix(int n, double h, double beta, double omega);

/// m_a = int hat_a(t) e^{i omega t} dt for the n+1 hats.
Eigen::VectorXcd hat_moments(int n, double h, double omega);

/// B(a,b) = int hat_a hat_b e^{i theta t} dt (banded; exact).
Eigen::MatrixXcd hat_product_matrix(int n, double h, double theta);

} // namespace bsc
