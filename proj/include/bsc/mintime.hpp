#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "bsc/control.hpp"
#include "bsc/spectral.hpp"

namespace bsc {

enum class Subspace { full, vanishing_moments, h10_conforming };

struct MintimeOptions {
    int grid_n = 512;      ///< time segments of the Nystrom grid
    int kernel_j = 256;    ///< kernel truncation
    int freq_j_max = 40;   ///< moment constraints use controlled modes up to this index
    int sine_modes = 64;   ///< dimension of the endpoint-vanishing sine basis
    int K = 1;             ///< target mode of the form (the module studies K = 1)
};

/// Discretization of the primitive-variable quadratic form on [0, T], restricted
/// to a subspace: nodal piecewise-linear values for `full` and
/// `vanishing_moments`, sine coefficients for `h10_conforming`.
struct FormOperator {
    double T = 0.0;
    Subspace subspace = Subspace::full;
    Eigen::MatrixXd form;  ///< symmetric matrix of the quadratic form
    Eigen::MatrixXd mass;  ///< symmetric positive definite norm matrix
    Eigen::MatrixXd basis; ///< columns: subspace basis in the ambient coordinates
    int grid_n = 0;
    double grid_h = 0.0;
};

FormOperator build_form_operator(const DipoleModel& mu, double T, Subspace subspace,
                                 const MintimeOptions& opt = {});

/// Value of the form on an ambient-coordinate vector (nodal values or sine
/// coefficients, depending on the subspace).
double form_value(const FormOperator& op, const Eigen::VectorXd& x);

/// Rayleigh extremes of the form over the subspace; returns the top value and
/// optionally the maximizing element in ambient coordinates.
double top_rayleigh(const FormOperator& op, Eigen::VectorXd* maximizer = nullptr);

/// lambda(T) = -(sup of the form over unit-norm subspace elements).
double coercivity_gap(const DipoleModel& mu, double T, const MintimeOptions& opt = {});

struct Bracket {
    double lo = 0.0, hi = 0.0;
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
};

struct BracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Largest time below which the form stays nonpositive on the moment-constrained
/// subspace: bisection on the sign of lambda(T). Throws when the initial bracket
/// does not straddle the sign change.
Bracket estimate_tmin1(const DipoleModel& mu, Bracket initial, double tol,
                       const MintimeOptions& opt = {});

/// Smallest time above which the form attains positive values on the
/// endpoint-vanishing conforming subspace.
Bracket estimate_tmin2(const DipoleModel& mu, Bracket initial, double tol,
                       const MintimeOptions& opt = {});

struct EtaCheckReport {
    double T = 0.0;
    double eta = 0.0;
    double lambda = 0.0;   ///< coercivity gap at T
    int samples = 0;
    int violations = 0;    ///< samples breaking the -lambda/2 bound
    double worst_margin = 0.0;      ///< max of (form + lambda/2 ||S||^2) over samples
    double eta_breakdown = 0.0;     ///< smallest moment-defect ratio with a violator
                                    ///< (infinity when the halved bound holds everywhere)
    double eta_proof_bound = 0.0;   ///< admissible eta from the perturbation estimate
};

/// Samples perturbed subspace elements whose moment defect stays below
/// eta * ||S|| and verifies the halved coercivity bound. Since random
/// perturbations rarely break it, the extremal candidate (top eigenvector of
/// the half-shifted form) is added once it becomes admissible, which also
/// yields the empirical breakdown threshold reported alongside the
/// perturbation-estimate bound.
EtaCheckReport coercivity_eta_check(const DipoleModel& mu, double T, double eta, int n_samples,
                                    std::uint64_t seed, const MintimeOptions& opt = {});

struct SweepPoint {
    double T;
    double lambda;        ///< gap on the moment-constrained subspace
    double top_h10;       ///< top form value on the conforming subspace
    double maximizer_end; ///< |endpoint value| of the constrained maximizer
    double maximizer_h1;  ///< discrete H1 seminorm of the constrained maximizer
};

std::vector<SweepPoint> sweep(const DipoleModel& mu, double t_lo, double t_hi, int points,
                              const MintimeOptions& opt = {});

} // namespace bsc
