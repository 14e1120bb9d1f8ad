#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <span>
#include <vector>

namespace bsc {

/// Real time signal on a uniform grid, piecewise linear between samples
/// (piecewise quadratic when it stores midpoint values, e.g. running integrals
/// of piecewise-linear controls). Zero outside [t0, t0 + duration].
struct Control {
    double t0 = 0.0;
    double dt = 0.0;
    Eigen::VectorXd samples; ///< nodal values, size n+1 for n segments
    Eigen::VectorXd mids;    ///< midpoint values (size n) for quadratic segments; empty for linear
    bool is_primitive = false;

    Control() = default;
    Control(double start, double step, Eigen::VectorXd values, bool primitive = false)
        : t0(start), dt(step), samples(std::move(values)), is_primitive(primitive) {}

    int segments() const { return static_cast<int>(samples.size()) - 1; }
    int degree() const { return mids.size() > 0 ? 2 : 1; }
    double duration() const { return dt * segments(); }
    double t_end() const { return t0 + duration(); }

    /// Exact evaluation of the piecewise polynomial; 0 outside the support.
    double value(double t) const;

    /// Local polynomial coefficients on segment i: f(t0 + i*dt + s) = c0 + c1 s + c2 s^2.
    void segment_coeffs(int i, double& c0, double& c1, double& c2) const;

    /// L2 norm by the trapezoid rule on the grid (the convention used throughout).
    double l2_norm() const;

    /// Running integral from t0, evaluated exactly (quadratic segments).
    Control primitive() const;

    /// Integral over the whole support.
    double integral() const;
};

Control scaled(const Control& c, double factor);

/// Sum of possibly shifted blocks treated as one signal.
double eval_sum(std::span<const Control> blocks, double t);
/// sqrt(sum of block norms^2); requires pairwise disjoint supports.
double l2_norm_sum(std::span<const Control> blocks);
bool disjoint_supports(std::span<const Control> blocks, double gap_tol = 1e-12);

/// Sample the sum of blocks onto a fresh uniform grid (piecewise-linear result).
Control resample_sum(std::span<const Control> blocks, double t_begin, double t_end, int n_segments);

/// Uniform grid control from a callable.
Control sample_control(double t0, double T, int n_segments, const std::function<double(double)>& f);

// two-column CSV (t,value), comma separated, header row mandatory
void write_control_csv(std::ostream& os, const Control& c);
Control read_control_csv(std::istream& is);

} // namespace bsc
