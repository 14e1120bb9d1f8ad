#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>

#include "bsc/control.hpp"
#include "bsc/spectral.hpp"

namespace bsc {

struct Trajectory {
    std::vector<double> times;
    std::vector<SpectralState> states;
    double norm_drift = 0.0; ///< max over steps of | ||psi|| - ||psi_0|| |

    const SpectralState& final_state() const { return states.back(); }
};

struct PropagateOptions {
    double dt = -1.0;        ///< step; < 0 selects step_safety / lambda_N
    double step_safety = 2.6;
    int store_every = 0;     ///< 0: keep initial and final states only
    double drift_reject = 1e-12; ///< per-step norm-drift rejection threshold (f == 0)
};

struct StepSizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Spectral coefficients of a forcing term f(t), size = truncation.
using SpectralForcing = std::function<Eigen::VectorXcd(double)>;

/// Strang-split propagation of the truncated bilinear system:
/// exact diagonal phases around an exactly exponentiated midpoint coupling.
/// With a forcing term the midpoint Duhamel increment is added and the
/// per-step unitarity rejection is disabled.
/// T <= 0 selects the end of the control support as the horizon.
Trajectory propagate(const SpectralState& psi0, std::span<const Control> u,
                     const DipoleModel& mu, double T = -1.0, const PropagateOptions& opt = {},
                     const SpectralForcing* forcing = nullptr);

/// Propagation of the gauge-transformed system driven by the control primitive s:
/// generator Lambda - i s(t) G + s(t)^2 R with G the (antisymmetric) Galerkin
/// matrix of 2 mu' d/dx + mu'' and R the Galerkin matrix of (mu')^2.
Trajectory propagate_gauge(std::span<const Control> s, const DipoleModel& mu,
                           double T = -1.0, const PropagateOptions& opt = {});

/// Coefficients of e^{i s_T mu} psi via the exponential of the truncated
/// multiplication operator.
SpectralState gauge_transform(const SpectralState& psi_tilde, double s_T, const DipoleModel& mu);

// CSV: t, Re c_1, Im c_1, ..., header row mandatory
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

} // namespace bsc
