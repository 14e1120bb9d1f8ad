#pragma once

#include <array>
#include <span>
#include <utility>

#include "bsc/control.hpp"
#include "bsc/simulator.hpp"
#include "bsc/spectral.hpp"

namespace bsc {

// Terms of the amplitude expansion of the solution around the ground state,
// u = eps v + eps^2 w + eps^3 nu. All evaluations are closed-form in the
// piecewise-linear controls, so the identities they satisfy hold to roundoff
// at a fixed truncation.

/// First-order state at time T (linear in v).
SpectralState first_order(const DipoleModel& mu, std::span<const Control> v, double T);

/// Second-order state at time T.
SpectralState second_order(const DipoleModel& mu, std::span<const Control> v,
                           std::span<const Control> w, double T);

/// Third-order state at time T. J2 truncates the inner kernel sum (default:
/// the model truncation, which matches the truncated dynamics exactly).
SpectralState third_order(const DipoleModel& mu, std::span<const Control> v,
                          std::span<const Control> w, std::span<const Control> nu, double T,
                          int J2 = -1);

/// First- and second-order terms of the gauge-transformed system driven by a
/// primitive signal s (s(0) = 0).
std::pair<SpectralState, SpectralState> gauge_expansion_terms(const DipoleModel& mu,
                                                              const Control& s, double T);

struct OrderSlopes {
    std::vector<double> eps;
    // remainder norms after subtracting the partial sums of order 0..3
    std::array<std::vector<double>, 4> remainders;
    std::array<double, 4> slopes{};    ///< log-log least-squares slopes
    std::array<double, 4> r_squared{}; ///< fit quality
};

/// Propagates the full system for each amplitude and fits the remainder decay
/// after truncating the expansion at orders 0..3.
OrderSlopes order_slopes(const DipoleModel& mu, const Control& v, const Control& w,
                         const Control& nu, std::span<const double> eps, double T,
                         const PropagateOptions& opt = {});

} // namespace bsc
