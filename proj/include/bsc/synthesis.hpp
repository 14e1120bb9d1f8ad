#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsc/control.hpp"
#include "bsc/moments.hpp"
#include "bsc/simulator.hpp"
#include "bsc/spectral.hpp"

namespace bsc {

struct SynthesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SynthesisOptions {
    int grid_n = 512;        ///< samples per control block
    int seed_modes = 16;     ///< sine modes of the band-limited random seeds
    int trials = 32;         ///< random seeds tried in the nonzero-form search
    int freq_j_max = 40;     ///< moment constraints cover controlled modes up to here
    int controlled_max = 32; ///< cancel higher-order components on controlled modes up to here
    double q_floor = 1e-7;   ///< normalized quadratic-form floor for accepting a seed
    double q3_floor = 1e-11;  ///< normalized cubic-form floor (cubic responses are tiny)
    std::uint64_t seed = 12345;
    double newton_tol = 1e-9;    ///< controlled-component mismatch target of the window solver
    int newton_max_iter = 8;
    double tmin2_margin = 1.1;   ///< safety factor on the estimated positivity time
};

/// Zero-padded time shift: the same samples with the support moved by theta.
/// Throws when the shifted support overflows the new horizon.
Control time_shift(const Control& v, double theta, double T_new);

struct PlannedBlock {
    Control v, w;
    std::optional<Control> nu;
    std::string role;
};

struct PlanCertificates {
    double first_order_norm = 0.0;   ///< ||Psi(T)|| recomputed from the expansion
    double off_target = 0.0;         ///< largest second/third-order component outside the target set
    double target_error = 0.0;       ///< ||achieved - requested|| over the target components
    double control_norm = 0.0;
};

struct SynthesisPlan {
    double T = 0.0;
    std::vector<PlannedBlock> blocks;
    Eigen::VectorXcd target;          ///< requested interaction components (size N)
    Eigen::VectorXcd achieved_second; ///< second-order interaction components at T
    PlanCertificates certificates;

    std::vector<Control> v_controls() const;
    std::vector<Control> w_controls() const;
    std::vector<Control> nu_controls() const;
    std::vector<Control> all_controls() const; ///< v + w (+ nu) blocks summed for simulation
};

/// One elementary block: v with vanishing moments on the controlled set and a
/// nonzero second-order response along mode K; w cancels the second-order
/// components on the controlled modes. Certificates come from the expansion.
struct BlockPair {
    Control v, w;
    Eigen::VectorXcd xi; ///< realized second-order interaction components at the horizon
    double q_value = 0.0; ///< magnitude of the response along the target mode
    double first_order_norm = 0.0;
    double off_target = 0.0;
};

BlockPair reach_second_order(const DipoleModel& mu, int K, double T,
                             const SynthesisOptions& opt = {});

/// Four time-shifted copies of a base block whose realized components along
/// mode K form two opposite pairs spanning the complex plane.
struct RotationBasis {
    std::array<PlannedBlock, 4> blocks;
    std::array<cplx, 4> f;            ///< components along mode K
    std::array<double, 4> f_tilde_im; ///< imaginary parts along the ground mode
    int K = 0;

    /// sector index j and nonnegative coefficients with target = d1 f[j] + d2 f[j+1]
    struct Sector {
        int j;
        double d1, d2;
    };
    Sector decompose(cplx target) const;
};

/// pair_shift must be an odd multiple of the half period pi/(lambda_K-lambda_1)
/// so that the third and fourth copies realize the opposite pair.
RotationBasis basis_lost_direction(const DipoleModel& mu, int K, double T, double T_c,
                                   double T_theta, double pair_shift, double window_start,
                                   const SynthesisOptions& opt = {});

/// Duplicated-and-shifted pair reaching +/- the imaginary ground direction at
/// second order with the rotating lost component cancelled.
struct GroundPair {
    std::vector<Control> v_plus, w_plus, v_minus, w_minus;
    double achieved_plus = 0.0;  ///< Im ground component of the + branch
    double achieved_minus = 0.0;
    double support_end = 0.0;
};

GroundPair reach_ground_pair(const DipoleModel& mu, int rotating_mode, double window,
                             double T_c1, const SynthesisOptions& opt = {});

/// Steering of the full second order onto a target in the span of the lost
/// directions (ground mode + one rotating mode), by sector decomposition over
/// non-overlapping shifted blocks.
class RecoveryBasis {
  public:
    RecoveryBasis(const DipoleModel& mu, double T, const SynthesisOptions& opt = {});

    /// target: interaction components on the lost modes (imaginary on the
    /// ground mode). Builds the combined plan and certifies it by expansion.
    SynthesisPlan assemble(const Eigen::VectorXcd& target) const;

    double horizon() const { return T_; }
    /// assembly-time lower bound from the margined positivity estimate
    double min_horizon() const { return t_sharp_; }
    /// horizon actually needed by the block schedule in use
    double schedule_horizon() const { return t_schedule_; }
    /// margined positivity-time estimate entering the assembly-time bound
    double positivity_time() const { return t2_; }
    const std::vector<int>& lost_modes() const { return lost_; }

  private:
    const DipoleModel& mu_;
    double T_;
    double t_sharp_ = 0.0;
    double t_schedule_ = 0.0;
    double t2_ = 0.0;
    std::vector<int> lost_;
    SynthesisOptions opt_;
    RotationBasis rot_;
    GroundPair ground_;
};

SynthesisPlan lambda_map(const DipoleModel& mu, const Eigen::VectorXcd& target, double T,
                         const SynthesisOptions& opt = {});

/// Third-order recovery: v with a nonzero cubic response on K (sign steered by
/// v -> -v), w cancelling the controlled second-order components, nu the
/// controlled third-order components.
struct ThirdOrderPlan {
    std::vector<Control> v_blocks; ///< non-overlapping seeds carrying the cubic response
    Control w, nu;
    cplx q3_value;
    Eigen::VectorXcd achieved_third;
    PlanCertificates certificates;

    std::vector<Control> all_controls() const;
};

ThirdOrderPlan reach_third_order(const DipoleModel& mu, int K, double T, cplx target,
                                 const SynthesisOptions& opt = {});

/// First-order steering: control whose first-order state matches the target on
/// the controlled modes (the target must vanish on lost directions).
Control linear_steer(const DipoleModel& mu, const SpectralState& target, double T,
                     const SynthesisOptions& opt = {}, double window_start = 0.0);

struct SteerReport {
    std::vector<double> outer_residuals; ///< fixed-point residual history
    int outer_iterations = 0;
    double final_error = 0.0;  ///< || psi_u(T) - psi_f ||
    double z_norm = 0.0;       ///< fixed-point magnitude
    bool converged = false;
};

struct SteerResult {
    std::vector<Control> controls;
    SteerReport report;
};

/// Nonlinear steering to psi_f at time T: fixed-point iteration over the lost
/// components, each step assembling a second-order plan on (0, T1) and a
/// Newton-refined linear solve on (T1, T).
SteerResult fixed_point_steer(const DipoleModel& mu, const SpectralState& psi_f, double T,
                              double T1, const SynthesisOptions& opt = {},
                              const PropagateOptions& sim = {}, int max_outer = 10);

} // namespace bsc
