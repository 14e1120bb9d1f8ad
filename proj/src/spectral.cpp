#include "bsc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsc {

double eigenvalue(int k) {
    if (k < 1) throw std::invalid_argument("mode index must be >= 1");
    return (k * M_PI) * (k * M_PI);
}

double transition_frequency(int j) { return eigenvalue(j) - eigenvalue(1); }

double mode_function(int k, double x) { return std::sqrt(2.0) * std::sin(k * M_PI * x); }

DipoleModel::DipoleModel(std::vector<double> poly_coeffs, std::vector<double> cos_coeffs,
                         int truncation, GaussLegendre quad)
    : poly_(std::move(poly_coeffs)), cos_(std::move(cos_coeffs)), n_modes_(truncation),
      quad_(quad) {
    if (n_modes_ < 1) throw std::invalid_argument("truncation must be >= 1");
}

DipoleModel DipoleModel::preset(const std::string& name, int truncation) {
    if (name == "x_minus_half") {
        DipoleModel m({-0.5, 1.0}, {}, truncation);
        m.name_ = name;
        return m;
    }
    if (name == "x_squared") {
        DipoleModel m({0.0, 0.0, 1.0}, {}, truncation);
        m.name_ = name;
        return m;
    }
    if (name == "x_squared_corrected") {
        // x^2 - <x^2 phi_1, phi_2> phi_2 / phi_1, with phi_2/phi_1 = 2 cos(pi x):
        // the ground-state coupling to mode 2 is removed by construction.
        DipoleModel base({0.0, 0.0, 1.0}, {}, truncation);
        double c = dipole_coefficient(base, 1, 2);
        DipoleModel m({0.0, 0.0, 1.0}, {-2.0 * c}, truncation);
        m.name_ = name;
        return m;
    }
    if (name == "two_lost_demo") {
        // x^2 with the couplings to modes 1 and 2 projected out, so that exactly
        // the directions {1,2} are uncontrollable at first order.
        DipoleModel base({0.0, 0.0, 1.0}, {}, truncation);
        double c1 = dipole_coefficient(base, 1, 1);
        double c2 = dipole_coefficient(base, 1, 2);
        DipoleModel m({-c1, 0.0, 1.0}, {-2.0 * c2}, truncation);
        m.name_ = name;
        return m;
    }
    throw std::invalid_argument("unknown dipole preset: " + name);
}

double DipoleModel::mu(double x) const {
    double v = 0.0;
    for (int p = static_cast<int>(poly_.size()) - 1; p >= 0; --p) v = v * x + poly_[p];
    for (size_t k = 1; k <= cos_.size(); ++k) v += cos_[k - 1] * std::cos(k * M_PI * x);
    return v;
}

double DipoleModel::mu_prime(double x) const {
    double v = 0.0;
    for (int p = static_cast<int>(poly_.size()) - 1; p >= 1; --p) v = v * x + p * poly_[p];
    for (size_t k = 1; k <= cos_.size(); ++k)
        v -= cos_[k - 1] * k * M_PI * std::sin(k * M_PI * x);
    return v;
}

double DipoleModel::mu_second(double x) const {
    double v = 0.0;
    for (int p = static_cast<int>(poly_.size()) - 1; p >= 2; --p)
        v = v * x + p * (p - 1) * poly_[p];
    for (size_t k = 1; k <= cos_.size(); ++k)
        v -= cos_[k - 1] * (k * M_PI) * (k * M_PI) * std::cos(k * M_PI * x);
    return v;
}

const Eigen::MatrixXd& DipoleModel::dipole_matrix() const {
    if (!dipole_) {
        Eigen::MatrixXd m(n_modes_, n_modes_);
        for (int j = 1; j <= n_modes_; ++j) {
            for (int k = j; k <= n_modes_; ++k) {
                double v = quad_.integrate_refined(
                    [&](double x) { return mu(x) * mode_function(j, x) * mode_function(k, x); },
                    0.0, 1.0);
                m(j - 1, k - 1) = v;
                m(k - 1, j - 1) = v;
            }
        }
        dipole_ = std::move(m);
    }
    return *dipole_;
}

double DipoleModel::coupling(int j, int k) const {
    return dipole_matrix()(j - 1, k - 1);
}

const Eigen::MatrixXd& DipoleModel::gradient_matrix() const {
    if (!gradient_) {
        Eigen::MatrixXd m(n_modes_, n_modes_);
        for (int j = 1; j <= n_modes_; ++j) {
            for (int k = 1; k <= n_modes_; ++k) {
                double v = quad_.integrate_refined(
                    [&](double x) {
                        double dphi_j =
                            std::sqrt(2.0) * j * M_PI * std::cos(j * M_PI * x);
                        return (2.0 * mu_prime(x) * dphi_j +
                                mu_second(x) * mode_function(j, x)) *
                               mode_function(k, x);
                    },
                    0.0, 1.0);
                m(k - 1, j - 1) = v; // column j holds the operator applied to phi_j
            }
        }
        gradient_ = std::move(m);
    }
    return *gradient_;
}

const Eigen::MatrixXd& DipoleModel::squared_slope_matrix() const {
    if (!squared_slope_) {
        Eigen::MatrixXd m(n_modes_, n_modes_);
        for (int j = 1; j <= n_modes_; ++j) {
            for (int k = j; k <= n_modes_; ++k) {
                double v = quad_.integrate_refined(
                    [&](double x) {
                        double mp = mu_prime(x);
                        return mp * mp * mode_function(j, x) * mode_function(k, x);
                    },
                    0.0, 1.0);
                m(j - 1, k - 1) = v;
                m(k - 1, j - 1) = v;
            }
        }
        squared_slope_ = std::move(m);
    }
    return *squared_slope_;
}

double dipole_coefficient(const DipoleModel& mu, int j, int k) {
    return integrate_checked(
        mu.quadrature(),
        [&](double x) { return mu.mu(x) * mode_function(j, x) * mode_function(k, x); }, 0.0, 1.0,
        1e-11);
}

double dipole_coefficient_asymptotic(const DipoleModel& mu, int K, int n) {
    double sgn = ((K + n) % 2 == 0) ? 1.0 : -1.0;
    return 4.0 * K * (sgn * mu.mu_prime(1.0) - mu.mu_prime(0.0)) /
           (static_cast<double>(n) * n * n * M_PI * M_PI);
}

SecondMoment second_moment_coefficient(const DipoleModel& mu, int K, double tol) {
    SecondMoment r;
    r.value = integrate_checked(
        mu.quadrature(),
        [&](double x) {
            double mp = mu.mu_prime(x);
            return mp * mp * mode_function(1, x) * mode_function(K, x);
        },
        0.0, 1.0, 1e-11);
    if (std::abs(r.value) < tol) {
        r.degenerate = true;
        r.sign = 0;
    } else {
        r.sign = r.value > 0 ? 1 : -1;
    }
    return r;
}

SpectralState ground_state(int n_modes, double t) { return eigenstate(1, n_modes, t); }

SpectralState eigenstate(int k, int n_modes, double t) {
    SpectralState s;
    s.coeffs = Eigen::VectorXcd::Zero(n_modes);
    s.coeffs(k - 1) = std::exp(cplx(0.0, -eigenvalue(k) * t));
    s.time_stamp = t;
    return s;
}

double sobolev_norm(const SpectralState& psi, double s) {
    double acc = 0.0;
    for (int k = 1; k <= psi.modes(); ++k) {
        double w = std::pow(static_cast<double>(k), s);
        acc += std::norm(w * psi.coeffs(k - 1));
    }
    return std::sqrt(acc);
}

bool LostDirectionSet::contains(int k) const {
    return std::binary_search(indices.begin(), indices.end(), k);
}

std::vector<int> LostDirectionSet::controlled(int N) const {
    std::vector<int> out;
    for (int k = 1; k <= N; ++k)
        if (!contains(k)) out.push_back(k);
    return out;
}

LostDirectionSet lost_directions(const DipoleModel& mu, int N, double tol) {
    if (N < 2) throw std::invalid_argument("lost_directions needs N >= 2");
    LostDirectionSet set;
    set.tolerance = tol;
    double c = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= N; ++k) {
        double scaled = std::abs(mu.coupling(1, k)) * std::pow(static_cast<double>(k), 3.0);
        if (scaled < tol)
            set.indices.push_back(k);
        else
            c = std::min(c, scaled);
    }
    set.decay_constant = std::isfinite(c) ? c : 0.0;
    return set;
}

} // namespace bsc
