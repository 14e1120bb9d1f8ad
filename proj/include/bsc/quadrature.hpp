#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace bsc {

/// Composite Gauss-Legendre rule on [a,b]: fixed node count per subinterval.
struct GaussLegendre {
    int nodes_per_panel = 64;
    int panels = 8;

    double integrate(const std::function<double(double)>& f, double a, double b) const;

    /// Integrates with the panel count doubled, for convergence checks.
    double integrate_refined(const std::function<double(double)>& f, double a, double b) const;
};

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Integrate and verify self-consistency under panel doubling.
/// Throws QuadratureError if |I_2n - I_n| exceeds tol * max(1, |I_2n|).
double integrate_checked(const GaussLegendre& q, const std::function<double(double)>& f,
                         double a, double b, double tol = 1e-10);

} // namespace bsc
