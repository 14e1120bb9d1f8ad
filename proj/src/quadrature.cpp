#include "bsc/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace bsc {

namespace {

struct Rule {
    std::vector<double> x; // nodes on (-1,1)
    std::vector<double> w;
};

// Golub-Welsch-free construction: Newton iteration on P_n.
Rule make_rule(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        r.w[i] = w;
        r.w[n - 1 - i] = w;
    }
    return r;
}

const Rule& cached_rule(int n) {
    static std::map<int, Rule> cache;
    static std::mutex m;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
    return it->second;
}

double composite(const Rule& r, const std::function<double(double)>& f, double a, double b,
                 int panels) {
    double total = 0.0;
    double len = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * len;
        double mid = lo + 0.5 * len;
        double half = 0.5 * len;
        double acc = 0.0;
        for (size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * f(mid + half * r.x[i]);
        total += acc * half;
    }
    return total;
}

} // namespace

double GaussLegendre::integrate(const std::function<double(double)>& f, double a, double b) const {
    return composite(cached_rule(nodes_per_panel), f, a, b, panels);
}

double GaussLegendre::integrate_refined(const std::function<double(double)>& f, double a,
                                        double b) const {
    return composite(cached_rule(nodes_per_panel), f, a, b, 2 * panels);
}

double integrate_checked(const GaussLegendre& q, const std::function<double(double)>& f, double a,
                         double b, double tol) {
    double coarse = q.integrate(f, a, b);
    double fine = q.integrate_refined(f, a, b);
    if (std::abs(fine - coarse) > tol * std::max(1.0, std::abs(fine)))
        throw QuadratureError("quadrature did not converge under panel doubling");
    return fine;
}

} // namespace bsc
