#include "bsc/control.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bsc {

void Control::segment_coeffs(int i, double& c0, double& c1, double& c2) const {
    double a = samples(i), b = samples(i + 1);
    if (degree() == 1) {
        c0 = a;
        c1 = (b - a) / dt;
        c2 = 0.0;
        return;
    }
    double m = mids(i);
    c0 = a;
    c1 = (4.0 * m - 3.0 * a - b) / dt;
    c2 = 2.0 * (a - 2.0 * m + b) / (dt * dt);
}

double Control::value(double t) const {
    double local = t - t0;
    int n = segments();
    if (local < 0.0 || local > duration()) return 0.0;
    int i = std::min(static_cast<int>(local / dt), n - 1);
    double s = local - i * dt;
    double c0, c1, c2;
    segment_coeffs(i, c0, c1, c2);
    return c0 + s * (c1 + s * c2);
}

double Control::l2_norm() const {
    int n = segments();
    double acc = 0.5 * samples(0) * samples(0) + 0.5 * samples(n) * samples(n);
    for (int i = 1; i < n; ++i) acc += samples(i) * samples(i);
    return std::sqrt(acc * dt);
}

Control Control::primitive() const {
    if (degree() != 1)
        throw std::invalid_argument("primitive() expects a piecewise-linear signal");
    int n = segments();
    Control out;
    out.t0 = t0;
    out.dt = dt;
    out.is_primitive = true;
    out.samples.resize(n + 1);
    out.mids.resize(n);
    out.samples(0) = 0.0;
    for (int i = 0; i < n; ++i) {
        double a = samples(i), b = samples(i + 1);
        out.samples(i + 1) = out.samples(i) + 0.5 * dt * (a + b);
        // quadratic through the exact quarter point: S(h/2) = S_i + h a/2 + h(b-a)/8
        out.mids(i) = out.samples(i) + dt * (0.5 * a + 0.125 * (b - a));
    }
    return out;
}

double Control::integral() const {
    if (degree() == 1) {
        int n = segments();
        double acc = 0.5 * (samples(0) + samples(n));
        for (int i = 1; i < n; ++i) acc += samples(i);
        return acc * dt;
    }
    double acc = 0.0;
    for (int i = 0; i < segments(); ++i) {
        double c0, c1, c2;
        segment_coeffs(i, c0, c1, c2);
        acc += c0 * dt + 0.5 * c1 * dt * dt + c2 * dt * dt * dt / 3.0;
    }
    return acc;
}

Control scaled(const Control& c, double factor) {
    Control out = c;
    out.samples *= factor;
    if (out.mids.size() > 0) out.mids *= factor;
    return out;
}

double eval_sum(std::span<const Control> blocks, double t) {
    double v = 0.0;
    for (const auto& b : blocks) v += b.value(t);
    return v;
}

bool disjoint_supports(std::span<const Control> blocks, double gap_tol) {
    std::vector<std::pair<double, double>> spans;
    for (const auto& b : blocks) spans.emplace_back(b.t0, b.t_end());
    std::sort(spans.begin(), spans.end());
    for (size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first < spans[i - 1].second - gap_tol) return false;
    return true;
}

double l2_norm_sum(std::span<const Control> blocks) {
    if (blocks.size() == 1) return blocks[0].l2_norm();
    if (!disjoint_supports(blocks))
        throw std::invalid_argument("l2_norm_sum requires disjoint block supports");
    double acc = 0.0;
    for (const auto& b : blocks) {
        double n = b.l2_norm();
        acc += n * n;
    }
    return std::sqrt(acc);
}

Control resample_sum(std::span<const Control> blocks, double t_begin, double t_end,
                     int n_segments) {
    Control out;
    out.t0 = t_begin;
    out.dt = (t_end - t_begin) / n_segments;
    out.samples.resize(n_segments + 1);
    for (int i = 0; i <= n_segments; ++i)
        out.samples(i) = eval_sum(blocks, t_begin + i * out.dt);
    return out;
}

Control sample_control(double t0, double T, int n_segments,
                       const std::function<double(double)>& f) {
    Control out;
    out.t0 = t0;
    out.dt = T / n_segments;
    out.samples.resize(n_segments + 1);
    for (int i = 0; i <= n_segments; ++i) out.samples(i) = f(t0 + i * out.dt);
    return out;
}

void write_control_csv(std::ostream& os, const Control& c) {
    os << "t,value\n";
    os.precision(17);
    for (int i = 0; i < static_cast<int>(c.samples.size()); ++i)
        os << c.t0 + i * c.dt << "," << c.samples(i) << "\n";
}

Control read_control_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty control CSV");
    std::vector<double> t, v;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw std::runtime_error("malformed control CSV line: " + line);
        t.push_back(std::stod(a));
        v.push_back(std::stod(b));
    }
    if (t.size() < 2) throw std::runtime_error("control CSV needs at least two rows");
    Control c;
    c.t0 = t.front();
    c.dt = (t.back() - t.front()) / (t.size() - 1);
    for (size_t i = 1; i < t.size(); ++i)
        if (std::abs(t[i] - (c.t0 + i * c.dt)) > 1e-9 * std::max(1.0, std::abs(t.back())))
            throw std::runtime_error("control CSV grid is not uniform");
    c.samples = Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
    return c;
}

} // namespace bsc
