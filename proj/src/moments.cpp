#include "bsc/moments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "bsc/oscillatory.hpp"

namespace bsc {

Eigen::MatrixXcd gram_matrix(std::span<const double> frequencies, double T) {
    const int n = static_cast<int>(frequencies.size());
    Eigen::MatrixXcd G(n, n);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            double d = frequencies[j] - frequencies[k];
            if (std::abs(d * T) < 1e-14) {
                G(j, k) = cplx(T, 0.0);
            } else {
                G(j, k) = (std::exp(cplx(0.0, d * T)) - 1.0) / cplx(0.0, d);
            }
        }
    }
    return G;
}

namespace {

void validate(const MomentProblem& p) {
    const size_t n = p.frequencies.size();
    if (n == 0) throw MomentSolverError("moment problem has no frequencies");
    if (static_cast<size_t>(p.targets.size()) != n)
        throw MomentSolverError("targets and frequencies differ in length");
    if (p.T <= 0.0) throw MomentSolverError("window length must be positive");
    for (size_t i = 0; i < n; ++i) {
        if (p.frequencies[i] < 0.0)
            throw MomentSolverError("frequencies must be nonnegative");
        if (i > 0 && p.frequencies[i] <= p.frequencies[i - 1])
            throw MomentSolverError("frequencies must be strictly increasing");
    }
    if (p.frequencies[0] == 0.0 && std::abs(p.targets(0).imag()) > 1e-12)
        throw MomentSolverError("target at frequency zero must be real");
}

} // namespace

Control solve_moments(const MomentProblem& p, int grid_segments, MomentSolveInfo* info,
                      double window_start, double residual_tol) {
    validate(p);
    const int nf = static_cast<int>(p.frequencies.size());
    const int n = grid_segments;
    const double h = p.T / n;
    const double reg = p.regularization < 0.0 ? 1e-12 * p.T : p.regularization;

    // real constraint rows over the local window [0, T]
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> b_entries;
    for (int j = 0; j < nf; ++j) {
        Eigen::VectorXcd m = hat_moments(n, h, p.frequencies[j]);
        // global moments carry the support offset phase
        cplx target = p.targets(j) * std::exp(cplx(0.0, -p.frequencies[j] * window_start));
        rows.push_back(m.real());
        b_entries.push_back(target.real());
        if (p.frequencies[j] > 0.0) {
            rows.push_back(m.imag());
            b_entries.push_back(target.imag());
        }
    }
    const int m_rows = static_cast<int>(rows.size());
    Eigen::MatrixXd A(m_rows, n + 1);
    for (int r = 0; r < m_rows; ++r) A.row(r) = rows[r].transpose();
    Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(b_entries.data(), m_rows);

    Eigen::VectorXd winv(n + 1);
    for (int i = 0; i <= n; ++i) winv(i) = 1.0 / ((i == 0 || i == n) ? 0.5 * h : h);

    Eigen::MatrixXd AWA = A * winv.asDiagonal() * A.transpose();
    Eigen::MatrixXd N = AWA + reg * Eigen::MatrixXd::Identity(m_rows, m_rows);

    Eigen::VectorXd y;
    bool pinv = false;
    Eigen::LLT<Eigen::MatrixXd> llt(N);
    if (llt.info() == Eigen::Success) {
        y = llt.solve(b);
    } else {
        pinv = true;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(AWA);
        double cutoff = 1e-13 * std::max(1.0, es.eigenvalues().maxCoeff());
        Eigen::VectorXd inv = es.eigenvalues().unaryExpr(
            [&](double l) { return l > cutoff ? 1.0 / l : 0.0; });
        y = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * b;
    }
    Eigen::VectorXd x = winv.asDiagonal() * (A.transpose() * y);

    double residual = (A * x - b).norm();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(AWA);
    double lmin = es.eigenvalues().minCoeff();
    double lmax = es.eigenvalues().maxCoeff();
    double condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();

    Control c;
    c.t0 = window_start;
    c.dt = h;
    c.samples = x;
    if (info) {
        info->residual = residual;
        info->condition = condition;
        info->control_norm = c.l2_norm();
        info->used_pseudo_inverse = pinv;
    }
    if (residual > std::max(residual_tol, reg * x.norm())) {
        throw MomentSolverError("moment solve residual " + std::to_string(residual) +
                                " exceeds tolerance; Gram condition number " +
                                std::to_string(condition));
    }
    return c;
}

Control project_vt(const Control& v, std::span<const double> frequencies,
                   MomentSolveInfo* info) {
    MomentProblem p;
    p.frequencies.assign(frequencies.begin(), frequencies.end());
    p.T = v.duration();
    p.targets.resize(static_cast<int>(frequencies.size()));
    std::span<const Control> fam(&v, 1);
    for (size_t j = 0; j < frequencies.size(); ++j)
        p.targets(static_cast<int>(j)) = moment(fam, frequencies[j]);
    if (!p.frequencies.empty() && p.frequencies[0] == 0.0)
        p.targets(0) = cplx(p.targets(0).real(), 0.0);
    Control fit = solve_moments(p, v.segments(), info, v.t0);
    Control out = v;
    out.samples -= fit.samples;
    return out;
}

double ingham_constant(std::span<const double> frequencies, double T, int N) {
    if (N < 1 || N > static_cast<int>(frequencies.size()))
        throw MomentSolverError("ingham_constant: invalid N");
    Eigen::MatrixXcd G = gram_matrix(frequencies.subspan(0, N), T);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < 64.0 * std::numeric_limits<double>::epsilon() * es.eigenvalues().maxCoeff())
        return std::numeric_limits<double>::infinity();
    return 1.0 / lmin;
}

std::vector<double> controlled_frequencies(const LostDirectionSet& lost, int j_max,
                                           bool include_zero) {
    std::vector<double> freqs;
    if (include_zero || (!lost.contains(1) && j_max >= 1)) freqs.push_back(0.0);
    for (int j = 2; j <= j_max; ++j)
        if (!lost.contains(j)) freqs.push_back(transition_frequency(j));
    return freqs;
}

} // namespace bsc
