#include "bsc/mintime.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>

#include "bsc/forms.hpp"
#include "bsc/moments.hpp"
#include "bsc/oscillatory.hpp"

namespace bsc {

namespace {

constexpr cplx I(0.0, 1.0);

struct KernelTerms {
    std::vector<int> modes;
    std::vector<double> coeffs; ///< (lambda_j - lambda_K) omega_j m1_j mK_j
    double a_K = 0.0;
    double delta = 0.0; ///< lambda_K - lambda_1
};

KernelTerms kernel_terms(const DipoleModel& mu, const MintimeOptions& opt) {
    KernelTerms kt;
    kt.a_K = second_moment_coefficient(mu, opt.K).value;
    kt.delta = eigenvalue(opt.K) - eigenvalue(1);
    for (int j = 1; j <= opt.kernel_j; ++j) {
        double m1 = coupling_extended(mu, 1, j);
        double mK = (opt.K == 1) ? m1 : coupling_extended(mu, opt.K, j);
        double c = (eigenvalue(j) - eigenvalue(opt.K)) * transition_frequency(j) * m1 * mK;
        if (c != 0.0) {
            kt.modes.push_back(j);
            kt.coeffs.push_back(c);
        }
    }
    return kt;
}

Eigen::MatrixXd pl_mass_matrix(int n, double h) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int s = 0; s < n; ++s) {
        M(s, s) += h / 3.0;
        M(s + 1, s + 1) += h / 3.0;
        M(s, s + 1) += h / 6.0;
        M(s + 1, s) += h / 6.0;
    }
    return M;
}

Eigen::MatrixXd nullspace_basis(const Eigen::MatrixXd& C) {
    if (C.rows() == 0) return Eigen::MatrixXd::Identity(C.cols(), C.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
    double tol = 1e-12 * svd.singularValues().maxCoeff();
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++rank;
    return svd.matrixV().rightCols(C.cols() - rank);
}

std::vector<double> constraint_frequencies(const DipoleModel& mu, const MintimeOptions& opt) {
    auto lost = lost_directions(mu, std::min(mu.truncation(), opt.freq_j_max));
    return controlled_frequencies(lost, opt.freq_j_max);
}

FormOperator build_nodal(const DipoleModel& mu, double T, Subspace subspace,
                         const MintimeOptions& opt) {
    FormOperator op;
    op.T = T;
    op.subspace = subspace;
    op.grid_n = opt.grid_n;
    op.grid_h = T / opt.grid_n;
    const int n = opt.grid_n;
    const double h = op.grid_h;
    KernelTerms kt = kernel_terms(mu, opt);

    Eigen::MatrixXcd cosm = hat_product_matrix(n, h, kt.delta);
    cplx phase_cos = std::exp(-I * kt.delta * T);
    Eigen::MatrixXd F = -kt.a_K * (phase_cos * cosm).real();

    cplx phase_kernel = std::exp(I * kt.delta * T);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (size_t idx = 0; idx < kt.modes.size(); ++idx) {
        int j = kt.modes[idx];
        Eigen::MatrixXcd H = hat_chain_matrix(n, h, eigenvalue(j) - eigenvalue(opt.K),
                                              -transition_frequency(j));
        B += kt.coeffs[idx] * (phase_kernel * H).imag();
    }
    F += 0.5 * (B + B.transpose());
    op.form = 0.5 * (F + F.transpose());
    op.mass = pl_mass_matrix(n, h);

    if (subspace == Subspace::full) {
        op.basis = Eigen::MatrixXd::Identity(n + 1, n + 1);
        return op;
    }
    auto freqs = constraint_frequencies(mu, opt);
    std::vector<Eigen::VectorXd> rows;
    for (double f : freqs) {
        Eigen::VectorXcd m = hat_moments(n, h, f);
        rows.push_back(m.real());
        if (f > 0.0) rows.push_back(m.imag());
    }
    Eigen::MatrixXd C(static_cast<int>(rows.size()), n + 1);
    for (size_t r = 0; r < rows.size(); ++r) C.row(static_cast<int>(r)) = rows[r].transpose();
    op.basis = nullspace_basis(C);
    return op;
}

cplx exp_chain(double a, double b, double T) {
    cplx J[1][5];
    nested_phase_integrals(a, b, T, 0, 0, J);
    return J[0][0];
}

cplx exp_moment(double theta, double T) {
    cplx e[1];
    phase_integrals(theta, T, 0, e);
    return e[0];
}

FormOperator build_sine(const DipoleModel& mu, double T, const MintimeOptions& opt) {
    FormOperator op;
    op.T = T;
    op.subspace = Subspace::h10_conforming;
    const int M = opt.sine_modes;
    KernelTerms kt = kernel_terms(mu, opt);
    const double base = M_PI / T;
    auto sine_weight = [](int s) { return s == 1 ? cplx(0.0, -0.5) : cplx(0.0, 0.5); };

    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(M, M);
    cplx phase_cos = std::exp(-I * kt.delta * T);
    for (int a = 1; a <= M; ++a) {
        for (int b = a; b <= M; ++b) {
            cplx acc(0, 0);
            for (int s1 : {1, -1})
                for (int s2 : {1, -1})
                    acc += sine_weight(s1) * sine_weight(s2) *
                           exp_moment(kt.delta + (s1 * a + s2 * b) * base, T);
            double cos_part = -kt.a_K * std::real(phase_cos * acc);
            F(a - 1, b - 1) += cos_part;
            if (a != b) F(b - 1, a - 1) += cos_part;
        }
    }
    cplx phase_kernel = std::exp(I * kt.delta * T);
    for (size_t idx = 0; idx < kt.modes.size(); ++idx) {
        int j = kt.modes[idx];
        double beta = eigenvalue(j) - eigenvalue(opt.K);
        double omega = -transition_frequency(j);
        for (int a = 1; a <= M; ++a) {
            for (int b = 1; b <= M; ++b) {
                cplx acc(0, 0);
                for (int s1 : {1, -1})
                    for (int s2 : {1, -1})
                        acc += sine_weight(s1) * sine_weight(s2) *
                               exp_chain(beta + s1 * a * base, omega + s2 * b * base, T);
                double kernel_part = kt.coeffs[idx] * std::imag(phase_kernel * acc);
                F(a - 1, b - 1) += 0.5 * kernel_part;
                F(b - 1, a - 1) += 0.5 * kernel_part;
            }
        }
    }
    op.form = 0.5 * (F + F.transpose());
    op.mass = (T / 2.0) * Eigen::MatrixXd::Identity(M, M);

    auto freqs = constraint_frequencies(mu, opt);
    std::vector<Eigen::VectorXd> rows;
    for (double f : freqs) {
        Eigen::VectorXd re(M), im(M);
        for (int m = 1; m <= M; ++m) {
            cplx mom =
                (exp_moment(f + m * base, T) - exp_moment(f - m * base, T)) / cplx(0.0, 2.0);
            re(m - 1) = mom.real();
            im(m - 1) = mom.imag();
        }
        rows.push_back(re);
        if (f > 0.0) rows.push_back(im);
    }
    Eigen::MatrixXd C(static_cast<int>(rows.size()), M);
    for (size_t r = 0; r < rows.size(); ++r) C.row(static_cast<int>(r)) = rows[r].transpose();
    op.basis = nullspace_basis(C);
    return op;
}

} // namespace

FormOperator build_form_operator(const DipoleModel& mu, double T, Subspace subspace,
                                 const MintimeOptions& opt) {
    if (subspace == Subspace::h10_conforming) return build_sine(mu, T, opt);
    return build_nodal(mu, T, subspace, opt);
}

double form_value(const FormOperator& op, const Eigen::VectorXd& x) {
    return x.dot(op.form * x);
}

double top_rayleigh(const FormOperator& op, Eigen::VectorXd* maximizer) {
    Eigen::MatrixXd Fz = op.basis.transpose() * op.form * op.basis;
    Eigen::MatrixXd Mz = op.basis.transpose() * op.mass * op.basis;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Fz, Mz);
    int top = static_cast<int>(es.eigenvalues().size()) - 1;
    if (maximizer) {
        Eigen::VectorXd z = es.eigenvectors().col(top);
        *maximizer = op.basis * z;
        double nrm = std::sqrt(maximizer->dot(op.mass * (*maximizer)));
        if (nrm > 0) *maximizer /= nrm;
    }
    return es.eigenvalues()(top);
}

double coercivity_gap(const DipoleModel& mu, double T, const MintimeOptions& opt) {
    FormOperator op = build_form_operator(mu, T, Subspace::vanishing_moments, opt);
    return -top_rayleigh(op);
}

namespace {

Bracket bisect(const std::function<bool(double)>& above, Bracket b, double tol,
               const char* what) {
    if (above(b.lo) || !above(b.hi))
        throw BracketError(std::string("no sign change in the initial bracket for ") + what);
    while (b.width() > tol) {
        double m = b.mid();
        if (above(m))
            b.hi = m;
        else
            b.lo = m;
    }
    return b;
}

} // namespace

Bracket estimate_tmin1(const DipoleModel& mu, Bracket initial, double tol,
                       const MintimeOptions& opt) {
    auto predicate = [&](double T) { return coercivity_gap(mu, T, opt) <= 0.0; };
    return bisect(predicate, initial, tol, "tmin1");
}

Bracket estimate_tmin2(const DipoleModel& mu, Bracket initial, double tol,
                       const MintimeOptions& opt) {
    auto predicate = [&](double T) {
        FormOperator op = build_form_operator(mu, T, Subspace::h10_conforming, opt);
        return top_rayleigh(op) > 0.0;
    };
    return bisect(predicate, initial, tol, "tmin2");
}

namespace {

// kernel sup bound sum |c_j| and the continuous moment-solver norm, the two
// constants entering the perturbation estimate
double eta_from_perturbation_estimate(const DipoleModel& mu, double T, double lambda,
                                      const MintimeOptions& opt) {
    if (lambda <= 0.0) return 0.0;
    KernelTerms kt = kernel_terms(mu, opt);
    double k_inf = 0.0;
    for (double c : kt.coeffs) k_inf += std::abs(c);
    auto freqs = constraint_frequencies(mu, opt);
    std::vector<double> doubled;
    for (auto it = freqs.rbegin(); it != freqs.rend(); ++it)
        if (*it > 0.0) doubled.push_back(-*it);
    for (double f : freqs) doubled.push_back(f);
    Eigen::MatrixXcd G = gram_matrix(doubled, T);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    double c_T = 1.0 / std::sqrt(std::max(es.eigenvalues().minCoeff(), 1e-300));
    // largest eta with -lambda (1-c eta)^2 + (T/2) k c^2 eta^2 + 2 T k (1+c eta) c eta
    // still below -lambda/2
    auto excess = [&](double eta) {
        double ce = c_T * eta;
        return -lambda * (1.0 - ce) * (1.0 - ce) + 0.5 * T * k_inf * ce * ce +
               2.0 * T * k_inf * (1.0 + ce) * ce + 0.5 * lambda;
    };
    double lo = 0.0, hi = 1.0 / c_T;
    if (excess(hi) <= 0.0) return hi;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (excess(mid) <= 0.0 ? lo : hi) = mid;
    }
    return lo;
}

} // namespace

EtaCheckReport coercivity_eta_check(const DipoleModel& mu, double T, double eta, int n_samples,
                                    std::uint64_t seed, const MintimeOptions& opt) {
    EtaCheckReport rep;
    rep.T = T;
    rep.eta = eta;
    rep.samples = n_samples;
    FormOperator op = build_form_operator(mu, T, Subspace::vanishing_moments, opt);
    rep.lambda = -top_rayleigh(op);
    rep.eta_proof_bound = eta_from_perturbation_estimate(mu, T, rep.lambda, opt);

    auto freqs = constraint_frequencies(mu, opt);
    std::vector<Eigen::VectorXcd> moment_rows;
    for (double f : freqs) moment_rows.push_back(hat_moments(op.grid_n, op.grid_h, f));
    auto defect_of = [&](const Eigen::VectorXd& x) {
        double d2 = 0.0;
        for (const auto& row : moment_rows) d2 += std::norm(row.dot(x.cast<cplx>()));
        return std::sqrt(d2);
    };

    // extremal candidate: maximizer of the half-shifted form over the full space
    FormOperator shifted = op;
    shifted.form += 0.5 * rep.lambda * op.mass;
    shifted.basis = Eigen::MatrixXd::Identity(op.grid_n + 1, op.grid_n + 1);
    Eigen::VectorXd extremal;
    double extremal_excess = top_rayleigh(shifted, &extremal);
    rep.eta_breakdown = std::numeric_limits<double>::infinity();
    if (extremal_excess > 0.0)
        rep.eta_breakdown = defect_of(extremal) /
                            std::sqrt(extremal.dot(op.mass * extremal));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int dim = static_cast<int>(op.basis.cols());
    auto check_sample = [&](const Eigen::VectorXd& S) {
        double n2 = S.dot(op.mass * S);
        double q = form_value(op, S);
        double margin = q + 0.5 * rep.lambda * n2;
        rep.worst_margin = std::max(rep.worst_margin, margin);
        if (margin > 1e-12 * std::max(1.0, n2)) ++rep.violations;
    };
    for (int s = 0; s < n_samples; ++s) {
        Eigen::VectorXd r(dim);
        for (int i = 0; i < dim; ++i) r(i) = g(rng);
        Eigen::VectorXd S0 = op.basis * r;
        Eigen::VectorXd p(op.grid_n + 1);
        for (int i = 0; i <= op.grid_n; ++i) p(i) = g(rng);
        double defect = defect_of(p);
        double s0_norm = std::sqrt(S0.dot(op.mass * S0));
        double alpha = defect > 0 ? eta * s0_norm / defect : 0.0;
        // bias part of the sample set toward the largest admissible perturbation
        if (s % 4 != 0) alpha *= unif(rng);
        check_sample(S0 + alpha * p);
    }
    if (eta >= rep.eta_breakdown) check_sample(extremal);
    return rep;
}

std::vector<SweepPoint> sweep(const DipoleModel& mu, double t_lo, double t_hi, int points,
                              const MintimeOptions& opt) {
    std::vector<SweepPoint> out;
    for (int i = 0; i < points; ++i) {
        double T = t_lo + (t_hi - t_lo) * i / std::max(1, points - 1);
        SweepPoint pt{};
        pt.T = T;
        FormOperator vt = build_form_operator(mu, T, Subspace::vanishing_moments, opt);
        Eigen::VectorXd xmax;
        pt.lambda = -top_rayleigh(vt, &xmax);
        pt.maximizer_end = std::abs(xmax(xmax.size() - 1));
        double h1 = 0.0;
        for (int k = 0; k + 1 < xmax.size(); ++k) {
            double d = (xmax(k + 1) - xmax(k)) / vt.grid_h;
            h1 += d * d * vt.grid_h;
        }
        pt.maximizer_h1 = std::sqrt(h1);
        FormOperator h10 = build_form_operator(mu, T, Subspace::h10_conforming, opt);
        pt.top_h10 = top_rayleigh(h10);
        out.push_back(pt);
    }
    return out;
}

} // namespace bsc
