#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "bsc/moments.hpp"
#include "bsc/oscillatory.hpp"

using namespace bsc;

TEST_CASE("gram matrix basics") {
    std::vector<double> f0{0.0};
    auto G = gram_matrix(f0, 0.7);
    CHECK(G(0, 0).real() == doctest::Approx(0.7));
    CHECK(G(0, 0).imag() == doctest::Approx(0.0));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> f{0.0};
        for (int j = 0; j < 6; ++j) f.push_back(f.back() + u(rng) * 10.0);
        auto Gm = gram_matrix(f, 1.3);
        for (size_t j = 0; j < f.size(); ++j) CHECK(std::abs(Gm(j, j) - cplx(1.3, 0)) < 1e-12);
        CHECK((Gm - Gm.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Gm);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("all-zero targets give the zero control") {
    MomentProblem p;
    p.frequencies = {0.0, 3.0, 11.0};
    p.targets = Eigen::VectorXcd::Zero(3);
    p.T = 1.0;
    Control v = solve_moments(p, 256);
    CHECK(v.samples.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("moment round trip on transition frequencies") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    MomentProblem p;
    p.T = 1.0;
    p.frequencies.push_back(0.0);
    for (int j = 2; j <= 12; ++j) p.frequencies.push_back(transition_frequency(j));
    p.targets.resize(12);
    p.targets(0) = cplx(g(rng), 0.0);
    for (int j = 1; j < 12; ++j) p.targets(j) = cplx(g(rng), g(rng));

    MomentSolveInfo info;
    Control v = solve_moments(p, 2048, &info);
    std::span<const Control> fam(&v, 1);
    double worst = 0.0;
    for (size_t j = 0; j < p.frequencies.size(); ++j)
        worst = std::max(worst, std::abs(moment(fam, p.frequencies[j]) - p.targets(j)));
    CHECK(worst < 1e-8);
    CHECK(info.residual < 1e-8);

    // minimal-norm comparison against the continuum Gram bound: the piecewise
    // solution cannot beat it and should approach it on refinement
    auto G = gram_matrix(p.frequencies, p.T);
    // doubled conjugate-frequency system for a real signal
    int nf = static_cast<int>(p.frequencies.size());
    std::vector<double> dbl;
    Eigen::VectorXcd dtarg(2 * nf - 1);
    int idx = 0;
    for (int j = nf - 1; j >= 1; --j) dbl.push_back(-p.frequencies[j]);
    for (int j = 0; j < nf; ++j) dbl.push_back(p.frequencies[j]);
    for (int j = nf - 1; j >= 1; --j) dtarg(idx++) = std::conj(p.targets(j));
    for (int j = 0; j < nf; ++j) dtarg(idx++) = p.targets(j);
    auto Gd = gram_matrix(dbl, p.T);
    double continuum = std::sqrt(std::real(dtarg.dot(Gd.ldlt().solve(dtarg))));
    CHECK(v.l2_norm() >= continuum * (1.0 - 1e-6));
    CHECK(v.l2_norm() <= continuum * 1.05);
}

TEST_CASE("projection onto vanishing moments") {
    std::vector<double> freqs{0.0, transition_frequency(2), transition_frequency(3)};
    Control v = sample_control(0.0, 0.8, 512, [](double t) {
        return std::cos(transition_frequency(2) * t) + 0.3 * std::sin(7.0 * t);
    });
    Control pv = project_vt(v, freqs);
    std::span<const Control> fam(&pv, 1);
    for (double f : freqs) CHECK(std::abs(moment(fam, f)) < 1e-9);
    // idempotence
    Control pv2 = project_vt(pv, freqs);
    CHECK((pv2.samples - pv.samples).cwiseAbs().maxCoeff() < 1e-8);
    // a control already in the space is unchanged
    Control in_vt = pv;
    Control back = project_vt(in_vt, freqs);
    CHECK((back.samples - in_vt.samples).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("projection on a shifted window") {
    std::vector<double> freqs{transition_frequency(2), transition_frequency(4)};
    Control v = sample_control(0.35, 0.4, 256, [](double t) { return std::sin(15.0 * t); });
    Control pv = project_vt(v, freqs);
    CHECK(pv.t0 == doctest::Approx(0.35));
    std::span<const Control> fam(&pv, 1);
    for (double f : freqs) CHECK(std::abs(moment(fam, f)) < 1e-9);
}

TEST_CASE("ingham constant") {
    std::vector<double> f{0.0};
    CHECK(ingham_constant(f, 0.5, 1) == doctest::Approx(2.0));
    std::vector<double> freqs;
    for (int j = 1; j <= 8; ++j) freqs.push_back(transition_frequency(j));
    double prev = std::numeric_limits<double>::infinity();
    for (double T : {0.2, 0.4, 0.8, 1.6}) {
        double c = ingham_constant(freqs, T, 8);
        CHECK(c <= prev * (1.0 + 1e-9));
        prev = c;
    }
}

TEST_CASE("solver validates input") {
    MomentProblem p;
    p.T = 1.0;
    p.frequencies = {0.0, 5.0};
    p.targets.resize(2);
    p.targets << cplx(0.0, 0.4), cplx(0.0, 0.0); // imaginary target at frequency zero
    CHECK_THROWS_AS(solve_moments(p, 64), MomentSolverError);
    p.frequencies = {5.0, 5.0};
    p.targets << cplx(1.0, 0.0), cplx(0.0, 0.0);
    CHECK_THROWS_AS(solve_moments(p, 64), MomentSolverError);
}

TEST_CASE("gram eigenpair residual") {
    std::vector<double> freqs;
    for (int j = 1; j <= 10; ++j) freqs.push_back(transition_frequency(j));
    auto G = gram_matrix(freqs, 0.8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
    Eigen::VectorXcd a = es.eigenvectors().col(0);
    double lmin = es.eigenvalues()(0);
    CHECK((G * a - lmin * a).norm() < 1e-10);
}
