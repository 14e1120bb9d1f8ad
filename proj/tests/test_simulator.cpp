#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "bsc/simulator.hpp"

using namespace bsc;

namespace {

Control band_limited(double T, int n, unsigned seed, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Control v = sample_control(0.0, T, n, [](double) { return 0.0; });
    for (int m = 1; m <= 8; ++m) {
        double a = amp * g(rng) / m;
        for (int i = 0; i <= n; ++i) v.samples(i) += a * std::sin(m * M_PI * i * v.dt / T);
    }
    return v;
}

} // namespace

TEST_CASE("free evolution is the diagonal phase") {
    auto mu = DipoleModel::preset("x_minus_half", 8);
    for (int k : {1, 3}) {
        Trajectory tr = propagate(eigenstate(k, 8), {}, mu, 0.37);
        cplx expect = std::exp(cplx(0.0, -eigenvalue(k) * 0.37));
        CHECK(std::abs(tr.final_state().coeffs(k - 1) - expect) < 1e-12);
        CHECK(tr.norm_drift < 1e-13);
    }
}

TEST_CASE("unitarity under random control") {
    auto mu = DipoleModel::preset("x_minus_half", 24);
    Control u = band_limited(0.5, 400, 41);
    std::vector<Control> fam{u};
    Trajectory tr = propagate(ground_state(24), fam, mu);
    CHECK(std::abs(tr.final_state().coeffs.norm() - 1.0) < 1e-10);
    CHECK(tr.norm_drift < 1e-10);
}

TEST_CASE("gauge system with zero primitive is free evolution") {
    auto mu = DipoleModel::preset("x_minus_half", 12);
    Control s = sample_control(0.0, 0.3, 60, [](double) { return 0.0; });
    std::vector<Control> fam{s};
    Trajectory tr = propagate_gauge(fam, mu);
    cplx expect = std::exp(cplx(0.0, -eigenvalue(1) * 0.3));
    CHECK(std::abs(tr.final_state().coeffs(0) - expect) < 1e-12);
}

TEST_CASE("gauge transform is unitary and invertible") {
    auto mu = DipoleModel::preset("x_minus_half", 12);
    SpectralState psi = eigenstate(1, 12);
    SpectralState moved = gauge_transform(psi, 0.17, mu);
    CHECK(moved.coeffs.norm() == doctest::Approx(1.0).epsilon(1e-13));
    SpectralState back = gauge_transform(moved, -0.17, mu);
    CHECK((back.coeffs - psi.coeffs).norm() < 1e-12);
    SpectralState id = gauge_transform(psi, 0.0, mu);
    CHECK((id.coeffs - psi.coeffs).norm() < 1e-14);
}

TEST_CASE("direct and gauge propagation agree") {
    auto mu = DipoleModel::preset("x_minus_half", 20);
    double T = 0.3;
    Control u = band_limited(T, 300, 7, 0.15);
    std::vector<Control> fu{u};
    Control s = u.primitive();
    std::vector<Control> fs{s};
    auto discrepancy = [&](double dt) {
        PropagateOptions opt;
        opt.dt = dt;
        Trajectory direct = propagate(ground_state(20), fu, mu, T, opt);
        Trajectory gauge = propagate_gauge(fs, mu, T, opt);
        SpectralState recovered = gauge_transform(gauge.final_state(), s.value(T), mu);
        return (recovered.coeffs - direct.final_state().coeffs).norm();
    };
    double err = discrepancy(1e-4);
    CHECK(err < 1e-6);
    // the discrepancy shrinks at second order in the step (measured above the
    // truncation floor of the identification between the two systems)
    double e0 = discrepancy(4e-4), e1 = discrepancy(2e-4), e2 = discrepancy(1e-4);
    double rate1 = std::log2(e0 / e1), rate2 = std::log2(e1 / e2);
    CHECK(rate1 > 1.6);
    CHECK(rate1 < 2.4);
    CHECK(rate2 > 1.6);
    CHECK(rate2 < 2.4);
}

TEST_CASE("step convergence of the splitting is second order") {
    auto mu = DipoleModel::preset("x_squared", 16);
    double T = 0.25;
    Control u = band_limited(T, 250, 3, 0.6);
    std::vector<Control> fam{u};
    auto run = [&](double dt) {
        PropagateOptions opt;
        opt.dt = dt;
        return propagate(ground_state(16), fam, mu, T, opt).final_state().coeffs;
    };
    auto ref = run(6.25e-6);
    double e1 = (run(1e-4) - ref).norm();
    double e2 = (run(5e-5) - ref).norm();
    double rate = std::log2(e1 / e2);
    CHECK(rate > 1.8);
    CHECK(rate < 2.2);
}

TEST_CASE("truncation convergence for smooth data") {
    double T = 0.2;
    Control u = band_limited(T, 200, 9, 0.4);
    std::vector<Control> fam{u};
    PropagateOptions opt;
    opt.dt = 2e-5;
    auto mu32 = DipoleModel::preset("x_minus_half", 32);
    auto mu64 = DipoleModel::preset("x_minus_half", 64);
    auto c32 = propagate(ground_state(32), fam, mu32, T, opt).final_state().coeffs;
    auto c64 = propagate(ground_state(64), fam, mu64, T, opt).final_state().coeffs;
    double diff = (c64.head(32) - c32).norm() + c64.tail(32).norm();
    CHECK(diff < 1e-8);
}

TEST_CASE("trajectory csv header and shape") {
    auto mu = DipoleModel::preset("x_minus_half", 4);
    PropagateOptions opt;
    opt.store_every = 50;
    Trajectory tr = propagate(ground_state(4), {}, mu, 0.1, opt);
    std::stringstream ss;
    write_trajectory_csv(ss, tr);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "t,re_c1,im_c1,re_c2,im_c2,re_c3,im_c3,re_c4,im_c4");
}
