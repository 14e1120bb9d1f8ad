#include <doctest.h>

#include <cmath>

#include "bsc/spectral.hpp"

using namespace bsc;

TEST_CASE("eigenvalues and transition frequencies") {
    CHECK(eigenvalue(1) == doctest::Approx(M_PI * M_PI).epsilon(1e-15));
    CHECK(eigenvalue(2) == doctest::Approx(4.0 * M_PI * M_PI).epsilon(1e-15));
    CHECK(transition_frequency(1) == 0.0);
    CHECK(transition_frequency(2) == doctest::Approx(3.0 * M_PI * M_PI).epsilon(1e-15));
    CHECK(transition_frequency(3) == doctest::Approx(8.0 * M_PI * M_PI).epsilon(1e-15));
    CHECK_THROWS(eigenvalue(0));
}

TEST_CASE("dipole coefficients for x - 1/2") {
    auto mu = DipoleModel::preset("x_minus_half", 16);
    CHECK(std::abs(dipole_coefficient(mu, 1, 1)) < 1e-13);
    // |<mu phi_1, phi_2>| = 16/(9 pi^2); direct quadrature fixes the sign as negative
    double expected = -16.0 / (9.0 * M_PI * M_PI);
    CHECK(dipole_coefficient(mu, 1, 2) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(dipole_coefficient(mu, 1, 3)) < 1e-13);
}

TEST_CASE("dipole matrix is symmetric and matches direct quadrature") {
    auto mu = DipoleModel::preset("x_squared", 12);
    const auto& M = mu.dipole_matrix();
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(M(0, 4) == doctest::Approx(dipole_coefficient(mu, 1, 5)).epsilon(1e-11));
}

TEST_CASE("asymptotic coefficient law") {
    auto mu = DipoleModel::preset("x_minus_half", 8);
    // mu' = 1: decay ratio against quadrature goes to zero
    double prev = 1e9;
    for (int n : {16, 32, 64, 128}) {
        double exact = dipole_coefficient(mu, 1, n);
        double asym = dipole_coefficient_asymptotic(mu, 1, n);
        double err = std::abs(exact - asym) * n * n * n;
        CHECK(err < prev + 1e-12);
        prev = err;
    }
    auto mu2 = DipoleModel::preset("x_squared", 8);
    double exact = dipole_coefficient(mu2, 1, 50);
    double asym = dipole_coefficient_asymptotic(mu2, 1, 50);
    CHECK(asym == doctest::Approx(exact).epsilon(5e-2));
    CHECK(mu2.mu_prime(0.0) == doctest::Approx(0.0));
    CHECK(mu2.mu_prime(1.0) == doctest::Approx(2.0));
}

TEST_CASE("second moment coefficient") {
    auto mu = DipoleModel::preset("x_minus_half", 8);
    auto a1 = second_moment_coefficient(mu, 1);
    CHECK(a1.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a1.sign == 1);
    CHECK_FALSE(a1.degenerate);

    auto mu2 = DipoleModel::preset("x_squared", 8);
    auto a2 = second_moment_coefficient(mu2, 2);
    double oracle = integrate_checked(
        mu2.quadrature(),
        [&](double x) { return 4.0 * x * x * mode_function(1, x) * mode_function(2, x); }, 0.0,
        1.0);
    CHECK(a2.value == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("sobolev norms") {
    SpectralState s1 = eigenstate(1, 8);
    CHECK(sobolev_norm(s1, 3.0) == doctest::Approx(1.0));
    SpectralState s2 = eigenstate(2, 8);
    CHECK(sobolev_norm(s2, 3.0) == doctest::Approx(8.0));
    SpectralState mix;
    mix.coeffs = Eigen::VectorXcd::Zero(8);
    mix.coeffs(0) = 1.0 / std::sqrt(2.0);
    mix.coeffs(1) = 1.0 / std::sqrt(2.0);
    CHECK(sobolev_norm(mix, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    // Parseval at s=0
    double direct = std::sqrt(mix.coeffs.squaredNorm());
    CHECK(sobolev_norm(mix, 0.0) == doctest::Approx(direct).epsilon(1e-15));
}

TEST_CASE("lost directions") {
    auto mu = DipoleModel::preset("x_minus_half", 20);
    auto lost = lost_directions(mu, 20);
    std::vector<int> odd;
    for (int k = 1; k <= 20; k += 2) odd.push_back(k);
    CHECK(lost.indices == odd);
    CHECK(lost.decay_constant > 0.0);

    auto mu2 = DipoleModel::preset("x_squared", 20);
    CHECK(lost_directions(mu2, 20).indices.empty());

    auto mu3 = DipoleModel::preset("x_squared_corrected", 20);
    auto lost3 = lost_directions(mu3, 20);
    CHECK(lost3.indices == std::vector<int>{2});

    auto demo = DipoleModel::preset("two_lost_demo", 20);
    auto lostd = lost_directions(demo, 20);
    CHECK(lostd.indices == std::vector<int>{1, 2});
}

TEST_CASE("gradient matrix is antisymmetric and matches commutator identity") {
    auto mu = DipoleModel::preset("x_minus_half", 10);
    const auto& P = mu.gradient_matrix();
    CHECK((P + P.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    // <(2 mu' d/dx + mu'') phi_1, phi_j> = (lambda_1 - lambda_j) <mu phi_1, phi_j>
    for (int j = 2; j <= 10; ++j) {
        double expect = (eigenvalue(1) - eigenvalue(j)) * mu.coupling(1, j);
        CHECK(P(j - 1, 0) == doctest::Approx(expect).epsilon(1e-9).scale(1.0));
    }
}
