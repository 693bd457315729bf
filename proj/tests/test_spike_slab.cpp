#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bsts/spike_slab.hpp"
#include "oracles.hpp"

using namespace bsts;

namespace {

Eigen::MatrixXd random_design(long n, long j, Rng& rng) {
    Eigen::MatrixXd x(n, j);
    for (long r = 0; r < n; ++r) {
        for (long c = 0; c < j; ++c) x(r, c) = rng.normal();
    }
    return x;
}

std::vector<int> all_included(long j) { return std::vector<int>(static_cast<std::size_t>(j), 1); }

}  // namespace

TEST_CASE("default prior sizes the expected model at 10% capped at five", "[spike_slab]") {
    auto p20 = default_prior(20);
    CHECK(p20.expected_model_size == Catch::Approx(2.0));
    REQUIRE(p20.inclusion_prob.size() == 20);
    CHECK(p20.inclusion_prob(0) == Catch::Approx(0.1));
    CHECK(p20.inclusion_prob(19) == Catch::Approx(0.1));

    auto p100 = default_prior(100);
    CHECK(p100.expected_model_size == Catch::Approx(5.0));
    CHECK(p100.inclusion_prob(57) == Catch::Approx(0.05));

    auto p1 = default_prior(1);
    CHECK(p1.expected_model_size == Catch::Approx(1.0));
    CHECK(p1.inclusion_prob(0) == Catch::Approx(1.0));

    auto p3 = default_prior(3);
    CHECK(p3.expected_model_size == Catch::Approx(1.0));
    CHECK(p3.inclusion_prob(1) == Catch::Approx(1.0 / 3.0));

    auto p0 = default_prior(0);
    CHECK(p0.inclusion_prob.size() == 0);

    CHECK(p20.kappa == Catch::Approx(0.5));
    CHECK(p20.nu == Catch::Approx(3.0));
    CHECK(p20.residual_sd_guess == Catch::Approx(0.3));
}

TEST_CASE("append_forced adds always-on columns", "[spike_slab]") {
    auto prior = default_prior(4);
    prior.append_forced(3);
    REQUIRE(prior.inclusion_prob.size() == 7);
    CHECK(prior.inclusion_prob(4) == 1.0);
    CHECK(prior.inclusion_prob(6) == 1.0);
    CHECK(prior.is_forced(5));
    CHECK_FALSE(prior.is_forced(2));
}

TEST_CASE("conditional coefficient draws agree with least squares on a large sample",
          "[spike_slab]") {
    Rng rng(314);
    const long n = 10000, j = 5;
    Eigen::MatrixXd x = random_design(n, j, rng);
    Eigen::VectorXd beta_true(j);
    beta_true << 1.5, -2.0, 0.5, 3.0, -1.0;
    Eigen::VectorXd y = x * beta_true;
    for (long r = 0; r < n; ++r) y(r) += 0.01 * rng.normal();

    // oracle: plain least squares through a QR factorization
    Eigen::VectorXd ols = x.colPivHouseholderQr().solve(y);

    auto prior = default_prior(j);
    RegressionData data(x);
    Eigen::VectorXd mean_draw = Eigen::VectorXd::Zero(j);
    const int reps = 50;
    double mean_sigma_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        auto [beta, sigma_sq] = sample_coefficients(all_included(j), prior, data, y, rng);
        mean_draw += beta;
        mean_sigma_sq += sigma_sq;
    }
    mean_draw /= reps;
    mean_sigma_sq /= reps;

    for (long c = 0; c < j; ++c) {
        CHECK(std::abs(mean_draw(c) - ols(c)) < 0.01);
        CHECK(std::abs(mean_draw(c) - beta_true(c)) < 0.01);
    }
    // the zero-mean slab charges roughly beta' Omega beta ~ 16.5 to the sum
    // of squares, so the posterior sits near (0.27 + 1.0 + 16.5) / n
    CHECK(mean_sigma_sq > 1e-4);
    CHECK(mean_sigma_sq < 5e-3);
}

TEST_CASE("zero prior probability keeps a column out forever", "[spike_slab]") {
    Rng rng(99);
    const long n = 150, j = 4;
    Eigen::MatrixXd x = random_design(n, j, rng);
    // y loads on every column, including the vetoed one
    Eigen::VectorXd y = x.rowwise().sum();
    for (long r = 0; r < n; ++r) y(r) += 0.1 * rng.normal();

    auto prior = default_prior(j);
    prior.inclusion_prob(2) = 0.0;
    RegressionData data(x);
    RegressionState state{all_included(j), Eigen::VectorXd::Zero(j), 1.0};
    for (int sweep = 0; sweep < 200; ++sweep) {
        sample_inclusion(state, prior, data, y, rng);
        REQUIRE(state.gamma[2] == 0);
        auto [beta, sigma_sq] = sample_coefficients(state.gamma, prior, data, y, rng);
        REQUIRE(beta(2) == 0.0);
    }
}

TEST_CASE("a strong signal column is almost always selected", "[spike_slab]") {
    Rng rng(2024);
    const long n = 200, j = 11;
    Eigen::MatrixXd x = random_design(n, j, rng);
    Eigen::VectorXd y = 2.0 * x.col(0);
    for (long r = 0; r < n; ++r) y(r) += 0.1 * rng.normal();

    auto prior = default_prior(j);
    RegressionData data(x);
    RegressionState state{std::vector<int>(j, 0), Eigen::VectorXd::Zero(j), 1.0};
    for (int sweep = 0; sweep < 100; ++sweep) sample_inclusion(state, prior, data, y, rng);

    int hits = 0;
    const int sweeps = 1000;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        sample_inclusion(state, prior, data, y, rng);
        hits += state.gamma[0];
    }
    CHECK(static_cast<double>(hits) / sweeps >= 0.95);
}

TEST_CASE("pure noise leaves inclusion at or below the prior", "[spike_slab]") {
    Rng rng(555);
    const long n = 200, j = 10;
    Eigen::MatrixXd x = random_design(n, j, rng);
    Eigen::VectorXd y(n);
    for (long r = 0; r < n; ++r) y(r) = rng.normal();

    auto prior = default_prior(j);  // pi_j = 0.1
    RegressionData data(x);
    RegressionState state{std::vector<int>(j, 0), Eigen::VectorXd::Zero(j), 1.0};
    for (int sweep = 0; sweep < 100; ++sweep) sample_inclusion(state, prior, data, y, rng);

    long total = 0;
    const int sweeps = 1000;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        sample_inclusion(state, prior, data, y, rng);
        for (int g : state.gamma) total += g;
    }
    const double mean_inclusion = static_cast<double>(total) / (sweeps * j);
    CHECK(mean_inclusion <= 2.0 * 0.1);
}

TEST_CASE("excluded coefficients are exactly zero", "[spike_slab]") {
    Rng rng(7);
    const long n = 120, j = 8;
    Eigen::MatrixXd x = random_design(n, j, rng);
    Eigen::VectorXd y = x.col(1) - 0.5 * x.col(4);
    for (long r = 0; r < n; ++r) y(r) += 0.2 * rng.normal();

    auto prior = default_prior(j);
    RegressionData data(x);
    std::vector<int> gamma = {0, 1, 0, 0, 1, 0, 0, 0};
    auto [beta, sigma_sq] = sample_coefficients(gamma, prior, data, y, rng);
    CHECK(beta(0) == 0.0);
    CHECK(beta(2) == 0.0);
    CHECK(beta(7) == 0.0);
    CHECK(beta(1) != 0.0);
    CHECK(beta(4) != 0.0);
    CHECK(sigma_sq > 0.0);
}

TEST_CASE("forced columns survive every sweep", "[spike_slab]") {
    Rng rng(31);
    const long n = 100, j = 6;
    Eigen::MatrixXd x = random_design(n, j, rng);
    Eigen::VectorXd y(n);
    for (long r = 0; r < n; ++r) y(r) = rng.normal();  // no signal at all

    auto prior = default_prior(4);
    prior.append_forced(2);  // columns 4 and 5
    RegressionData data(x);
    RegressionState state{std::vector<int>(j, 0), Eigen::VectorXd::Zero(j), 1.0};
    for (int sweep = 0; sweep < 50; ++sweep) {
        sample_inclusion(state, prior, data, y, rng);
        REQUIRE(state.gamma[4] == 1);
        REQUIRE(state.gamma[5] == 1);
    }
}

TEST_CASE("identical seeds give identical inclusion and coefficient paths", "[spike_slab]") {
    const long n = 150, j = 9;
    Rng make(404);
    Eigen::MatrixXd x = random_design(n, j, make);
    Eigen::VectorXd y = 1.2 * x.col(3);
    for (long r = 0; r < n; ++r) y(r) += 0.3 * make.normal();
    RegressionData data(x);
    auto prior = default_prior(j);

    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        RegressionState state{std::vector<int>(j, 0), Eigen::VectorXd::Zero(j), 1.0};
        std::vector<std::vector<int>> gammas;
        std::vector<Eigen::VectorXd> betas;
        for (int sweep = 0; sweep < 30; ++sweep) {
            sample_inclusion(state, prior, data, y, rng);
            auto [beta, sigma_sq] = sample_coefficients(state.gamma, prior, data, y, rng);
            gammas.push_back(state.gamma);
            betas.push_back(beta);
        }
        return std::make_pair(gammas, betas);
    };

    auto [g1, b1] = run(12345);
    auto [g2, b2] = run(12345);
    REQUIRE(g1 == g2);
    for (std::size_t i = 0; i < b1.size(); ++i) REQUIRE(b1[i] == b2[i]);

    auto [g3, b3] = run(54321);
    bool any_difference = false;
    for (std::size_t i = 0; i < b1.size() && !any_difference; ++i) {
        if (b1[i] != b3[i]) any_difference = true;
    }
    CHECK(any_difference);
}

TEST_CASE("an all-zero column makes the information matrix singular", "[spike_slab]") {
    Rng rng(88);
    const long n = 60, j = 3;
    Eigen::MatrixXd x = random_design(n, j, rng);
    x.col(1).setZero();
    Eigen::VectorXd y = x.col(0);

    auto prior = default_prior(j);
    RegressionData data(x);
    CHECK_THROWS_AS(sample_coefficients(all_included(j), prior, data, y, rng),
                    SingularInformation);
}

TEST_CASE("empty design still draws a residual variance", "[spike_slab]") {
    Rng rng(17);
    const long n = 80;
    Eigen::VectorXd y(n);
    for (long r = 0; r < n; ++r) y(r) = 2.0 * rng.normal();

    auto prior = default_prior(0);
    RegressionData data(Eigen::MatrixXd(n, 0));
    double mean_sigma_sq = 0.0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        auto [beta, sigma_sq] = sample_coefficients({}, prior, data, y, rng);
        REQUIRE(beta.size() == 0);
        mean_sigma_sq += sigma_sq;
    }
    mean_sigma_sq /= reps;
    // posterior mean ~ (nu s^2 + y'y) / (n + nu - 2): close to the sample variance
    const double sample_var = y.squaredNorm() / n;
    CHECK(mean_sigma_sq == Catch::Approx(sample_var).margin(0.25 * sample_var));
}
