#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "bsts/errors.hpp"
#include "bsts/rng.hpp"

namespace bsts {

// ---------------------------------------------------------------------------
// Spike-and-slab regression with a Gaussian / inverse-gamma slab.
//
// Conditional on an inclusion vector gamma, the slab is
//   beta_I | sigma^2 ~ N(0, sigma^2 * Omega_I^{-1})
//   sigma^2 ~ InverseGamma(nu/2, nu s^2 / 2)
// where Omega is one observation's worth of the averaged design information,
// mixed toward its diagonal to tolerate collinear controls:
//   Omega = kappa * X'X/n + (1 - kappa) * diag(X'X)/n.
// Integrating beta and sigma^2 out gives the closed-form marginal used for
// single-site Gibbs flips of gamma.
// ---------------------------------------------------------------------------

struct SpikeSlabPrior {
    Eigen::VectorXd inclusion_prob;  // pi_j per design column
    double expected_model_size = 1.0;
    double kappa = 0.5;              // weight on the full information matrix
    double nu = 3.0;                 // prior residual degrees of freedom
    double residual_sd_guess = 0.3;  // prior residual sd (standardized scale)
    std::vector<int> forced_in;      // columns always included

    bool is_forced(int j) const {
        return std::find(forced_in.begin(), forced_in.end(), j) != forced_in.end();
    }

    /// Appends `count` always-included columns (e.g. seasonal regressors).
    SpikeSlabPrior& append_forced(std::size_t count) {
        const int j0 = static_cast<int>(inclusion_prob.size());
        inclusion_prob.conservativeResize(j0 + static_cast<int>(count));
        for (std::size_t k = 0; k < count; ++k) {
            inclusion_prob(j0 + static_cast<int>(k)) = 1.0;
            forced_in.push_back(j0 + static_cast<int>(k));
        }
        return *this;
    }
};

/// Default prior for J selectable controls: expected model size is 10% of J
/// capped at 5, spread uniformly.
inline SpikeSlabPrior default_prior(std::size_t selectable) {
    SpikeSlabPrior prior;
    const double j = static_cast<double>(selectable);
    double m = selectable == 0 ? 0.0 : std::min(std::ceil(0.1 * j), 5.0);
    if (selectable >= 1) m = std::max(m, 1.0);
    prior.expected_model_size = m;
    prior.inclusion_prob =
        Eigen::VectorXd::Constant(static_cast<int>(selectable),
                                  selectable == 0 ? 0.0 : std::min(m / j, 1.0));
    return prior;
}

struct RegressionState {
    std::vector<int> gamma;  // 0/1 inclusion per column
    Eigen::VectorXd beta;    // exactly zero where gamma_j = 0
    double sigma_sq = 1.0;
};

/// Design matrix with the cross-products the sampler reuses across sweeps.
struct RegressionData {
    Eigen::MatrixXd X;    // n x J
    Eigen::MatrixXd xtx;  // X'X

    explicit RegressionData(Eigen::MatrixXd design) : X(std::move(design)) {
        xtx = X.transpose() * X;
    }

    long n() const { return X.rows(); }
    long cols() const { return X.cols(); }
};

namespace detail {

struct MarginalScore {
    double log_marginal;
    Eigen::VectorXd beta_tilde;  // posterior mean over included columns
    Eigen::MatrixXd chol_lower;  // L with L L' = Omega_I + X_I' X_I
    double sum_squares;          // nu s^2 + y'y - h' beta_tilde
};

/// Log marginal likelihood (up to a gamma-independent constant) of the
/// included set, with beta and sigma^2 integrated out.
inline MarginalScore score_inclusion(const std::vector<int>& included,
                                     const SpikeSlabPrior& prior,
                                     const RegressionData& data,
                                     const Eigen::VectorXd& xty, double yty,
                                     double n_obs) {
    MarginalScore out;
    const int k = static_cast<int>(included.size());
    const double nu_ss = prior.nu * prior.residual_sd_guess * prior.residual_sd_guess;
    if (k == 0) {
        out.log_marginal = -0.5 * (n_obs + prior.nu) * std::log(nu_ss + yty);
        out.sum_squares = nu_ss + yty;
        return out;
    }
    Eigen::MatrixXd omega(k, k);
    Eigen::MatrixXd a(k, k);
    Eigen::VectorXd h(k);
    const double scale = 1.0 / n_obs;
    for (int r = 0; r < k; ++r) {
        h(r) = xty(included[r]);
        for (int c = 0; c < k; ++c) {
            const double cross = data.xtx(included[r], included[c]);
            omega(r, c) = (r == c) ? cross * scale : prior.kappa * cross * scale;
            a(r, c) = omega(r, c) + cross;
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt_omega(omega);
    Eigen::LLT<Eigen::MatrixXd> llt_a(a);
    if (llt_omega.info() != Eigen::Success || llt_a.info() != Eigen::Success) {
        throw SingularInformation(
            "spike_slab: information matrix of the included columns is singular");
    }
    double logdet_omega = 0.0, logdet_a = 0.0;
    for (int i = 0; i < k; ++i) {
        logdet_omega += 2.0 * std::log(llt_omega.matrixL()(i, i));
        logdet_a += 2.0 * std::log(llt_a.matrixL()(i, i));
    }
    out.beta_tilde = llt_a.solve(h);
    out.sum_squares = nu_ss + yty - h.dot(out.beta_tilde);
    out.chol_lower = llt_a.matrixL();
    out.log_marginal = 0.5 * logdet_omega - 0.5 * logdet_a -
                       0.5 * (n_obs + prior.nu) * std::log(out.sum_squares);
    return out;
}

inline std::vector<int> included_indices(const std::vector<int>& gamma) {
    std::vector<int> idx;
    for (std::size_t j = 0; j < gamma.size(); ++j) {
        if (gamma[j]) idx.push_back(static_cast<int>(j));
    }
    return idx;
}

}  // namespace detail

/// One single-site Gibbs sweep over the selectable columns, visiting them in
/// random order. Forced-in columns are never toggled. Mutates and returns
/// state.gamma.
inline std::vector<int>& sample_inclusion(RegressionState& state,
                                          const SpikeSlabPrior& prior,
                                          const RegressionData& data,
                                          const Eigen::VectorXd& targets, Rng& rng) {
    const long J = data.cols();
    if (static_cast<long>(state.gamma.size()) != J) {
        throw Error("sample_inclusion: gamma size does not match design");
    }
    const Eigen::VectorXd xty = data.X.transpose() * targets;
    const double yty = targets.squaredNorm();
    const double n_obs = static_cast<double>(data.n());

    std::vector<int> order;
    for (long j = 0; j < J; ++j) {
        if (!prior.is_forced(static_cast<int>(j))) order.push_back(static_cast<int>(j));
    }
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }

    // Columns with a degenerate prior never change and are settled up front.
    for (long j = 0; j < J; ++j) {
        const double pi_j = prior.inclusion_prob(j);
        if (pi_j <= 0.0 && !prior.is_forced(static_cast<int>(j))) {
            state.gamma[static_cast<std::size_t>(j)] = 0;
        } else if (pi_j >= 1.0) {
            state.gamma[static_cast<std::size_t>(j)] = 1;
        }
    }

    double log_current =
        detail::score_inclusion(detail::included_indices(state.gamma), prior, data, xty,
                                yty, n_obs)
            .log_marginal;
    for (int j : order) {
        const double pi_j = prior.inclusion_prob(j);
        if (pi_j <= 0.0 || pi_j >= 1.0) continue;
        auto flipped = state.gamma;
        flipped[static_cast<std::size_t>(j)] ^= 1;
        const double log_flipped =
            detail::score_inclusion(detail::included_indices(flipped), prior, data, xty,
                                    yty, n_obs)
                .log_marginal;
        const bool currently_in = state.gamma[static_cast<std::size_t>(j)] == 1;
        const double log1 = (currently_in ? log_current : log_flipped) + std::log(pi_j);
        const double log0 = (currently_in ? log_flipped : log_current) + std::log1p(-pi_j);
        const double p_include = 1.0 / (1.0 + std::exp(log0 - log1));
        const bool include = rng.bernoulli(p_include);
        if (include != currently_in) {
            state.gamma = std::move(flipped);
            log_current = log_flipped;
        }
    }
    return state.gamma;
}

/// Draws (beta, sigma^2) conditional on the inclusion vector; excluded
/// coefficients are exactly zero.
inline std::pair<Eigen::VectorXd, double> sample_coefficients(
    const std::vector<int>& gamma, const SpikeSlabPrior& prior,
    const RegressionData& data, const Eigen::VectorXd& targets, Rng& rng) {
    const Eigen::VectorXd xty = data.X.transpose() * targets;
    const double yty = targets.squaredNorm();
    const double n_obs = static_cast<double>(data.n());

    const std::vector<int> included = detail::included_indices(gamma);
    detail::MarginalScore score =
        detail::score_inclusion(included, prior, data, xty, yty, n_obs);

    const double shape = 0.5 * (n_obs + prior.nu);
    const double rate = 0.5 * score.sum_squares;
    const double sigma_sq = rng.inverse_gamma(shape, rate);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.cols());
    const int k = static_cast<int>(included.size());
    if (k > 0) {
        // beta_I | sigma^2 ~ N(beta_tilde, sigma^2 (Omega_I + X_I'X_I)^{-1})
        Eigen::VectorXd z(k);
        for (int i = 0; i < k; ++i) z(i) = rng.normal();
        Eigen::VectorXd shift =
            score.chol_lower.transpose().triangularView<Eigen::Upper>().solve(z);
        for (int i = 0; i < k; ++i) {
            beta(included[i]) = score.beta_tilde(i) + std::sqrt(sigma_sq) * shift(i);
        }
    }
    return {std::move(beta), sigma_sq};
}

}  // namespace bsts
