#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "bsts/errors.hpp"
#include "bsts/rng.hpp"
#include "bsts/series.hpp"

namespace bsts {

// ---------------------------------------------------------------------------
// Component specifications
//
// The observation y_t = Z' alpha_t + offset_t + eps_t decomposes into a trend
// block, an optional weekly seasonal block, and a regression offset handled
// outside the state (offset_t = beta' x_t).
// ---------------------------------------------------------------------------

/// Random-walk level: mu_t = mu_{t-1} + u_t.
struct LocalLevel {
    double sigma_level = 0.1;
};

/// Random-walk level with random-walk slope.
struct LocalLinear {
    double sigma_level = 0.1;
    double sigma_slope = 0.1;
};

/// Level with AR(1) slope reverting to a long-run value:
/// delta_t = slope_mean + rho * (delta_{t-1} - slope_mean) + v_t.
struct SemiLocalLinear {
    double sigma_level = 0.1;
    double sigma_slope = 0.1;
    double rho = 0.5;        // |rho| < 1
    double slope_mean = 0.0;
};

/// Time-constant intercept estimated from the data (zero state noise).
struct StaticIntercept {};

/// Seasonal with period S as S-1 states; the current effect is the negative
/// sum of the previous S-1 effects plus noise.
struct WeeklySeasonal {
    double sigma_seasonal = 0.1;
    int period = 7;
};

using ComponentSpec =
    std::variant<LocalLevel, LocalLinear, SemiLocalLinear, StaticIntercept, WeeklySeasonal>;

enum class BlockKind { LocalLevel, LocalLinear, SemiLocalLinear, StaticIntercept, Seasonal };

struct StateBlock {
    BlockKind kind;
    int offset;  // first state index of the block
    int dim;
};

/// Gaussian linear state-space model with univariate observations.
/// State noise is R * eta_t with eta_t ~ N(0, diag(state_noise_var)).
struct StateSpaceModel {
    Eigen::VectorXd Z;                // observation loadings (m)
    Eigen::MatrixXd T;                // transition (m x m)
    Eigen::MatrixXd R;                // noise selection (m x q)
    Eigen::VectorXd state_noise_var;  // q innovation variances
    double obs_var = 1.0;             // sigma_eps^2
    Eigen::VectorXd init_mean;        // a_1
    Eigen::VectorXd init_var;         // diagonal of P_1
    std::vector<double> obs_offset;   // per-day regression offset, empty = 0

    std::vector<StateBlock> blocks;

    int state_dim() const { return static_cast<int>(Z.size()); }
    int noise_dim() const { return static_cast<int>(state_noise_var.size()); }

    double offset_at(std::size_t t) const {
        return obs_offset.empty() ? 0.0 : obs_offset[t];
    }

    const StateBlock* find_block(BlockKind kind) const {
        for (const auto& b : blocks) {
            if (b.kind == kind) return &b;
        }
        return nullptr;
    }

    /// R * diag(q) * R'.
    Eigen::MatrixXd state_noise_cov() const {
        return R * state_noise_var.asDiagonal() * R.transpose();
    }
};

/// Initial covariance scale for states with no proper prior, on the
/// standardized-data scale. A power of two (~1e6) keeps the degenerate
/// zero-variance identities bit-exact.
inline constexpr double kDiffuseVariance = 1048576.0;

/// Compiles a component list into block-diagonal system matrices.
/// At most one trend (level / linear / semi-local / intercept) and one
/// seasonal component are allowed.
inline StateSpaceModel assemble(const std::vector<ComponentSpec>& components,
                                double obs_var = 1.0,
                                double diffuse_variance = kDiffuseVariance) {
    if (components.empty()) throw Error("assemble: no components");

    struct BlockDraft {
        BlockKind kind;
        Eigen::MatrixXd T;
        Eigen::VectorXd Z;
        Eigen::VectorXd init_mean;
        Eigen::VectorXd init_var;
        std::vector<std::pair<int, double>> noise;  // (state within block, variance)
    };

    std::vector<BlockDraft> drafts;
    int trend_count = 0;
    int seasonal_count = 0;

    for (const auto& spec : components) {
        BlockDraft d;
        if (const auto* c = std::get_if<LocalLevel>(&spec)) {
            if (c->sigma_level < 0) throw Error("assemble: negative level sd");
            d.kind = BlockKind::LocalLevel;
            d.T = Eigen::MatrixXd::Ones(1, 1);
            d.Z = Eigen::VectorXd::Ones(1);
            d.init_mean = Eigen::VectorXd::Zero(1);
            d.init_var = Eigen::VectorXd::Constant(1, diffuse_variance);
            d.noise = {{0, c->sigma_level * c->sigma_level}};
            ++trend_count;
        } else if (const auto* c = std::get_if<LocalLinear>(&spec)) {
            if (c->sigma_level < 0 || c->sigma_slope < 0) throw Error("assemble: negative sd");
            d.kind = BlockKind::LocalLinear;
            d.T = Eigen::MatrixXd{{1.0, 1.0}, {0.0, 1.0}};
            d.Z = Eigen::VectorXd{{1.0, 0.0}};
            d.init_mean = Eigen::VectorXd::Zero(2);
            d.init_var = Eigen::VectorXd::Constant(2, diffuse_variance);
            d.noise = {{0, c->sigma_level * c->sigma_level},
                       {1, c->sigma_slope * c->sigma_slope}};
            ++trend_count;
        } else if (const auto* c = std::get_if<SemiLocalLinear>(&spec)) {
            if (c->sigma_level < 0 || c->sigma_slope < 0) throw Error("assemble: negative sd");
            if (!(std::abs(c->rho) < 1.0)) throw Error("assemble: |rho| must be < 1");
            // states: (level, slope, unit constant carrying the long-run slope)
            d.kind = BlockKind::SemiLocalLinear;
            d.T = Eigen::MatrixXd{{1.0, 1.0, 0.0},
                                  {0.0, c->rho, (1.0 - c->rho) * c->slope_mean},
                                  {0.0, 0.0, 1.0}};
            d.Z = Eigen::VectorXd{{1.0, 0.0, 0.0}};
            d.init_mean = Eigen::VectorXd{{0.0, 0.0, 1.0}};
            d.init_var = Eigen::VectorXd{{diffuse_variance, diffuse_variance, 0.0}};
            d.noise = {{0, c->sigma_level * c->sigma_level},
                       {1, c->sigma_slope * c->sigma_slope}};
            ++trend_count;
        } else if (std::get_if<StaticIntercept>(&spec)) {
            d.kind = BlockKind::StaticIntercept;
            d.T = Eigen::MatrixXd::Ones(1, 1);
            d.Z = Eigen::VectorXd::Ones(1);
            d.init_mean = Eigen::VectorXd::Zero(1);
            d.init_var = Eigen::VectorXd::Constant(1, diffuse_variance);
            ++trend_count;
        } else if (const auto* c = std::get_if<WeeklySeasonal>(&spec)) {
            if (c->sigma_seasonal < 0) throw Error("assemble: negative seasonal sd");
            if (c->period < 2) throw Error("assemble: seasonal period must be >= 2");
            int s = c->period - 1;
            d.kind = BlockKind::Seasonal;
            d.T = Eigen::MatrixXd::Zero(s, s);
            d.T.row(0).setConstant(-1.0);
            for (int i = 1; i < s; ++i) d.T(i, i - 1) = 1.0;
            d.Z = Eigen::VectorXd::Zero(s);
            d.Z(0) = 1.0;
            d.init_mean = Eigen::VectorXd::Zero(s);
            d.init_var = Eigen::VectorXd::Constant(s, diffuse_variance);
            d.noise = {{0, c->sigma_seasonal * c->sigma_seasonal}};
            ++seasonal_count;
        }
        drafts.push_back(std::move(d));
    }
    if (trend_count > 1) throw DuplicateTrend("assemble: more than one trend component");
    if (seasonal_count > 1) throw DuplicateSeasonal("assemble: more than one seasonal component");

    int m = 0, q = 0;
    for (const auto& d : drafts) {
        m += static_cast<int>(d.Z.size());
        q += static_cast<int>(d.noise.size());
    }

    StateSpaceModel model;
    model.Z = Eigen::VectorXd::Zero(m);
    model.T = Eigen::MatrixXd::Zero(m, m);
    model.R = Eigen::MatrixXd::Zero(m, q);
    model.state_noise_var = Eigen::VectorXd::Zero(q);
    model.init_mean = Eigen::VectorXd::Zero(m);
    model.init_var = Eigen::VectorXd::Zero(m);
    model.obs_var = obs_var;

    int at = 0, nq = 0;
    for (const auto& d : drafts) {
        int dim = static_cast<int>(d.Z.size());
        model.Z.segment(at, dim) = d.Z;
        model.T.block(at, at, dim, dim) = d.T;
        model.init_mean.segment(at, dim) = d.init_mean;
        model.init_var.segment(at, dim) = d.init_var;
        for (const auto& [local, var] : d.noise) {
            model.R(at + local, nq) = 1.0;
            model.state_noise_var(nq) = var;
            ++nq;
        }
        model.blocks.push_back(StateBlock{d.kind, at, dim});
        at += dim;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Kalman filter / smoother
// ---------------------------------------------------------------------------

struct FilterResult {
    // predicted_mean[t] = E[alpha_t | y_{1..t-1}], filtered, and one-step
    // observation forecasts; forecast_mean includes the regression offset.
    std::vector<Eigen::VectorXd> predicted_mean;
    std::vector<Eigen::MatrixXd> predicted_cov;
    std::vector<Eigen::VectorXd> filtered_mean;
    std::vector<Eigen::MatrixXd> filtered_cov;
    std::vector<double> forecast_mean;
    std::vector<double> forecast_var;
    std::vector<double> innovation;   // v_t, 0 when missing
    std::vector<bool> updated;        // measurement update happened at t
    double log_likelihood = 0.0;

    std::size_t size() const { return predicted_mean.size(); }
};

namespace detail {
inline constexpr double kFilterZeroTol = 1e-12;
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline void symmetrize(Eigen::MatrixXd& P) {
    P = 0.5 * (P + P.transpose()).eval();
}
}  // namespace detail

/// Forward recursion. Missing observations skip the measurement update and
/// contribute zero log-likelihood.
inline FilterResult kalman_filter(const StateSpaceModel& model,
                                  const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n == 0) throw Error("kalman_filter: empty series");
    const int m = model.state_dim();
    const Eigen::MatrixXd noise_cov = model.state_noise_cov();

    FilterResult res;
    res.predicted_mean.resize(n);
    res.predicted_cov.resize(n);
    res.filtered_mean.resize(n);
    res.filtered_cov.resize(n);
    res.forecast_mean.resize(n);
    res.forecast_var.resize(n);
    res.innovation.assign(n, 0.0);
    res.updated.assign(n, false);

    Eigen::VectorXd a = model.init_mean;
    Eigen::MatrixXd P = model.init_var.asDiagonal();
    Eigen::VectorXd M(m);

    for (std::size_t t = 0; t < n; ++t) {
        res.predicted_mean[t] = a;
        res.predicted_cov[t] = P;
        const double F = model.Z.dot(P * model.Z) + model.obs_var;
        res.forecast_mean[t] = model.Z.dot(a) + model.offset_at(t);
        res.forecast_var[t] = F;
        if (F < -1e-8) {
            throw NumericalFailure("kalman_filter: negative prediction variance at t=" +
                                   std::to_string(t));
        }
        if (!is_missing(y[t]) && F > detail::kFilterZeroTol) {
            const double v = y[t] - res.forecast_mean[t];
            M.noalias() = P * model.Z;
            a += M * (v / F);
            P -= (M * M.transpose()) / F;
            detail::symmetrize(P);
            res.log_likelihood -= 0.5 * (detail::kLog2Pi + std::log(F) + v * v / F);
            res.innovation[t] = v;
            res.updated[t] = true;
        }
        res.filtered_mean[t] = a;
        res.filtered_cov[t] = P;
        if (t + 1 < n) {
            a = (model.T * a).eval();
            P = (model.T * P * model.T.transpose() + noise_cov).eval();
            detail::symmetrize(P);
        }
    }
    return res;
}

struct SmootherResult {
    std::vector<Eigen::VectorXd> mean;  // E[alpha_t | y_{1..n}]
    std::vector<Eigen::MatrixXd> cov;
};

/// Backward recursion on top of a filter pass (means and covariances).
inline SmootherResult kalman_smoother(const StateSpaceModel& model,
                                      const std::vector<double>& y) {
    const FilterResult f = kalman_filter(model, y);
    const std::size_t n = y.size();
    const int m = model.state_dim();

    SmootherResult res;
    res.mean.resize(n);
    res.cov.resize(n);

    Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t ti = n; ti-- > 0;) {
        const Eigen::VectorXd& a = f.predicted_mean[ti];
        const Eigen::MatrixXd& P = f.predicted_cov[ti];
        if (f.updated[ti]) {
            const double F = f.forecast_var[ti];
            const Eigen::VectorXd K = model.T * (P * model.Z) / F;  // Kalman gain
            const Eigen::MatrixXd L = model.T - K * model.Z.transpose();
            r = model.Z * (f.innovation[ti] / F) + L.transpose() * r;
            N = (model.Z * model.Z.transpose()) / F + L.transpose() * N * L;
        } else {
            r = (model.T.transpose() * r).eval();
            N = (model.T.transpose() * N * model.T).eval();
        }
        res.mean[ti] = a + P * r;
        res.cov[ti] = P - P * N * P;
        detail::symmetrize(res.cov[ti]);
    }
    return res;
}

/// Smoothed state means only; one column per day.
inline Eigen::MatrixXd smoothed_means(const StateSpaceModel& model,
                                      const std::vector<double>& y) {
    const FilterResult f = kalman_filter(model, y);
    const std::size_t n = y.size();
    const int m = model.state_dim();

    Eigen::MatrixXd out(m, n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
    for (std::size_t ti = n; ti-- > 0;) {
        const Eigen::MatrixXd& P = f.predicted_cov[ti];
        if (f.updated[ti]) {
            const double F = f.forecast_var[ti];
            const Eigen::VectorXd K = model.T * (P * model.Z) / F;
            const Eigen::MatrixXd L = model.T - K * model.Z.transpose();
            r = model.Z * (f.innovation[ti] / F) + L.transpose() * r;
        } else {
            r = (model.T.transpose() * r).eval();
        }
        out.col(ti) = f.predicted_mean[ti] + P * r;
    }
    return out;
}

/// Simulates one state path and observation series from the model itself
/// (used by the simulation smoother and by forecasting).
inline void simulate_model(const StateSpaceModel& model, std::size_t n, Rng& rng,
                           Eigen::MatrixXd& states, std::vector<double>& obs) {
    const int m = model.state_dim();
    const int q = model.noise_dim();
    states.resize(m, static_cast<long>(n));
    obs.assign(n, 0.0);
    const double obs_sd = std::sqrt(model.obs_var);

    Eigen::VectorXd alpha(m);
    for (int i = 0; i < m; ++i) {
        alpha(i) = model.init_mean(i) + std::sqrt(model.init_var(i)) * rng.normal();
    }
    for (std::size_t t = 0; t < n; ++t) {
        states.col(static_cast<long>(t)) = alpha;
        obs[t] = model.Z.dot(alpha) + model.offset_at(t) + obs_sd * rng.normal();
        if (t + 1 < n) {
            Eigen::VectorXd eta(q);
            for (int i = 0; i < q; ++i) {
                eta(i) = std::sqrt(model.state_noise_var(i)) * rng.normal();
            }
            alpha = (model.T * alpha + model.R * eta).eval();
        }
    }
}

/// One exact draw from p(states | y) by mean correction: simulate a fake
/// dataset from the model, smooth both real and fake data, and recenter the
/// fake path on the smoothed mean of the real data.
inline Eigen::MatrixXd simulation_smoother(const StateSpaceModel& model,
                                           const std::vector<double>& y, Rng& rng) {
    const std::size_t n = y.size();
    Eigen::MatrixXd alpha_plus;
    std::vector<double> y_plus;
    simulate_model(model, n, rng, alpha_plus, y_plus);
    for (std::size_t t = 0; t < n; ++t) {
        if (is_missing(y[t])) y_plus[t] = kMissing;
    }
    Eigen::MatrixXd draw = smoothed_means(model, y);
    draw += alpha_plus - smoothed_means(model, y_plus);
    return draw;
}

inline Eigen::MatrixXd simulation_smoother(const StateSpaceModel& model,
                                           const std::vector<double>& y,
                                           std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    return simulation_smoother(model, y, rng);
}

// ---------------------------------------------------------------------------
// Forecasting
// ---------------------------------------------------------------------------

struct ForecastResult {
    std::vector<double> mean;
    std::vector<double> variance;
};

/// Iterates the transition/observation equations from the terminal filtered
/// state. future_offsets may be empty (treated as zero).
inline ForecastResult forecast(const StateSpaceModel& model,
                               const Eigen::VectorXd& filtered_mean,
                               const Eigen::MatrixXd& filtered_cov, std::size_t horizon,
                               const std::vector<double>& future_offsets = {}) {
    if (horizon < 1) throw Error("forecast: horizon must be >= 1");
    if (!future_offsets.empty() && future_offsets.size() < horizon) {
        throw Error("forecast: offsets shorter than horizon");
    }
    const Eigen::MatrixXd noise_cov = model.state_noise_cov();
    Eigen::VectorXd a = filtered_mean;
    Eigen::MatrixXd P = filtered_cov;
    ForecastResult res;
    res.mean.resize(horizon);
    res.variance.resize(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        a = (model.T * a).eval();
        P = (model.T * P * model.T.transpose() + noise_cov).eval();
        detail::symmetrize(P);
        const double offset = future_offsets.empty() ? 0.0 : future_offsets[h];
        res.mean[h] = model.Z.dot(a) + offset;
        res.variance[h] = model.Z.dot(P * model.Z) + model.obs_var;
    }
    return res;
}

/// Samples one future observation path from the state at the end of the
/// sample. `state` must be an exact draw of alpha_T (e.g. the last column of
/// a simulation-smoother draw).
inline std::vector<double> forecast_path(const StateSpaceModel& model,
                                         const Eigen::VectorXd& state, std::size_t horizon,
                                         const std::vector<double>& future_offsets,
                                         Rng& rng) {
    const int q = model.noise_dim();
    const double obs_sd = std::sqrt(model.obs_var);
    Eigen::VectorXd alpha = state;
    Eigen::VectorXd eta(q);
    std::vector<double> path(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        for (int i = 0; i < q; ++i) {
            eta(i) = std::sqrt(model.state_noise_var(i)) * rng.normal();
        }
        alpha = (model.T * alpha + model.R * eta).eval();
        const double offset = future_offsets.empty() ? 0.0 : future_offsets[h];
        path[h] = model.Z.dot(alpha) + offset + obs_sd * rng.normal();
    }
    return path;
}

/// Sampled forecast paths from the filtered terminal distribution
/// N(filtered_mean, filtered_cov); one row per path.
inline Eigen::MatrixXd forecast_paths(const StateSpaceModel& model,
                                      const Eigen::VectorXd& filtered_mean,
                                      const Eigen::MatrixXd& filtered_cov,
                                      std::size_t horizon,
                                      const std::vector<double>& future_offsets,
                                      std::size_t n_paths, Rng& rng) {
    const int m = model.state_dim();
    // PSD square root via eigendecomposition (filtered covariances may be
    // singular, e.g. exactly observed states)
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(filtered_cov);
    Eigen::VectorXd evals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd root = es.eigenvectors() * evals.asDiagonal();

    Eigen::MatrixXd paths(n_paths, horizon);
    Eigen::VectorXd z(m);
    for (std::size_t p = 0; p < n_paths; ++p) {
        for (int i = 0; i < m; ++i) z(i) = rng.normal();
        Eigen::VectorXd start = filtered_mean + root * z;
        std::vector<double> path = forecast_path(model, start, horizon, future_offsets, rng);
        for (std::size_t h = 0; h < horizon; ++h) paths(p, h) = path[h];
    }
    return paths;
}

}  // namespace bsts
