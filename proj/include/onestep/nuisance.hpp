#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "onestep/core.hpp"
#include "onestep/rng.hpp"

// Nuisance posteriors for the propensity pi and the outcome regressions m,
// mu0, mu1. The built-in engine refits a weighted GLM under Bayesian-
// bootstrap weights, one fit per posterior draw; external samplers plug in
// through the same fitted-value matrix via CSV. Only fitted values at the
// data points cross this boundary — never coefficients — because the
// corrected functionals depend on nuisances solely through those values.
namespace onestep {

enum class NuisanceKind { propensity, regression };
enum class NuisanceLink { logit, identity };

/// B x n fitted values: row b holds one posterior draw of the nuisance
/// function evaluated at every data point.
struct NuisanceDraws {
    std::size_t n = 0;
    std::vector<double> values;  // B x n, row-major
    NuisanceKind kind = NuisanceKind::regression;
    NuisanceLink link = NuisanceLink::identity;

    NuisanceDraws() = default;
    NuisanceDraws(std::size_t b, std::size_t n_pts, NuisanceKind k, NuisanceLink l);

    std::size_t draws() const noexcept { return n == 0 ? 0 : values.size() / n; }
    double* row(std::size_t b) noexcept { return values.data() + b * n; }
    const double* row(std::size_t b) const noexcept { return values.data() + b * n; }
    double at(std::size_t b, std::size_t i) const noexcept { return values[b * n + i]; }

    /// Finiteness, shape, and (for propensities) the [0, 1] range.
    void validate() const;
};

enum class GlmFamily { bernoulli_logit, gaussian_identity };

/// Design bases over the covariates: intercept-only, [1, x], or powers of
/// each covariate up to `degree`. The intercept-only basis exists so the
/// simulation harness can deliberately misspecify a model.
enum class GlmBasis { intercept, linear, polynomial };

/// S-learner fits one outcome model with the treatment indicator appended
/// as a covariate; T-learner fits each arm on its own rows.
enum class OutcomeLearner { s_learner, t_learner };

struct GlmConfig {
    GlmFamily family = GlmFamily::gaussian_identity;
    GlmBasis basis = GlmBasis::linear;
    std::size_t degree = 1;    // polynomial basis only
    std::size_t max_iter = 100;
    double tol = 1e-8;         // convergence: max |score| / n < tol
    double ridge = 1e-8;       // always-on quasi-separation guard
    OutcomeLearner learner = OutcomeLearner::s_learner;
    bool uniform_weights = false;  // test hook: skip weight draws, reproduce the MLE

    void validate() const;
};

enum class NuisanceTarget { propensity, outcome, outcome_arm0, outcome_arm1 };

/// Weighted GLM fit. Gaussian-identity solves the ridge-penalized weighted
/// least squares in one step; bernoulli-logit runs Newton/IRLS until
/// max |score|/n < cfg.tol. Throws a convergence error when max_iter is
/// exhausted and a data error on invalid inputs.
Eigen::VectorXd irls_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                           const Eigen::VectorXd& obs_weights, const GlmConfig& cfg);

/// One GLM refit per posterior draw b under Bayesian-bootstrap weights over
/// the fitting rows, storing link-inverse fitted values at all n data
/// points. Fitting rows depend on the target: propensity uses every row
/// with response a; outcome uses observed-y rows; outcome_arm0/1 predict
/// with the treatment indicator forced (S-learner: shared fit over all
/// observed rows, so pass the same stream for both arms; T-learner: per-arm
/// rows, pass distinct streams).
NuisanceDraws bb_glm_posterior(const CausalData& data, NuisanceTarget target,
                               const GlmConfig& cfg, std::size_t b_draws, RngStream stream,
                               unsigned threads = 1);

/// CSV import/export of fitted-value matrices; header `v_1,...,v_n`, one
/// row per posterior draw.
NuisanceDraws load_nuisance_csv(const std::string& path, NuisanceKind kind, NuisanceLink link);
void save_nuisance_csv(const std::string& path, const NuisanceDraws& draws);

}  // namespace onestep
