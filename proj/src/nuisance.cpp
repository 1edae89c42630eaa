#include "onestep/nuisance.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "onestep/bootstrap.hpp"
#include "onestep/csv.hpp"
#include "onestep/errors.hpp"
#include "onestep/parallel.hpp"

namespace onestep {

namespace {

double expit(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

std::size_t basis_width(const GlmConfig& cfg, std::size_t d) {
    switch (cfg.basis) {
        case GlmBasis::intercept: return 1;
        case GlmBasis::linear: return 1 + d;
        case GlmBasis::polynomial: return 1 + d * cfg.degree;
    }
    return 1;
}

void fill_basis(const CausalData& data, std::size_t i, const GlmConfig& cfg, double* out) {
    out[0] = 1.0;
    if (cfg.basis == GlmBasis::intercept) return;
    const std::size_t deg = cfg.basis == GlmBasis::linear ? 1 : cfg.degree;
    std::size_t col = 1;
    for (std::size_t j = 0; j < data.dim(); ++j) {
        double pow_x = 1.0;
        for (std::size_t k = 0; k < deg; ++k) {
            pow_x *= data.x(i, j);
            out[col++] = pow_x;
        }
    }
}

}  // namespace

NuisanceDraws::NuisanceDraws(std::size_t b, std::size_t n_pts, NuisanceKind k, NuisanceLink l)
    : n(n_pts), values(b * n_pts, 0.0), kind(k), link(l) {}

void NuisanceDraws::validate() const {
    if (n == 0 || values.empty() || values.size() % n != 0)
        throw ShapeError("nuisance draws: storage is not a B x n matrix");
    for (std::size_t idx = 0; idx < values.size(); ++idx) {
        const double v = values[idx];
        if (!std::isfinite(v)) throw DataError("nuisance draws: non-finite fitted value");
        if (kind == NuisanceKind::propensity && (v < 0.0 || v > 1.0))
            throw DataError("nuisance draws: propensity value " + std::to_string(v) +
                            " outside [0, 1]");
    }
}

void GlmConfig::validate() const {
    if (degree < 1) throw ConfigError("glm config: degree must be at least 1");
    if (!(tol > 0.0)) throw ConfigError("glm config: tol must be positive");
    if (ridge < 0.0) throw ConfigError("glm config: ridge must be nonnegative");
    if (max_iter < 1) throw ConfigError("glm config: max_iter must be at least 1");
}

Eigen::VectorXd irls_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                           const Eigen::VectorXd& obs_weights, const GlmConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (response.size() != n || obs_weights.size() != n)
        throw ShapeError("irls_solve: design/response/weight row counts differ");
    if (p > n) throw DataError("irls_solve: more columns than rows");
    if (!design.allFinite() || !response.allFinite() || !obs_weights.allFinite())
        throw DataError("irls_solve: non-finite input");
    if (obs_weights.minCoeff() < 0.0 || !(obs_weights.sum() > 0.0))
        throw DataError("irls_solve: weights must be nonnegative with positive sum");

    const Eigen::MatrixXd ridge_i =
        cfg.ridge * Eigen::MatrixXd::Identity(p, p);

    if (cfg.family == GlmFamily::gaussian_identity) {
        // one-shot weighted least squares
        const Eigen::MatrixXd xtw = design.transpose() * obs_weights.asDiagonal();
        const Eigen::MatrixXd a = xtw * design + ridge_i;
        const Eigen::VectorXd beta = a.ldlt().solve(xtw * response);
        if (!beta.allFinite())
            throw NumericError("irls_solve: singular design beyond the ridge rescue");
        return beta;
    }

    // bernoulli-logit Newton iterations; fractional responses in [0,1] are
    // fine since only the score Xᵀw(y−mu) uses them
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double score_scale = 0.0;
    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
        const Eigen::VectorXd eta = design * beta;
        Eigen::VectorXd mu(n), irls_w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu[i] = expit(eta[i]);
            irls_w[i] = obs_weights[i] * std::max(mu[i] * (1.0 - mu[i]), 1e-10);
        }
        const Eigen::VectorXd score =
            design.transpose() * (obs_weights.array() * (response - mu).array()).matrix() -
            cfg.ridge * beta;
        score_scale = score.cwiseAbs().maxCoeff() / static_cast<double>(n);
        if (score_scale < cfg.tol) return beta;

        const Eigen::MatrixXd hess =
            design.transpose() * irls_w.asDiagonal() * design + ridge_i;
        const Eigen::VectorXd step = hess.ldlt().solve(score);
        if (!step.allFinite())
            throw NumericError("irls_solve: singular design beyond the ridge rescue");
        beta += step;
    }
    throw ConvergenceError("irls_solve: no convergence in " + std::to_string(cfg.max_iter) +
                           " iterations (max|score|/n = " + std::to_string(score_scale) + ")");
}

NuisanceDraws bb_glm_posterior(const CausalData& data, NuisanceTarget target,
                               const GlmConfig& cfg, std::size_t b_draws, RngStream stream,
                               unsigned threads) {
    cfg.validate();
    if (b_draws == 0) throw ConfigError("bb_glm_posterior: need at least one draw");

    const std::size_t n = data.size();
    const bool is_propensity = target == NuisanceTarget::propensity;
    const bool is_arm = target == NuisanceTarget::outcome_arm0 ||
                        target == NuisanceTarget::outcome_arm1;
    const int arm = target == NuisanceTarget::outcome_arm1 ? 1 : 0;
    const bool s_learner = is_arm && cfg.learner == OutcomeLearner::s_learner;

    if (is_propensity && cfg.family != GlmFamily::bernoulli_logit)
        throw ConfigError("bb_glm_posterior: propensity target requires the bernoulli-logit family");

    // fitting rows
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_propensity) {
            rows.push_back(i);
        } else if (!data.y_observed(i)) {
            continue;
        } else if (is_arm && !s_learner) {
            if (data.a(i) == arm) rows.push_back(i);  // T-learner: own-arm rows only
        } else {
            rows.push_back(i);
        }
    }

    const std::size_t width = basis_width(cfg, data.dim());
    const std::size_t p = width + (s_learner ? 1 : 0);  // S-learner appends a
    if (rows.size() < p + 1)
        throw DataError("bb_glm_posterior: only " + std::to_string(rows.size()) +
                        " fitting rows for " + std::to_string(p) + " coefficients");

    Eigen::MatrixXd x_fit(rows.size(), p);
    Eigen::VectorXd y_fit(rows.size());
    std::vector<double> basis_buf(width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t i = rows[r];
        fill_basis(data, i, cfg, basis_buf.data());
        for (std::size_t c = 0; c < width; ++c) x_fit(r, c) = basis_buf[c];
        if (s_learner) x_fit(r, width) = data.a(i);
        y_fit[r] = is_propensity ? static_cast<double>(data.a(i)) : data.y(i);
    }

    // prediction design at all n points; arm targets force the indicator
    Eigen::MatrixXd x_pred(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        fill_basis(data, i, cfg, basis_buf.data());
        for (std::size_t c = 0; c < width; ++c) x_pred(i, c) = basis_buf[c];
        if (s_learner) x_pred(i, width) = arm;
    }

    const NuisanceKind kind = is_propensity ? NuisanceKind::propensity : NuisanceKind::regression;
    const NuisanceLink link = cfg.family == GlmFamily::bernoulli_logit ? NuisanceLink::logit
                                                                       : NuisanceLink::identity;
    NuisanceDraws out(b_draws, n, kind, link);

    parallel_for(b_draws, threads, [&](std::size_t b) {
        Eigen::VectorXd w(rows.size());
        if (cfg.uniform_weights) {
            w.setOnes();
        } else {
            // scaled so that uniform Dirichlet weights average to 1, keeping
            // the likelihood on the same scale as the unweighted fit
            const WeightVector bb = draw_weights(rows.size(), stream.substream(b));
            for (std::size_t r = 0; r < rows.size(); ++r)
                w[r] = bb[r] * static_cast<double>(rows.size());
        }
        const Eigen::VectorXd beta = irls_solve(x_fit, y_fit, w, cfg);
        const Eigen::VectorXd eta = x_pred * beta;
        double* dst = out.row(b);
        for (std::size_t i = 0; i < n; ++i)
            dst[i] = link == NuisanceLink::logit ? expit(eta[i]) : eta[i];
    });
    out.validate();
    return out;
}

NuisanceDraws load_nuisance_csv(const std::string& path, NuisanceKind kind, NuisanceLink link) {
    csv::Table t = csv::read_table(path);
    if (t.header.empty() || t.header[0] != "v_1")
        throw ParseError(path + ":1: nuisance draws need header v_1,...,v_n");
    const std::size_t n = t.header.size();
    for (std::size_t i = 0; i < n; ++i)
        if (t.header[i] != "v_" + std::to_string(i + 1))
            throw ParseError(path + ":1: unexpected header column '" + t.header[i] + "'");
    if (t.rows.empty()) throw ParseError(path + ":2: no draws");

    NuisanceDraws out(t.rows.size(), n, kind, link);
    for (std::size_t b = 0; b < t.rows.size(); ++b) {
        const std::size_t line = b + 2;
        if (t.rows[b].size() != n)
            throw ParseError(path + ":" + std::to_string(line) + ": expected " +
                             std::to_string(n) + " cells, found " +
                             std::to_string(t.rows[b].size()));
        double* row = out.row(b);
        for (std::size_t i = 0; i < n; ++i) row[i] = csv::parse_cell(t.rows[b][i], path, line);
    }
    out.validate();
    return out;
}

void save_nuisance_csv(const std::string& path, const NuisanceDraws& draws) {
    draws.validate();
    std::string out;
    for (std::size_t i = 0; i < draws.n; ++i)
        out += (i ? ",v_" : "v_") + std::to_string(i + 1);
    out += "\n";
    for (std::size_t b = 0; b < draws.draws(); ++b) {
        const double* row = draws.row(b);
        for (std::size_t i = 0; i < draws.n; ++i)
            out += (i ? "," : "") + csv::format_value(row[i]);
        out += "\n";
    }
    csv::atomic_write_text(path, out);
}

}  // namespace onestep
