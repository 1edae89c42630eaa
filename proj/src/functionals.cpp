#include "onestep/functionals.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <vector>

#include "onestep/errors.hpp"
#include "onestep/kernels.hpp"
#include "onestep/parallel.hpp"

namespace onestep {

namespace {

void check_floor(double floor) {
    if (!(floor > 0.0 && floor < 0.5))
        throw ConfigError("positivity floor must lie in (0, 0.5)");
}

[[noreturn]] void positivity_fail(const char* what, double value, std::size_t b, std::size_t i) {
    throw PositivityError(std::string(what) + ": propensity " + std::to_string(value) +
                          " at draw " + std::to_string(b) + ", row " + std::to_string(i) +
                          " violates the positivity floor (enable clipping to proceed)");
}

// pi must stay below 1 - floor (weak overlap); clips or throws.
double guard_upper(double pi_val, double floor, bool clip, std::size_t* clipped,
                   const char* what, std::size_t b, std::size_t i) {
    if (pi_val < 1.0 - floor) return pi_val;
    if (!clip) positivity_fail(what, pi_val, b, i);
    if (clipped) ++*clipped;
    return 1.0 - floor;
}

// pi must stay above floor; clips or throws.
double guard_lower(double pi_val, double floor, bool clip, std::size_t* clipped,
                   const char* what, std::size_t b, std::size_t i) {
    if (pi_val > floor) return pi_val;
    if (!clip) positivity_fail(what, pi_val, b, i);
    if (clipped) ++*clipped;
    return floor;
}

void check_b_row(const NuisanceDraws& d, std::size_t b, const char* what) {
    if (b >= d.draws())
        throw ShapeError(std::string(what) + ": draw index " + std::to_string(b) +
                         " out of range (B = " + std::to_string(d.draws()) + ")");
}

void check_causal_shapes(const NuisanceDraws& pi, const NuisanceDraws* mu0,
                         const NuisanceDraws* mu1, const CausalData& data, const char* what) {
    if (pi.kind != NuisanceKind::propensity)
        throw DataError(std::string(what) + ": pi draws must have propensity kind");
    if (pi.n != data.size())
        throw ShapeError(std::string(what) + ": pi draws cover " + std::to_string(pi.n) +
                         " rows, data has " + std::to_string(data.size()));
    for (const NuisanceDraws* reg : {mu0, mu1}) {
        if (!reg) continue;
        if (reg->kind != NuisanceKind::regression)
            throw DataError(std::string(what) + ": outcome draws must have regression kind");
        if (reg->n != data.size() || reg->draws() != pi.draws())
            throw ShapeError(std::string(what) + ": outcome draws shape mismatch");
    }
    if (!data.all_observed())
        throw DataError(std::string(what) + ": requires fully observed outcomes");
    if (data.n_treated() == 0)
        throw DataError(std::string(what) + ": no treated units (all a_i = 0)");
}

double ptilde_a(const CausalData& data, const WeightVector& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.a(i)) s += w[i];
    return s;
}

}  // namespace

Functional parse_functional(const std::string& name) {
    if (name == "linear") return Functional::linear;
    if (name == "isd") return Functional::isd;
    if (name == "mar_mean") return Functional::mar_mean;
    if (name == "mar_mean_fixed_pi") return Functional::mar_mean_fixed_pi;
    if (name == "att") return Functional::att;
    if (name == "actt") return Functional::actt;
    if (name == "cate") return Functional::cate;
    throw ConfigError("unknown functional '" + name + "'");
}

const char* functional_name(Functional f) noexcept {
    switch (f) {
        case Functional::linear: return "linear";
        case Functional::isd: return "isd";
        case Functional::mar_mean: return "mar_mean";
        case Functional::mar_mean_fixed_pi: return "mar_mean_fixed_pi";
        case Functional::att: return "att";
        case Functional::actt: return "actt";
        case Functional::cate: return "cate";
    }
    return "?";
}

void FunctionalSpec::validate() const { check_floor(positivity_floor); }

void AttDraw::validate() const {
    if (!(ptilde_a > 0.0) || ptilde_a > 1.0 + 1e-12)
        throw NumericError("att draw: Ptilde[A] = " + std::to_string(ptilde_a) +
                           " outside (0, 1]");
    if (!std::isfinite(chi_tilde)) throw NumericError("att draw: non-finite value");
}

InfluenceMatrix linear_influence(std::span<const double> g_values, std::size_t b_draws) {
    if (g_values.empty()) throw ShapeError("linear_influence: empty g");
    if (b_draws == 0) throw ShapeError("linear_influence: need at least one draw");
    for (double g : g_values)
        if (!std::isfinite(g)) throw DataError("linear_influence: non-finite g value");
    InfluenceMatrix infl(b_draws, g_values.size(), "linear");
    for (std::size_t b = 0; b < b_draws; ++b)
        std::copy(g_values.begin(), g_values.end(), infl.row(b));
    return infl;
}

double isd_chi(const dpmm::MixtureDraw& mix) {
    mix.validate();
    const std::size_t h_count = mix.components();
    const double inv4s2 = 1.0 / (4.0 * mix.sigma * mix.sigma);
    const double norm = 1.0 / (2.0 * mix.sigma * std::sqrt(std::numbers::pi));

    std::vector<double> t(h_count), e(h_count);
    double acc = 0.0;
    for (std::size_t h = 0; h < h_count; ++h) {
        if (mix.weights[h] == 0.0) continue;
        for (std::size_t k = 0; k < h_count; ++k) {
            const double d = mix.atoms[h] - mix.atoms[k];
            t[k] = -d * d * inv4s2;
        }
        kernels::exp_vec(t.data(), e.data(), h_count);
        acc += mix.weights[h] * kernels::dot(mix.weights.data(), e.data(), h_count);
    }
    return norm * acc;
}

InfluenceMatrix isd_influence(std::span<const dpmm::MixtureDraw> mix_draws,
                              const UnivariateData& data, unsigned threads) {
    if (mix_draws.empty()) throw ShapeError("isd_influence: no mixture draws");
    const std::size_t n = data.size();
    InfluenceMatrix infl(mix_draws.size(), n, "isd");
    parallel_for(mix_draws.size(), threads, [&](std::size_t b) {
        const dpmm::MixtureDraw& mix = mix_draws[b];
        const double chi = isd_chi(mix);
        double* row = infl.row(b);
        dpmm::density_at(mix, data.values().data(), n, row);
        for (std::size_t i = 0; i < n; ++i) row[i] = 2.0 * (row[i] - chi);
        infl.plugin[b] = chi;
    });
    infl.validate();
    return infl;
}

namespace {

// Shared MAR row loop; pi_row is b-dependent for the full version and fixed
// for the degenerate-prior version.
void mar_fill_row(const double* pi_row, const double* m_row, const CausalData& data,
                  double floor, bool clip, std::atomic<std::size_t>* clipped, std::size_t b,
                  double* out) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double m_val = m_row[i];
        if (data.a(i) == 0) {
            out[i] = m_val;  // A * (Y - m) is exactly 0 on unobserved rows
            continue;
        }
        double pi_val = pi_row[i];
        if (!(pi_val > floor)) {
            if (!clip) positivity_fail("mar_influence", pi_val, b, i);
            pi_val = floor;
            if (clipped) clipped->fetch_add(1, std::memory_order_relaxed);
        }
        out[i] = (data.y(i) - m_val) / pi_val + m_val;
    }
}

void mar_check_inputs(const NuisanceDraws& pi_like, const NuisanceDraws& m,
                      const CausalData& data, double floor) {
    check_floor(floor);
    pi_like.validate();
    m.validate();
    if (m.kind != NuisanceKind::regression)
        throw DataError("mar_influence: m draws must have regression kind");
    if (pi_like.n != data.size() || m.n != data.size())
        throw ShapeError("mar_influence: nuisance row length does not match data");
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.a(i) == 1 && !data.y_observed(i))
            throw DataError("mar_influence: y missing at an observed (a=1) row " +
                            std::to_string(i));
}

}  // namespace

InfluenceMatrix mar_influence(const NuisanceDraws& pi, const NuisanceDraws& m,
                              const CausalData& data, double floor, bool clip,
                              std::size_t* clipped) {
    mar_check_inputs(pi, m, data, floor);
    if (pi.kind != NuisanceKind::propensity)
        throw DataError("mar_influence: pi draws must have propensity kind");
    if (pi.draws() != m.draws())
        throw ShapeError("mar_influence: pi has " + std::to_string(pi.draws()) +
                         " draws, m has " + std::to_string(m.draws()));

    InfluenceMatrix infl(pi.draws(), data.size(), "mar_mean");
    std::atomic<std::size_t> clip_count{0};
    for (std::size_t b = 0; b < pi.draws(); ++b)
        mar_fill_row(pi.row(b), m.row(b), data, floor, clip, &clip_count, b, infl.row(b));
    if (clipped) *clipped = clip_count.load();
    infl.validate();
    return infl;
}

InfluenceMatrix mar_influence_fixed_pi(std::span<const double> pi_hat, const NuisanceDraws& m,
                                       const CausalData& data, double floor, bool clip,
                                       std::size_t* clipped) {
    NuisanceDraws fixed(1, pi_hat.size(), NuisanceKind::propensity, NuisanceLink::logit);
    std::copy(pi_hat.begin(), pi_hat.end(), fixed.row(0));
    mar_check_inputs(fixed, m, data, floor);

    InfluenceMatrix infl(m.draws(), data.size(), "mar_mean_fixed_pi");
    std::atomic<std::size_t> clip_count{0};
    for (std::size_t b = 0; b < m.draws(); ++b)
        mar_fill_row(fixed.row(0), m.row(b), data, floor, clip, &clip_count, b, infl.row(b));
    if (clipped) *clipped = clip_count.load();
    infl.validate();
    return infl;
}

AttDraw att_corrected(const NuisanceDraws& pi, const NuisanceDraws& mu0, const CausalData& data,
                      const WeightVector& w, std::size_t b, double floor, bool clip,
                      std::size_t* clipped) {
    check_floor(floor);
    check_causal_shapes(pi, &mu0, nullptr, data, "att_corrected");
    check_b_row(pi, b, "att_corrected");
    if (w.size() != data.size()) throw ShapeError("att_corrected: weight length mismatch");

    const double pta = ptilde_a(data, w);
    if (!(pta > 0.0))
        throw NumericError("att_corrected: Ptilde[A] = 0 with a treated unit present");

    const double* pi_row = pi.row(b);
    const double* mu0_row = mu0.row(b);
    double chi = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double p = guard_upper(pi_row[i], floor, clip, clipped, "att_corrected", b, i);
        chi += w[i] * (data.a(i) - p) * (data.y(i) - mu0_row[i]) / ((1.0 - p) * pta);
    }
    AttDraw out{chi, pta};
    out.validate();
    return out;
}

double att_ee_residual(double chi, const NuisanceDraws& pi, const NuisanceDraws& mu0,
                       const CausalData& data, const WeightVector& w, std::size_t b,
                       double floor, bool clip) {
    check_floor(floor);
    check_causal_shapes(pi, &mu0, nullptr, data, "att_ee_residual");
    check_b_row(pi, b, "att_ee_residual");
    if (w.size() != data.size()) throw ShapeError("att_ee_residual: weight length mismatch");

    const double pta = ptilde_a(data, w);
    if (!(pta > 0.0)) throw NumericError("att_ee_residual: Ptilde[A] = 0");

    const double* pi_row = pi.row(b);
    const double* mu0_row = mu0.row(b);
    double resid = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double p = guard_upper(pi_row[i], floor, clip, nullptr, "att_ee_residual", b, i);
        const double score = (data.a(i) - p) * (data.y(i) - mu0_row[i]) / (pta * (1.0 - p)) -
                             data.a(i) * chi / pta;
        resid += w[i] * score;
    }
    return resid;
}

double actt_corrected(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                      const NuisanceDraws& mu1, const CausalData& data, const WeightVector& w,
                      std::size_t b, double floor, bool clip, std::size_t* clipped) {
    check_floor(floor);
    check_causal_shapes(pi, &mu0, &mu1, data, "actt_corrected");
    check_b_row(pi, b, "actt_corrected");
    if (w.size() != data.size()) throw ShapeError("actt_corrected: weight length mismatch");

    const std::size_t n = data.size();
    const double* pi_row = pi.row(b);
    const double* mu0_row = mu0.row(b);
    const double* mu1_row = mu1.row(b);

    // theta(P) over the empirical covariate distribution (uniform 1/n, not
    // the bootstrap weights: the covariate-direction fluctuation is off).
    double qn_eff = 0.0;
    double qn_pi = 0.0;
    std::vector<double> p_guarded(n);
    for (std::size_t i = 0; i < n; ++i) {
        p_guarded[i] = guard_upper(pi_row[i], floor, clip, clipped, "actt_corrected", b, i);
        qn_eff += p_guarded[i] * (mu1_row[i] - mu0_row[i]);
        qn_pi += p_guarded[i];
    }
    if (!(qn_pi > 0.0)) throw NumericError("actt_corrected: degenerate propensity, Qn[pi] = 0");
    const double theta = qn_eff / qn_pi;

    const double pta = ptilde_a(data, w);
    if (!(pta > 0.0)) throw NumericError("actt_corrected: Ptilde[A] = 0");

    double correction = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = p_guarded[i];
        const double mu_own = data.a(i) ? mu1_row[i] : mu0_row[i];
        const double resid_term =
            (data.a(i) / pta - (1.0 - data.a(i)) * p / (pta * (1.0 - p))) *
            (data.y(i) - mu_own);
        const double effect_term = ((data.a(i) - p) / pta) * (mu1_row[i] - mu0_row[i] - theta);
        correction += w[i] * (resid_term + effect_term);
    }
    const double out = theta + correction;
    if (!std::isfinite(out)) throw NumericError("actt_corrected: non-finite draw");
    return out;
}

double cate_corrected(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                      const NuisanceDraws& mu1, const CausalData& data, const WeightVector& w,
                      std::size_t b, double floor, bool clip, std::size_t* clipped) {
    check_floor(floor);
    check_causal_shapes(pi, &mu0, &mu1, data, "cate_corrected");
    check_b_row(pi, b, "cate_corrected");
    if (w.size() != data.size()) throw ShapeError("cate_corrected: weight length mismatch");

    const std::size_t n = data.size();
    const double* pi_row = pi.row(b);
    const double* mu0_row = mu0.row(b);
    const double* mu1_row = mu1.row(b);

    double theta = 0.0;
    for (std::size_t i = 0; i < n; ++i) theta += mu1_row[i] - mu0_row[i];
    theta /= static_cast<double>(n);

    double correction = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = guard_lower(pi_row[i], floor, clip, clipped, "cate_corrected", b, i);
        p = guard_upper(p, floor, clip, clipped, "cate_corrected", b, i);
        const double mu_own = data.a(i) ? mu1_row[i] : mu0_row[i];
        correction +=
            w[i] * (data.a(i) / p - (1.0 - data.a(i)) / (1.0 - p)) * (data.y(i) - mu_own);
    }
    const double out = theta + correction;
    if (!std::isfinite(out)) throw NumericError("cate_corrected: non-finite draw");
    return out;
}

namespace {

template <class PerDraw>
CorrectedDraws effect_posterior(std::size_t b_total, std::size_t n, const char* id,
                                RngStream stream, unsigned threads, PerDraw&& per_draw) {
    if (b_total == 0) throw ShapeError("effect posterior: no nuisance draws");
    CorrectedDraws out;
    out.values.resize(b_total);
    out.functional_id = id;
    out.seed = stream.seed;
    out.n = n;
    parallel_for(b_total, threads, [&](std::size_t b) {
        const WeightVector w = draw_weights(n, stream.substream(b));
        out.values[b] = per_draw(b, w);
    });
    out.validate();
    return out;
}

}  // namespace

CorrectedDraws att_posterior(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                             const CausalData& data, RngStream stream, double floor, bool clip,
                             unsigned threads) {
    return effect_posterior(pi.draws(), data.size(), "att", stream, threads,
                            [&](std::size_t b, const WeightVector& w) {
                                return att_corrected(pi, mu0, data, w, b, floor, clip).chi_tilde;
                            });
}

CorrectedDraws actt_posterior(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                              const NuisanceDraws& mu1, const CausalData& data, RngStream stream,
                              double floor, bool clip, unsigned threads) {
    return effect_posterior(pi.draws(), data.size(), "actt", stream, threads,
                            [&](std::size_t b, const WeightVector& w) {
                                return actt_corrected(pi, mu0, mu1, data, w, b, floor, clip);
                            });
}

CorrectedDraws cate_posterior(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                              const NuisanceDraws& mu1, const CausalData& data, RngStream stream,
                              double floor, bool clip, unsigned threads) {
    return effect_posterior(pi.draws(), data.size(), "cate", stream, threads,
                            [&](std::size_t b, const WeightVector& w) {
                                return cate_corrected(pi, mu0, mu1, data, w, b, floor, clip);
                            });
}

}  // namespace onestep
