#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "onestep/bootstrap.hpp"
#include "onestep/core.hpp"
#include "onestep/dpmm.hpp"
#include "onestep/nuisance.hpp"
#include "onestep/rng.hpp"

// Closed-form efficient-influence constructions for each supported target.
// Two shapes appear. Linear, ISD and the missing-at-random mean factor as
// plugin + sum_i w_i psi_i with weight-free psi, so they build an
// InfluenceMatrix for the generic engine. The treatment-effect functionals
// put the random P-tilde[A] in a denominator, so each corrected draw is its
// own weighted computation (att_corrected and friends), with posterior
// drivers looping draw-by-draw.
//
// Plugin conventions: the MAR mean uses uncentered psi with plugin = 0 (the
// corrected form is exactly self-centering); ISD uses the centered influence
// with plugin = chi(f), so the corrected draw is 2*Ptilde[f] - chi(f).
namespace onestep {

enum class Functional { linear, isd, mar_mean, mar_mean_fixed_pi, att, actt, cate };

Functional parse_functional(const std::string& name);
const char* functional_name(Functional f) noexcept;

/// Options shared by the propensity-based functionals, as serialized in the
/// CLI config: {"functional": "att", "positivity_floor": 0.001, "clip": false}.
struct FunctionalSpec {
    Functional id = Functional::linear;
    double positivity_floor = 1e-3;
    bool clip = false;

    void validate() const;
};

/// chi(P) = P[g]: plugin 0 and every psi row equal to g, so each corrected
/// draw is exactly the Bayesian-bootstrap mean of g.
InfluenceMatrix linear_influence(std::span<const double> g_values, std::size_t b_draws);

/// Integrated squared density of a Gaussian mixture, in closed form:
/// sum_{h,k} w_h w_k phi_{sigma*sqrt(2)}(mu_h - mu_k).
double isd_chi(const dpmm::MixtureDraw& mix);

/// Row b: plugin = isd_chi(mix_b), psi[b][i] = 2*(f_b(z_i) - isd_chi(mix_b)).
InfluenceMatrix isd_influence(std::span<const dpmm::MixtureDraw> mix_draws,
                              const UnivariateData& data, unsigned threads = 1);

/// Missing-at-random mean: psi[b][i] = a_i/pi_b(x_i)*(y_i - m_b(x_i)) +
/// m_b(x_i), the residual term defined as exactly 0 when a_i = 0; plugin 0.
/// pi values at or below `floor` throw a positivity error naming (b, i)
/// unless clip is set, in which case they are floored and *clipped (when
/// non-null) counts the events.
InfluenceMatrix mar_influence(const NuisanceDraws& pi, const NuisanceDraws& m,
                              const CausalData& data, double floor = 1e-3, bool clip = false,
                              std::size_t* clipped = nullptr);

/// As mar_influence with a single pi-hat vector shared by every row (a
/// degenerate prior on pi).
InfluenceMatrix mar_influence_fixed_pi(std::span<const double> pi_hat, const NuisanceDraws& m,
                                       const CausalData& data, double floor = 1e-3,
                                       bool clip = false, std::size_t* clipped = nullptr);

/// One corrected treatment-effect-on-the-treated draw and the P-tilde[A]
/// that sat in its denominator.
struct AttDraw {
    double chi_tilde = 0.0;
    double ptilde_a = 0.0;

    void validate() const;  // 0 < ptilde_a <= 1 (within weight-sum tolerance)
};

/// chi_tilde = sum_i w_i (a_i - pi(x_i))(y_i - mu0(x_i)) /
/// ((1 - pi(x_i)) * Ptilde[A]), with Ptilde[A] = sum_i w_i a_i under the
/// same weight vector. Row b of the nuisance draws is used. Requires weak
/// overlap pi < 1 - floor and at least one treated unit.
AttDraw att_corrected(const NuisanceDraws& pi, const NuisanceDraws& mu0, const CausalData& data,
                      const WeightVector& w, std::size_t b = 0, double floor = 1e-3,
                      bool clip = false, std::size_t* clipped = nullptr);

/// The weighted estimating equation evaluated at chi:
/// Ptilde[(A - pi)(Y - mu0)/(Ptilde[A](1 - pi)) - A*chi/Ptilde[A]].
/// The equation is affine in chi with slope -1 and is zeroed by
/// att_corrected's output.
double att_ee_residual(double chi, const NuisanceDraws& pi, const NuisanceDraws& mu0,
                       const CausalData& data, const WeightVector& w, std::size_t b = 0,
                       double floor = 1e-3, bool clip = false);

/// Covariate-conditional-on-the-treated effect. theta(P) =
/// Qn[pi(mu1-mu0)] / Qn[pi] over the empirical covariate distribution, plus
/// two weighted correction terms (outcome residuals and propensity-weighted
/// effect residuals); the covariate-direction fluctuation is switched off.
double actt_corrected(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                      const NuisanceDraws& mu1, const CausalData& data, const WeightVector& w,
                      std::size_t b = 0, double floor = 1e-3, bool clip = false,
                      std::size_t* clipped = nullptr);

/// Covariate-conditional effect: theta(P) = Qn[mu1 - mu0] plus the doubly
/// robust residual correction. Requires two-sided positivity
/// floor < pi < 1 - floor.
double cate_corrected(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                      const NuisanceDraws& mu1, const CausalData& data, const WeightVector& w,
                      std::size_t b = 0, double floor = 1e-3, bool clip = false,
                      std::size_t* clipped = nullptr);

/// Posterior drivers: one corrected draw per nuisance row b, with an
/// independent weight vector from stream.substream(b).
CorrectedDraws att_posterior(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                             const CausalData& data, RngStream stream, double floor = 1e-3,
                             bool clip = false, unsigned threads = 1);
CorrectedDraws actt_posterior(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                              const NuisanceDraws& mu1, const CausalData& data, RngStream stream,
                              double floor = 1e-3, bool clip = false, unsigned threads = 1);
CorrectedDraws cate_posterior(const NuisanceDraws& pi, const NuisanceDraws& mu0,
                              const NuisanceDraws& mu1, const CausalData& data, RngStream stream,
                              double floor = 1e-3, bool clip = false, unsigned threads = 1);

}  // namespace onestep
