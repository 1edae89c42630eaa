#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "onestep/core.hpp"
#include "onestep/rng.hpp"

// Dirichlet process Gaussian location mixture: f(z) = sum_h w_h phi_sigma(z -
// mu_h) under a truncated stick-breaking prior, fit by blocked Gibbs. Feeds
// the integrated-squared-density functional.
namespace onestep::dpmm {

/// One posterior draw of the truncated mixture.
struct MixtureDraw {
    std::vector<double> weights;  // H, nonnegative, sum 1 within 1e-10
    std::vector<double> atoms;    // H component means
    double sigma = 1.0;           // common component sd, > 0

    std::size_t components() const noexcept { return weights.size(); }
    void validate() const;
};

struct DpmmConfig {
    double mass = 1.0;       // DP concentration M
    double base_mean = 0.0;  // base measure N(base_mean, base_sd^2)
    double base_sd = 1.0;
    double a = 1.0;          // inverse-gamma shape on sigma^2
    double b = 1.0;          // inverse-gamma scale on sigma^2
    std::size_t trunc = 30;  // stick-breaking truncation H
    std::size_t burn_in = 2000;
    std::size_t keep = 2000;
    std::size_t thin = 1;

    void validate() const;
};

/// Blocked Gibbs over (allocations, sticks, atoms, sigma^2); emits `keep`
/// draws after burn-in, taking every thin-th sweep. A chain is strictly
/// sequential and a pure function of (data, cfg, stream).
std::vector<MixtureDraw> fit(const UnivariateData& data, const DpmmConfig& cfg,
                             RngStream stream);

/// f(points[j]) for one mixture, evaluated with per-point log-sum-exp
/// shifting so extreme bandwidths cannot underflow the whole row.
std::vector<double> density_at(const MixtureDraw& mix, std::span<const double> points);

/// As density_at, writing into out[0..n).
void density_at(const MixtureDraw& mix, const double* points, std::size_t n, double* out);

}  // namespace onestep::dpmm
