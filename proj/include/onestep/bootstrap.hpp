#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "onestep/core.hpp"
#include "onestep/rng.hpp"

// Bayesian-bootstrap weight sampling and the generic one-step correction
// engine: for each posterior draw b, an independent uniform-Dirichlet weight
// vector over the data reweights that draw's influence row,
//
//     chi_tilde[b] = plugin[b] + sum_i w[i] * psi[b][i].
//
// The functionals module decides what goes into plugin and psi.
namespace onestep {

/// Strictly positive weights summing to one (within 1e-12).
class WeightVector {
public:
    explicit WeightVector(std::vector<double> w);

    const std::vector<double>& values() const noexcept { return w_; }
    const double* data() const noexcept { return w_.data(); }
    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const noexcept { return w_[i]; }

private:
    std::vector<double> w_;
};

/// B influence rows over n data points plus the per-draw plug-in values.
/// plugin may be all-zero when a functional's corrected form absorbs it
/// (uncentered-psi convention, see functionals).
struct InfluenceMatrix {
    std::size_t n = 0;           // data rows per psi row
    std::vector<double> psi;     // B x n, row-major
    std::vector<double> plugin;  // B
    std::string functional_id;

    InfluenceMatrix() = default;
    /// Allocates a zeroed B x n matrix.
    InfluenceMatrix(std::size_t b, std::size_t n_pts, std::string id);

    std::size_t draws() const noexcept { return plugin.size(); }
    double* row(std::size_t b) noexcept { return psi.data() + b * n; }
    const double* row(std::size_t b) const noexcept { return psi.data() + b * n; }

    /// Throws on shape mismatch or non-finite entries.
    void validate() const;
};

/// Uniform Dirichlet weights over n atoms: n standard exponentials
/// normalized by their sum. A sum underflowing 1e-300 triggers a redraw
/// (at most 10, then an rng-degenerate error).
WeightVector draw_weights(std::size_t n, RngStream stream);

/// plugin + sum_i w[i] * psi_row[i]; throws on length mismatch or a
/// non-finite result.
double correct_draw(double plugin, std::span<const double> psi_row, const WeightVector& w);

/// Algorithm: for each row b, draw weights from stream.substream(b) and
/// apply correct_draw. Weight streams are keyed on (seed, b) only, so the
/// result is a pure function of (infl, stream) for any thread count.
CorrectedDraws one_step_posterior(const InfluenceMatrix& infl, RngStream stream,
                                  unsigned threads = 1);

}  // namespace onestep
