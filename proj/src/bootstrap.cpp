#include "onestep/bootstrap.hpp"

#include <cmath>
#include <string>

#include "onestep/errors.hpp"
#include "onestep/kernels.hpp"
#include "onestep/parallel.hpp"

namespace onestep {

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw ShapeError("weight vector: empty");
    for (std::size_t i = 0; i < w_.size(); ++i)
        if (!(w_[i] > 0.0) || !std::isfinite(w_[i]))
            throw DataError("weight vector: entry " + std::to_string(i) +
                            " is not strictly positive and finite");
    const double s = kernels::sum(w_.data(), w_.size());
    if (std::abs(s - 1.0) > 1e-12)
        throw DataError("weight vector: sum deviates from 1 by " + std::to_string(s - 1.0));
}

InfluenceMatrix::InfluenceMatrix(std::size_t b, std::size_t n_pts, std::string id)
    : n(n_pts), psi(b * n_pts, 0.0), plugin(b, 0.0), functional_id(std::move(id)) {}

void InfluenceMatrix::validate() const {
    if (plugin.empty() || n == 0) throw ShapeError("influence matrix: empty");
    if (psi.size() != plugin.size() * n)
        throw ShapeError("influence matrix: psi storage does not match B x n");
    for (double v : plugin)
        if (!std::isfinite(v)) throw NumericError("influence matrix: non-finite plugin");
    for (double v : psi)
        if (!std::isfinite(v)) throw NumericError("influence matrix: non-finite influence value");
}

WeightVector draw_weights(std::size_t n, RngStream stream) {
    if (n == 0) throw ShapeError("draw_weights: n must be positive");
    StreamRng rng(stream);
    std::vector<double> w(n);
    double s = 0.0;
    int attempt = 0;
    for (;; ++attempt) {
        if (attempt >= 10)
            throw RngDegenerateError("draw_weights: exponential sum underflowed on 10 draws");
        for (std::size_t i = 0; i < n; ++i) w[i] = rng.exponential();
        s = kernels::sum(w.data(), n);
        if (s >= 1e-300) break;
    }
    for (std::size_t i = 0; i < n; ++i) w[i] /= s;
    // One division leaves the sum 1 + O(n eps); renormalize until it is
    // within the WeightVector tolerance (one extra pass in practice).
    for (int pass = 0; pass < 4; ++pass) {
        const double s2 = kernels::sum(w.data(), n);
        if (std::abs(s2 - 1.0) <= 1e-12) return WeightVector(std::move(w));
        for (std::size_t i = 0; i < n; ++i) w[i] /= s2;
    }
    throw NumericError("draw_weights: normalization failed to settle");
}

double correct_draw(double plugin, std::span<const double> psi_row, const WeightVector& w) {
    if (psi_row.size() != w.size())
        throw ShapeError("correct_draw: influence row length " + std::to_string(psi_row.size()) +
                         " != weight length " + std::to_string(w.size()));
    const double v = plugin + kernels::dot(psi_row.data(), w.data(), w.size());
    if (!std::isfinite(v)) throw NumericError("correct_draw: non-finite corrected value");
    return v;
}

CorrectedDraws one_step_posterior(const InfluenceMatrix& infl, RngStream stream,
                                  unsigned threads) {
    infl.validate();
    const std::size_t b_total = infl.draws();

    CorrectedDraws out;
    out.values.resize(b_total);
    out.functional_id = infl.functional_id;
    out.seed = stream.seed;
    out.n = infl.n;

    parallel_for(b_total, threads, [&](std::size_t b) {
        const WeightVector w = draw_weights(infl.n, stream.substream(b));
        out.values[b] = correct_draw(infl.plugin[b], {infl.row(b), infl.n}, w);
    });
    out.validate();
    return out;
}

}  // namespace onestep
