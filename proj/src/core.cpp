#include "onestep/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "onestep/errors.hpp"
#include "onestep/kernels.hpp"

namespace onestep {

UnivariateData::UnivariateData(std::vector<double> z) : z_(std::move(z)) {
    if (z_.empty()) throw DataError("univariate data: need at least one observation");
    for (std::size_t i = 0; i < z_.size(); ++i)
        if (!std::isfinite(z_[i]))
            throw DataError("univariate data: non-finite value at row " + std::to_string(i + 1));
}

CausalData::CausalData(std::vector<double> x, std::size_t d, std::vector<std::uint8_t> a,
                       std::vector<double> y, std::vector<std::uint8_t> y_observed)
    : x_(std::move(x)), d_(d), a_(std::move(a)), y_(std::move(y)), obs_(std::move(y_observed)) {
    const std::size_t n = a_.size();
    if (n == 0) throw DataError("causal data: need at least one observation");
    if (d_ == 0) throw DataError("causal data: need at least one covariate");
    if (x_.size() != n * d_ || y_.size() != n || obs_.size() != n)
        throw ShapeError("causal data: inconsistent column lengths");
    for (std::size_t i = 0; i < x_.size(); ++i)
        if (!std::isfinite(x_[i])) throw DataError("causal data: non-finite covariate");
    for (std::size_t i = 0; i < n; ++i) {
        if (a_[i] > 1) throw DataError("causal data: a must be 0 or 1 at row " + std::to_string(i + 1));
        if (obs_[i]) {
            if (!std::isfinite(y_[i]))
                throw DataError("causal data: non-finite outcome at row " + std::to_string(i + 1));
        } else {
            y_[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
}

std::size_t CausalData::n_treated() const noexcept {
    std::size_t k = 0;
    for (auto v : a_) k += v;
    return k;
}

bool CausalData::all_observed() const noexcept {
    for (auto v : obs_)
        if (!v) return false;
    return true;
}

void CorrectedDraws::validate() const {
    if (functional_id.empty()) throw DataError("corrected draws: empty functional id");
    if (n == 0) throw DataError("corrected draws: sample size must be positive");
    if (values.empty()) throw DataError("corrected draws: no draws");
    for (std::size_t b = 0; b < values.size(); ++b)
        if (!std::isfinite(values[b]))
            throw NumericError("corrected draws: non-finite draw at index " + std::to_string(b));
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw DataError("quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile: p outside [0, 1]");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

PosteriorSummary summarize(const CorrectedDraws& draws, double level) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("summarize: level outside (0, 1)");
    if (draws.values.size() < 2)
        throw DataError("summarize: need at least 2 draws, got " +
                        std::to_string(draws.values.size()));
    draws.validate();

    const std::size_t b = draws.values.size();
    const double mean = kernels::sum(draws.values.data(), b) / static_cast<double>(b);
    double ss = 0.0;
    for (double v : draws.values) {
        const double c = v - mean;
        ss += c * c;
    }
    std::vector<double> sorted(draws.values);
    std::sort(sorted.begin(), sorted.end());
    const double alpha = 1.0 - level;

    PosteriorSummary s;
    s.mean = mean;
    s.sd = std::sqrt(ss / static_cast<double>(b - 1));
    s.lower = quantile_sorted(sorted, alpha / 2.0);
    s.upper = quantile_sorted(sorted, 1.0 - alpha / 2.0);
    s.level = level;
    return s;
}

}  // namespace onestep
