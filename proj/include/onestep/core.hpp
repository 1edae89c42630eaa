#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

// Shared value types: validated data containers, corrected posterior draws,
// and interval summaries.
namespace onestep {

/// A univariate sample z_1..z_n; finite values, n >= 1.
class UnivariateData {
public:
    explicit UnivariateData(std::vector<double> z);

    const std::vector<double>& values() const noexcept { return z_; }
    std::size_t size() const noexcept { return z_.size(); }

private:
    std::vector<double> z_;
};

/// Observations (x_i, a_i, y_i) with x_i in R^d and binary a_i. Depending on
/// the functional, a_i is a treatment indicator or a missingness indicator;
/// y_i may be unobserved, which is recorded in an explicit flag (the stored
/// value is NaN so accidental use poisons downstream arithmetic).
class CausalData {
public:
    /// x is row-major n x d. y_observed[i] == 0 marks a missing outcome;
    /// the corresponding y[i] is ignored and stored as NaN.
    CausalData(std::vector<double> x, std::size_t d, std::vector<std::uint8_t> a,
               std::vector<double> y, std::vector<std::uint8_t> y_observed);

    std::size_t size() const noexcept { return a_.size(); }
    std::size_t dim() const noexcept { return d_; }

    double x(std::size_t i, std::size_t j) const noexcept { return x_[i * d_ + j]; }
    const double* row(std::size_t i) const noexcept { return x_.data() + i * d_; }
    int a(std::size_t i) const noexcept { return a_[i]; }
    bool y_observed(std::size_t i) const noexcept { return obs_[i] != 0; }
    /// Only meaningful when y_observed(i); otherwise NaN.
    double y(std::size_t i) const noexcept { return y_[i]; }

    std::size_t n_treated() const noexcept;
    bool all_observed() const noexcept;

private:
    std::vector<double> x_;
    std::size_t d_;
    std::vector<std::uint8_t> a_;
    std::vector<double> y_;
    std::vector<std::uint8_t> obs_;
};

/// Output of the correction engine: B draws from a one-step posterior.
struct CorrectedDraws {
    std::vector<double> values;
    std::string functional_id;
    std::uint64_t seed = 0;
    std::size_t n = 0;  // data rows the draws were computed from

    std::size_t draws() const noexcept { return values.size(); }

    /// Throws on non-finite draws, empty id, or n == 0.
    void validate() const;
};

/// Mean, spread, and an equal-tailed credible interval at `level`.
struct PosteriorSummary {
    double mean = 0.0;
    double sd = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;
};

/// Quantile of an ascending-sorted vector with linear interpolation between
/// order statistics: h = (B-1)p, result = s[floor(h)] + frac(h) * diff.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Mean, sample sd (B-1 denominator), and the equal-tailed interval
/// [q_{a/2}, q_{1-a/2}] with a = 1 - level. Requires at least two draws.
PosteriorSummary summarize(const CorrectedDraws& draws, double level = 0.95);

/// Closed-interval coverage check.
inline bool covers(const PosteriorSummary& s, double truth) noexcept {
    return s.lower <= truth && truth <= s.upper;
}

}  // namespace onestep
