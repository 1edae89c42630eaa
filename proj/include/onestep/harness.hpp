#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "onestep/core.hpp"
#include "onestep/dpmm.hpp"
#include "onestep/rng.hpp"

// Synthetic data generators with known truths, the Monte Carlo experiment
// runner, and diagnostics. Replicates are independent units keyed by
// replicate index, so any parallel schedule reproduces the serial result.
namespace onestep {

enum class Scenario { laplace_isd, mar_synthetic, att_synthetic };
enum class MethodSelection { corrected, uncorrected, both };
enum class ReferenceDensity { laplace };

Scenario parse_scenario(const std::string& name);
const char* scenario_name(Scenario s) noexcept;
MethodSelection parse_method(const std::string& name);
const char* method_name(MethodSelection m) noexcept;

struct ExperimentConfig {
    Scenario scenario = Scenario::laplace_isd;
    std::size_t n = 1000;
    std::size_t reps = 200;
    std::size_t b_draws = 2000;
    std::uint64_t seed = 0;
    MethodSelection method = MethodSelection::both;
    // scenario options
    bool misspecify_propensity = false;  // mar/att: intercept-only propensity model
    bool misspecify_outcome = false;     // mar/att: intercept-only outcome model
    bool heterogeneous = false;          // att: tau(x) = 1 + sin(2 pi x)
    double tau0 = 2.0;                   // att: homogeneous effect size
    double level = 0.95;
    double positivity_floor = 1e-3;
    bool clip = false;
    dpmm::DpmmConfig dpmm;  // chain settings for laplace_isd; keep is set to b_draws
    unsigned threads = 1;
    bool keep_replicates = false;

    void validate() const;
};

/// One aggregate summary line per method.
struct MetricsRow {
    std::string method;
    double bias = 0.0;
    double mae = 0.0;   // median absolute error
    double rmse = 0.0;
    double coverage = 0.0;
    double interval_length = 0.0;
};

struct ReplicateRecord {
    std::size_t rep = 0;
    std::string method;
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double truth = 0.0;
    bool covered = false;
};

struct ExperimentResult {
    std::vector<MetricsRow> rows;
    std::vector<ReplicateRecord> replicates;  // filled when keep_replicates
    std::size_t failures = 0;                 // replicates dropped after one retry
};

/// Standard Laplace sample by inverse CDF: z = -sign(u - 1/2) log(1 - 2|u - 1/2|).
UnivariateData gen_laplace(std::size_t n, RngStream stream);

struct MarSample {
    CausalData data;
    double truth = 0.0;  // integral of m0 over the covariate law: 1/3
};

/// X ~ U(0,1), pi0 = expit(0.5 + 1.5x), A ~ Bern(pi0), Y ~ N(x^2, 1); y is
/// masked wherever a = 0.
MarSample gen_mar(std::size_t n, RngStream stream);

struct AttOptions {
    bool homogeneous = true;
    double tau0 = 2.0;
};

struct AttSample {
    CausalData data;
    double truth_att = 0.0;   // population E[tau(X) | A=1] (quadrature)
    double truth_actt = 0.0;  // sample-conditional sum pi0 tau / sum pi0
    double truth_cate = 0.0;  // sample-conditional mean tau
};

/// X ~ U(0,1), pi0 = expit(-0.5 + x), Y = 1 + x + A tau(x) + N(0,1) with
/// tau constant or 1 + sin(2 pi x); all outcomes observed.
AttSample gen_att(std::size_t n, const AttOptions& opts, RngStream stream);

/// Runs reps independent replicates, summarizes each posterior at
/// cfg.level, and aggregates bias / MAE / RMSE / coverage / mean interval
/// length per method. A failing replicate is retried once on a perturbed
/// stream; more than 1% dropped replicates aborts.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Kolmogorov-Smirnov distance between the draws (standardized by their own
/// mean and sd) and the standard normal CDF. Needs B >= 50 and nonzero sd.
double ks_normality(const CorrectedDraws& draws);

/// Trapezoid quadrature of (f - f0)^2 over [-20, 20] with 40001 points,
/// where f0 is the reference density.
double l2_distance_sq(const dpmm::MixtureDraw& mix, ReferenceDensity reference);

/// CSV with the fixed header method,bias,mae,rmse,coverage,interval_length.
std::string metrics_csv(const std::vector<MetricsRow>& rows);

}  // namespace onestep
