#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "onestep/errors.hpp"
#include "onestep/harness.hpp"
#include "onestep/rng.hpp"

using namespace onestep;

namespace {

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

TEST_CASE("scenario and method names round-trip") {
    for (const char* name : {"laplace_isd", "mar_synthetic", "att_synthetic"})
        CHECK(scenario_name(parse_scenario(name)) == std::string(name));
    for (const char* name : {"corrected", "uncorrected", "both"})
        CHECK(method_name(parse_method(name)) == std::string(name));
    CHECK_THROWS_AS(parse_scenario("unknown"), ConfigError);
    CHECK_THROWS_AS(parse_method("unknown"), ConfigError);
}

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    ExperimentConfig bad = cfg;
    bad.reps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.b_draws = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.level = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.n = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("laplace generator moments and determinism") {
    const std::size_t n = 20000;
    const UnivariateData a = gen_laplace(n, derive_stream(71, role::data));
    const UnivariateData b = gen_laplace(n, derive_stream(71, role::data));
    CHECK(a.values() == b.values());

    double mean = 0.0, var = 0.0, abs_mean = 0.0;
    for (double z : a.values()) {
        mean += z;
        abs_mean += std::abs(z);
    }
    mean /= n;
    abs_mean /= n;
    for (double z : a.values()) var += (z - mean) * (z - mean);
    var /= n - 1;
    CHECK(mean == doctest::Approx(0.0).scale(1.0).epsilon(0.04));
    CHECK(abs_mean == doctest::Approx(1.0).epsilon(0.03));  // E|Z| = scale = 1
    CHECK(var == doctest::Approx(2.0).epsilon(0.06));

    const UnivariateData c = gen_laplace(n, derive_stream(72, role::data));
    CHECK(a.values() != c.values());
}

TEST_CASE("mar generator geometry and truth") {
    const std::size_t n = 20000;
    const MarSample s = gen_mar(n, derive_stream(73, role::data));
    CHECK(s.truth == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s.data.size() == n);
    CHECK(s.data.dim() == 1);

    double a_rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(s.data.x(i, 0) >= 0.0);
        CHECK(s.data.x(i, 0) <= 1.0);
        CHECK(s.data.y_observed(i) == (s.data.a(i) == 1));
        a_rate += s.data.a(i);
    }
    a_rate /= n;
    // E[expit(0.5 + 1.5 X)] = (log(1+e^2) - log(1+e^0.5)) / 1.5
    const double target = (std::log1p(std::exp(2.0)) - std::log1p(std::exp(0.5))) / 1.5;
    CHECK(a_rate == doctest::Approx(target).epsilon(0.02));
}

TEST_CASE("att generator truths") {
    AttOptions opts;  // homogeneous tau = 2
    const AttSample s = gen_att(20000, opts, derive_stream(75, role::data));
    CHECK(s.truth_att == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.truth_actt == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.truth_cate == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.data.all_observed());

    double a_rate = 0.0;
    for (std::size_t i = 0; i < s.data.size(); ++i) a_rate += s.data.a(i);
    a_rate /= s.data.size();
    CHECK(a_rate == doctest::Approx(0.5).epsilon(0.03));  // E[expit(X - 1/2)] = 1/2

    AttOptions het;
    het.homogeneous = false;
    const AttSample h = gen_att(200, het, derive_stream(75, role::data));
    // E[tau(X) | A=1] with tau = 1 + sin(2 pi x), pi0 = expit(x - 1/2), by quadrature
    double num = 0.0, den = 0.0;
    const std::size_t grid = 200001;
    for (std::size_t g = 0; g < grid; ++g) {
        const double x = static_cast<double>(g) / (grid - 1);
        const double trim = (g == 0 || g + 1 == grid) ? 0.5 : 1.0;
        const double p = 1.0 / (1.0 + std::exp(0.5 - x));
        num += trim * p * (1.0 + std::sin(2.0 * std::numbers::pi * x));
        den += trim * p;
    }
    CHECK(h.truth_att == doctest::Approx(num / den).epsilon(1e-6));
    // truth_cate conditions on the drawn covariates: mean of tau(x_i)
    double tau_bar = 0.0;
    for (std::size_t i = 0; i < h.data.size(); ++i)
        tau_bar += 1.0 + std::sin(2.0 * std::numbers::pi * h.data.x(i, 0));
    tau_bar /= h.data.size();
    CHECK(h.truth_cate == doctest::Approx(tau_bar).epsilon(1e-12));
    CHECK(h.truth_cate == doctest::Approx(1.0).epsilon(0.1));  // near E[tau(X)] = 1
}

TEST_CASE("ks_normality separates normal from skewed draws") {
    auto rng = StreamRng(derive_stream(77, role::data));
    CorrectedDraws normal;
    normal.functional_id = "isd";
    normal.seed = 77;
    normal.n = 100;
    for (int i = 0; i < 2000; ++i) normal.values.push_back(0.7 + 0.2 * rng.normal());
    CHECK(ks_normality(normal) < 0.05);

    CorrectedDraws skewed = normal;
    skewed.values.clear();
    for (int i = 0; i < 2000; ++i) skewed.values.push_back(rng.exponential());
    CHECK(ks_normality(skewed) > 0.1);

    CorrectedDraws tiny = normal;
    tiny.values = {0.1, 0.2, 0.3};
    CHECK_THROWS_AS(ks_normality(tiny), DataError);
}

TEST_CASE("ks statistic is the sup distance for a hand-checkable case") {
    // two draws standardize to -1 and +1; the sup gap against Phi is at the
    // left atom: |Phi(-1) - 0| vs |Phi(-1) - 1/2| -> 1/2 - Phi(-1)
    CorrectedDraws d;
    d.functional_id = "isd";
    d.seed = 1;
    d.n = 10;
    for (int i = 0; i < 60; ++i) d.values.push_back(i % 2 == 0 ? 1.0 : 3.0);
    const double sd = std::sqrt(1.0 * 60 / 59);  // sample sd of +-1 around mean 2
    const double z = 1.0 / sd;
    const double expected = std::max(phi_cdf(-z), std::max(0.5 - phi_cdf(-z), 1.0 - phi_cdf(z)));
    CHECK(ks_normality(d) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("l2 distance against the laplace reference") {
    dpmm::MixtureDraw m;
    m.weights = {1.0};
    m.atoms = {0.0};
    m.sigma = 1.0;
    // || phi - f0 ||^2 = 1/(2 sqrt(pi)) + 1/4 - 2 e^{1/2}(1 - Phi(1))
    const double expected = 1.0 / (2.0 * std::sqrt(std::numbers::pi)) + 0.25 -
                            2.0 * std::exp(0.5) * (1.0 - phi_cdf(1.0));
    CHECK(l2_distance_sq(m, ReferenceDensity::laplace) == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("metrics csv shape") {
    std::vector<MetricsRow> rows(2);
    rows[0].method = "corrected";
    rows[0].bias = -0.004;
    rows[0].coverage = 0.937;
    rows[1].method = "uncorrected";
    const std::string csv = metrics_csv(rows);
    CHECK(csv.rfind("method,bias,mae,rmse,coverage,interval_length\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("corrected,") != std::string::npos);
    CHECK(csv.find("uncorrected,") != std::string::npos);
}

TEST_CASE("laplace experiment smoke run is deterministic and thread-invariant") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::laplace_isd;
    cfg.n = 60;
    cfg.reps = 3;
    cfg.b_draws = 50;
    cfg.seed = 9;
    cfg.dpmm.burn_in = 40;
    cfg.keep_replicates = true;

    const ExperimentResult a = run_experiment(cfg);
    REQUIRE(a.rows.size() == 2);
    CHECK(a.rows[0].method == "corrected");
    CHECK(a.rows[1].method == "uncorrected");
    CHECK(a.failures == 0);
    for (const auto& row : a.rows) {
        CHECK(std::isfinite(row.bias));
        CHECK(row.coverage >= 0.0);
        CHECK(row.coverage <= 1.0);
        CHECK(row.interval_length > 0.0);
        CHECK(row.mae >= 0.0);
        CHECK(row.rmse >= std::abs(row.bias));
    }
    CHECK(a.replicates.size() == 6);  // 3 reps x 2 methods
    for (const auto& rec : a.replicates) {
        CHECK(rec.rep < 3);
        CHECK(rec.lower <= rec.upper);
        CHECK(rec.covered == (rec.truth >= rec.lower && rec.truth <= rec.upper));
        CHECK(rec.truth == doctest::Approx(0.25));
    }

    ExperimentConfig threaded = cfg;
    threaded.threads = 4;
    const ExperimentResult b = run_experiment(threaded);
    REQUIRE(b.rows.size() == a.rows.size());
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        CHECK(a.rows[r].bias == b.rows[r].bias);
        CHECK(a.rows[r].coverage == b.rows[r].coverage);
        CHECK(a.rows[r].interval_length == b.rows[r].interval_length);
    }
}

TEST_CASE("mar experiment aggregates match the replicate records") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::mar_synthetic;
    cfg.n = 150;
    cfg.reps = 4;
    cfg.b_draws = 60;
    cfg.seed = 21;
    cfg.keep_replicates = true;

    const ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.rows.size() == 2);
    CHECK(res.replicates.size() == 8);

    for (const auto& row : res.rows) {
        double covered = 0.0, n_rec = 0.0;
        for (const auto& rec : res.replicates)
            if (rec.method == row.method) {
                covered += rec.covered;
                n_rec += 1.0;
            }
        CHECK(n_rec == 4.0);
        CHECK(row.coverage == doctest::Approx(covered / n_rec).epsilon(1e-12));
    }
}

TEST_CASE("att experiment labels both corrected effect posteriors") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::att_synthetic;
    cfg.n = 150;
    cfg.reps = 2;
    cfg.b_draws = 40;
    cfg.seed = 33;

    const ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.rows[0].method == "corrected_att");
    CHECK(res.rows[1].method == "corrected_actt");
    CHECK(res.rows[2].method == "uncorrected");

    ExperimentConfig corr_only = cfg;
    corr_only.method = MethodSelection::corrected;
    const ExperimentResult res2 = run_experiment(corr_only);
    CHECK(res2.rows.size() == 2);
}
