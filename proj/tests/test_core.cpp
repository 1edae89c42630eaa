#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "onestep/core.hpp"
#include "onestep/errors.hpp"

using namespace onestep;

TEST_CASE("univariate data validates on construction") {
    const UnivariateData d(std::vector<double>{1.0, -2.0, 0.5});
    CHECK(d.size() == 3);
    CHECK(d.values()[1] == -2.0);

    CHECK_THROWS_AS(UnivariateData(std::vector<double>{}), DataError);
    CHECK_THROWS_AS(UnivariateData(std::vector<double>{1.0, std::nan("")}), DataError);
}

TEST_CASE("causal data accessors and missing outcomes") {
    // two covariates, middle outcome missing
    const CausalData d({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, 2, {1, 0, 1}, {2.0, 0.0, -1.0},
                       {1, 0, 1});
    CHECK(d.size() == 3);
    CHECK(d.dim() == 2);
    CHECK(d.x(1, 0) == 0.3);
    CHECK(d.x(1, 1) == 0.4);
    CHECK(d.row(2)[0] == 0.5);
    CHECK(d.a(0) == 1);
    CHECK(d.a(1) == 0);
    CHECK(d.n_treated() == 2);
    CHECK_FALSE(d.all_observed());
    CHECK(d.y_observed(0));
    CHECK_FALSE(d.y_observed(1));
    CHECK(d.y(0) == 2.0);
    CHECK(std::isnan(d.y(1)));

    const CausalData full({0.1, 0.2}, 1, {0, 1}, {1.0, 2.0}, {1, 1});
    CHECK(full.all_observed());

    CHECK_THROWS_AS(CausalData({0.1}, 1, {2}, {1.0}, {1}), DataError);
    CHECK_THROWS_AS(CausalData({0.1, 0.2}, 1, {0}, {1.0}, {1}), ShapeError);
}

TEST_CASE("quantile interpolation on 0..99") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 0.0);
    CHECK(quantile_sorted(v, 0.025) == doctest::Approx(2.475).epsilon(1e-12));
    CHECK(quantile_sorted(v, 0.975) == doctest::Approx(96.525).epsilon(1e-12));
    CHECK(quantile_sorted(v, 0.0) == 0.0);
    CHECK(quantile_sorted(v, 1.0) == 99.0);
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(49.5));

    CHECK(quantile_sorted({7.0}, 0.3) == 7.0);
    CHECK_THROWS_AS(quantile_sorted({}, 0.5), DataError);
    CHECK_THROWS_AS(quantile_sorted({1.0}, 1.5), ConfigError);
}

TEST_CASE("summarize computes mean, sd, and quantile interval") {
    CorrectedDraws d;
    d.values = {1.0, 2.0, 3.0, 4.0, 5.0};
    d.functional_id = "linear";
    d.seed = 1;
    d.n = 5;
    d.validate();

    const PosteriorSummary s = summarize(d, 0.8);
    CHECK(s.mean == doctest::Approx(3.0));
    CHECK(s.sd == doctest::Approx(std::sqrt(2.5)));  // B-1 denominator
    CHECK(s.lower == doctest::Approx(1.4));          // h = 4 * 0.1
    CHECK(s.upper == doctest::Approx(4.6));          // h = 4 * 0.9
    CHECK(s.level == 0.8);

    // draws arrive unsorted; summarize must not depend on input order
    CorrectedDraws shuffled = d;
    shuffled.values = {4.0, 1.0, 5.0, 3.0, 2.0};
    const PosteriorSummary s2 = summarize(shuffled, 0.8);
    CHECK(s2.lower == s.lower);
    CHECK(s2.upper == s.upper);

    CorrectedDraws tiny = d;
    tiny.values = {1.0};
    CHECK_THROWS_AS(summarize(tiny, 0.8), DataError);
    CHECK_THROWS_AS(summarize(d, 1.0), ConfigError);
}

TEST_CASE("corrected draws validation") {
    CorrectedDraws d;
    d.values = {0.5, 0.6};
    d.functional_id = "isd";
    d.seed = 3;
    d.n = 10;
    CHECK_NOTHROW(d.validate());

    CorrectedDraws bad = d;
    bad.functional_id.clear();
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = d;
    bad.n = 0;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = d;
    bad.values[1] = std::nan("");
    CHECK_THROWS_AS(bad.validate(), NumericError);
}

TEST_CASE("covers treats the interval as closed") {
    PosteriorSummary s;
    s.lower = -1.0;
    s.upper = 2.0;
    CHECK(covers(s, -1.0));
    CHECK(covers(s, 2.0));
    CHECK(covers(s, 0.0));
    CHECK_FALSE(covers(s, 2.0000001));
    CHECK_FALSE(covers(s, -1.0000001));
}
