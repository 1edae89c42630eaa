// onestep: batch CLI over the correction toolkit. Subcommands: correct,
// simulate, dpmm-fit, nuisance-fit. All randomness flows from --seed; output
// files are written atomically and are invariant to --threads.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "onestep/bootstrap.hpp"
#include "onestep/core.hpp"
#include "onestep/csv.hpp"
#include "onestep/dpmm.hpp"
#include "onestep/errors.hpp"
#include "onestep/functionals.hpp"
#include "onestep/harness.hpp"
#include "onestep/log.hpp"
#include "onestep/nuisance.hpp"
#include "onestep/rng.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace onestep;

struct CommonOpts {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out = ".";
    std::string format = "both";  // json | csv | both
    std::string config_path;
};

struct ChainOpts {
    double mass = 1.0;
    double base_mean = 0.0;
    double base_sd = 1.0;
    double ig_a = 1.0;
    double ig_b = 1.0;
    std::size_t trunc = 30;
    std::size_t burn_in = 2000;
    std::size_t thin = 1;
};

struct CorrectOpts {
    std::string data;
    std::string functional;
    std::string influence, mixture, pi, m, mu0, mu1;
    std::string g = "z";
    std::size_t b_draws = 2000;
    double level = 0.95;
    double floor = 1e-3;
    bool clip = false;
};

struct SimulateOpts {
    std::string scenario;
    std::size_t n = 1000;
    std::size_t reps = 200;
    std::size_t b_draws = 2000;
    std::string method = "both";
    bool misspecify_propensity = false;
    bool misspecify_outcome = false;
    bool heterogeneous = false;
    double tau0 = 2.0;
    double level = 0.95;
    double floor = 1e-3;
    bool clip = false;
    bool per_replicate = false;
    ChainOpts chain;
};

struct DpmmFitOpts {
    std::string data;
    std::size_t b_draws = 2000;
    ChainOpts chain;
};

struct NuisanceFitOpts {
    std::string data;
    std::string target;
    std::string family;  // empty: inferred from target
    std::string basis = "linear";
    std::size_t degree = 1;
    std::string learner = "s";
    std::size_t b_draws = 200;
};

json load_config_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

template <class T>
void take(const json& j, const char* key, T& dst) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void take_common(const json& j, CommonOpts& c) {
    take(j, "seed", c.seed);
    take(j, "threads", c.threads);
    take(j, "out", c.out);
    take(j, "format", c.format);
}

void take_chain(const json& j, ChainOpts& c) {
    take(j, "mass", c.mass);
    take(j, "base_mean", c.base_mean);
    take(j, "base_sd", c.base_sd);
    take(j, "ig_a", c.ig_a);
    take(j, "ig_b", c.ig_b);
    take(j, "trunc", c.trunc);
    take(j, "burn_in", c.burn_in);
    take(j, "thin", c.thin);
}

dpmm::DpmmConfig to_dpmm_config(const ChainOpts& c, std::size_t keep) {
    dpmm::DpmmConfig cfg;
    cfg.mass = c.mass;
    cfg.base_mean = c.base_mean;
    cfg.base_sd = c.base_sd;
    cfg.a = c.ig_a;
    cfg.b = c.ig_b;
    cfg.trunc = c.trunc;
    cfg.burn_in = c.burn_in;
    cfg.keep = keep;
    cfg.thin = c.thin;
    return cfg;
}

bool want_json(const CommonOpts& c) { return c.format == "json" || c.format == "both"; }
bool want_csv(const CommonOpts& c) { return c.format == "csv" || c.format == "both"; }

void check_format(const CommonOpts& c) {
    if (c.format != "json" && c.format != "csv" && c.format != "both")
        throw ConfigError("--format must be json, csv, or both");
}

std::string out_path(const CommonOpts& c, const char* name) {
    std::filesystem::create_directories(c.out);
    return (std::filesystem::path(c.out) / name).string();
}

NuisanceDraws load_required_nuisance(const std::string& path, const char* flag,
                                     NuisanceKind kind, NuisanceLink link) {
    if (path.empty())
        throw ConfigError(std::string("this functional requires ") + flag);
    return load_nuisance_csv(path, kind, link);
}

// ---------------------------------------------------------------- correct

int run_correct(const CommonOpts& common, const CorrectOpts& opt) {
    const Functional f = parse_functional(opt.functional);
    FunctionalSpec spec{f, opt.floor, opt.clip};
    spec.validate();
    if (opt.data.empty()) throw ConfigError("correct: --data is required");
    const RngStream corr = derive_stream(common.seed, role::correction);

    CorrectedDraws draws;
    std::size_t clipped = 0;

    const bool effect_functional =
        f == Functional::att || f == Functional::actt || f == Functional::cate;
    if (!opt.influence.empty() && effect_functional)
        throw ConfigError("correct: " + opt.functional +
                          " cannot run from an influence matrix (its corrected draw has the "
                          "random Ptilde[A] in a denominator); pass nuisance CSVs instead");

    if (!opt.influence.empty()) {
        // external influence rows: data only fixes n
        std::size_t n_data;
        if (opt.g == "z") {
            n_data = csv::read_univariate(opt.data).size();
        } else {
            n_data = csv::read_causal(opt.data).size();
        }
        const InfluenceMatrix infl = csv::read_influence(opt.influence, opt.functional);
        if (infl.n != n_data)
            throw ShapeError("correct: influence matrix covers " + std::to_string(infl.n) +
                             " rows, data has " + std::to_string(n_data));
        draws = one_step_posterior(infl, corr, common.threads);
    } else {
        switch (f) {
            case Functional::linear: {
                std::vector<double> g;
                if (opt.g == "z") {
                    g = csv::read_univariate(opt.data).values();
                } else if (opt.g == "y" || opt.g == "a") {
                    const CausalData cd = csv::read_causal(opt.data);
                    g.resize(cd.size());
                    for (std::size_t i = 0; i < cd.size(); ++i) {
                        if (opt.g == "a") {
                            g[i] = cd.a(i);
                        } else {
                            if (!cd.y_observed(i))
                                throw DataError("correct: g=y needs fully observed outcomes");
                            g[i] = cd.y(i);
                        }
                    }
                } else {
                    throw ConfigError("correct: --g must be z, y, or a");
                }
                draws = one_step_posterior(linear_influence(g, opt.b_draws), corr,
                                           common.threads);
                break;
            }
            case Functional::isd: {
                const UnivariateData data = csv::read_univariate(opt.data);
                if (opt.mixture.empty())
                    throw ConfigError("correct: isd requires --mixture (or --influence)");
                const auto mixes = csv::read_mixtures(opt.mixture);
                const InfluenceMatrix infl = isd_influence(mixes, data, common.threads);
                draws = one_step_posterior(infl, corr, common.threads);
                break;
            }
            case Functional::mar_mean: {
                const CausalData data = csv::read_causal(opt.data);
                const NuisanceDraws pi = load_required_nuisance(
                    opt.pi, "--pi", NuisanceKind::propensity, NuisanceLink::logit);
                const NuisanceDraws m = load_required_nuisance(
                    opt.m, "--m", NuisanceKind::regression, NuisanceLink::identity);
                const InfluenceMatrix infl =
                    mar_influence(pi, m, data, spec.positivity_floor, spec.clip, &clipped);
                draws = one_step_posterior(infl, corr, common.threads);
                break;
            }
            case Functional::mar_mean_fixed_pi: {
                const CausalData data = csv::read_causal(opt.data);
                const NuisanceDraws pi = load_required_nuisance(
                    opt.pi, "--pi", NuisanceKind::propensity, NuisanceLink::logit);
                if (pi.draws() != 1)
                    throw DataError("correct: mar_mean_fixed_pi expects a single-row --pi file");
                const NuisanceDraws m = load_required_nuisance(
                    opt.m, "--m", NuisanceKind::regression, NuisanceLink::identity);
                const InfluenceMatrix infl = mar_influence_fixed_pi(
                    {pi.row(0), pi.n}, m, data, spec.positivity_floor, spec.clip, &clipped);
                draws = one_step_posterior(infl, corr, common.threads);
                break;
            }
            case Functional::att:
            case Functional::actt:
            case Functional::cate: {
                const CausalData data = csv::read_causal(opt.data);
                const NuisanceDraws pi = load_required_nuisance(
                    opt.pi, "--pi", NuisanceKind::propensity, NuisanceLink::logit);
                const NuisanceDraws mu0 = load_required_nuisance(
                    opt.mu0, "--mu0", NuisanceKind::regression, NuisanceLink::identity);
                if (f == Functional::att) {
                    draws = att_posterior(pi, mu0, data, corr, spec.positivity_floor,
                                          spec.clip, common.threads);
                } else {
                    const NuisanceDraws mu1 = load_required_nuisance(
                        opt.mu1, "--mu1", NuisanceKind::regression, NuisanceLink::identity);
                    draws = f == Functional::actt
                                ? actt_posterior(pi, mu0, mu1, data, corr,
                                                 spec.positivity_floor, spec.clip,
                                                 common.threads)
                                : cate_posterior(pi, mu0, mu1, data, corr,
                                                 spec.positivity_floor, spec.clip,
                                                 common.threads);
                }
                break;
            }
        }
    }

    const PosteriorSummary s = summarize(draws, opt.level);
    if (clipped > 0)
        log::info("clipped " + std::to_string(clipped) + " propensity values at the floor");

    json summary;
    summary["command"] = "correct";
    summary["functional"] = opt.functional;
    summary["seed"] = common.seed;
    summary["n"] = draws.n;
    summary["draws"] = draws.values.size();
    summary["level"] = s.level;
    summary["mean"] = s.mean;
    summary["sd"] = s.sd;
    summary["lower"] = s.lower;
    summary["upper"] = s.upper;
    summary["clipped"] = clipped;

    csv::write_corrected(out_path(common, "draws.csv"), draws);
    csv::atomic_write_text(out_path(common, "summary.json"), summary.dump(2) + "\n");
    std::printf("%s: mean=%.6g sd=%.6g %.0f%% interval [%.6g, %.6g] (B=%zu, n=%zu)\n",
                opt.functional.c_str(), s.mean, s.sd, 100.0 * s.level, s.lower, s.upper,
                draws.values.size(), draws.n);
    return 0;
}

// --------------------------------------------------------------- simulate

int run_simulate(const CommonOpts& common, const SimulateOpts& opt) {
    ExperimentConfig cfg;
    cfg.scenario = parse_scenario(opt.scenario);
    cfg.n = opt.n;
    cfg.reps = opt.reps;
    cfg.b_draws = opt.b_draws;
    cfg.seed = common.seed;
    cfg.method = parse_method(opt.method);
    cfg.misspecify_propensity = opt.misspecify_propensity;
    cfg.misspecify_outcome = opt.misspecify_outcome;
    cfg.heterogeneous = opt.heterogeneous;
    cfg.tau0 = opt.tau0;
    cfg.level = opt.level;
    cfg.positivity_floor = opt.floor;
    cfg.clip = opt.clip;
    cfg.dpmm = to_dpmm_config(opt.chain, opt.b_draws);
    cfg.threads = common.threads;
    cfg.keep_replicates = opt.per_replicate;

    const ExperimentResult result = run_experiment(cfg);

    // config echo deliberately leaves out threads/out/format: the emitted
    // files must be byte-identical for any of those
    json doc;
    json jcfg;
    jcfg["scenario"] = scenario_name(cfg.scenario);
    jcfg["n"] = cfg.n;
    jcfg["reps"] = cfg.reps;
    jcfg["b_draws"] = cfg.b_draws;
    jcfg["seed"] = cfg.seed;
    jcfg["method"] = method_name(cfg.method);
    jcfg["misspecify_propensity"] = cfg.misspecify_propensity;
    jcfg["misspecify_outcome"] = cfg.misspecify_outcome;
    jcfg["heterogeneous"] = cfg.heterogeneous;
    jcfg["tau0"] = cfg.tau0;
    jcfg["level"] = cfg.level;
    jcfg["positivity_floor"] = cfg.positivity_floor;
    jcfg["clip"] = cfg.clip;
    if (cfg.scenario == Scenario::laplace_isd) {
        jcfg["mass"] = cfg.dpmm.mass;
        jcfg["base_mean"] = cfg.dpmm.base_mean;
        jcfg["base_sd"] = cfg.dpmm.base_sd;
        jcfg["ig_a"] = cfg.dpmm.a;
        jcfg["ig_b"] = cfg.dpmm.b;
        jcfg["trunc"] = cfg.dpmm.trunc;
        jcfg["burn_in"] = cfg.dpmm.burn_in;
        jcfg["thin"] = cfg.dpmm.thin;
    }
    doc["config"] = jcfg;
    doc["failures"] = result.failures;
    doc["rows"] = json::array();
    for (const auto& r : result.rows) {
        json row;
        row["method"] = r.method;
        row["bias"] = r.bias;
        row["mae"] = r.mae;
        row["rmse"] = r.rmse;
        row["coverage"] = r.coverage;
        row["interval_length"] = r.interval_length;
        doc["rows"].push_back(row);
    }
    if (opt.per_replicate) {
        doc["per_replicate"] = json::array();
        for (const auto& rec : result.replicates) {
            json row;
            row["rep"] = rec.rep;
            row["method"] = rec.method;
            row["point"] = rec.point;
            row["lower"] = rec.lower;
            row["upper"] = rec.upper;
            row["truth"] = rec.truth;
            row["covered"] = rec.covered;
            doc["per_replicate"].push_back(row);
        }
    }

    if (want_csv(common))
        csv::atomic_write_text(out_path(common, "metrics.csv"), metrics_csv(result.rows));
    if (want_json(common))
        csv::atomic_write_text(out_path(common, "metrics.json"), doc.dump(2) + "\n");

    for (const auto& r : result.rows)
        std::printf("%-16s bias=%+.4f mae=%.4f rmse=%.4f coverage=%.3f length=%.4f\n",
                    r.method.c_str(), r.bias, r.mae, r.rmse, r.coverage, r.interval_length);
    return 0;
}

// --------------------------------------------------------------- dpmm-fit

int run_dpmm_fit(const CommonOpts& common, const DpmmFitOpts& opt) {
    if (opt.data.empty()) throw ConfigError("dpmm-fit: --data is required");
    const UnivariateData data = csv::read_univariate(opt.data);
    const dpmm::DpmmConfig cfg = to_dpmm_config(opt.chain, opt.b_draws);
    const auto draws = dpmm::fit(data, cfg, derive_stream(common.seed, role::dpmm));
    csv::write_mixtures(out_path(common, "mixture_draws.csv"), draws);
    std::printf("dpmm-fit: %zu draws (H=%zu, n=%zu)\n", draws.size(), cfg.trunc, data.size());
    return 0;
}

// ----------------------------------------------------------- nuisance-fit

int run_nuisance_fit(const CommonOpts& common, const NuisanceFitOpts& opt) {
    if (opt.data.empty()) throw ConfigError("nuisance-fit: --data is required");
    const CausalData data = csv::read_causal(opt.data);

    NuisanceTarget target;
    if (opt.target == "propensity")
        target = NuisanceTarget::propensity;
    else if (opt.target == "outcome")
        target = NuisanceTarget::outcome;
    else if (opt.target == "outcome-arm0")
        target = NuisanceTarget::outcome_arm0;
    else if (opt.target == "outcome-arm1")
        target = NuisanceTarget::outcome_arm1;
    else
        throw ConfigError("nuisance-fit: --target must be propensity, outcome, outcome-arm0, "
                          "or outcome-arm1");

    GlmConfig cfg;
    std::string family = opt.family;
    if (family.empty())
        family = target == NuisanceTarget::propensity ? "bernoulli-logit" : "gaussian-identity";
    if (family == "bernoulli-logit")
        cfg.family = GlmFamily::bernoulli_logit;
    else if (family == "gaussian-identity")
        cfg.family = GlmFamily::gaussian_identity;
    else
        throw ConfigError("nuisance-fit: --family must be bernoulli-logit or gaussian-identity");

    if (opt.basis == "intercept")
        cfg.basis = GlmBasis::intercept;
    else if (opt.basis == "linear")
        cfg.basis = GlmBasis::linear;
    else if (opt.basis == "polynomial")
        cfg.basis = GlmBasis::polynomial;
    else
        throw ConfigError("nuisance-fit: --basis must be intercept, linear, or polynomial");
    cfg.degree = opt.degree;

    if (opt.learner == "s")
        cfg.learner = OutcomeLearner::s_learner;
    else if (opt.learner == "t")
        cfg.learner = OutcomeLearner::t_learner;
    else
        throw ConfigError("nuisance-fit: --learner must be s or t");

    const std::uint64_t role_tag =
        target == NuisanceTarget::propensity ? role::propensity : role::outcome;
    const NuisanceDraws draws = bb_glm_posterior(data, target, cfg, opt.b_draws,
                                                 derive_stream(common.seed, role_tag),
                                                 common.threads);
    save_nuisance_csv(out_path(common, "nuisance.csv"), draws);
    std::printf("nuisance-fit: %zu draws of %s at %zu points\n", draws.draws(),
                opt.target.c_str(), draws.n);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    log::init_from_env();

    CLI::App app{"one-step posterior corrections for posterior samples"};
    app.require_subcommand(1);

    CommonOpts common;
    CorrectOpts correct;
    SimulateOpts simulate;
    DpmmFitOpts dpmm_fit;
    NuisanceFitOpts nuisance_fit;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", common.seed, "run seed (all randomness derives from it)")
            ->required();
        cmd->add_option("--threads", common.threads, "parallelism bound (output-invariant)");
        cmd->add_option("--out", common.out, "output directory");
        cmd->add_option("--format", common.format, "json, csv, or both");
        cmd->add_option("--config", common.config_path, "JSON config overriding flags");
    };

    auto add_chain = [&](CLI::App* cmd, ChainOpts& c) {
        cmd->add_option("--mass", c.mass, "DP concentration");
        cmd->add_option("--base-mean", c.base_mean, "base measure mean");
        cmd->add_option("--base-sd", c.base_sd, "base measure sd");
        cmd->add_option("--ig-a", c.ig_a, "inverse-gamma shape on sigma^2");
        cmd->add_option("--ig-b", c.ig_b, "inverse-gamma scale on sigma^2");
        cmd->add_option("--trunc", c.trunc, "stick-breaking truncation");
        cmd->add_option("--burn-in", c.burn_in, "burn-in sweeps");
        cmd->add_option("--thin", c.thin, "thinning stride");
    };

    CLI::App* c1 = app.add_subcommand("correct", "one-step correction from posterior inputs");
    add_common(c1);
    c1->add_option("--data", correct.data, "data CSV (univariate `z` or causal `x_*,a,y`)");
    c1->add_option("--functional", correct.functional,
                   "linear | isd | mar_mean | mar_mean_fixed_pi | att | actt | cate");
    c1->add_option("--influence", correct.influence, "InfluenceMatrix CSV (plugin,psi_*)");
    c1->add_option("--mixture", correct.mixture, "mixture draws CSV for isd");
    c1->add_option("--pi", correct.pi, "propensity draws CSV");
    c1->add_option("--m", correct.m, "regression draws CSV (mar)");
    c1->add_option("--mu0", correct.mu0, "control-arm regression draws CSV");
    c1->add_option("--mu1", correct.mu1, "treated-arm regression draws CSV");
    c1->add_option("--g", correct.g, "linear functional column: z, y, or a");
    c1->add_option("--b-draws", correct.b_draws, "weight draws for the linear functional");
    c1->add_option("--level", correct.level, "credible level");
    c1->add_option("--floor", correct.floor, "positivity floor");
    c1->add_flag("--clip", correct.clip, "clip propensities at the floor instead of failing");

    CLI::App* c2 = app.add_subcommand("simulate", "Monte Carlo coverage experiment");
    add_common(c2);
    c2->add_option("--scenario", simulate.scenario, "laplace_isd | mar_synthetic | att_synthetic");
    c2->add_option("--n", simulate.n, "sample size per replicate");
    c2->add_option("--reps", simulate.reps, "replicate count");
    c2->add_option("--b-draws", simulate.b_draws, "posterior draws per replicate");
    c2->add_option("--method", simulate.method, "corrected | uncorrected | both");
    c2->add_flag("--misspecify-propensity", simulate.misspecify_propensity,
                 "fit an intercept-only propensity model");
    c2->add_flag("--misspecify-outcome", simulate.misspecify_outcome,
                 "fit an intercept-only outcome model");
    c2->add_flag("--heterogeneous", simulate.heterogeneous, "tau(x) = 1 + sin(2 pi x)");
    c2->add_option("--tau0", simulate.tau0, "homogeneous effect size");
    c2->add_option("--level", simulate.level, "credible level");
    c2->add_option("--floor", simulate.floor, "positivity floor");
    c2->add_flag("--clip", simulate.clip, "clip propensities at the floor");
    c2->add_flag("--per-replicate", simulate.per_replicate, "emit per-replicate records");
    add_chain(c2, simulate.chain);

    CLI::App* c3 = app.add_subcommand("dpmm-fit", "fit the mixture posterior, emit draws CSV");
    add_common(c3);
    c3->add_option("--data", dpmm_fit.data, "univariate data CSV");
    c3->add_option("--b-draws", dpmm_fit.b_draws, "posterior draws to keep");
    add_chain(c3, dpmm_fit.chain);

    CLI::App* c4 = app.add_subcommand("nuisance-fit", "Bayesian-bootstrap GLM nuisance draws");
    add_common(c4);
    c4->add_option("--data", nuisance_fit.data, "causal data CSV");
    c4->add_option("--target", nuisance_fit.target,
                   "propensity | outcome | outcome-arm0 | outcome-arm1");
    c4->add_option("--family", nuisance_fit.family, "bernoulli-logit | gaussian-identity");
    c4->add_option("--basis", nuisance_fit.basis, "intercept | linear | polynomial");
    c4->add_option("--degree", nuisance_fit.degree, "polynomial degree");
    c4->add_option("--learner", nuisance_fit.learner, "s | t");
    c4->add_option("--b-draws", nuisance_fit.b_draws, "posterior draws");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!common.config_path.empty()) {
            const json j = load_config_json(common.config_path);
            take_common(j, common);
            if (c1->parsed()) {
                take(j, "data", correct.data);
                take(j, "functional", correct.functional);
                take(j, "influence", correct.influence);
                take(j, "mixture", correct.mixture);
                take(j, "pi", correct.pi);
                take(j, "m", correct.m);
                take(j, "mu0", correct.mu0);
                take(j, "mu1", correct.mu1);
                take(j, "g", correct.g);
                take(j, "b_draws", correct.b_draws);
                take(j, "level", correct.level);
                take(j, "positivity_floor", correct.floor);
                take(j, "clip", correct.clip);
            } else if (c2->parsed()) {
                take(j, "scenario", simulate.scenario);
                take(j, "n", simulate.n);
                take(j, "reps", simulate.reps);
                take(j, "b_draws", simulate.b_draws);
                take(j, "method", simulate.method);
                take(j, "misspecify_propensity", simulate.misspecify_propensity);
                take(j, "misspecify_outcome", simulate.misspecify_outcome);
                take(j, "heterogeneous", simulate.heterogeneous);
                take(j, "tau0", simulate.tau0);
                take(j, "level", simulate.level);
                take(j, "positivity_floor", simulate.floor);
                take(j, "clip", simulate.clip);
                take(j, "per_replicate", simulate.per_replicate);
                take_chain(j, simulate.chain);
            } else if (c3->parsed()) {
                take(j, "data", dpmm_fit.data);
                take(j, "b_draws", dpmm_fit.b_draws);
                take_chain(j, dpmm_fit.chain);
            } else if (c4->parsed()) {
                take(j, "data", nuisance_fit.data);
                take(j, "target", nuisance_fit.target);
                take(j, "family", nuisance_fit.family);
                take(j, "basis", nuisance_fit.basis);
                take(j, "degree", nuisance_fit.degree);
                take(j, "learner", nuisance_fit.learner);
                take(j, "b_draws", nuisance_fit.b_draws);
            }
        }
        check_format(common);
        if (common.threads == 0) common.threads = 1;

        if (c1->parsed()) return run_correct(common, correct);
        if (c2->parsed()) return run_simulate(common, simulate);
        if (c3->parsed()) return run_dpmm_fit(common, dpmm_fit);
        if (c4->parsed()) return run_nuisance_fit(common, nuisance_fit);
        throw ConfigError("no subcommand given");
    } catch (const ValidationError& e) {
        log::error(e.what());
        std::fprintf(stderr, "onestep: %s\n", e.what());
        return 2;
    } catch (const ComputeError& e) {
        log::error(e.what());
        std::fprintf(stderr, "onestep: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        log::error(e.what());
        std::fprintf(stderr, "onestep: %s\n", e.what());
        return 3;
    }
}
