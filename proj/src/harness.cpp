#include "onestep/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

#include "onestep/bootstrap.hpp"
#include "onestep/csv.hpp"
#include "onestep/errors.hpp"
#include "onestep/functionals.hpp"
#include "onestep/kernels.hpp"
#include "onestep/log.hpp"
#include "onestep/nuisance.hpp"
#include "onestep/parallel.hpp"

namespace onestep {

namespace {

constexpr double kLaplaceIsdTruth = 0.25;  // integral of (e^{-|z|}/2)^2

double expit(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double att_tau(const AttOptions& opts, double x) {
    return opts.homogeneous ? opts.tau0 : 1.0 + std::sin(2.0 * std::numbers::pi * x);
}

double laplace_density(double z) { return 0.5 * std::exp(-std::abs(z)); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

Scenario parse_scenario(const std::string& name) {
    if (name == "laplace_isd") return Scenario::laplace_isd;
    if (name == "mar_synthetic") return Scenario::mar_synthetic;
    if (name == "att_synthetic") return Scenario::att_synthetic;
    throw ConfigError("unknown scenario '" + name + "'");
}

const char* scenario_name(Scenario s) noexcept {
    switch (s) {
        case Scenario::laplace_isd: return "laplace_isd";
        case Scenario::mar_synthetic: return "mar_synthetic";
        case Scenario::att_synthetic: return "att_synthetic";
    }
    return "?";
}

MethodSelection parse_method(const std::string& name) {
    if (name == "corrected") return MethodSelection::corrected;
    if (name == "uncorrected") return MethodSelection::uncorrected;
    if (name == "both") return MethodSelection::both;
    throw ConfigError("unknown method selection '" + name + "'");
}

const char* method_name(MethodSelection m) noexcept {
    switch (m) {
        case MethodSelection::corrected: return "corrected";
        case MethodSelection::uncorrected: return "uncorrected";
        case MethodSelection::both: return "both";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (n < 10) throw ConfigError("experiment: n must be at least 10");
    if (reps < 1) throw ConfigError("experiment: reps must be at least 1");
    if (b_draws < 2) throw ConfigError("experiment: need at least 2 posterior draws");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("experiment: level outside (0, 1)");
    if (!(positivity_floor > 0.0 && positivity_floor < 0.5))
        throw ConfigError("experiment: positivity floor outside (0, 0.5)");
    if (!std::isfinite(tau0)) throw ConfigError("experiment: tau0 must be finite");
    dpmm.validate();
}

UnivariateData gen_laplace(std::size_t n, RngStream stream) {
    StreamRng rng(stream);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = rng.u01() - 0.5;
        const double sign = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
        z[i] = -sign * std::log(1.0 - 2.0 * std::abs(s));
    }
    return UnivariateData(std::move(z));
}

MarSample gen_mar(std::size_t n, RngStream stream) {
    if (n < 10) throw ConfigError("gen_mar: n must be at least 10");
    StreamRng rng(stream);
    std::vector<double> x(n), y(n);
    std::vector<std::uint8_t> a(n), obs(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.u01();
        a[i] = rng.bernoulli(expit(0.5 + 1.5 * x[i])) ? 1 : 0;
        y[i] = x[i] * x[i] + rng.normal();  // drawn even when masked: A hides Y
        obs[i] = a[i];
    }
    return MarSample{CausalData(std::move(x), 1, std::move(a), std::move(y), std::move(obs)),
                     1.0 / 3.0};
}

AttSample gen_att(std::size_t n, const AttOptions& opts, RngStream stream) {
    if (n < 10) throw ConfigError("gen_att: n must be at least 10");
    if (!std::isfinite(opts.tau0)) throw ConfigError("gen_att: tau0 must be finite");
    StreamRng rng(stream);
    std::vector<double> x(n), y(n);
    std::vector<std::uint8_t> a(n), obs(n, 1);
    double qn_tau_pi = 0.0;
    double qn_pi = 0.0;
    double qn_tau = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.u01();
        const double pi0 = expit(-0.5 + x[i]);
        const double tau = att_tau(opts, x[i]);
        a[i] = rng.bernoulli(pi0) ? 1 : 0;
        y[i] = 1.0 + x[i] + a[i] * tau + rng.normal();
        qn_tau_pi += pi0 * tau;
        qn_pi += pi0;
        qn_tau += tau;
    }

    AttSample out{CausalData(std::move(x), 1, std::move(a), std::move(y), std::move(obs)),
                  0.0, 0.0, 0.0};
    out.truth_actt = qn_tau_pi / qn_pi;
    out.truth_cate = qn_tau / static_cast<double>(n);
    if (opts.homogeneous) {
        out.truth_att = opts.tau0;
    } else {
        // population truth by quadrature over the covariate law, cached: the
        // heterogeneous tau is fixed
        static const double het_truth = [] {
            constexpr std::size_t pts = 1000001;
            const double h = 1.0 / static_cast<double>(pts - 1);
            double num = 0.0;
            double den = 0.0;
            for (std::size_t k = 0; k < pts; ++k) {
                const double xk = static_cast<double>(k) * h;
                const double wk = (k == 0 || k + 1 == pts) ? 0.5 : 1.0;
                const double pk = expit(-0.5 + xk);
                num += wk * pk * (1.0 + std::sin(2.0 * std::numbers::pi * xk));
                den += wk * pk;
            }
            return num / den;
        }();
        out.truth_att = het_truth;
    }
    return out;
}

namespace {

ReplicateRecord make_record(std::size_t rep, const std::string& label,
                            const CorrectedDraws& draws, double truth, double level) {
    const PosteriorSummary s = summarize(draws, level);
    return ReplicateRecord{rep,     label,          s.mean, s.lower,
                           s.upper, truth,          covers(s, truth)};
}

std::vector<ReplicateRecord> run_laplace_replicate(const ExperimentConfig& cfg, std::size_t rep,
                                                   std::uint64_t key) {
    const UnivariateData data = gen_laplace(cfg.n, derive_stream(cfg.seed, role::data, key));
    dpmm::DpmmConfig chain = cfg.dpmm;
    chain.keep = cfg.b_draws;
    const auto mixes = dpmm::fit(data, chain, derive_stream(cfg.seed, role::dpmm, key));
    const InfluenceMatrix infl = isd_influence(mixes, data);

    std::vector<ReplicateRecord> recs;
    if (cfg.method != MethodSelection::uncorrected) {
        const CorrectedDraws corrected =
            one_step_posterior(infl, derive_stream(cfg.seed, role::correction, key));
        recs.push_back(make_record(rep, "corrected", corrected, kLaplaceIsdTruth, cfg.level));
    }
    if (cfg.method != MethodSelection::corrected) {
        // plug-in posterior: the chi(P^(b)) draws themselves
        CorrectedDraws plug;
        plug.values = infl.plugin;
        plug.functional_id = "isd_plugin";
        plug.seed = cfg.seed;
        plug.n = cfg.n;
        recs.push_back(make_record(rep, "uncorrected", plug, kLaplaceIsdTruth, cfg.level));
    }
    return recs;
}

std::vector<ReplicateRecord> run_mar_replicate(const ExperimentConfig& cfg, std::size_t rep,
                                               std::uint64_t key) {
    MarSample sample = gen_mar(cfg.n, derive_stream(cfg.seed, role::data, key));

    GlmConfig pi_cfg;
    pi_cfg.family = GlmFamily::bernoulli_logit;
    pi_cfg.basis = cfg.misspecify_propensity ? GlmBasis::intercept : GlmBasis::linear;
    GlmConfig m_cfg;
    m_cfg.family = GlmFamily::gaussian_identity;
    // m0(x) = x^2 sits inside the well-specified quadratic basis; the
    // misspecified model drops the covariate entirely, so its plug-in
    // inherits the complete-case selection bias E[m0|A=1] - E[m0]
    m_cfg.basis = cfg.misspecify_outcome ? GlmBasis::intercept : GlmBasis::polynomial;
    m_cfg.degree = 2;

    const NuisanceDraws pi =
        bb_glm_posterior(sample.data, NuisanceTarget::propensity, pi_cfg, cfg.b_draws,
                         derive_stream(cfg.seed, role::propensity, key));
    const NuisanceDraws m =
        bb_glm_posterior(sample.data, NuisanceTarget::outcome, m_cfg, cfg.b_draws,
                         derive_stream(cfg.seed, role::outcome, key));

    std::vector<ReplicateRecord> recs;
    if (cfg.method != MethodSelection::uncorrected) {
        const InfluenceMatrix infl =
            mar_influence(pi, m, sample.data, cfg.positivity_floor, cfg.clip);
        const CorrectedDraws corrected =
            one_step_posterior(infl, derive_stream(cfg.seed, role::correction, key));
        recs.push_back(make_record(rep, "corrected", corrected, sample.truth, cfg.level));
    }
    if (cfg.method != MethodSelection::corrected) {
        // plug-in posterior: chi(P^(b)) = empirical mean of the fitted m_b
        CorrectedDraws plug;
        plug.values.resize(m.draws());
        for (std::size_t b = 0; b < m.draws(); ++b)
            plug.values[b] = kernels::sum(m.row(b), m.n) / static_cast<double>(m.n);
        plug.functional_id = "mar_plugin";
        plug.seed = cfg.seed;
        plug.n = cfg.n;
        recs.push_back(make_record(rep, "uncorrected", plug, sample.truth, cfg.level));
    }
    return recs;
}

std::vector<ReplicateRecord> run_att_replicate(const ExperimentConfig& cfg, std::size_t rep,
                                               std::uint64_t key) {
    const AttOptions opts{!cfg.heterogeneous, cfg.tau0};
    AttSample sample = gen_att(cfg.n, opts, derive_stream(cfg.seed, role::data, key));

    GlmConfig pi_cfg;
    pi_cfg.family = GlmFamily::bernoulli_logit;
    pi_cfg.basis = cfg.misspecify_propensity ? GlmBasis::intercept : GlmBasis::linear;
    GlmConfig out_cfg;
    out_cfg.family = GlmFamily::gaussian_identity;
    out_cfg.basis = cfg.misspecify_outcome ? GlmBasis::intercept : GlmBasis::linear;
    out_cfg.learner = OutcomeLearner::s_learner;

    const NuisanceDraws pi =
        bb_glm_posterior(sample.data, NuisanceTarget::propensity, pi_cfg, cfg.b_draws,
                         derive_stream(cfg.seed, role::propensity, key));
    // S-learner: the same stream gives both arms identical weight draws,
    // hence one shared fit per b evaluated at a=0 and a=1
    const RngStream out_stream = derive_stream(cfg.seed, role::outcome, key);
    const NuisanceDraws mu0 =
        bb_glm_posterior(sample.data, NuisanceTarget::outcome_arm0, out_cfg, cfg.b_draws,
                         out_stream);
    const NuisanceDraws mu1 =
        bb_glm_posterior(sample.data, NuisanceTarget::outcome_arm1, out_cfg, cfg.b_draws,
                         out_stream);

    const RngStream corr = derive_stream(cfg.seed, role::correction, key);
    std::vector<ReplicateRecord> recs;
    if (cfg.method != MethodSelection::uncorrected) {
        const CorrectedDraws att = att_posterior(pi, mu0, sample.data, corr.substream(1),
                                                 cfg.positivity_floor, cfg.clip);
        recs.push_back(make_record(rep, "corrected_att", att, sample.truth_att, cfg.level));
        const CorrectedDraws actt = actt_posterior(pi, mu0, mu1, sample.data, corr.substream(2),
                                                   cfg.positivity_floor, cfg.clip);
        recs.push_back(make_record(rep, "corrected_actt", actt, sample.truth_actt, cfg.level));
    }
    if (cfg.method != MethodSelection::corrected) {
        // plug-in posterior of theta(P) = Qn[pi (mu1 - mu0)] / Qn[pi]
        CorrectedDraws plug;
        plug.values.resize(pi.draws());
        for (std::size_t b = 0; b < pi.draws(); ++b) {
            double num = 0.0;
            double den = 0.0;
            for (std::size_t i = 0; i < pi.n; ++i) {
                num += pi.at(b, i) * (mu1.at(b, i) - mu0.at(b, i));
                den += pi.at(b, i);
            }
            if (!(den > 0.0)) throw NumericError("att plug-in: degenerate propensity draw");
            plug.values[b] = num / den;
        }
        plug.functional_id = "actt_plugin";
        plug.seed = cfg.seed;
        plug.n = cfg.n;
        recs.push_back(make_record(rep, "uncorrected", plug, sample.truth_actt, cfg.level));
    }
    return recs;
}

std::vector<ReplicateRecord> run_replicate(const ExperimentConfig& cfg, std::size_t rep,
                                           std::uint64_t key) {
    switch (cfg.scenario) {
        case Scenario::laplace_isd: return run_laplace_replicate(cfg, rep, key);
        case Scenario::mar_synthetic: return run_mar_replicate(cfg, rep, key);
        case Scenario::att_synthetic: return run_att_replicate(cfg, rep, key);
    }
    throw ConfigError("run_experiment: unhandled scenario");
}

double median_abs(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    std::vector<std::vector<ReplicateRecord>> per_rep(cfg.reps);
    std::vector<std::uint8_t> ok(cfg.reps, 0);
    std::atomic<std::size_t> failures{0};

    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            // retry once on a perturbed stream key; a second failure drops
            // the replicate
            const std::uint64_t key =
                attempt == 0 ? r : r + (std::uint64_t(1) << 32);
            try {
                per_rep[r] = run_replicate(cfg, r, key);
                ok[r] = 1;
                break;
            } catch (const Error& e) {
                log::info("replicate " + std::to_string(r) + " attempt " +
                          std::to_string(attempt + 1) + " failed: " + e.what());
                if (attempt == 1) failures.fetch_add(1, std::memory_order_relaxed);
            }
        }
    });

    ExperimentResult result;
    result.failures = failures.load();
    if (100 * result.failures > cfg.reps)
        throw ComputeError("run_experiment: " + std::to_string(result.failures) + " of " +
                           std::to_string(cfg.reps) +
                           " replicates failed after retry (over the 1% budget)");

    // aggregate per method label, keeping the per-scenario label order
    std::vector<std::string> labels;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
        if (!ok[r]) continue;
        for (const auto& rec : per_rep[r])
            if (std::find(labels.begin(), labels.end(), rec.method) == labels.end())
                labels.push_back(rec.method);
        break;  // every successful replicate emits the same label set
    }

    for (const std::string& label : labels) {
        std::vector<double> err;
        double bias = 0.0;
        double mse = 0.0;
        double cover = 0.0;
        double len = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < cfg.reps; ++r) {
            if (!ok[r]) continue;
            for (const auto& rec : per_rep[r]) {
                if (rec.method != label) continue;
                const double e = rec.point - rec.truth;
                err.push_back(std::abs(e));
                bias += e;
                mse += e * e;
                cover += rec.covered ? 1.0 : 0.0;
                len += rec.upper - rec.lower;
                ++count;
            }
        }
        if (count == 0) continue;
        const double inv = 1.0 / static_cast<double>(count);
        result.rows.push_back(MetricsRow{label, bias * inv, median_abs(std::move(err)),
                                         std::sqrt(mse * inv), cover * inv, len * inv});
    }

    if (cfg.keep_replicates) {
        for (std::size_t r = 0; r < cfg.reps; ++r)
            if (ok[r])
                result.replicates.insert(result.replicates.end(), per_rep[r].begin(),
                                         per_rep[r].end());
    }
    return result;
}

double ks_normality(const CorrectedDraws& draws) {
    const std::size_t b = draws.values.size();
    if (b < 50) throw DataError("ks_normality: need at least 50 draws");
    const double mean = kernels::sum(draws.values.data(), b) / static_cast<double>(b);
    double ss = 0.0;
    for (double v : draws.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(b - 1));
    if (!(sd > 0.0)) throw NumericError("ks_normality: degenerate draws (zero sd)");

    std::vector<double> x(draws.values);
    for (double& v : x) v = (v - mean) / sd;
    std::sort(x.begin(), x.end());

    double ks = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double phi = std_normal_cdf(x[i]);
        const double hi = (static_cast<double>(i) + 1.0) / static_cast<double>(b) - phi;
        const double lo = phi - static_cast<double>(i) / static_cast<double>(b);
        ks = std::max(ks, std::max(hi, lo));
    }
    return ks;
}

double l2_distance_sq(const dpmm::MixtureDraw& mix, ReferenceDensity reference) {
    mix.validate();
    if (reference != ReferenceDensity::laplace)
        throw ConfigError("l2_distance_sq: unknown reference density");
    constexpr std::size_t pts = 40001;
    constexpr double lo = -20.0;
    constexpr double hi = 20.0;
    const double h = (hi - lo) / static_cast<double>(pts - 1);

    std::vector<double> grid(pts);
    for (std::size_t k = 0; k < pts; ++k) grid[k] = lo + static_cast<double>(k) * h;
    std::vector<double> f(pts);
    dpmm::density_at(mix, grid.data(), pts, f.data());

    double acc = 0.0;
    for (std::size_t k = 0; k < pts; ++k) {
        const double d = f[k] - laplace_density(grid[k]);
        const double wk = (k == 0 || k + 1 == pts) ? 0.5 : 1.0;
        acc += wk * d * d;
    }
    return acc * h;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "method,bias,mae,rmse,coverage,interval_length\n";
    for (const auto& r : rows) {
        out += r.method;
        out += "," + csv::format_value(r.bias);
        out += "," + csv::format_value(r.mae);
        out += "," + csv::format_value(r.rmse);
        out += "," + csv::format_value(r.coverage);
        out += "," + csv::format_value(r.interval_length);
        out += "\n";
    }
    return out;
}

}  // namespace onestep
