#include "onestep/dpmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "onestep/errors.hpp"
#include "onestep/kernels.hpp"

namespace onestep::dpmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kRowBlock = 128;  // points per exp_vec batch

void fill_log_weights(const std::vector<double>& w, std::vector<double>& logw) {
    for (std::size_t h = 0; h < w.size(); ++h)
        logw[h] = w[h] > 0.0 ? std::log(w[h]) : kNegInf;
}

}  // namespace

void MixtureDraw::validate() const {
    const std::size_t h = weights.size();
    if (h == 0 || atoms.size() != h)
        throw ShapeError("mixture draw: weights/atoms length mismatch or empty");
    if (!std::isfinite(sigma) || sigma <= 0.0)
        throw DataError("mixture draw: sigma must be finite and positive");
    double s = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
            throw DataError("mixture draw: negative or non-finite weight");
        if (!std::isfinite(atoms[i])) throw DataError("mixture draw: non-finite atom");
        s += weights[i];
    }
    if (std::abs(s - 1.0) > 1e-10)
        throw DataError("mixture draw: weights sum deviates from 1 by " + std::to_string(s - 1.0));
}

void DpmmConfig::validate() const {
    if (!(mass > 0.0) || !(base_sd > 0.0) || !(a > 0.0) || !(b > 0.0))
        throw ConfigError("dpmm config: mass, base_sd, a, b must be positive");
    if (!std::isfinite(base_mean)) throw ConfigError("dpmm config: base_mean must be finite");
    if (trunc < 2) throw ConfigError("dpmm config: truncation must be at least 2");
    if (keep < 1 || thin < 1) throw ConfigError("dpmm config: keep and thin must be at least 1");
}

void density_at(const MixtureDraw& mix, const double* points, std::size_t n, double* out) {
    const std::size_t h_count = mix.components();
    const double inv2s2 = 1.0 / (2.0 * mix.sigma * mix.sigma);
    const double log_norm = std::log(mix.sigma * std::sqrt(2.0 * std::numbers::pi));

    std::vector<double> logw(h_count);
    fill_log_weights(mix.weights, logw);
    std::vector<double> t(kRowBlock * h_count), e(kRowBlock * h_count), shift(kRowBlock);

    for (std::size_t j0 = 0; j0 < n; j0 += kRowBlock) {
        const std::size_t rows = std::min(kRowBlock, n - j0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double z = points[j0 + r];
            double* row = t.data() + r * h_count;
            for (std::size_t h = 0; h < h_count; ++h) {
                const double d = z - mix.atoms[h];
                row[h] = logw[h] - d * d * inv2s2;
            }
            shift[r] = kernels::max(row, h_count);
            for (std::size_t h = 0; h < h_count; ++h) row[h] -= shift[r];
        }
        kernels::exp_vec(t.data(), e.data(), rows * h_count);
        for (std::size_t r = 0; r < rows; ++r)
            out[j0 + r] = std::exp(shift[r] - log_norm) *
                          kernels::sum(e.data() + r * h_count, h_count);
    }
}

std::vector<double> density_at(const MixtureDraw& mix, std::span<const double> points) {
    mix.validate();
    std::vector<double> out(points.size());
    density_at(mix, points.data(), points.size(), out.data());
    return out;
}

std::vector<MixtureDraw> fit(const UnivariateData& data, const DpmmConfig& cfg,
                             RngStream stream) {
    cfg.validate();
    const std::vector<double>& z = data.values();
    const std::size_t n = z.size();
    if (n < 2) throw DataError("dpmm fit: need at least 2 observations");
    const std::size_t h_count = cfg.trunc;

    StreamRng rng(stream);

    // sigma^2 starts at the sample variance; sticks and atoms start at the prior
    const double zbar = kernels::sum(z.data(), n) / static_cast<double>(n);
    double sigma2 = 0.0;
    for (double zi : z) sigma2 += (zi - zbar) * (zi - zbar);
    sigma2 /= static_cast<double>(n - 1);
    if (!(sigma2 > 0.0)) sigma2 = 1.0;

    std::vector<double> w(h_count), mu(h_count);
    {
        double stick = 1.0;
        for (std::size_t h = 0; h + 1 < h_count; ++h) {
            const double vh = rng.beta(1.0, cfg.mass);
            w[h] = vh * stick;
            stick *= 1.0 - vh;
        }
        w[h_count - 1] = stick;
    }
    for (std::size_t h = 0; h < h_count; ++h)
        mu[h] = cfg.base_mean + cfg.base_sd * rng.normal();

    std::vector<std::size_t> c(n, 0);
    std::vector<double> logw(h_count), nh(h_count), sumz(h_count);
    std::vector<double> t(kRowBlock * h_count), e(kRowBlock * h_count), shift(kRowBlock);
    const double base_prec = 1.0 / (cfg.base_sd * cfg.base_sd);

    auto sweep = [&](std::size_t sweep_index) {
        // (i) allocations ~ categorical(w_h phi_sigma(z_i - mu_h)), log-sum-exp shifted
        const double inv2s2 = 1.0 / (2.0 * sigma2);
        fill_log_weights(w, logw);
        for (std::size_t i0 = 0; i0 < n; i0 += kRowBlock) {
            const std::size_t rows = std::min(kRowBlock, n - i0);
            for (std::size_t r = 0; r < rows; ++r) {
                const double zi = z[i0 + r];
                double* row = t.data() + r * h_count;
                for (std::size_t h = 0; h < h_count; ++h) {
                    const double d = zi - mu[h];
                    row[h] = logw[h] - d * d * inv2s2;
                }
                shift[r] = kernels::max(row, h_count);
                for (std::size_t h = 0; h < h_count; ++h) row[h] -= shift[r];
            }
            kernels::exp_vec(t.data(), e.data(), rows * h_count);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* q = e.data() + r * h_count;
                const double total = kernels::sum(q, h_count);
                if (!(total > 0.0) || !std::isfinite(total))
                    throw NumericError("dpmm fit: degenerate allocation row at sweep " +
                                       std::to_string(sweep_index));
                c[i0 + r] = rng.categorical(q, h_count, total);
            }
        }

        std::fill(nh.begin(), nh.end(), 0.0);
        std::fill(sumz.begin(), sumz.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            nh[c[i]] += 1.0;
            sumz[c[i]] += z[i];
        }

        // (ii) sticks v_h ~ Beta(1 + n_h, M + n_{>h}); the last weight absorbs
        // the remaining stick
        double remaining = static_cast<double>(n);
        double stick = 1.0;
        for (std::size_t h = 0; h + 1 < h_count; ++h) {
            remaining -= nh[h];
            const double vh = rng.beta(1.0 + nh[h], cfg.mass + remaining);
            w[h] = vh * stick;
            stick *= 1.0 - vh;
        }
        w[h_count - 1] = stick;

        // (iii) atoms: conjugate normal update against the base measure
        // (empty components draw from the base)
        const double lik_prec = 1.0 / sigma2;
        for (std::size_t h = 0; h < h_count; ++h) {
            const double prec = base_prec + nh[h] * lik_prec;
            const double pmean = (cfg.base_mean * base_prec + sumz[h] * lik_prec) / prec;
            mu[h] = pmean + rng.normal() / std::sqrt(prec);
        }

        // (iv) sigma^2 ~ IG(a + n/2, b + rss/2)
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = z[i] - mu[c[i]];
            rss += d * d;
        }
        sigma2 = rng.inv_gamma(cfg.a + 0.5 * static_cast<double>(n),
                               cfg.b + 0.5 * rss);
        if (!std::isfinite(sigma2) || sigma2 <= 0.0)
            throw NumericError("dpmm fit: non-finite sigma^2 at sweep " +
                               std::to_string(sweep_index));
    };

    std::vector<MixtureDraw> out;
    out.reserve(cfg.keep);
    std::size_t sweep_index = 0;
    for (std::size_t s = 0; s < cfg.burn_in; ++s) sweep(sweep_index++);
    for (std::size_t k = 0; k < cfg.keep; ++k) {
        for (std::size_t s = 0; s < cfg.thin; ++s) sweep(sweep_index++);
        MixtureDraw draw{w, mu, std::sqrt(sigma2)};
        draw.validate();
        out.push_back(std::move(draw));
    }
    return out;
}

}  // namespace onestep::dpmm
