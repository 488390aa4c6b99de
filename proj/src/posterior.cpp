#include "wbcp/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wbcp/errors.hpp"
#include "wbcp/rng.hpp"
#include "wbcp/stats.hpp"

namespace wbcp {

DirichletParams make_dirichlet_params(const SortedCalibration& sc,
                                      const WeightProfile& profile) {
    if (sc.size() != profile.normalized.size())
        throw InvalidInput("make_dirichlet_params: profile not aligned with calibration");
    DirichletParams params;
    params.alphas.reserve(sc.size());
    for (double w : sc.weights()) {
        if (w > 0.0) params.alphas.push_back(profile.uniform ? 1.0 : profile.neff * w);
    }
    if (params.alphas.empty())
        throw WeightDegeneracy("make_dirichlet_params: no positive weights");
    params.alpha0 = profile.uniform ? profile.neff : 0.0;
    if (!profile.uniform) {
        double a0 = 0.0;
        for (double a : params.alphas) a0 += a;
        params.alpha0 = a0;
        if (std::fabs(a0 - profile.neff) > 1e-9 * profile.neff)
            throw InvalidInput("make_dirichlet_params: alpha0 deviates from neff");
    }
    return params;
}

DirichletSamples sample_dirichlet(const DirichletParams& params, std::size_t draws,
                                  std::uint64_t seed) {
    if (draws == 0) throw InvalidInput("sample_dirichlet: draws must be >= 1");
    const std::size_t k = params.alphas.size();
    std::vector<GammaShape> shapes;
    shapes.reserve(k);
    for (double a : params.alphas) {
        if (!(a > 0.0)) throw InvalidInput("sample_dirichlet: shapes must be > 0");
        shapes.emplace_back(a);
    }
    DirichletSamples out;
    out.draws = draws;
    out.dim = k;
    out.data.resize(draws * k);
    Rng rng(seed);
    for (std::size_t m = 0; m < draws; ++m) {
        double* row = out.data.data() + m * k;
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            row[i] = shapes[i].draw(rng);
            total += row[i];
        }
        if (total <= 0.0) {
            // All mass underflowed (possible only with extreme shapes);
            // fall back to the mean direction.
            for (std::size_t i = 0; i < k; ++i) row[i] = params.alphas[i] / params.alpha0;
        } else {
            for (std::size_t i = 0; i < k; ++i) row[i] /= total;
        }
    }
    return out;
}

ThresholdPosterior threshold_posterior(const SortedCalibration& sc,
                                       const WeightProfile& profile, double q,
                                       std::size_t draws, std::uint64_t seed) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidInput("threshold_posterior: q must lie in (0, 1)");
    if (draws == 0) throw InvalidInput("threshold_posterior: draws must be >= 1");
    const std::size_t n = sc.size();
    if (profile.normalized.size() != n)
        throw InvalidInput("threshold_posterior: profile not aligned with calibration");

    // Positive (unpruned) components in sorted order; zero-weight entries
    // draw no Gamma mass and can never host the crossing index.
    std::vector<std::size_t> active;
    std::vector<GammaShape> shapes;
    active.reserve(n);
    shapes.reserve(n);
    const auto& w = sc.weights();
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] > 0.0) {
            active.push_back(i);
            shapes.emplace_back(profile.uniform ? 1.0 : profile.neff * w[i]);
        }
    }
    if (active.empty()) throw WeightDegeneracy("threshold_posterior: no positive weights");

    const auto wcp = weighted_quantile(sc, q);
    const auto& scores = sc.scores();

    ThresholdPosterior tp;
    tp.samples.resize(draws);
    tp.neff = profile.neff;
    tp.wcp_threshold = wcp.threshold;
    tp.wcp_index = wcp.index;

    Rng rng(seed);
    std::vector<double> gamma_buf(active.size());
    for (std::size_t m = 0; m < draws; ++m) {
        double total = 0.0;
        for (std::size_t t = 0; t < active.size(); ++t) {
            gamma_buf[t] = shapes[t].draw(rng);
            total += gamma_buf[t];
        }
        std::size_t pick = active.back();
        if (total > 0.0) {
            const double target = q * total;
            double acc = 0.0;
            for (std::size_t t = 0; t < active.size(); ++t) {
                acc += gamma_buf[t];
                if (acc >= target) {
                    pick = active[t];
                    break;
                }
            }
            // If rounding left acc marginally below target at the end, the
            // final partial sum counts as 1 and the last active index wins.
        } else {
            pick = wcp.index - 1;  // degenerate draw; keep the deterministic answer
        }
        tp.samples[m] = scores[pick];
    }

    tp.mean = mean(tp.samples);
    tp.sigma_post = sample_stddev(tp.samples);
    tp.sorted_samples = tp.samples;
    std::sort(tp.sorted_samples.begin(), tp.sorted_samples.end());
    return tp;
}

double hpd_threshold(const ThresholdPosterior& tp, double beta) {
    if (tp.sorted_samples.empty()) throw InvalidInput("hpd_threshold: empty posterior");
    if (!(beta > 0.0 && beta <= 1.0))
        throw InvalidInput("hpd_threshold: beta must lie in (0, 1]");
    const std::size_t m = tp.sorted_samples.size();
    auto rank = static_cast<std::size_t>(std::ceil(beta * static_cast<double>(m)));
    rank = std::min(std::max<std::size_t>(rank, 1), m);
    return tp.sorted_samples[rank - 1];
}

ThresholdPosterior bqcp_threshold(const CalibrationSet& cal, double q, std::size_t draws,
                                  std::uint64_t seed) {
    const auto profile = uniform_profile(cal.size());
    const auto sc = sort_with_weights(cal, profile.raw);
    return threshold_posterior(sc, profile, q, draws, seed);
}

LossBoundModel make_loss_bound_model(std::vector<double> sorted_losses,
                                     const std::vector<double>& weights_by_loss,
                                     double neff, double upper_bound, double alpha_tail) {
    const std::size_t n = sorted_losses.size();
    if (n == 0) throw InvalidInput("make_loss_bound_model: need at least one loss");
    if (weights_by_loss.size() != n)
        throw InvalidInput("make_loss_bound_model: weight count mismatch");
    if (!(neff > 0.0)) throw InvalidInput("make_loss_bound_model: neff must be > 0");
    for (std::size_t i = 1; i < n; ++i)
        if (sorted_losses[i] < sorted_losses[i - 1])
            throw InvalidInput("make_loss_bound_model: losses must be sorted ascending");
    if (upper_bound < sorted_losses.back())
        throw BoundViolation("make_loss_bound_model: B is below the largest loss");

    double total = 0.0;
    for (double w : weights_by_loss) {
        if (!std::isfinite(w) || w < 0.0)
            throw InvalidInput("make_loss_bound_model: weights must be finite and >= 0");
        total += w;
    }
    if (total <= 0.0) throw WeightDegeneracy("make_loss_bound_model: all weights zero");

    LossBoundModel model;
    model.sorted_losses = std::move(sorted_losses);
    model.upper_bound = upper_bound;
    model.alphas.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        model.alphas[i] = neff * (weights_by_loss[i] / total);
    model.alphas[n] =
        alpha_tail > 0.0 ? alpha_tail : neff / static_cast<double>(n + 1);
    return model;
}

std::vector<double> loss_upper_bound(const LossBoundModel& model, std::size_t draws,
                                     std::uint64_t seed) {
    if (draws == 0) throw InvalidInput("loss_upper_bound: draws must be >= 1");
    const std::size_t k = model.alphas.size();
    std::vector<std::size_t> active;
    std::vector<GammaShape> shapes;
    for (std::size_t i = 0; i < k; ++i) {
        if (model.alphas[i] > 0.0) {
            active.push_back(i);
            shapes.emplace_back(model.alphas[i]);
        }
    }
    if (active.empty()) throw WeightDegeneracy("loss_upper_bound: no positive shapes");

    auto loss_at = [&](std::size_t i) {
        return i + 1 < k ? model.sorted_losses[i] : model.upper_bound;
    };

    std::vector<double> samples(draws);
    std::vector<double> gamma_buf(active.size());
    Rng rng(seed);
    for (std::size_t m = 0; m < draws; ++m) {
        double total = 0.0;
        for (std::size_t t = 0; t < active.size(); ++t) {
            gamma_buf[t] = shapes[t].draw(rng);
            total += gamma_buf[t];
        }
        double value = 0.0;
        if (total > 0.0) {
            for (std::size_t t = 0; t < active.size(); ++t)
                value += (gamma_buf[t] / total) * loss_at(active[t]);
        } else {
            double a0 = 0.0;
            for (std::size_t t = 0; t < shapes.size(); ++t) a0 += model.alphas[active[t]];
            for (std::size_t t = 0; t < active.size(); ++t)
                value += (model.alphas[active[t]] / a0) * loss_at(active[t]);
        }
        samples[m] = value;
    }
    return samples;
}

double risk_control_probability(const std::vector<double>& loss_samples, double alpha) {
    if (loss_samples.empty())
        throw InvalidInput("risk_control_probability: empty sample set");
    std::size_t count = 0;
    for (double v : loss_samples)
        if (v <= alpha) ++count;
    return static_cast<double>(count) / static_cast<double>(loss_samples.size());
}

Interval prediction_interval(double center, double half_width) {
    if (std::isnan(half_width) || half_width < 0.0)
        throw InvalidInput("prediction_interval: half width must be >= 0");
    if (std::isinf(half_width)) {
        return Interval{-std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
    }
    return Interval{center - half_width, center + half_width};
}

}  // namespace wbcp
