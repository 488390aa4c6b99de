#include "wbcp/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wbcp/errors.hpp"

namespace wbcp {

double kish_neff(const std::vector<double>& raw_weights) {
    if (raw_weights.empty()) throw InvalidInput("kish_neff: empty weight vector");
    double sum = 0.0, sum_sq = 0.0;
    for (double w : raw_weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw InvalidInput("kish_neff: weights must be finite and >= 0");
        sum += w;
        sum_sq += w * w;
    }
    if (sum_sq == 0.0) throw WeightDegeneracy("kish_neff: all weights are zero");
    return sum * sum / sum_sq;
}

std::vector<double> gaussian_kernel_weights(const Point2& test_loc,
                                            const std::vector<Point2>& calib_locs,
                                            double h) {
    if (!(h > 0.0)) throw InvalidInput("gaussian_kernel_weights: h must be > 0");
    std::vector<double> w;
    w.reserve(calib_locs.size());
    const double denom = 2.0 * h * h;
    for (const auto& p : calib_locs) {
        const double d = distance(test_loc, p);
        w.push_back(std::exp(-d * d / denom));
    }
    return w;
}

double adaptive_bandwidth(const Point2& test_loc, const std::vector<Point2>& calib_locs,
                          double h0, int k, double h_min) {
    const std::size_t n = calib_locs.size();
    if (!(h0 > 0.0)) throw InvalidInput("adaptive_bandwidth: h0 must be > 0");
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw InvalidInput("adaptive_bandwidth: k must lie in [1, n]");
    if (!(h_min > 0.0)) throw InvalidInput("adaptive_bandwidth: h_min must be > 0");

    std::vector<double> dists;
    dists.reserve(n);
    for (const auto& p : calib_locs) dists.push_back(distance(test_loc, p));
    std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
    dists.resize(static_cast<std::size_t>(k));
    // Lower median of the k smallest distances: deterministic for even k.
    const std::size_t median_pos = static_cast<std::size_t>((k - 1) / 2);
    std::nth_element(dists.begin(), dists.begin() + median_pos, dists.end());
    return std::max(h_min, h0 * dists[median_pos]);
}

namespace {

WeightProfile finish_profile(std::vector<double> raw) {
    WeightProfile profile;
    profile.uniform =
        !raw.empty() && std::all_of(raw.begin(), raw.end(),
                                    [&](double w) { return w == raw.front(); });
    if (profile.uniform && raw.front() > 0.0) {
        const std::size_t n = raw.size();
        profile.raw = std::move(raw);
        profile.normalized.assign(n, 1.0 / static_cast<double>(n));
        profile.neff = static_cast<double>(n);
        return profile;
    }
    profile.uniform = false;

    double total = 0.0;
    for (double w : raw) total += w;
    if (total <= 0.0) throw WeightDegeneracy("weight profile: all weights are zero");

    std::vector<double> normalized(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) normalized[i] = raw[i] / total;

    // Prune near-zero entries, then renormalize the survivors.
    double kept = 0.0;
    for (double& w : normalized) {
        if (w < kWeightPruneThreshold) w = 0.0;
        kept += w;
    }
    if (kept <= 0.0) throw WeightDegeneracy("weight profile: pruning removed all weight");
    double sum_sq = 0.0;
    for (double& w : normalized) {
        w /= kept;
        sum_sq += w * w;
    }
    profile.raw = std::move(raw);
    profile.normalized = std::move(normalized);
    profile.neff = 1.0 / sum_sq;
    return profile;
}

}  // namespace

WeightProfile profile_from_kernel(const Point2& test_loc, const CalibrationSet& calib,
                                  const KernelConfig& cfg) {
    const auto locs = calib.locations();  // throws MissingLocations

    double h;
    if (const auto* fixed = std::get_if<FixedBandwidth>(&cfg.bandwidth)) {
        if (!(fixed->h > 0.0)) throw InvalidInput("profile_from_kernel: h must be > 0");
        h = fixed->h;
    } else {
        const auto& ad = std::get<AdaptiveBandwidth>(cfg.bandwidth);
        double h_min = ad.h_min;
        if (h_min <= 0.0) {
            const double diag = bounding_box_diagonal(locs);
            h_min = diag > 0.0 ? 1e-6 * diag : 1e-12;
        }
        h = adaptive_bandwidth(test_loc, locs, ad.h0, ad.k, h_min);
    }

    // Evaluate the kernel with the squared distances shifted by their
    // minimum. Normalized weights are invariant to the common factor and a
    // remote query keeps max weight 1 instead of underflowing to zero.
    std::vector<double> d2(locs.size());
    double d2_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < locs.size(); ++i) {
        const double dx = test_loc.x - locs[i].x;
        const double dy = test_loc.y - locs[i].y;
        d2[i] = dx * dx + dy * dy;
        d2_min = std::min(d2_min, d2[i]);
    }
    const double denom = 2.0 * h * h;
    std::vector<double> raw(locs.size());
    for (std::size_t i = 0; i < locs.size(); ++i)
        raw[i] = std::exp(-(d2[i] - d2_min) / denom);
    return finish_profile(std::move(raw));
}

WeightProfile profile_from_raw(const std::vector<double>& raw_weights) {
    if (raw_weights.empty()) throw InvalidInput("profile_from_raw: empty weights");
    for (double w : raw_weights)
        if (!std::isfinite(w) || w < 0.0)
            throw InvalidInput("profile_from_raw: weights must be finite and >= 0");
    return finish_profile(raw_weights);
}

WeightProfile uniform_profile(std::size_t n) {
    if (n == 0) throw InvalidInput("uniform_profile: n must be >= 1");
    return finish_profile(std::vector<double>(n, 1.0));
}

double design_effect_adjustment(double neff, double k_eff, double r_bar) {
    if (!(neff > 0.0)) throw InvalidInput("design_effect_adjustment: neff must be > 0");
    if (!(k_eff >= 1.0)) throw InvalidInput("design_effect_adjustment: k_eff must be >= 1");
    if (!(r_bar >= 0.0 && r_bar <= 1.0))
        throw InvalidInput("design_effect_adjustment: r_bar must lie in [0, 1]");
    return neff / (1.0 + (k_eff - 1.0) * r_bar);
}

double bounding_box_diagonal(const std::vector<Point2>& pts) {
    if (pts.empty()) return 0.0;
    double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
    for (const auto& p : pts) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double dx = xmax - xmin, dy = ymax - ymin;
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace wbcp
