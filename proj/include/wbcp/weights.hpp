#pragma once

#include <variant>
#include <vector>

#include "wbcp/core.hpp"

namespace wbcp {

// Normalized weights below this are dropped (set to zero) before Dirichlet
// parameters are formed; Gamma sampling at near-zero shapes is numerically
// degenerate and the effect on n_eff sits below measurement tolerance.
inline constexpr double kWeightPruneThreshold = 1e-12;

// Importance-weight view of one test query: raw kernel/importance weights,
// pruned + renormalized weights, and the Kish effective sample size of the
// latter. `uniform` records that the raw weights were exactly equal, in
// which case neff == n exactly and Dirichlet shapes are exactly 1.
struct WeightProfile {
    std::vector<double> raw;
    std::vector<double> normalized;
    double neff = 0.0;
    bool uniform = false;
};

struct FixedBandwidth {
    double h = 1.0;
};

// h(s) = max(h_min, h0 * lower-median of the k smallest distances).
// h_min <= 0 requests the default floor of 1e-6 times the calibration
// bounding-box diagonal.
struct AdaptiveBandwidth {
    double h0 = 1.0;
    int k = 25;
    double h_min = 0.0;
};

// Gaussian kernel is the only kind; the bandwidth is fixed or adaptive.
struct KernelConfig {
    std::variant<FixedBandwidth, AdaptiveBandwidth> bandwidth = FixedBandwidth{};
};

// Kish effective sample size (sum w)^2 / sum w^2. Invariant to rescaling.
// Throws WeightDegeneracy when every weight is zero.
double kish_neff(const std::vector<double>& raw_weights);

// w_i = exp(-||s - s_i||^2 / (2 h^2)), each in (0, 1].
std::vector<double> gaussian_kernel_weights(const Point2& test_loc,
                                            const std::vector<Point2>& calib_locs,
                                            double h);

// Lower median of the k nearest distances, scaled by h0 and floored at h_min.
double adaptive_bandwidth(const Point2& test_loc, const std::vector<Point2>& calib_locs,
                          double h0, int k, double h_min);

// Kernel weights for one test location against a located calibration set:
// resolves the bandwidth, evaluates the kernel (rescaled by its maximum so
// remote queries cannot underflow to an all-zero profile), prunes, and
// attaches neff. Throws MissingLocations when records lack coordinates.
WeightProfile profile_from_kernel(const Point2& test_loc, const CalibrationSet& calib,
                                  const KernelConfig& cfg);

// Builds the pruned + normalized profile from externally supplied raw
// importance weights (e.g. estimated likelihood ratios).
WeightProfile profile_from_raw(const std::vector<double>& raw_weights);

// Exact-uniform profile over n points: neff = n, shapes = 1.
WeightProfile uniform_profile(std::size_t n);

// Optional diagnostic: neff / (1 + (k_eff - 1) * r_bar). Never applied
// automatically.
double design_effect_adjustment(double neff, double k_eff, double r_bar);

double bounding_box_diagonal(const std::vector<Point2>& pts);

}  // namespace wbcp
