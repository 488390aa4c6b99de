#pragma once

#include <cstdint>
#include <vector>

#include "wbcp/core.hpp"
#include "wbcp/weights.hpp"

namespace wbcp {

// Dirichlet shapes alpha_i = neff * w_(i) in score-sorted order, zero
// (pruned) entries removed. alpha0 == neff.
struct DirichletParams {
    std::vector<double> alphas;
    double alpha0 = 0.0;
};

DirichletParams make_dirichlet_params(const SortedCalibration& sc,
                                      const WeightProfile& profile);

// Row-major block of Monte Carlo simplex draws.
struct DirichletSamples {
    std::size_t draws = 0;
    std::size_t dim = 0;
    std::vector<double> data;  // draws * dim

    const double* row(std::size_t m) const { return data.data() + m * dim; }
};

// Independent Gamma(alpha_i, 1) draws normalized to the simplex; shapes
// below the boost cutoff use Gamma(alpha+1) with the power correction.
// Deterministic per seed.
DirichletSamples sample_dirichlet(const DirichletParams& params, std::size_t draws,
                                  std::uint64_t seed);

// The per-query threshold posterior: M Monte Carlo thresholds (each one of
// the sorted scores), their mean and spread, plus the deterministic weighted
// quantile they concentrate around.
struct ThresholdPosterior {
    std::vector<double> samples;         // draw order
    std::vector<double> sorted_samples;  // ascending copy for quantile reads
    double mean = 0.0;
    double sigma_post = 0.0;  // sample std, M-1 divisor
    double neff = 0.0;
    double wcp_threshold = 0.0;
    std::size_t wcp_index = 0;  // 1-based k*
};

// Algorithm: per draw, sample Dirichlet spacings over sorted scores and take
// the first score index at which the cumulative mass reaches q (final
// partial sum clamped to 1). Bitwise reproducible for fixed (seed, inputs).
// `profile` must be the profile whose normalized weights built `sc`.
ThresholdPosterior threshold_posterior(const SortedCalibration& sc,
                                       const WeightProfile& profile, double q,
                                       std::size_t draws, std::uint64_t seed);

// Upper beta-quantile of the threshold samples: the ceil(beta*M)-th order
// statistic. beta = 1 returns the maximum sample.
double hpd_threshold(const ThresholdPosterior& tp, double beta);

// Uniform-weight special case (shapes all exactly 1); shares the same
// sampling path as threshold_posterior, so a uniform profile under the same
// seed reproduces it sample for sample.
ThresholdPosterior bqcp_threshold(const CalibrationSet& cal, double q,
                                  std::size_t draws, std::uint64_t seed);

// Augmented (n+1)-component model behind the stochastic loss upper bound:
// sorted losses, the bound B appended as the final "loss", and shapes
// neff * w_(i) with a configurable tail shape (default neff / (n+1)).
struct LossBoundModel {
    std::vector<double> sorted_losses;  // ascending, length n
    double upper_bound = 0.0;           // B >= max loss
    std::vector<double> alphas;         // length n+1, zeros allowed (pruned)
};

// weights_by_loss must align with sorted_losses; alpha_tail <= 0 selects the
// default neff/(n+1). Throws BoundViolation when B < max loss.
LossBoundModel make_loss_bound_model(std::vector<double> sorted_losses,
                                     const std::vector<double>& weights_by_loss,
                                     double neff, double upper_bound,
                                     double alpha_tail = -1.0);

// M draws of L_w^+ = sum_i U_i * loss_(i) over the n+1 components.
std::vector<double> loss_upper_bound(const LossBoundModel& model, std::size_t draws,
                                     std::uint64_t seed);

// Fraction of loss samples <= alpha.
double risk_control_probability(const std::vector<double>& loss_samples, double alpha);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double width() const { return hi - lo; }
};

// [center - half_width, center + half_width]; +inf yields the whole line.
Interval prediction_interval(double center, double half_width);

}  // namespace wbcp
