#include "wbcp/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "wbcp/errors.hpp"

namespace wbcp {

double distance(const Point2& a, const Point2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

CalibrationSet::CalibrationSet(std::vector<CalibrationRecord> records)
    : records_(std::move(records)) {
    if (records_.empty()) throw InvalidInput("CalibrationSet: needs at least one record");
    std::unordered_set<std::int64_t> ids;
    ids.reserve(records_.size());
    has_locations_ = true;
    for (const auto& r : records_) {
        if (!std::isfinite(r.score) || r.score < 0.0)
            throw InvalidInput("CalibrationSet: scores must be finite and >= 0");
        if (r.location) {
            if (!std::isfinite(r.location->x) || !std::isfinite(r.location->y))
                throw InvalidInput("CalibrationSet: non-finite coordinates");
        } else {
            has_locations_ = false;
        }
        if (!ids.insert(r.id).second)
            throw InvalidInput("CalibrationSet: duplicate id " + std::to_string(r.id));
    }
}

std::vector<double> CalibrationSet::scores() const {
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.score);
    return out;
}

std::vector<Point2> CalibrationSet::locations() const {
    if (!has_locations_)
        throw MissingLocations("CalibrationSet: some records lack coordinates");
    std::vector<Point2> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(*r.location);
    return out;
}

QuantileLevel::QuantileLevel(double alpha_level) : alpha(alpha_level), q(1.0 - alpha_level) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidInput("QuantileLevel: alpha must lie in (0, 1)");
}

SortedCalibration sort_with_weights(const CalibrationSet& cal,
                                    const std::vector<double>& raw_weights) {
    const auto& recs = cal.records();
    const std::size_t n = recs.size();
    if (raw_weights.size() != n)
        throw InvalidInput("sort_with_weights: weight count does not match record count");
    bool all_zero = true;
    for (double w : raw_weights) {
        if (std::isnan(w)) throw InvalidInput("sort_with_weights: NaN weight");
        if (!std::isfinite(w) || w < 0.0)
            throw InvalidInput("sort_with_weights: weights must be finite and >= 0");
        if (w > 0.0) all_zero = false;
    }
    if (all_zero) throw WeightDegeneracy("sort_with_weights: all weights are zero");

    SortedCalibration sc;
    sc.permutation_.resize(n);
    std::iota(sc.permutation_.begin(), sc.permutation_.end(), std::size_t{0});
    std::sort(sc.permutation_.begin(), sc.permutation_.end(),
              [&recs](std::size_t a, std::size_t b) {
                  if (recs[a].score != recs[b].score) return recs[a].score < recs[b].score;
                  return recs[a].id < recs[b].id;
              });

    sc.scores_.resize(n);
    sc.weights_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        sc.scores_[i] = recs[sc.permutation_[i]].score;
        sc.weights_[i] = raw_weights[sc.permutation_[i]];
    }

    sc.uniform_ =
        std::all_of(sc.weights_.begin(), sc.weights_.end(),
                    [&](double w) { return w == sc.weights_.front(); });

    sc.cum_weights_.resize(n);
    if (sc.uniform_) {
        const double inv_n = 1.0 / static_cast<double>(n);
        std::fill(sc.weights_.begin(), sc.weights_.end(), inv_n);
        for (std::size_t j = 0; j < n; ++j)
            sc.cum_weights_[j] = static_cast<double>(j + 1) / static_cast<double>(n);
    } else {
        // Sum in sorted order so that record permutations with identical
        // sorted content produce bit-identical results.
        double total = 0.0;
        for (double w : sc.weights_) total += w;
        for (double& w : sc.weights_) w /= total;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += sc.weights_[j];
            sc.cum_weights_[j] = acc;
        }
        if (std::fabs(sc.cum_weights_.back() - 1.0) > 1e-12)
            throw InvalidInput("sort_with_weights: normalized weights do not sum to 1");
    }
    sc.cum_weights_.back() = 1.0;
    return sc;
}

double standard_quantile(const CalibrationSet& cal, const QuantileLevel& level) {
    const std::size_t n = cal.size();
    const double raw_index = std::ceil((1.0 - level.alpha) * static_cast<double>(n + 1));
    if (raw_index > static_cast<double>(n))
        return std::numeric_limits<double>::infinity();
    auto scores = cal.scores();
    std::sort(scores.begin(), scores.end());
    const std::size_t k = static_cast<std::size_t>(raw_index);
    return scores[k - 1];
}

WeightedQuantileResult weighted_quantile(const SortedCalibration& sc, double q) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidInput("weighted_quantile: q must lie in (0, 1)");
    const auto& p = sc.cum_weights();
    const auto it = std::lower_bound(p.begin(), p.end(), q);
    const std::size_t j = static_cast<std::size_t>(it - p.begin());  // < n since p_n = 1
    return WeightedQuantileResult{sc.scores()[j], j + 1};
}

}  // namespace wbcp
