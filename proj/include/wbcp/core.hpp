#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace wbcp {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

// One calibration observation: a nonconformity score, an optional 2D
// location and a unique id. Scores must be finite and >= 0.
struct CalibrationRecord {
    double score = 0.0;
    std::optional<Point2> location;
    std::int64_t id = 0;
};

// Immutable pool of calibration records. Validates invariants on
// construction: n >= 1, finite nonnegative scores, unique ids.
class CalibrationSet {
public:
    explicit CalibrationSet(std::vector<CalibrationRecord> records);

    const std::vector<CalibrationRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool has_locations() const { return has_locations_; }

    std::vector<double> scores() const;
    // Throws MissingLocations unless every record carries coordinates.
    std::vector<Point2> locations() const;

private:
    std::vector<CalibrationRecord> records_;
    bool has_locations_ = false;
};

struct QuantileLevel {
    double alpha;
    double q;  // 1 - alpha
    explicit QuantileLevel(double alpha_level);
};

// Scores sorted ascending (ties broken by id), the weight vector carried
// along through the sorting permutation and normalized to sum 1, and the
// cumulative weights p_j with the final entry clamped to exactly 1.
// Immutable; safe to share across threads.
class SortedCalibration {
public:
    const std::vector<double>& scores() const { return scores_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& cum_weights() const { return cum_weights_; }
    // Maps sorted position -> index into the original record vector.
    const std::vector<std::size_t>& permutation() const { return permutation_; }
    std::size_t size() const { return scores_.size(); }
    // True when the raw weights were exactly equal, in which case the
    // normalized weights are exactly 1/n and p_j = (j+1)/n by division.
    bool uniform() const { return uniform_; }

    friend SortedCalibration sort_with_weights(const CalibrationSet&,
                                               const std::vector<double>&);

private:
    SortedCalibration() = default;
    std::vector<double> scores_;
    std::vector<double> weights_;
    std::vector<double> cum_weights_;
    std::vector<std::size_t> permutation_;
    bool uniform_ = false;
};

// Sorts scores ascending (stable in id for ties) and normalizes the aligned
// weights. Throws InvalidInput on NaN/negative weights or length mismatch,
// WeightDegeneracy when all weights are zero.
SortedCalibration sort_with_weights(const CalibrationSet& cal,
                                    const std::vector<double>& raw_weights);

// Split-CP threshold: the ceil((1-alpha)(n+1))-th order statistic, or +inf
// when that index exceeds n.
double standard_quantile(const CalibrationSet& cal, const QuantileLevel& level);

struct WeightedQuantileResult {
    double threshold = 0.0;
    std::size_t index = 0;  // k* = min{j : p_j >= q}, 1-based
};

// Weighted split-CP threshold at level q in (0, 1). p_n is treated as
// exactly 1, so the crossing index always exists.
WeightedQuantileResult weighted_quantile(const SortedCalibration& sc, double q);

}  // namespace wbcp
