#pragma once

#include <cstdint>
#include <vector>

#include "wbcp/core.hpp"

namespace wbcp {

// Spatial benchmark layout: a [0, 20]^2 domain whose lower-left [0, 12]^2
// subregion receives 70% of the points, Gaussian-random-field noise with an
// RBF kernel, and a piecewise noise amplitude.
struct SyntheticConfig {
    std::size_t n = 3000;
    double domain_size = 20.0;
    double dense_size = 12.0;
    double dense_fraction = 0.7;
    double grf_length_scale = 2.0;
    double split_fraction = 0.5;  // calibration share
    std::uint64_t seed = 42;
    bool zero_noise = false;           // diagnostic switch: eps == 0
    std::size_t max_grf_points = 3000;  // dense factorization cap

    void validate() const;
};

struct SyntheticDataset {
    std::vector<Point2> locations;
    std::vector<double> truth;        // y(s)
    std::vector<double> predictions;  // y(s) + sigma(s) * eps(s)
    std::vector<double> noise;        // eps(s)
    std::vector<double> amplitudes;   // sigma(s)
    std::vector<double> scores;       // sigma(s) * |eps(s)|, exact
    std::vector<std::uint8_t> is_calibration;
    double morans_i_noise = 0.0;  // NaN when zero_noise is set
};

std::vector<Point2> sample_locations(const SyntheticConfig& cfg);

// y(s) = sin(x/3) + cos(y) + 0.1 x
double true_function(const Point2& s);

// 0.5 in the dense low-noise quadrant (x<10, y<10), 2.0 in the sparse
// high-noise quadrant (x>10, y>10), 1.0 otherwise; boundary lines fall into
// the "otherwise" branch.
double noise_amplitude(const Point2& s);

// One draw of a zero-mean Gaussian random field with covariance
// exp(-||si-sj||^2 / (2 l^2)), via dense Cholesky with 1e-8 diagonal jitter.
std::vector<double> sample_grf(const std::vector<Point2>& locations,
                               double length_scale, std::uint64_t seed);

SyntheticDataset generate_dataset(const SyntheticConfig& cfg);

// Moran's I with row-standardized binary k-nearest-neighbor weights.
double morans_i(const std::vector<double>& values,
                const std::vector<Point2>& locations, int k_neighbors);

// Calibration half of the dataset as a CalibrationSet (ids are row indices).
CalibrationSet calibration_from(const SyntheticDataset& data);

}  // namespace wbcp
