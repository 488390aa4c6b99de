#include "wbcp/synthetic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wbcp/errors.hpp"
#include "wbcp/rng.hpp"

namespace wbcp {

namespace {
// Fixed substream ids for the generation pipeline.
constexpr std::uint64_t kLocationStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kSplitStream = 3;
}  // namespace

void SyntheticConfig::validate() const {
    if (n == 0) throw InvalidInput("SyntheticConfig: n must be >= 1");
    if (!(domain_size > 0.0)) throw InvalidInput("SyntheticConfig: domain_size must be > 0");
    if (!(dense_size > 0.0) || dense_size > domain_size)
        throw InvalidInput("SyntheticConfig: dense region must sit inside the domain");
    if (!(dense_fraction >= 0.0 && dense_fraction <= 1.0))
        throw InvalidInput("SyntheticConfig: dense_fraction must lie in [0, 1]");
    if (!(grf_length_scale > 0.0))
        throw InvalidInput("SyntheticConfig: grf_length_scale must be > 0");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw InvalidInput("SyntheticConfig: split_fraction must lie in (0, 1)");
    if (n > max_grf_points && !zero_noise)
        throw InvalidInput("SyntheticConfig: n exceeds the dense-factorization cap");
}

std::vector<Point2> sample_locations(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, kLocationStream));
    const auto n_dense =
        static_cast<std::size_t>(std::floor(cfg.dense_fraction * static_cast<double>(cfg.n)));
    std::vector<Point2> pts;
    pts.reserve(cfg.n);
    for (std::size_t i = 0; i < n_dense; ++i)
        pts.push_back({rng.uniform(0.0, cfg.dense_size), rng.uniform(0.0, cfg.dense_size)});
    for (std::size_t i = n_dense; i < cfg.n; ++i)
        pts.push_back({rng.uniform(0.0, cfg.domain_size), rng.uniform(0.0, cfg.domain_size)});
    return pts;
}

double true_function(const Point2& s) {
    return std::sin(s.x / 3.0) + std::cos(s.y) + 0.1 * s.x;
}

double noise_amplitude(const Point2& s) {
    if (s.x < 10.0 && s.y < 10.0) return 0.5;
    if (s.x > 10.0 && s.y > 10.0) return 2.0;
    return 1.0;
}

std::vector<double> sample_grf(const std::vector<Point2>& locations, double length_scale,
                               std::uint64_t seed) {
    if (locations.empty()) throw InvalidInput("sample_grf: no locations");
    if (!(length_scale > 0.0)) throw InvalidInput("sample_grf: length scale must be > 0");
    const auto n = static_cast<Eigen::Index>(locations.size());
    const double denom = 2.0 * length_scale * length_scale;

    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cov(i, i) = 1.0 + 1e-8;  // jitter
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = distance(locations[static_cast<std::size_t>(i)],
                                      locations[static_cast<std::size_t>(j)]);
            const double v = std::exp(-d * d / denom);
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw FactorizationFailure("sample_grf: jittered covariance is not positive definite");

    Rng rng(seed);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    const Eigen::VectorXd eps = llt.matrixL() * z;
    return std::vector<double>(eps.data(), eps.data() + n);
}

SyntheticDataset generate_dataset(const SyntheticConfig& cfg) {
    cfg.validate();
    SyntheticDataset data;
    data.locations = sample_locations(cfg);
    const std::size_t n = data.locations.size();

    data.noise = cfg.zero_noise
                     ? std::vector<double>(n, 0.0)
                     : sample_grf(data.locations, cfg.grf_length_scale,
                                  mix_seed(cfg.seed, kNoiseStream));

    data.truth.resize(n);
    data.predictions.resize(n);
    data.amplitudes.resize(n);
    data.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = true_function(data.locations[i]);
        const double sigma = noise_amplitude(data.locations[i]);
        data.truth[i] = y;
        data.amplitudes[i] = sigma;
        data.predictions[i] = y + sigma * data.noise[i];
        data.scores[i] = sigma * std::fabs(data.noise[i]);
    }

    // Random half split: Fisher-Yates on indices, first chunk is calibration.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(cfg.seed, kSplitStream));
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(order[i], order[j]);
    }
    const auto n_cal =
        static_cast<std::size_t>(std::floor(cfg.split_fraction * static_cast<double>(n)));
    data.is_calibration.assign(n, 0);
    for (std::size_t i = 0; i < n_cal && i < n; ++i) data.is_calibration[order[i]] = 1;

    data.morans_i_noise = cfg.zero_noise
                              ? std::numeric_limits<double>::quiet_NaN()
                              : morans_i(data.noise, data.locations, 8);
    return data;
}

double morans_i(const std::vector<double>& values, const std::vector<Point2>& locations,
                int k_neighbors) {
    const std::size_t n = values.size();
    if (n != locations.size()) throw InvalidInput("morans_i: size mismatch");
    if (n < 3) throw InvalidInput("morans_i: need at least 3 points");
    if (k_neighbors < 1 || static_cast<std::size_t>(k_neighbors) >= n)
        throw InvalidInput("morans_i: k must lie in [1, n-1]");

    const double vbar = std::accumulate(values.begin(), values.end(), 0.0) /
                        static_cast<double>(n);
    std::vector<double> z(n);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = values[i] - vbar;
        denom += z[i] * z[i];
    }
    if (denom == 0.0) throw ConstantField("morans_i: values are constant");

    // Row-standardized binary kNN weights: S0 = n, so the n/S0 prefactor is 1.
    const auto k = static_cast<std::size_t>(k_neighbors);
    std::vector<std::pair<double, std::size_t>> dists(n);
    double numer = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            dists[j] = {j == i ? std::numeric_limits<double>::infinity()
                               : distance(locations[i], locations[j]),
                        j};
        std::nth_element(dists.begin(), dists.begin() + (k - 1), dists.end());
        double neigh_sum = 0.0;
        for (std::size_t t = 0; t < k; ++t) neigh_sum += z[dists[t].second];
        numer += z[i] * neigh_sum / static_cast<double>(k);
    }
    return numer / denom;
}

CalibrationSet calibration_from(const SyntheticDataset& data) {
    std::vector<CalibrationRecord> recs;
    for (std::size_t i = 0; i < data.scores.size(); ++i) {
        if (data.is_calibration[i])
            recs.push_back({data.scores[i], data.locations[i],
                            static_cast<std::int64_t>(i)});
    }
    return CalibrationSet(std::move(recs));
}

}  // namespace wbcp
