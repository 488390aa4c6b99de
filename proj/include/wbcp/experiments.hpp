#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wbcp/core.hpp"
#include "wbcp/posterior.hpp"
#include "wbcp/synthetic.hpp"

namespace wbcp {

// Benchmark variants. Frequentist rows (StandardCP, GeoCP, AdaGeoCP) emit a
// deterministic threshold; Bayesian rows (BQCP, GeoBCP, AdaGeoBCP) emit the
// beta-HPD threshold of the per-query posterior plus diagnostics.
enum class Method { StandardCP, BQCP, GeoCP, GeoBCP, AdaGeoCP, AdaGeoBCP };

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);
bool method_is_bayesian(Method m);
bool method_is_geo(Method m);
bool method_is_adaptive(Method m);

struct MethodVariant {
    Method method = Method::StandardCP;
    double beta = 0.9;  // Bayesian variants
    double h = 1.0;     // fixed-bandwidth variants
    double h0 = 0.5;    // adaptive variants
    int k = 25;         // adaptive variants
};

struct ExperimentConfig {
    double alpha = 0.1;
    double beta = 0.9;
    std::size_t mc_samples = 1000;
    double h = 1.0;
    double h0 = 0.5;
    int k_neighbors = 25;
    std::uint64_t seed = 42;
    unsigned threads = 0;  // 0: WBCP_THREADS env var, then hardware
    std::vector<double> beta_list = {0.25, 0.5, 0.75, 0.9, 0.95, 0.99};
    std::vector<std::int64_t> sample_dump_ids;
};

// One evaluation point: nonconformity score plus the interval center and
// ground truth used for coverage accounting. Score-only inputs use center 0
// and truth == score, which is the same coverage event.
struct TestRecord {
    std::int64_t id = 0;
    std::optional<Point2> location;
    double score = 0.0;
    double center = 0.0;
    double truth = 0.0;
    std::optional<double> amplitude;  // synthetic noise level, for diagnostics
};

struct ExperimentData {
    CalibrationSet calibration;
    std::vector<TestRecord> test;
};

struct PointResult {
    std::int64_t id = 0;
    std::optional<Point2> location;
    double threshold = 0.0;
    Interval interval;
    bool covered = false;
    std::optional<double> neff;
    std::optional<double> sigma_post;
    std::vector<double> hpd;      // aligned with config beta_list
    std::vector<double> samples;  // filled only for requested dump ids
};

struct VariantResult {
    MethodVariant variant;
    std::vector<PointResult> points;
    double coverage = 0.0;
    double mean_width = 0.0;
    std::optional<double> mean_neff;        // Bayesian rows only
    std::optional<double> mean_sigma_post;  // Bayesian rows only
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<VariantResult> variants;
    std::size_t n_calibration = 0;
    std::size_t n_test = 0;
};

// All six variants with parameters drawn from the config, in the canonical
// report order.
std::vector<MethodVariant> default_variants(const ExperimentConfig& cfg);

// Runs one variant over every test point. Deterministic for a fixed config
// seed regardless of worker count (per-point seeds are derived by index).
// Throws MissingLocations when a geographic variant meets location-free
// data.
VariantResult run_variant(const MethodVariant& variant, const ExperimentData& data,
                          const ExperimentConfig& cfg);

ExperimentReport run_experiment(const std::vector<MethodVariant>& variants,
                                const ExperimentData& data, const ExperimentConfig& cfg);

// Fraction of truths inside their interval; infinite intervals always cover.
double coverage(const std::vector<Interval>& intervals, const std::vector<double>& truths);

// Pearson correlation between per-point posterior spread and a known noise
// amplitude. Throws ConstantField when either input is constant.
double sigma_noise_correlation(const std::vector<double>& sigma_post,
                               const std::vector<double>& amplitudes);

// CSV schema (header required, comma separator, LF):
//   id,score | id,x,y,score | id,y_true,y_hat | id,x,y,y_true,y_hat
// each optionally followed by a trailing `split` column with values
// cal|test. Rows without a split column land in the calibration pool.
ExperimentData ingest_csv(const std::string& path);

void write_synthetic_csv(const SyntheticDataset& data, const std::string& path);
ExperimentData experiment_data_from(const SyntheticDataset& data);

// Writes summary.csv, summary.json, per-variant points_<method>.csv and the
// optional posterior dumps. Returns the paths written. Output is
// byte-deterministic for a fixed report.
std::vector<std::string> emit_report(const ExperimentReport& report,
                                     const std::string& out_dir);

unsigned resolve_thread_count(unsigned requested);

}  // namespace wbcp
