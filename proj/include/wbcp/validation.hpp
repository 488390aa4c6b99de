#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wbcp/core.hpp"

namespace wbcp {

// One measured quantity inside a check: value, the threshold it is compared
// against, and the comparison that must hold.
struct CheckMetric {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string comparator;  // "<=", ">=", "in" (value is distance), "=="
    bool pass = false;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    std::vector<CheckMetric> metrics;
    std::string note;
};

// Knobs for the empirical theorem checks. Defaults complete in a few
// minutes on one core; every check is deterministic per seed.
struct OracleConfig {
    std::uint64_t seed = 42;
    double alpha = 0.1;
    double beta = 0.9;

    // variance matching + Beta marginal
    std::size_t mc_variance = 200000;
    double variance_rel_tol = 0.02;
    std::size_t mc_ks = 100000;
    double ks_level = 0.01;

    // concentration rate
    std::vector<double> neff_targets = {10.0, 30.0, 100.0, 300.0, 1000.0};
    std::size_t concentration_n = 2000;
    std::size_t mc_concentration = 20000;
    double slope_lo = -0.65;
    double slope_hi = -0.35;
    double bound_constant = 8.0;        // asserted
    double bound_constant_tight = 2.0;  // flagged only

    // limit consistency
    double uniform_alpha_tol = 1e-6;
    double singular_neff_tol = 1e-6;
    std::size_t mc_limits = 2000;

    // conditional coverage
    std::size_t coverage_replicates = 300;
    std::size_t coverage_n = 100;
    std::size_t mc_coverage = 2000;
    double coverage_tol_hpd = 0.02;
    double coverage_tol_median = 0.015;

    // dominance construction
    std::size_t dominance_instances = 20;
    std::size_t mc_dominance = 2000;

    // tail bound
    std::size_t tail_seeds = 10;
    std::size_t mc_tail = 50000;

    // adaptive regularization
    std::size_t grid_dim = 50;
    std::size_t adaptive_n = 1500;
    double adaptive_h0 = 1.0;
    int adaptive_k = 25;
    double neff_floor = 2.0;
    double spike_factor = 10.0;
};

// Largest gap between consecutive sorted scores.
double max_score_spacing(const SortedCalibration& sc);

// Minimum normalized weight among indices {k*-1, k*, k*+1} (1-based,
// clamped to the valid range).
double boundary_min_weight(const SortedCalibration& sc, std::size_t k_star);

CheckResult check_variance_matching(const OracleConfig& cfg);
CheckResult check_concentration(const OracleConfig& cfg);
CheckResult check_limits(const OracleConfig& cfg);
CheckResult check_conditional_coverage(const OracleConfig& cfg);
CheckResult check_dominance_construction(const OracleConfig& cfg);
CheckResult check_tail_bound(const OracleConfig& cfg);
CheckResult check_adaptive_regularization(const OracleConfig& cfg);

// All seven checks in report order.
std::vector<CheckResult> run_all_checks(const OracleConfig& cfg);

std::string check_report_json(const std::vector<CheckResult>& results);

}  // namespace wbcp
