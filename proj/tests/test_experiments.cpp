#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "wbcp/errors.hpp"
#include "wbcp/experiments.hpp"
#include "wbcp/rng.hpp"
#include "wbcp/stats.hpp"
#include "wbcp/validation.hpp"

using namespace wbcp;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentData small_synthetic(std::size_t n, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    return experiment_data_from(generate_dataset(cfg));
}

}  // namespace

TEST_CASE("coverage counting") {
    const std::vector<Interval> ivs = {{0, 1}, {0, 1}, {0, 1}, {0, 1}};
    CHECK(coverage(ivs, {0.5, 0.2, 0.9, 1.0}) == 1.0);
    CHECK(coverage(ivs, {2.0, -1.0, 5.0, 1.5}) == 0.0);
    CHECK(coverage(ivs, {0.5, 0.6, 2.0, -3.0}) == 0.5);
    const auto inf = prediction_interval(0.0, std::numeric_limits<double>::infinity());
    CHECK(coverage({inf}, {1e300}) == 1.0);
    CHECK_THROWS_AS(coverage(ivs, {1.0}), InvalidInput);
}

TEST_CASE("sigma_noise_correlation") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    CHECK(sigma_noise_correlation(x, x) == doctest::Approx(1.0));
    CHECK(sigma_noise_correlation(x, neg) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(sigma_noise_correlation({1, 1, 1, 1, 1}, x), ConstantField);
}

TEST_CASE("ingest_csv schemas") {
    SUBCASE("score-only minimal file") {
        const auto p = write_temp("wbcp_t1.csv", "id,score\n1,0.5\n2,0.25\n3,1.5\n");
        const auto data = ingest_csv(p);
        CHECK(data.calibration.size() == 3);
        CHECK(data.test.empty());
        std::remove(p.c_str());
    }
    SUBCASE("prediction columns become absolute residuals") {
        const auto p = write_temp("wbcp_t2.csv",
                                  "id,y_true,y_hat\n1,3.0,2.0\n2,-1.0,1.5\n");
        const auto data = ingest_csv(p);
        CHECK(data.calibration.records()[0].score == doctest::Approx(1.0));
        CHECK(data.calibration.records()[1].score == doctest::Approx(2.5));
        std::remove(p.c_str());
    }
    SUBCASE("split column routes rows") {
        const auto p = write_temp(
            "wbcp_t3.csv",
            "id,x,y,y_true,y_hat,split\n1,0,0,1.0,1.1,cal\n2,1,1,2.0,1.5,test\n3,2,2,0,0,cal\n");
        const auto data = ingest_csv(p);
        CHECK(data.calibration.size() == 2);
        REQUIRE(data.test.size() == 1);
        CHECK(data.test[0].id == 2);
        CHECK(data.test[0].score == doctest::Approx(0.5));
        CHECK(data.test[0].center == doctest::Approx(1.5));
        CHECK(data.test[0].truth == doctest::Approx(2.0));
        std::remove(p.c_str());
    }
    SUBCASE("malformed row cites its line number") {
        const auto p = write_temp("wbcp_t4.csv",
                                  "id,score\n1,0.1\n2,0.2\n3,0.3\n4,0.4\n5,0.5\n6,0.6\n7,oops\n");
        try {
            ingest_csv(p);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("line 8") != std::string::npos);
        }
        std::remove(p.c_str());
    }
    SUBCASE("unknown header / bad split / non-finite / duplicate id") {
        const auto p1 = write_temp("wbcp_t5.csv", "id,value\n1,2\n");
        CHECK_THROWS_AS(ingest_csv(p1), SchemaError);
        const auto p2 = write_temp("wbcp_t6.csv", "id,score,split\n1,0.5,maybe\n");
        CHECK_THROWS_AS(ingest_csv(p2), SchemaError);
        const auto p3 = write_temp("wbcp_t7.csv", "id,score\n1,nan\n");
        CHECK_THROWS_AS(ingest_csv(p3), NonFiniteValue);
        const auto p4 = write_temp("wbcp_t8.csv", "id,score\n1,0.5\n1,0.7\n");
        CHECK_THROWS_AS(ingest_csv(p4), SchemaError);
        for (const auto* p : {&p1, &p2, &p3, &p4}) std::remove(p->c_str());
    }
}

TEST_CASE("run_variant basics") {
    auto data = small_synthetic(240, 99);
    ExperimentConfig cfg;
    cfg.mc_samples = 200;
    cfg.threads = 1;

    SUBCASE("geo variant on location-free data raises MissingLocations") {
        std::vector<CalibrationRecord> recs = {{0.5, std::nullopt, 0}, {0.7, std::nullopt, 1}};
        ExperimentData flat{CalibrationSet(std::move(recs)),
                            {TestRecord{9, std::nullopt, 0.4, 0.0, 0.4, std::nullopt}}};
        MethodVariant geo{Method::GeoCP, cfg.beta, cfg.h, cfg.h0, cfg.k_neighbors};
        CHECK_THROWS_AS(run_variant(geo, flat, cfg), MissingLocations);
        MethodVariant plain{Method::StandardCP, cfg.beta, cfg.h, cfg.h0, cfg.k_neighbors};
        CHECK_NOTHROW(run_variant(plain, flat, cfg));
    }

    SUBCASE("BQCP equals a uniform-weight WBCP run") {
        MethodVariant bqcp{Method::BQCP, cfg.beta, cfg.h, cfg.h0, cfg.k_neighbors};
        const auto res = run_variant(bqcp, data, cfg);
        const auto tp = bqcp_threshold(data.calibration, 1.0 - cfg.alpha, cfg.mc_samples,
                                       mix_seed(mix_seed(cfg.seed, 102), 0));
        const double expect = hpd_threshold(tp, cfg.beta);
        for (const auto& pr : res.points) CHECK(pr.threshold == expect);
        CHECK(*res.points[0].neff == static_cast<double>(data.calibration.size()));
    }

    SUBCASE("results are identical across worker counts") {
        MethodVariant geobcp{Method::GeoBCP, cfg.beta, cfg.h, cfg.h0, cfg.k_neighbors};
        cfg.threads = 1;
        const auto serial = run_variant(geobcp, data, cfg);
        cfg.threads = 8;
        const auto parallel = run_variant(geobcp, data, cfg);
        REQUIRE(serial.points.size() == parallel.points.size());
        for (std::size_t i = 0; i < serial.points.size(); ++i) {
            CHECK(serial.points[i].threshold == parallel.points[i].threshold);
            CHECK(*serial.points[i].sigma_post == *parallel.points[i].sigma_post);
        }
        CHECK(serial.coverage == parallel.coverage);
    }
}

TEST_CASE("harness invariants over seeds") {
    // beta-monotone conservatism, median recovery, width ordering. The
    // bandwidth is chosen so n_eff sits near the default-run scale (~75);
    // median recovery is an asymptotic statement and needs moderate n_eff.
    ExperimentConfig cfg;
    cfg.mc_samples = 200;
    cfg.threads = 1;
    cfg.h = 2.5;
    std::size_t beta_violations = 0;
    double recovered = 0.0, total_points = 0.0;

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto data = small_synthetic(300, 1000 + seed);
        cfg.seed = seed;

        MethodVariant geocp{Method::GeoCP, cfg.beta, cfg.h, cfg.h0, cfg.k_neighbors};
        MethodVariant hi{Method::GeoBCP, 0.9, cfg.h, cfg.h0, cfg.k_neighbors};
        MethodVariant lo{Method::GeoBCP, 0.5, cfg.h, cfg.h0, cfg.k_neighbors};
        const auto r_geocp = run_variant(geocp, data, cfg);
        const auto r_hi = run_variant(hi, data, cfg);
        const auto r_lo = run_variant(lo, data, cfg);

        if (r_hi.coverage < r_lo.coverage) ++beta_violations;
        CHECK(r_hi.mean_width >= r_geocp.mean_width);

        // Median recovery: beta = 0.5 thresholds within one score spacing
        // (the maximum gap between consecutive sorted scores) of the
        // weighted quantile for nearly all points.
        const QuantileLevel level(cfg.alpha);
        for (std::size_t i = 0; i < data.test.size(); ++i) {
            const auto profile =
                profile_from_kernel(*data.test[i].location, data.calibration,
                                    KernelConfig{FixedBandwidth{cfg.h}});
            const auto sc = sort_with_weights(data.calibration, profile.normalized);
            const auto wq = weighted_quantile(sc, level.q);
            const double spacing = max_score_spacing(sc);
            if (std::fabs(r_lo.points[i].threshold - wq.threshold) <= spacing + 1e-12)
                recovered += 1.0;
            total_points += 1.0;
        }
    }
    CHECK(beta_violations <= 1);
    CHECK(recovered / total_points >= 0.95);
}

TEST_CASE("emit_report layout and determinism") {
    auto data = small_synthetic(200, 5);
    ExperimentConfig cfg;
    cfg.mc_samples = 100;
    cfg.threads = 1;
    cfg.sample_dump_ids = {data.test[0].id};
    const auto report = run_experiment(default_variants(cfg), data, cfg);

    const auto dir1 = (fs::temp_directory_path() / "wbcp_rep1").string();
    const auto dir2 = (fs::temp_directory_path() / "wbcp_rep2").string();
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    const auto files1 = emit_report(report, dir1);
    const auto files2 = emit_report(report, dir2);
    REQUIRE(files1.size() == files2.size());
    for (std::size_t i = 0; i < files1.size(); ++i)
        CHECK(slurp(files1[i]) == slurp(files2[i]));

    const auto summary = slurp((fs::path(dir1) / "summary.csv").string());
    std::stringstream ss(summary);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "method,coverage,mean_width,mean_neff,mean_sigma_post");
    const char* expected[] = {"StandardCP", "BQCP",     "GeoCP",
                              "GeoBCP",     "AdaGeoCP", "AdaGeoBCP"};
    for (const char* name : expected) {
        REQUIRE(std::getline(ss, line));
        CHECK(line.substr(0, std::string(name).size()) == name);
    }

    // Per-point file has one row per test point.
    const auto points = slurp((fs::path(dir1) / "points_GeoBCP.csv").string());
    const auto rows = static_cast<std::size_t>(
        std::count(points.begin(), points.end(), '\n'));
    CHECK(rows == data.test.size() + 1);

    CHECK(fs::exists(fs::path(dir1) /
                     ("samples_GeoBCP_" + std::to_string(data.test[0].id) + ".csv")));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("synthetic csv roundtrip") {
    SyntheticConfig cfg;
    cfg.n = 150;
    cfg.seed = 321;
    const auto data = generate_dataset(cfg);
    const auto path = (fs::temp_directory_path() / "wbcp_synth.csv").string();
    write_synthetic_csv(data, path);
    const auto loaded = ingest_csv(path);
    std::size_t n_cal = 0;
    for (auto f : data.is_calibration) n_cal += f;
    CHECK(loaded.calibration.size() == n_cal);
    CHECK(loaded.test.size() == data.scores.size() - n_cal);
    // Scores recomputed from y columns agree with the generator's identity
    // up to roundoff in |y - y_hat|.
    const auto& rec = loaded.calibration.records()[0];
    CHECK(rec.score == doctest::Approx(data.scores[static_cast<std::size_t>(rec.id)])
                           .epsilon(1e-12));
    std::remove(path.c_str());
}
