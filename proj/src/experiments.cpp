#include "wbcp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "wbcp/errors.hpp"
#include "wbcp/rng.hpp"
#include "wbcp/stats.hpp"
#include "wbcp/weights.hpp"

namespace wbcp {

namespace {

constexpr Method kCanonicalOrder[] = {Method::StandardCP, Method::BQCP,
                                      Method::GeoCP,      Method::GeoBCP,
                                      Method::AdaGeoCP,   Method::AdaGeoBCP};

std::uint64_t variant_stream(Method m) {
    switch (m) {
        case Method::StandardCP: return 101;
        case Method::BQCP: return 102;
        case Method::GeoCP: return 103;
        case Method::GeoBCP: return 104;
        case Method::AdaGeoCP: return 105;
        case Method::AdaGeoBCP: return 106;
    }
    return 100;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(error);
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::StandardCP: return "StandardCP";
        case Method::BQCP: return "BQCP";
        case Method::GeoCP: return "GeoCP";
        case Method::GeoBCP: return "GeoBCP";
        case Method::AdaGeoCP: return "AdaGeoCP";
        case Method::AdaGeoBCP: return "AdaGeoBCP";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    for (Method m : kCanonicalOrder)
        if (method_name(m) == name) return m;
    return std::nullopt;
}

bool method_is_bayesian(Method m) {
    return m == Method::BQCP || m == Method::GeoBCP || m == Method::AdaGeoBCP;
}

bool method_is_geo(Method m) { return m != Method::StandardCP && m != Method::BQCP; }

bool method_is_adaptive(Method m) {
    return m == Method::AdaGeoCP || m == Method::AdaGeoBCP;
}

std::vector<MethodVariant> default_variants(const ExperimentConfig& cfg) {
    std::vector<MethodVariant> out;
    for (Method m : kCanonicalOrder)
        out.push_back(MethodVariant{m, cfg.beta, cfg.h, cfg.h0, cfg.k_neighbors});
    return out;
}

unsigned resolve_thread_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("WBCP_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

VariantResult run_variant(const MethodVariant& variant, const ExperimentData& data,
                          const ExperimentConfig& cfg) {
    const QuantileLevel level(cfg.alpha);
    const std::size_t n_test = data.test.size();
    if (n_test == 0) throw InvalidInput("run_variant: empty test set");

    if (method_is_geo(variant.method)) {
        if (!data.calibration.has_locations())
            throw MissingLocations("run_variant: " + method_name(variant.method) +
                                   " needs calibration locations");
        for (const auto& t : data.test)
            if (!t.location)
                throw MissingLocations("run_variant: " + method_name(variant.method) +
                                       " needs test locations");
    }

    VariantResult result;
    result.variant = variant;
    result.points.resize(n_test);

    const std::uint64_t vseed = mix_seed(cfg.seed, variant_stream(variant.method));
    const bool wants_samples = !cfg.sample_dump_ids.empty();
    auto dump_requested = [&](std::int64_t id) {
        return wants_samples &&
               std::find(cfg.sample_dump_ids.begin(), cfg.sample_dump_ids.end(), id) !=
                   cfg.sample_dump_ids.end();
    };

    auto finish_point = [&](PointResult& pr, const TestRecord& t, double lambda) {
        pr.id = t.id;
        pr.location = t.location;
        pr.threshold = lambda;
        pr.interval = prediction_interval(t.center, lambda);
        pr.covered = pr.interval.contains(t.truth);
    };

    switch (variant.method) {
        case Method::StandardCP: {
            const double lambda = standard_quantile(data.calibration, level);
            for (std::size_t i = 0; i < n_test; ++i)
                finish_point(result.points[i], data.test[i], lambda);
            break;
        }
        case Method::BQCP: {
            // One global posterior shared by every test point.
            const auto tp =
                bqcp_threshold(data.calibration, level.q, cfg.mc_samples, mix_seed(vseed, 0));
            const double lambda = hpd_threshold(tp, variant.beta);
            std::vector<double> hpd;
            hpd.reserve(cfg.beta_list.size());
            for (double b : cfg.beta_list) hpd.push_back(hpd_threshold(tp, b));
            for (std::size_t i = 0; i < n_test; ++i) {
                auto& pr = result.points[i];
                finish_point(pr, data.test[i], lambda);
                pr.neff = tp.neff;
                pr.sigma_post = tp.sigma_post;
                pr.hpd = hpd;
                if (dump_requested(pr.id)) pr.samples = tp.samples;
            }
            break;
        }
        default: {
            KernelConfig kernel;
            if (method_is_adaptive(variant.method))
                kernel.bandwidth = AdaptiveBandwidth{variant.h0, variant.k, 0.0};
            else
                kernel.bandwidth = FixedBandwidth{variant.h};
            const bool bayesian = method_is_bayesian(variant.method);

            parallel_for(n_test, resolve_thread_count(cfg.threads), [&](std::size_t i) {
                const auto& t = data.test[i];
                auto& pr = result.points[i];
                const auto profile = profile_from_kernel(*t.location, data.calibration, kernel);
                const auto sc = sort_with_weights(data.calibration, profile.normalized);
                if (bayesian) {
                    const auto tp = threshold_posterior(sc, profile, level.q, cfg.mc_samples,
                                                        mix_seed(vseed, i));
                    finish_point(pr, t, hpd_threshold(tp, variant.beta));
                    pr.neff = tp.neff;
                    pr.sigma_post = tp.sigma_post;
                    pr.hpd.reserve(cfg.beta_list.size());
                    for (double b : cfg.beta_list) pr.hpd.push_back(hpd_threshold(tp, b));
                    if (dump_requested(t.id)) pr.samples = tp.samples;
                } else {
                    const auto wq = weighted_quantile(sc, level.q);
                    finish_point(pr, t, wq.threshold);
                    pr.neff = profile.neff;
                }
            });
            break;
        }
    }

    std::vector<Interval> intervals;
    std::vector<double> truths;
    intervals.reserve(n_test);
    truths.reserve(n_test);
    double width_sum = 0.0, neff_sum = 0.0, sigma_sum = 0.0;
    for (std::size_t i = 0; i < n_test; ++i) {
        intervals.push_back(result.points[i].interval);
        truths.push_back(data.test[i].truth);
        width_sum += result.points[i].threshold;
        if (result.points[i].neff) neff_sum += *result.points[i].neff;
        if (result.points[i].sigma_post) sigma_sum += *result.points[i].sigma_post;
    }
    result.coverage = coverage(intervals, truths);
    result.mean_width = width_sum / static_cast<double>(n_test);
    if (method_is_bayesian(variant.method)) {
        result.mean_neff = neff_sum / static_cast<double>(n_test);
        result.mean_sigma_post = sigma_sum / static_cast<double>(n_test);
    }
    return result;
}

ExperimentReport run_experiment(const std::vector<MethodVariant>& variants,
                                const ExperimentData& data, const ExperimentConfig& cfg) {
    ExperimentReport report;
    report.config = cfg;
    report.n_calibration = data.calibration.size();
    report.n_test = data.test.size();
    for (const auto& v : variants) report.variants.push_back(run_variant(v, data, cfg));
    return report;
}

double coverage(const std::vector<Interval>& intervals, const std::vector<double>& truths) {
    if (intervals.size() != truths.size())
        throw InvalidInput("coverage: length mismatch");
    if (intervals.empty()) throw InvalidInput("coverage: empty input");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i)
        if (intervals[i].contains(truths[i])) ++covered;
    return static_cast<double>(covered) / static_cast<double>(intervals.size());
}

double sigma_noise_correlation(const std::vector<double>& sigma_post,
                               const std::vector<double>& amplitudes) {
    return pearson_correlation(sigma_post, amplitudes);
}

// ---------------------------------------------------------------------------
// CSV input

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double_field(const std::string& s, std::size_t line_no,
                          const std::string& col) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || static_cast<std::size_t>(end - begin) != s.size())
        throw SchemaError("line " + std::to_string(line_no) + ": cannot parse '" + s +
                          "' in column " + col);
    if (!std::isfinite(v))
        throw NonFiniteValue("line " + std::to_string(line_no) + ": non-finite value in column " +
                             col);
    return v;
}

std::int64_t parse_id_field(const std::string& s, std::size_t line_no) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw SchemaError("line " + std::to_string(line_no) + ": bad id '" + s + "'");
    return v;
}

}  // namespace

ExperimentData ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("ingest_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("line 1: missing header");
    auto header = split_csv_line(line);

    bool has_split = !header.empty() && header.back() == "split";
    if (has_split) header.pop_back();

    enum class Layout { Score, XYScore, YPair, XYYPair };
    Layout layout;
    const std::vector<std::string> h_score = {"id", "score"};
    const std::vector<std::string> h_xyscore = {"id", "x", "y", "score"};
    const std::vector<std::string> h_ypair = {"id", "y_true", "y_hat"};
    const std::vector<std::string> h_xyypair = {"id", "x", "y", "y_true", "y_hat"};
    if (header == h_score)
        layout = Layout::Score;
    else if (header == h_xyscore)
        layout = Layout::XYScore;
    else if (header == h_ypair)
        layout = Layout::YPair;
    else if (header == h_xyypair)
        layout = Layout::XYYPair;
    else
        throw SchemaError(
            "line 1: unrecognized header; expected id,score | id,x,y,score | "
            "id,y_true,y_hat | id,x,y,y_true,y_hat with optional trailing split column");
    const std::size_t expected_fields = header.size() + (has_split ? 1 : 0);

    std::vector<CalibrationRecord> cal;
    std::vector<TestRecord> test;
    std::unordered_set<std::int64_t> seen_ids;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != expected_fields)
            throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(expected_fields) + " fields, got " +
                              std::to_string(fields.size()));

        std::size_t col = 0;
        const std::int64_t id = parse_id_field(fields[col++], line_no);
        if (!seen_ids.insert(id).second)
            throw SchemaError("line " + std::to_string(line_no) + ": duplicate id " +
                              std::to_string(id));

        std::optional<Point2> loc;
        if (layout == Layout::XYScore || layout == Layout::XYYPair) {
            const double x = parse_double_field(fields[col++], line_no, "x");
            const double y = parse_double_field(fields[col++], line_no, "y");
            loc = Point2{x, y};
        }

        double score, center = 0.0, truth;
        if (layout == Layout::Score || layout == Layout::XYScore) {
            score = parse_double_field(fields[col++], line_no, "score");
            if (score < 0.0)
                throw SchemaError("line " + std::to_string(line_no) + ": negative score");
            truth = score;
        } else {
            const double y_true = parse_double_field(fields[col++], line_no, "y_true");
            const double y_hat = parse_double_field(fields[col++], line_no, "y_hat");
            score = std::fabs(y_true - y_hat);
            center = y_hat;
            truth = y_true;
        }

        bool is_test = false;
        if (has_split) {
            const std::string& s = fields[col++];
            if (s == "test")
                is_test = true;
            else if (s != "cal")
                throw SchemaError("line " + std::to_string(line_no) +
                                  ": split must be cal or test, got '" + s + "'");
        }

        if (is_test)
            test.push_back(TestRecord{id, loc, score, center, truth, std::nullopt});
        else
            cal.push_back(CalibrationRecord{score, loc, id});
    }
    if (cal.empty()) throw SchemaError("ingest_csv: no calibration rows in " + path);
    return ExperimentData{CalibrationSet(std::move(cal)), std::move(test)};
}

ExperimentData experiment_data_from(const SyntheticDataset& data) {
    std::vector<TestRecord> test;
    for (std::size_t i = 0; i < data.scores.size(); ++i) {
        if (!data.is_calibration[i]) {
            test.push_back(TestRecord{static_cast<std::int64_t>(i), data.locations[i],
                                      data.scores[i], data.predictions[i], data.truth[i],
                                      data.amplitudes[i]});
        }
    }
    return ExperimentData{calibration_from(data), std::move(test)};
}

// ---------------------------------------------------------------------------
// Output

void write_synthetic_csv(const SyntheticDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_synthetic_csv: cannot open " + path);
    out << "id,x,y,y_true,y_hat,split\n";
    for (std::size_t i = 0; i < data.scores.size(); ++i) {
        out << i << ',' << format_double(data.locations[i].x) << ','
            << format_double(data.locations[i].y) << ',' << format_double(data.truth[i])
            << ',' << format_double(data.predictions[i]) << ','
            << (data.is_calibration[i] ? "cal" : "test") << '\n';
    }
    if (!out) throw IoError("write_synthetic_csv: write failed for " + path);
}

namespace {

std::string optional_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

nlohmann::json variant_summary_json(const VariantResult& vr) {
    nlohmann::json j;
    j["method"] = method_name(vr.variant.method);
    j["coverage"] = vr.coverage;
    j["mean_width"] = vr.mean_width;
    if (vr.mean_neff) j["mean_neff"] = *vr.mean_neff;
    if (vr.mean_sigma_post) j["mean_sigma_post"] = *vr.mean_sigma_post;
    return j;
}

}  // namespace

std::vector<std::string> emit_report(const ExperimentReport& report,
                                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("emit_report: cannot create " + out_dir + ": " + ec.message());

    std::vector<std::string> written;
    auto open_out = [&](const std::string& name) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("emit_report: cannot open " + path);
        written.push_back(path);
        return out;
    };

    // Summary rows in the canonical method order.
    std::vector<const VariantResult*> ordered;
    for (Method m : kCanonicalOrder)
        for (const auto& vr : report.variants)
            if (vr.variant.method == m) ordered.push_back(&vr);

    {
        auto out = open_out("summary.csv");
        out << "method,coverage,mean_width,mean_neff,mean_sigma_post\n";
        for (const auto* vr : ordered) {
            out << method_name(vr->variant.method) << ',' << format_double(vr->coverage)
                << ',' << format_double(vr->mean_width) << ','
                << optional_cell(vr->mean_neff) << ',' << optional_cell(vr->mean_sigma_post)
                << '\n';
        }
    }

    {
        nlohmann::json j;
        j["config"] = {{"alpha", report.config.alpha},
                       {"beta", report.config.beta},
                       {"mc_samples", report.config.mc_samples},
                       {"h", report.config.h},
                       {"h0", report.config.h0},
                       {"k_neighbors", report.config.k_neighbors},
                       {"seed", report.config.seed},
                       {"beta_list", report.config.beta_list}};
        j["n_calibration"] = report.n_calibration;
        j["n_test"] = report.n_test;
        j["variants"] = nlohmann::json::array();
        for (const auto* vr : ordered) j["variants"].push_back(variant_summary_json(*vr));
        auto out = open_out("summary.json");
        out << j.dump(2) << '\n';
    }

    for (const auto* vr : ordered) {
        auto out = open_out("points_" + method_name(vr->variant.method) + ".csv");
        out << "id,x,y,width,neff,sigma_post";
        for (double b : report.config.beta_list) out << ",hpd_" << format_double(b);
        out << '\n';
        for (const auto& pr : vr->points) {
            out << pr.id << ',';
            if (pr.location)
                out << format_double(pr.location->x) << ',' << format_double(pr.location->y);
            else
                out << ',';
            out << ',' << format_double(pr.threshold) << ',' << optional_cell(pr.neff) << ','
                << optional_cell(pr.sigma_post);
            for (std::size_t t = 0; t < report.config.beta_list.size(); ++t)
                out << ',' << (t < pr.hpd.size() ? format_double(pr.hpd[t]) : std::string());
            out << '\n';
        }
    }

    for (const auto* vr : ordered) {
        for (const auto& pr : vr->points) {
            if (pr.samples.empty()) continue;
            auto out = open_out("samples_" + method_name(vr->variant.method) + "_" +
                                std::to_string(pr.id) + ".csv");
            out << "lambda\n";
            for (double s : pr.samples) out << format_double(s) << '\n';
        }
    }
    return written;
}

}  // namespace wbcp
