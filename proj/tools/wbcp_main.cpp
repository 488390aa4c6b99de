// Command-line surface for the WBCP library: synthetic dataset generation,
// the benchmark harness, per-point prediction, and the empirical validation
// suite.
//
// Exit codes: 0 ok, 1 check failure, 2 input error, 3 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wbcp/errors.hpp"
#include "wbcp/experiments.hpp"
#include "wbcp/rng.hpp"
#include "wbcp/stats.hpp"
#include "wbcp/synthetic.hpp"
#include "wbcp/validation.hpp"
#include "wbcp/weights.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Accepts either a JSON object or TOML-style key=value lines. Keys are the
// long option names without the leading dashes; unknown keys are rejected.
class JsonKvConfig : public CLI::ConfigBase {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::string content((std::istreambuf_iterator<char>(input)),
                            std::istreambuf_iterator<char>());
        const auto first = content.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && content[first] == '{') {
            json j = json::parse(content);
            if (!j.is_object())
                throw CLI::ConfigError("config file must hold a JSON object");
            std::vector<CLI::ConfigItem> items;
            for (auto it = j.begin(); it != j.end(); ++it) {
                CLI::ConfigItem item;
                item.name = it.key();
                const auto& v = it.value();
                if (v.is_array())
                    for (const auto& e : v) item.inputs.push_back(scalar(e));
                else
                    item.inputs.push_back(scalar(v));
                items.push_back(std::move(item));
            }
            return items;
        }
        std::istringstream ss(content);
        return CLI::ConfigBase::from_config(ss);
    }

private:
    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }
};

void attach_config(CLI::App* sub) {
    sub->set_config("--config", "", "Config file (JSON object or key=value lines)");
    sub->config_formatter(std::make_shared<JsonKvConfig>());
    sub->allow_config_extras(false);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw wbcp::IoError("cannot open " + path);
    out << text;
    if (!out) throw wbcp::IoError("write failed for " + path);
}

struct GenerateArgs {
    wbcp::SyntheticConfig cfg;
    std::string out_dir = ".";
};

int cmd_generate(const GenerateArgs& args) {
    const auto data = wbcp::generate_dataset(args.cfg);
    fs::create_directories(args.out_dir);
    const auto csv_path = (fs::path(args.out_dir) / "synthetic.csv").string();
    wbcp::write_synthetic_csv(data, csv_path);

    std::size_t n_cal = 0;
    for (auto flag : data.is_calibration) n_cal += flag;
    json meta;
    meta["seed"] = args.cfg.seed;
    meta["n"] = args.cfg.n;
    meta["ell"] = args.cfg.grf_length_scale;
    meta["dense_fraction"] = args.cfg.dense_fraction;
    meta["split_fraction"] = args.cfg.split_fraction;
    meta["zero_noise"] = args.cfg.zero_noise;
    meta["morans_i"] = data.morans_i_noise;
    meta["n_calibration"] = n_cal;
    meta["n_test"] = data.scores.size() - n_cal;
    write_text((fs::path(args.out_dir) / "meta.json").string(), meta.dump(2) + "\n");
    std::cout << "wrote " << csv_path << " (" << data.scores.size() << " rows)\n";
    return 0;
}

struct ExperimentArgs {
    std::string input;  // empty: synthetic
    std::string variants = "all";
    wbcp::ExperimentConfig cfg;
    wbcp::SyntheticConfig synth;
    std::string out_dir = ".";
};

std::vector<wbcp::MethodVariant> parse_variants(const std::string& spec,
                                                const wbcp::ExperimentConfig& cfg) {
    if (spec == "all") return wbcp::default_variants(cfg);
    std::vector<wbcp::MethodVariant> out;
    std::stringstream ss(spec);
    std::string name;
    while (std::getline(ss, name, ',')) {
        const auto m = wbcp::method_from_name(name);
        if (!m) throw wbcp::InvalidInput("unknown variant '" + name + "'");
        out.push_back(wbcp::MethodVariant{*m, cfg.beta, cfg.h, cfg.h0, cfg.k_neighbors});
    }
    if (out.empty()) throw wbcp::InvalidInput("no variants selected");
    return out;
}

int cmd_experiment(ExperimentArgs& args) {
    wbcp::ExperimentData data = [&] {
        if (!args.input.empty()) return wbcp::ingest_csv(args.input);
        args.synth.seed = args.cfg.seed;
        return wbcp::experiment_data_from(wbcp::generate_dataset(args.synth));
    }();
    if (data.test.empty())
        throw wbcp::InvalidInput(
            "experiment needs test rows; CSV inputs require a split column");

    const auto variants = parse_variants(args.variants, args.cfg);
    const auto report = wbcp::run_experiment(variants, data, args.cfg);
    const auto files = wbcp::emit_report(report, args.out_dir);
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    return 0;
}

struct PredictArgs {
    std::string input;
    std::vector<double> at;  // x y
    std::string points_file;
    double center = 0.0;
    double alpha = 0.1;
    std::size_t mc = 1000;
    double h = 1.0;
    double h0 = 0.5;
    int k = 25;
    bool adaptive = false;
    bool emit_samples = false;
    std::vector<double> beta_list = {0.25, 0.5, 0.75, 0.9, 0.95, 0.99};
    std::uint64_t seed = 42;
    std::string out = "-";
};

struct Query {
    std::int64_t id;
    wbcp::Point2 loc;
    double center;
};

std::vector<Query> load_queries(const PredictArgs& args) {
    std::vector<Query> queries;
    if (!args.at.empty()) {
        if (args.at.size() != 2)
            throw wbcp::InvalidInput("--at expects exactly two values: x y");
        queries.push_back({0, {args.at[0], args.at[1]}, args.center});
    }
    if (!args.points_file.empty()) {
        std::ifstream in(args.points_file);
        if (!in) throw wbcp::IoError("cannot open " + args.points_file);
        std::string line;
        if (!std::getline(in, line))
            throw wbcp::SchemaError("line 1: missing header in points file");
        const bool with_center = line == "id,x,y,y_hat";
        if (!with_center && line != "id,x,y")
            throw wbcp::SchemaError("line 1: points file header must be id,x,y[,y_hat]");
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string f;
            std::vector<std::string> fields;
            while (std::getline(ss, f, ',')) fields.push_back(f);
            if (fields.size() != (with_center ? 4u : 3u))
                throw wbcp::SchemaError("line " + std::to_string(line_no) +
                                        ": wrong field count in points file");
            Query q;
            q.id = std::stoll(fields[0]);
            q.loc = {std::stod(fields[1]), std::stod(fields[2])};
            q.center = with_center ? std::stod(fields[3]) : args.center;
            queries.push_back(q);
        }
    }
    if (queries.empty())
        throw wbcp::InvalidInput("predict needs --at or --points");
    return queries;
}

int cmd_predict(const PredictArgs& args) {
    const auto data = wbcp::ingest_csv(args.input);
    const auto queries = load_queries(args);
    const wbcp::QuantileLevel level(args.alpha);

    wbcp::KernelConfig kernel;
    if (args.adaptive)
        kernel.bandwidth = wbcp::AdaptiveBandwidth{args.h0, args.k, 0.0};
    else
        kernel.bandwidth = wbcp::FixedBandwidth{args.h};

    json out = json::array();
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& q = queries[i];
        const auto profile = wbcp::profile_from_kernel(q.loc, data.calibration, kernel);
        const auto sc = wbcp::sort_with_weights(data.calibration, profile.normalized);
        const auto tp = wbcp::threshold_posterior(sc, profile, level.q, args.mc,
                                                  wbcp::mix_seed(args.seed, i));
        json jq;
        jq["id"] = q.id;
        jq["x"] = q.loc.x;
        jq["y"] = q.loc.y;
        jq["neff"] = tp.neff;
        jq["sigma_post"] = tp.sigma_post;
        jq["lambda_wcp"] = tp.wcp_threshold;
        jq["lambda_mean"] = tp.mean;
        json hpd = json::object();
        for (double b : args.beta_list)
            hpd[wbcp::format_double(b)] = wbcp::hpd_threshold(tp, b);
        jq["lambda_hpd"] = hpd;
        const auto iv =
            wbcp::prediction_interval(q.center, wbcp::hpd_threshold(tp, args.beta_list.back()));
        jq["interval"] = json::array({iv.lo, iv.hi});
        if (args.emit_samples) jq["samples"] = tp.samples;
        out.push_back(jq);
    }

    const std::string text = out.dump(2) + "\n";
    if (args.out == "-")
        std::cout << text;
    else
        write_text(args.out, text);
    return 0;
}

struct ValidateArgs {
    std::vector<std::string> only;
    wbcp::OracleConfig cfg;
    std::string out_dir;
};

int cmd_validate(const ValidateArgs& args) {
    using Check = wbcp::CheckResult (*)(const wbcp::OracleConfig&);
    const std::vector<std::pair<std::string, Check>> all = {
        {"variance_matching", wbcp::check_variance_matching},
        {"concentration", wbcp::check_concentration},
        {"limits", wbcp::check_limits},
        {"conditional_coverage", wbcp::check_conditional_coverage},
        {"dominance_construction", wbcp::check_dominance_construction},
        {"tail_bound", wbcp::check_tail_bound},
        {"adaptive_regularization", wbcp::check_adaptive_regularization}};

    std::vector<wbcp::CheckResult> results;
    for (const auto& [name, fn] : all) {
        if (!args.only.empty() &&
            std::find(args.only.begin(), args.only.end(), name) == args.only.end())
            continue;
        results.push_back(fn(args.cfg));
        const auto& r = results.back();
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "\n";
        for (const auto& m : r.metrics)
            std::cout << "  " << (m.pass ? "ok  " : "BAD ") << m.name << " = "
                      << wbcp::format_double(m.value) << " (" << m.comparator << " "
                      << wbcp::format_double(m.threshold) << ")\n";
    }
    if (results.empty()) throw wbcp::InvalidInput("no matching checks selected");

    if (!args.out_dir.empty()) {
        fs::create_directories(args.out_dir);
        write_text((fs::path(args.out_dir) / "checks.json").string(),
                   wbcp::check_report_json(results) + "\n");
    }
    const bool all_pass = std::all_of(results.begin(), results.end(),
                                      [](const auto& r) { return r.pass; });
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted Bayesian conformal prediction toolkit"};
    app.set_help_flag("--help", "Print help and exit");  // frees -h for --h
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* sub_gen = app.add_subcommand("generate", "Generate the synthetic spatial benchmark");
    attach_config(sub_gen);
    sub_gen->add_option("--n", gen.cfg.n, "Number of points")->capture_default_str();
    sub_gen->add_option("--ell", gen.cfg.grf_length_scale, "GRF length scale")
        ->capture_default_str();
    sub_gen->add_option("--dense-fraction", gen.cfg.dense_fraction,
                        "Share of points in the dense subregion")
        ->capture_default_str();
    sub_gen->add_option("--split-fraction", gen.cfg.split_fraction, "Calibration share")
        ->capture_default_str();
    sub_gen->add_flag("--zero-noise", gen.cfg.zero_noise, "Disable the noise field");
    sub_gen->add_option("--seed", gen.cfg.seed, "Master seed")->capture_default_str();
    sub_gen->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();

    ExperimentArgs exp;
    auto* sub_exp = app.add_subcommand("experiment", "Run the benchmark variants");
    attach_config(sub_exp);
    sub_exp->add_option("--input", exp.input, "Input CSV (default: synthetic data)");
    sub_exp->add_option("--variants", exp.variants,
                        "Comma list of variants or 'all' (StandardCP,BQCP,GeoCP,GeoBCP,"
                        "AdaGeoCP,AdaGeoBCP)")
        ->capture_default_str();
    sub_exp->add_option("--n", exp.synth.n, "Synthetic size")->capture_default_str();
    sub_exp->add_option("--ell", exp.synth.grf_length_scale, "Synthetic GRF length scale")
        ->capture_default_str();
    sub_exp->add_option("--alpha", exp.cfg.alpha, "Miscoverage level")->capture_default_str();
    sub_exp->add_option("--beta", exp.cfg.beta, "HPD confidence")->capture_default_str();
    sub_exp->add_option("--mc", exp.cfg.mc_samples, "Monte Carlo samples per posterior")
        ->capture_default_str();
    sub_exp->add_option("--h", exp.cfg.h, "Fixed kernel bandwidth")->capture_default_str();
    sub_exp->add_option("--h0", exp.cfg.h0, "Adaptive bandwidth scale")->capture_default_str();
    sub_exp->add_option("--k", exp.cfg.k_neighbors, "Adaptive bandwidth neighbors")
        ->capture_default_str();
    sub_exp->add_option("--beta-list", exp.cfg.beta_list, "Per-point HPD levels")
        ->delimiter(',')
        ->capture_default_str();
    sub_exp->add_option("--dump-ids", exp.cfg.sample_dump_ids,
                        "Test ids whose posterior samples are dumped")
        ->delimiter(',');
    sub_exp->add_option("--seed", exp.cfg.seed, "Master seed")->capture_default_str();
    sub_exp->add_option("--threads", exp.cfg.threads,
                        "Worker threads (0: WBCP_THREADS env, then hardware)")
        ->capture_default_str();
    sub_exp->add_option("--out-dir", exp.out_dir, "Output directory")->capture_default_str();

    PredictArgs pred;
    auto* sub_pred = app.add_subcommand("predict", "Per-point posterior prediction");
    attach_config(sub_pred);
    sub_pred->add_option("--input", pred.input, "Calibration CSV")->required();
    sub_pred->add_option("--at", pred.at, "Query location: x y")->expected(2);
    sub_pred->add_option("--points", pred.points_file, "Query points CSV id,x,y[,y_hat]");
    sub_pred->add_option("--center", pred.center, "Interval center for --at queries")
        ->capture_default_str();
    sub_pred->add_option("--alpha", pred.alpha, "Miscoverage level")->capture_default_str();
    sub_pred->add_option("--mc", pred.mc, "Monte Carlo samples")->capture_default_str();
    sub_pred->add_option("--h", pred.h, "Fixed kernel bandwidth")->capture_default_str();
    sub_pred->add_option("--h0", pred.h0, "Adaptive bandwidth scale")->capture_default_str();
    sub_pred->add_option("--k", pred.k, "Adaptive bandwidth neighbors")->capture_default_str();
    sub_pred->add_flag("--adaptive", pred.adaptive, "Use the adaptive bandwidth kernel");
    sub_pred->add_flag("--emit-samples", pred.emit_samples, "Include raw posterior samples");
    sub_pred->add_option("--beta-list", pred.beta_list, "HPD levels")
        ->delimiter(',')
        ->capture_default_str();
    sub_pred->add_option("--seed", pred.seed, "Master seed")->capture_default_str();
    sub_pred->add_option("--out", pred.out, "Output file, '-' for stdout")
        ->capture_default_str();

    ValidateArgs val;
    auto* sub_val = app.add_subcommand("validate", "Run the empirical validation suite");
    attach_config(sub_val);
    sub_val->add_option("--only", val.only, "Run only the named checks")->delimiter(',');
    sub_val->add_option("--seed", val.cfg.seed, "Master seed")->capture_default_str();
    sub_val->add_option("--out-dir", val.out_dir, "Directory for checks.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sub_gen->parsed()) return cmd_generate(gen);
        if (sub_exp->parsed()) return cmd_experiment(exp);
        if (sub_pred->parsed()) return cmd_predict(pred);
        if (sub_val->parsed()) return cmd_validate(val);
        return 2;
    } catch (const wbcp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
