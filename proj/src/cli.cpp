#include "imbf/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "imbf/evaluation.hpp"
#include "imbf/format.hpp"
#include "imbf/rng.hpp"

namespace imbf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + context);
    }
}

struct SyntheticParams {
    std::size_t n_major = 1000;
    std::size_t n_minor = 50;
    std::size_t d = 10;
    double separation = 2.0;
};

struct ExperimentConfig {
    std::optional<std::string> input_path;
    std::optional<SyntheticParams> synthetic;
    SchemaMode schema = SchemaMode::generic;
    MissingPolicy missing = MissingPolicy::reject;
    SamplerConfig sampler;
    std::optional<ModelChoice> model;
    std::vector<SamplerChoice> samplers;   // compare
    std::vector<ModelChoice> classifiers;  // compare
    int folds = 10;
    std::uint64_t seed = 0;
    std::size_t max_majority = 50000;  // 0 disables the cap
    std::string out_dir = ".";
    json echo;  // parsed config as written, for the manifest
};

SchemaMode schema_from_name(const std::string& name) {
    if (name == "kaggle") return SchemaMode::kaggle_creditcard;
    if (name == "generic") return SchemaMode::generic;
    throw ConfigError("unknown schema: '" + name + "' (expected kaggle|generic)");
}

MissingPolicy missing_from_name(const std::string& name) {
    if (name == "reject") return MissingPolicy::reject;
    if (name == "drop") return MissingPolicy::drop_rows;
    if (name == "impute") return MissingPolicy::mean_impute;
    throw ConfigError("unknown missing policy: '" + name + "' (expected reject|drop|impute)");
}

SamplerConfig parse_sampler(const json& j) {
    check_keys(j,
               {"kind", "k_neighbors", "target_ratio", "kmeans_k", "kmeans_max_iter",
                "kmeans_tol", "purity_threshold"},
               "sampler");
    SamplerConfig cfg;
    cfg.choice = sampler_from_name(j.value("kind", std::string("none")));
    if (j.contains("k_neighbors"))
        cfg.params.smote.k_neighbors = j.at("k_neighbors").get<std::size_t>();
    if (j.contains("target_ratio"))
        cfg.params.smote.target_ratio = j.at("target_ratio").get<double>();
    if (j.contains("kmeans_k")) cfg.params.kmeans.k = j.at("kmeans_k").get<std::size_t>();
    if (j.contains("kmeans_max_iter"))
        cfg.params.kmeans.max_iter = j.at("kmeans_max_iter").get<std::size_t>();
    if (j.contains("kmeans_tol")) cfg.params.kmeans.tol = j.at("kmeans_tol").get<double>();
    if (j.contains("purity_threshold"))
        cfg.params.purity_threshold = j.at("purity_threshold").get<double>();
    return cfg;
}

ModelChoice parse_model(const json& j) {
    if (!j.is_object()) throw ConfigError("model spec must be an object");
    std::string type = j.value("type", std::string("classifier"));
    json body = j;
    body.erase("type");
    if (type == "classifier") return ClassifierSpec::from_json(body);
    if (type == "ensemble") return EnsembleSpec::from_json(body);
    throw ConfigError("unknown model type: '" + type + "' (expected classifier|ensemble)");
}

SyntheticParams parse_synthetic(const json& j) {
    check_keys(j, {"n_major", "n_minor", "d", "separation"}, "input.synthetic");
    SyntheticParams p;
    if (j.contains("n_major")) p.n_major = j.at("n_major").get<std::size_t>();
    if (j.contains("n_minor")) p.n_minor = j.at("n_minor").get<std::size_t>();
    if (j.contains("d")) p.d = j.at("d").get<std::size_t>();
    if (j.contains("separation")) p.separation = j.at("separation").get<double>();
    return p;
}

ExperimentConfig parse_config_file(const std::string& path, bool compare_mode) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    std::vector<std::string> allowed = {"version", "input",  "schema",    "missing",
                                        "sampler", "folds",  "seed",      "subsample",
                                        "out_dir", "model",  "samplers",  "classifiers"};
    check_keys(j, allowed, "config");
    if (!j.contains("version")) throw ConfigError("config missing required key 'version'");
    if (j.at("version").get<int>() != 1)
        throw ConfigError("unsupported config version (expected 1)");

    ExperimentConfig cfg;
    cfg.echo = j;
    if (!j.contains("input")) throw ConfigError("config missing required key 'input'");
    if (j.at("input").is_string()) {
        cfg.input_path = j.at("input").get<std::string>();
    } else if (j.at("input").is_object()) {
        check_keys(j.at("input"), {"synthetic"}, "input");
        cfg.synthetic = parse_synthetic(j.at("input").at("synthetic"));
    } else {
        throw ConfigError("'input' must be a path or {\"synthetic\": {...}}");
    }
    if (j.contains("schema")) cfg.schema = schema_from_name(j.at("schema").get<std::string>());
    if (j.contains("missing")) cfg.missing = missing_from_name(j.at("missing").get<std::string>());
    if (j.contains("sampler")) cfg.sampler = parse_sampler(j.at("sampler"));
    if (j.contains("folds")) cfg.folds = j.at("folds").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("subsample")) {
        check_keys(j.at("subsample"), {"max_majority"}, "subsample");
        cfg.max_majority = j.at("subsample").at("max_majority").get<std::size_t>();
    }
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

    if (compare_mode) {
        if (j.contains("model"))
            throw ConfigError("unknown key 'model' in compare config (use 'classifiers')");
        if (!j.contains("samplers") || !j.contains("classifiers"))
            throw ConfigError("compare config requires 'samplers' and 'classifiers' lists");
        for (const auto& s : j.at("samplers"))
            cfg.samplers.push_back(sampler_from_name(s.get<std::string>()));
        for (const auto& c : j.at("classifiers")) cfg.classifiers.push_back(parse_model(c));
        if (cfg.samplers.empty() || cfg.classifiers.empty())
            throw ConfigError("compare config lists must be non-empty");
    } else {
        if (j.contains("samplers") || j.contains("classifiers"))
            throw ConfigError("'samplers'/'classifiers' are only valid for the compare command");
        if (!j.contains("model")) throw ConfigError("config missing required key 'model'");
        cfg.model = parse_model(j.at("model"));
    }
    return cfg;
}

std::uint64_t resolve_seed(const ExperimentConfig& cfg, const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;  // flag > env > config
    if (const char* env = std::getenv("IMBF_SEED")) {
        try {
            std::size_t pos = 0;
            std::uint64_t v = std::stoull(env, &pos);
            if (pos != std::string(env).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("IMBF_SEED must be a non-negative integer, got '" +
                              std::string(env) + "'");
        }
    }
    return cfg.seed;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + hex;
}

Dataset load_input(const ExperimentConfig& cfg, std::uint64_t seed) {
    Dataset ds;
    if (cfg.synthetic) {
        const SyntheticParams& p = *cfg.synthetic;
        ds = make_synthetic(p.n_major, p.n_minor, p.d, p.separation, seed);
    } else {
        ds = load_csv(*cfg.input_path, cfg.schema);
        ds = resolve_missing(ds, cfg.missing);
    }
    if (cfg.max_majority > 0) ds = subsample_majority(ds, cfg.max_majority, seed);
    return ds;
}

// Tracks files written by one command so failures leave no partial output.
class OutputSet {
public:
    explicit OutputSet(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    std::string write(const std::string& name, const std::string& content) {
        fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write " + p.string());
        out << content;
        written_.push_back(p);
        names_.push_back(name);
        return p.string();
    }

    void discard_all() {
        for (const fs::path& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

    const std::vector<std::string>& names() const { return names_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    std::vector<std::string> names_;
};

json make_manifest(const std::string& command, const ExperimentConfig& cfg, std::uint64_t seed,
                   const std::vector<std::string>& outputs) {
    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["command"] = command;
    manifest["config"] = cfg.echo;
    manifest["seed"] = seed;
    manifest["input_hash"] = cfg.synthetic ? std::string("synthetic") : hash_file(*cfg.input_path);
    manifest["outputs"] = outputs;
    return manifest;
}

json inspection_to_json(const InspectionReport& rep, const Dataset& ds) {
    json missing = json::object();
    json stats = json::object();
    for (std::size_t c = 0; c < ds.n_cols(); ++c) {
        const std::string& name = ds.feature_names[c];
        missing[name] = rep.missing_per_column[c];
        stats[name] = {{"min", rep.per_column_stats[c].min},
                       {"max", rep.per_column_stats[c].max},
                       {"mean", rep.per_column_stats[c].mean},
                       {"std", rep.per_column_stats[c].std_dev}};
    }
    return {{"n_rows", rep.n_rows},
            {"n_fraud", rep.n_fraud},
            {"fraud_fraction", rep.fraud_fraction},
            {"missing_per_column", missing},
            {"per_column_stats", stats}};
}

int cmd_inspect(const std::string& input, const std::string& schema, const std::string& out_dir) {
    Dataset ds = load_csv(input, schema_from_name(schema));
    InspectionReport rep = inspect(ds);
    OutputSet outputs(out_dir);
    outputs.write("inspection.json", inspection_to_json(rep, ds).dump(2) + "\n");
    std::cout << "rows=" << rep.n_rows << " fraud=" << rep.n_fraud
              << " fraud_fraction=" << format_fixed(rep.fraud_fraction, 5) << "\n";
    std::size_t missing_total = 0;
    for (std::size_t m : rep.missing_per_column) missing_total += m;
    std::cout << "columns=" << ds.n_cols() << " missing_cells=" << missing_total << "\n";
    return 0;
}

int cmd_resample(const std::string& input, const std::string& schema, const std::string& sampler,
                 std::uint64_t seed, std::size_t k_neighbors, double target_ratio,
                 std::size_t kmeans_k, double purity, const std::string& out_path) {
    Dataset ds = load_csv(input, schema_from_name(schema));
    ds = resolve_missing(ds, MissingPolicy::reject);

    SamplerConfig cfg;
    cfg.choice = sampler_from_name(sampler);
    cfg.params.smote.k_neighbors = k_neighbors;
    cfg.params.smote.target_ratio = target_ratio;
    cfg.params.kmeans.k = kmeans_k;
    cfg.params.purity_threshold = purity;
    ResampleResult result = apply_sampler(ds, cfg, seed);

    write_csv(result.dataset, out_path, result.provenance_tags());
    std::size_t syn1 = 0, syn2 = 0;
    for (Provenance p : result.provenance) {
        if (p == Provenance::synthetic_pass1) ++syn1;
        if (p == Provenance::synthetic_pass2) ++syn2;
    }
    std::cout << "original=" << ds.n_rows() << " syn1=" << syn1 << " syn2=" << syn2
              << " removed=" << result.removed_as_noise
              << " minority=" << result.dataset.count_label(1)
              << " majority=" << result.dataset.count_label(0) << "\n";
    return 0;
}

// Shared by train and evaluate: load, cap, and echo basic shape.
Dataset prepare_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
    Dataset ds = load_input(cfg, seed);
    std::cout << "dataset: rows=" << ds.n_rows() << " cols=" << ds.n_cols()
              << " minority=" << ds.count_label(1) << "\n";
    return ds;
}

int cmd_train(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag) {
    ExperimentConfig cfg = parse_config_file(config_path, false);
    std::uint64_t seed = resolve_seed(cfg, seed_flag);
    Dataset ds = prepare_dataset(cfg, seed);

    OutputSet outputs(cfg.out_dir);
    try {
        StandardizeResult std_res = standardize_fit_transform(ds);
        ResampleResult resampled =
            apply_sampler(std_res.train, cfg.sampler, derive_seed(seed, "train_sampler", 0));

        json model_json;
        if (std::holds_alternative<ClassifierSpec>(*cfg.model)) {
            ClassifierSpec spec = std::get<ClassifierSpec>(*cfg.model);
            spec.seed = derive_seed(seed, "train_fit", 0) ^ spec.seed;
            auto clf = make_classifier(spec);
            clf->fit(resampled.dataset);
            model_json = clf->to_json();
        } else {
            EnsembleSpec spec = std::get<EnsembleSpec>(*cfg.model);
            spec.seed = derive_seed(seed, "train_fit", 0) ^ spec.seed;
            StackedEnsemble ensemble = train_stacked_ensemble(resampled.dataset, spec);
            model_json = ensemble.to_json();
        }

        json pipeline = {{"format_version", kModelFormatVersion},
                         {"kind", "pipeline"},
                         {"standardizer",
                          {{"mean", std_res.standardizer.mean},
                           {"std", std_res.standardizer.std_dev}}},
                         {"sampler", sampler_name(cfg.sampler.choice)},
                         {"model", model_json}};
        outputs.write("model.json", pipeline.dump(2) + "\n");
        outputs.write("manifest.json",
                      make_manifest("train", cfg, seed, {"model.json", "manifest.json"}).dump(2) +
                          "\n");
        std::cout << "model written to " << cfg.out_dir << "/model.json\n";
        return 0;
    } catch (...) {
        outputs.discard_all();
        throw;
    }
}

int cmd_evaluate(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
                 int jobs) {
    ExperimentConfig cfg = parse_config_file(config_path, false);
    std::uint64_t seed = resolve_seed(cfg, seed_flag);
    Dataset ds = prepare_dataset(cfg, seed);

    OutputSet outputs(cfg.out_dir);
    try {
        CrossvalOptions options;
        options.jobs = jobs;
        EvalReport report = crossval_evaluate(ds, cfg.sampler, *cfg.model, cfg.folds, seed, options);
        outputs.write("metrics.csv", report.metrics_csv());
        outputs.write("roc.tsv", report.roc_tsv());
        outputs.write("table.md", report.markdown_table());
        outputs.write("manifest.json",
                      make_manifest("evaluate", cfg, seed,
                                    {"metrics.csv", "roc.tsv", "table.md", "manifest.json"})
                              .dump(2) +
                          "\n");
        std::cout << "sampler=" << report.sampler << " model=" << report.model
                  << " mean_auc=" << format_fixed(report.mean_auc, 4)
                  << " mean_recall=" << format_fixed(report.mean_recall, 4)
                  << " mean_accuracy=" << format_fixed(report.mean_accuracy, 4) << "\n";
        return 0;
    } catch (...) {
        outputs.discard_all();
        throw;
    }
}

int cmd_compare(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
                int jobs) {
    ExperimentConfig cfg = parse_config_file(config_path, true);
    std::uint64_t seed = resolve_seed(cfg, seed_flag);
    Dataset ds = prepare_dataset(cfg, seed);

    const std::size_t n_samplers = cfg.samplers.size();
    const std::size_t n_models = cfg.classifiers.size();
    std::vector<std::string> cells(n_samplers * n_models);
    std::vector<std::string> cells_precise(n_samplers * n_models);
    bool any_failed = false;

    for (std::size_t ci = 0; ci < n_models; ++ci) {
        // One seed per classifier so every sampler sees the same folds and
        // fit seeds, which is what the direction comparisons assume.
        std::uint64_t cell_seed = derive_seed(seed, "compare_cell", ci);
        for (std::size_t si = 0; si < n_samplers; ++si) {
            SamplerConfig sampler;
            sampler.choice = cfg.samplers[si];
            sampler.params = cfg.sampler.params;
            std::size_t idx = ci * n_samplers + si;
            try {
                CrossvalOptions options;
                options.jobs = jobs;
                EvalReport report =
                    crossval_evaluate(ds, sampler, cfg.classifiers[ci], cfg.folds, cell_seed,
                                      options);
                cells[idx] = format_fixed(report.mean_auc, 2);
                cells_precise[idx] = format_double(report.mean_auc);
                std::cout << model_name(cfg.classifiers[ci]) << " x " << sampler_name(sampler.choice)
                          << ": auc=" << format_fixed(report.mean_auc, 4) << "\n";
            } catch (const std::exception& e) {
                cells[idx] = "FAILED";
                cells_precise[idx] = "FAILED";
                any_failed = true;
                std::cerr << "cell " << model_name(cfg.classifiers[ci]) << " x "
                          << sampler_name(sampler.choice) << " failed: " << e.what() << "\n";
            }
        }
    }

    std::string md = "| Method |";
    std::string csv = "method";
    for (SamplerChoice s : cfg.samplers) {
        md += " " + sampler_name(s) + " |";
        csv += "," + sampler_name(s);
    }
    md += "\n|---|";
    csv += "\n";
    for (std::size_t si = 0; si < n_samplers; ++si) md += "---|";
    md += "\n";
    for (std::size_t ci = 0; ci < n_models; ++ci) {
        md += "| " + model_name(cfg.classifiers[ci]) + " |";
        csv += model_name(cfg.classifiers[ci]);
        for (std::size_t si = 0; si < n_samplers; ++si) {
            md += " " + cells[ci * n_samplers + si] + " |";
            csv += "," + cells_precise[ci * n_samplers + si];
        }
        md += "\n";
        csv += "\n";
    }

    OutputSet outputs(cfg.out_dir);
    outputs.write("table.md", md);
    outputs.write("table.csv", csv);
    outputs.write("manifest.json",
                  make_manifest("compare", cfg, seed, {"table.md", "table.csv", "manifest.json"})
                          .dump(2) +
                      "\n");
    std::cout << md;
    return any_failed ? 1 : 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("imbf");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
    CLI::App app{"SMOTE-KMEANS resampling and stacked-ensemble fraud detection"};
    app.require_subcommand(1);

    std::string input, schema = "generic", out_dir = ".", out_path = "resampled.csv";
    std::string sampler = "smote_kmeans", config_path;
    std::optional<std::uint64_t> seed_flag;
    std::uint64_t seed_value = 0;
    std::size_t k_neighbors = 5, kmeans_k = 0;
    double target_ratio = 1.0, purity = 0.5;
    int jobs = 1;

    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a dataset");
    inspect_cmd->add_option("--input", input, "CSV file")->required();
    inspect_cmd->add_option("--schema", schema, "kaggle|generic");
    inspect_cmd->add_option("--out", out_dir, "output directory");

    auto* resample_cmd = app.add_subcommand("resample", "Balance a dataset and write it back");
    resample_cmd->add_option("--input", input, "CSV file")->required();
    resample_cmd->add_option("--schema", schema, "kaggle|generic");
    resample_cmd->add_option("--sampler", sampler, "none|smote|smote_kmeans");
    resample_cmd->add_option("--seed", seed_value, "RNG seed");
    resample_cmd->add_option("--k-neighbors", k_neighbors, "SMOTE neighbor count");
    resample_cmd->add_option("--target-ratio", target_ratio, "minority/majority target");
    resample_cmd->add_option("--kmeans-k", kmeans_k, "cluster count (0 = heuristic)");
    resample_cmd->add_option("--purity", purity, "cluster purity threshold");
    resample_cmd->add_option("--out", out_path, "output CSV path");

    auto* train_cmd = app.add_subcommand("train", "Fit a model per config");
    train_cmd->add_option("--config", config_path, "JSON config")->required();
    train_cmd->add_option("--seed", seed_flag, "override config/env seed");

    auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validated evaluation per config");
    eval_cmd->add_option("--config", config_path, "JSON config")->required();
    eval_cmd->add_option("--seed", seed_flag, "override config/env seed");
    eval_cmd->add_option("--jobs", jobs, "parallel outer folds");

    auto* compare_cmd = app.add_subcommand("compare", "Samplers x classifiers AUC grid");
    compare_cmd->add_option("--config", config_path, "JSON config")->required();
    compare_cmd->add_option("--seed", seed_flag, "override config/env seed");
    compare_cmd->add_option("--jobs", jobs, "parallel outer folds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (inspect_cmd->parsed()) return cmd_inspect(input, schema, out_dir);
        if (resample_cmd->parsed()) {
            std::optional<std::uint64_t> flag =
                resample_cmd->count("--seed") ? std::optional<std::uint64_t>(seed_value)
                                              : std::nullopt;
            ExperimentConfig dummy;
            std::uint64_t seed = resolve_seed(dummy, flag);
            return cmd_resample(input, schema, sampler, seed, k_neighbors, target_ratio, kmeans_k,
                                purity, out_path);
        }
        if (train_cmd->parsed()) return cmd_train(config_path, seed_flag);
        if (eval_cmd->parsed()) return cmd_evaluate(config_path, seed_flag, jobs);
        if (compare_cmd->parsed()) return cmd_compare(config_path, seed_flag, jobs);
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const LabelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyDatasetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace imbf::cli
