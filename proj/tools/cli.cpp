#include "cli.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmvae/data.hpp"
#include "gmvae/eval.hpp"
#include "gmvae/io.hpp"
#include "gmvae/props.hpp"
#include "gmvae/serialize.hpp"

namespace gmvae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<int> parse_int_list(const std::string& csv, const char* what) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ContractError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (out.empty()) throw ContractError(std::string(what) + ": empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ContractError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (out.empty()) throw ContractError(std::string(what) + ": empty list");
    return out;
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<std::size_t> to_sizes(const std::vector<int>& v) {
    std::vector<std::size_t> out;
    for (int x : v) {
        if (x < 1) throw ContractError("sizes must be positive");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

// --- shared option bundles ---------------------------------------------------

struct ModelOptions {
    int dim_z = 2;
    int dim_w = 2;
    std::string trunk = "64,64";
    int reduce_dim = 16;

    void attach(CLI::App* cmd) {
        cmd->add_option("--dim-z", dim_z, "latent z dimension");
        cmd->add_option("--dim-w", dim_w, "latent w dimension");
        cmd->add_option("--trunk", trunk, "trunk widths, comma separated");
        cmd->add_option("--reduce-dim", reduce_dim, "phi_w input reduction width");
    }

    Arch arch() const {
        Arch a;
        a.trunk_widths = to_sizes(parse_int_list(trunk, "--trunk"));
        a.reduce_dim = static_cast<std::size_t>(reduce_dim);
        return a;
    }
};

struct TrainOptions {
    int batch = 32;
    int epochs = 200;
    int patience = 10;
    double lr = 1e-3;
    int mc = 1;
    std::string objective = "no_vprior";
    std::string freeze;

    void attach(CLI::App* cmd) {
        cmd->add_option("--batch", batch, "minibatch size");
        cmd->add_option("--epochs", epochs, "maximum training epochs");
        cmd->add_option("--patience", patience, "plateau epochs before stopping");
        cmd->add_option("--lr", lr, "Adam learning rate");
        cmd->add_option("--mc", mc, "Monte-Carlo samples per ELBO estimate");
        cmd->add_option("--objective", objective, "full | no_vprior | negated_vprior");
        cmd->add_option("--freeze", freeze,
                        "parameter groups to freeze, comma separated (phi_z,phi_w,beta,theta)");
    }

    TrainConfig config(std::uint64_t seed) const {
        TrainConfig c;
        c.batch_size = batch;
        c.max_epochs = epochs;
        c.patience = patience;
        c.lr = lr;
        c.mc_samples = mc;
        c.seed = seed;
        c.objective = objective_from_string(objective);
        if (!freeze.empty())
            for (const auto& g : split_csv(freeze)) c.freeze_groups.insert(g);
        return c;
    }
};

// --- report writers ----------------------------------------------------------

void write_eval_report(const EvalReport& report, const fs::path& dir) {
    json j;
    j["format"] = "gmvae-eval-report";
    j["version"] = 1;
    j["num_known"] = report.num_known;
    j["algorithms"] = report.algorithms;
    j["q_list"] = report.q_list;
    json cells = json::array();
    for (const auto& c : report.cells) {
        cells.push_back(json{{"algorithm", c.algorithm},
                             {"q", c.q},
                             {"threshold_mode", c.threshold_mode},
                             {"tau", c.tau},
                             {"macro_f1", c.macro_f1},
                             {"confusion", c.confusion}});
    }
    j["cells"] = std::move(cells);
    atomic_write_text(dir / "report.json", j.dump(2) + "\n");

    std::ostringstream csv;
    csv << "algorithm,Q,threshold_mode,tau,macro_f1\n";
    for (const auto& c : report.cells)
        csv << c.algorithm << ',' << c.q << ',' << c.threshold_mode << ','
            << format_double(c.tau) << ',' << format_double(c.macro_f1) << '\n';
    atomic_write_text(dir / "report.csv", csv.str());
}

void write_covering_curve(const CoveringCurve& curve, const fs::path& dir) {
    std::ostringstream csv;
    csv << "K,epoch,reconstruction,latent_covering\n";
    for (std::size_t i = 0; i < curve.k_values.size(); ++i)
        for (const auto& p : curve.curves[i])
            csv << curve.k_values[i] << ',' << p.epoch << ','
                << format_double(p.reconstruction_loss) << ','
                << format_double(p.latent_covering_loss) << '\n';
    atomic_write_text(dir / "covering.csv", csv.str());

    json j;
    j["format"] = "gmvae-scan-report";
    j["version"] = 1;
    j["k_values"] = curve.k_values;
    j["mean_differences"] = curve.mean_differences;
    j["recommended_k"] = curve.recommended_k;
    j["rule"] = json{{"abs_floor", curve.rule.abs_floor},
                     {"rel_ratio", curve.rule.rel_ratio},
                     {"truncate_fraction", curve.rule.truncate_fraction}};
    atomic_write_text(dir / "scan.json", j.dump(2) + "\n");
}

// --- commands ----------------------------------------------------------------

int cmd_gen_data(const GenSpec& spec, const fs::path& out) {
    const DatasetSplit split = gen_synthetic(spec);
    save_dataset(split, out);
    std::cout << "wrote dataset bundle to " << out.string() << " (train " << split.train.size()
              << ", validation " << split.validation.size() << ", test " << split.test.size()
              << ")\n";
    return 0;
}

/// Group syntax for --known/--unknown: comma-separated classes, '+'-joined raw
/// label values within a class, e.g. "0+2,1+3" for two merged known classes.
std::vector<std::vector<int>> parse_label_groups(const std::string& csv, const char* what) {
    std::vector<std::vector<int>> groups;
    for (const auto& group : split_csv(csv)) {
        std::vector<int> labels;
        std::stringstream ss(group);
        std::string item;
        while (std::getline(ss, item, '+')) {
            try {
                // raw IDX byte values become the loader's 1-based labels
                labels.push_back(std::stoi(item) + 1);
            } catch (const std::exception&) {
                throw ContractError(std::string(what) + ": cannot parse label '" + item + "'");
            }
        }
        groups.push_back(std::move(labels));
    }
    return groups;
}

int cmd_import_idx(const fs::path& images, const fs::path& labels, const fs::path& out,
                   const std::string& known_csv, const std::string& unknown_csv,
                   double val_fraction, double test_fraction, std::uint64_t seed) {
    const Dataset pool = load_idx(images, labels);
    OpenSetSplitSpec spec;
    spec.known_groups = parse_label_groups(known_csv, "--known");
    if (!unknown_csv.empty()) spec.unknown_groups = parse_label_groups(unknown_csv, "--unknown");
    spec.val_fraction = val_fraction;
    spec.test_fraction = test_fraction;
    spec.seed = seed;
    const DatasetSplit split = split_for_open_set(pool, spec);
    save_dataset(split, out);
    std::cout << "imported " << pool.size() << " samples into " << out.string() << " (train "
              << split.train.size() << ", validation " << split.validation.size() << ", test "
              << split.test.size() << ")\n";
    return 0;
}

int cmd_train(const fs::path& data_dir, const fs::path& out, const std::string& k_csv,
              const ModelOptions& model, const TrainOptions& train_opts, std::uint64_t seed) {
    const DatasetSplit split = load_dataset(data_dir);
    std::vector<int> k = parse_int_list(k_csv, "--k");
    if (k.size() == 1 && split.num_known > 1)
        k.assign(static_cast<std::size_t>(split.num_known), k.front());
    const ModelConfig cfg =
        ModelConfig::make(split.num_known, k, split.dim, static_cast<std::size_t>(model.dim_z),
                          static_cast<std::size_t>(model.dim_w));
    GmvaeParams params = make_gmvae(cfg, model.arch(), seed);

    // unknowns never take part in training; the trainer sees knowns only
    Dataset val_known;
    for (const auto& s : split.validation)
        if (s.label <= split.num_known) val_known.push_back(s);

    const History history = fit(params, split.train, val_known, train_opts.config(seed));
    save_checkpoint(params, out / "checkpoint");
    write_history_csv(history, (out / "history.csv").string());
    std::cout << "trained " << history.epochs.size() << " epochs, best epoch "
              << history.best_epoch << ", best validation loss "
              << format_double(history.best_val_loss) << "\n"
              << "checkpoint written to " << (out / "checkpoint").string() << "\n";
    return 0;
}

int cmd_eval(const fs::path& data_dir, const fs::path& checkpoint, const fs::path& out,
             const std::string& algorithms_csv, const std::string& q_csv, std::uint64_t seed) {
    const DatasetSplit split = load_dataset(data_dir);
    const GmvaeParams params = load_checkpoint(checkpoint);
    const std::vector<std::string> algorithms = split_csv(algorithms_csv);
    const std::vector<int> q_list = parse_int_list(q_csv, "--q");

    const EvalReport report =
        run_openset_eval(params, split, algorithms, q_list, params.config.subclusters, seed);
    fs::create_directories(out);
    write_eval_report(report, out);
    const CentroidSet cs =
        build_centroids(params, split.train, params.config.subclusters, seed);
    save_centroids(cs, out / "centroids");
    std::vector<ThresholdEntry> thresholds;
    for (const auto& c : report.cells)
        thresholds.push_back({c.algorithm, c.q, c.threshold_mode, c.tau});
    save_thresholds(thresholds, out / "thresholds");

    for (const auto& c : report.cells)
        std::cout << c.algorithm << " Q=" << c.q << " " << c.threshold_mode
                  << " tau=" << format_double(c.tau)
                  << " macro_f1=" << format_double(c.macro_f1) << "\n";
    return 0;
}

int cmd_scan_k(const fs::path& data_dir, const fs::path& out, int class_label, int k_max,
               const ModelOptions& model, const TrainOptions& train_opts, const ScanRule& rule,
               std::uint64_t seed) {
    const DatasetSplit split = load_dataset(data_dir);
    Dataset train, val;
    for (const auto& s : split.train)
        if (s.label == class_label) train.push_back(s);
    for (const auto& s : split.validation)
        if (s.label == class_label) val.push_back(s);
    if (train.empty())
        throw ContractError("scan-k: no training samples for class " +
                            std::to_string(class_label));

    ScanModel scan_model;
    scan_model.dim_z = static_cast<std::size_t>(model.dim_z);
    scan_model.dim_w = static_cast<std::size_t>(model.dim_w);
    scan_model.arch = model.arch();

    const CoveringCurve curve =
        subcluster_scan(train, val, k_max, scan_model, train_opts.config(seed), rule);
    fs::create_directories(out);
    write_covering_curve(curve, out);

    std::cout << "mean covering-loss differences:";
    for (double d : curve.mean_differences) std::cout << ' ' << format_double(d);
    std::cout << "\nrecommended K = " << curve.recommended_k << "\n";
    return 0;
}

int cmd_check_props(const std::string& prop, const fs::path& out, int dim_x, double mu_x_value,
                    const std::string& k_csv, int samples, int mc, const std::string& delta_csv,
                    const ModelOptions& model, std::uint64_t seed) {
    const std::vector<int> k_list = parse_int_list(k_csv, "--k");
    json report;
    report["format"] = "gmvae-prop-report";
    report["version"] = 1;
    bool all_pass = true;

    if (prop == "1" || prop == "all") {
        const std::vector<double> mu_x(static_cast<std::size_t>(dim_x), mu_x_value);
        const Prop1Result r = check_proposition1(mu_x, k_list, samples, seed);
        json entry;
        entry["dim_x"] = r.dim_x;
        entry["k_list"] = r.k_list;
        entry["losses"] = r.losses;
        entry["oracle"] = r.oracle;
        entry["max_abs_deviation"] = r.max_abs_deviation;
        entry["max_cross_k_deviation"] = r.max_cross_k_deviation;
        entry["tolerance"] = r.tolerance;
        entry["pass"] = r.pass;
        report["proposition1"] = std::move(entry);
        all_pass = all_pass && r.pass;
        std::cout << "proposition 1: " << (r.pass ? "PASS" : "FAIL") << " (max deviation "
                  << format_double(r.max_abs_deviation) << ", cross-K "
                  << format_double(r.max_cross_k_deviation) << ")\n";
    }

    if (prop == "2" || prop == "all") {
        const std::vector<double> deltas = parse_double_list(delta_csv, "--delta");
        Rng rng(seed);
        std::vector<std::vector<double>> xs;
        for (int i = 0; i < samples; ++i) {
            std::vector<double> x(static_cast<std::size_t>(dim_x));
            for (auto& v : x) v = rng.uniform() < mu_x_value ? 1.0 : 0.0;
            xs.push_back(std::move(x));
        }
        json entries = json::array();
        for (int k : k_list) {
            const ModelConfig cfg =
                ModelConfig::make(1, {k}, static_cast<std::size_t>(dim_x),
                                  static_cast<std::size_t>(model.dim_z),
                                  static_cast<std::size_t>(model.dim_w));
            const GmvaeParams params = make_gmvae(cfg, model.arch(), seed + static_cast<std::uint64_t>(k));
            const Prop2Result r = check_proposition2(params, xs, deltas, mc, seed);
            for (const auto& e : r.entries) {
                entries.push_back(json{{"k", e.k},
                                       {"delta", e.delta},
                                       {"epsilon", e.epsilon},
                                       {"bound", e.bound},
                                       {"tolerance", e.tolerance},
                                       {"pass", e.pass}});
                std::cout << "proposition 2: K=" << e.k << " delta=" << format_double(e.delta)
                          << " epsilon=" << format_double(e.epsilon)
                          << " bound=" << format_double(e.bound) << " "
                          << (e.pass ? "PASS" : "FAIL") << "\n";
            }
            std::cout << "proposition 2: K=" << k << " delta-sweep "
                      << (r.sweep_shrinks ? "shrinks (PASS)" : "does not shrink (FAIL)") << "\n";
            all_pass = all_pass && r.pass;
        }
        report["proposition2"] = std::move(entries);
    }

    fs::create_directories(out);
    atomic_write_text(out / "props.json", report.dump(2) + "\n");
    std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
    return all_pass ? 0 : 1;
}

int cmd_info(const fs::path& path) {
    const fs::path manifest = path / "manifest.json";
    const json j = json::parse(read_text(manifest));
    const std::string format = j.value("format", "unknown");
    std::cout << "format: " << format << "\n";
    if (format == "gmvae-checkpoint") {
        const auto& cfg = j.at("config");
        std::cout << "classes: " << cfg.at("num_classes").get<int>() << "\n"
                  << "subclusters:";
        for (int k : cfg.at("subclusters").get<std::vector<int>>()) std::cout << ' ' << k;
        std::cout << "\ndim_x: " << cfg.at("dim_x").get<std::size_t>()
                  << ", dim_z: " << cfg.at("dim_z").get<std::size_t>()
                  << ", dim_w: " << cfg.at("dim_w").get<std::size_t>() << "\n"
                  << "arrays: " << j.at("arrays").size() << "\n";
    } else if (format == "gmvae-dataset") {
        std::cout << "known classes: " << j.at("num_known").get<int>() << "\n"
                  << "unknown classes: " << j.at("num_unknown").get<int>() << "\n"
                  << "dim: " << j.at("dim").get<std::size_t>() << "\n";
        for (const auto& [name, split] : j.at("splits").items())
            std::cout << name << ": " << split.at("count").get<std::size_t>() << " samples\n";
    } else if (format == "gmvae-centroids") {
        std::cout << "centroids: " << j.at("entries").size() << ", dim "
                  << j.at("dim").get<std::size_t>() << "\n";
    } else if (format == "gmvae-thresholds") {
        std::cout << "thresholds: " << j.at("entries").size() << "\n";
    } else {
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"gmvae: class-conditioned mixture VAE embeddings with open-set classification"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a config file");

    std::string out_dir;
    app.add_option("--out", out_dir, "output directory")
        ->envname("GMVAE_OUT_DIR");

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "random seed");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset bundle")
                    ->configurable()
                    ->fallthrough();
    GenSpec spec;
    std::string placement = "heldout";
    gen->add_option("--classes", spec.classes, "known classes");
    gen->add_option("--subclusters", spec.subclusters, "modes per known class");
    gen->add_option("--dim", spec.dim, "sample dimension");
    gen->add_option("--separation", spec.separation, "mode separation in noise units");
    gen->add_option("--train-per-class", spec.train_per_class, "training samples per class");
    gen->add_option("--val-per-class", spec.val_per_class, "validation samples per class");
    gen->add_option("--test-per-class", spec.test_per_class, "test samples per class");
    gen->add_option("--unknown-classes", spec.unknown_classes, "held-out unknown classes");
    gen->add_option("--unknown-val-per-class", spec.unknown_val_per_class,
                    "validation samples per unknown class");
    gen->add_option("--unknown-test-per-class", spec.unknown_test_per_class,
                    "test samples per unknown class");
    gen->add_option("--placement", placement, "unknown mode placement: heldout | between");

    // import-idx
    auto* import = app.add_subcommand("import-idx",
                                      "convert an IDX image/label pair into a dataset bundle")
                       ->configurable()
                       ->fallthrough();
    std::string idx_images, idx_labels;
    std::string known_csv = "0,1";
    std::string unknown_csv;
    double val_fraction = 0.2;
    double test_fraction = 0.2;
    import->add_option("--images", idx_images, "IDX image file")->required();
    import->add_option("--labels", idx_labels, "IDX label file")->required();
    import->add_option("--known", known_csv,
                       "known classes as raw label groups, e.g. 0+2,1+3");
    import->add_option("--unknown", unknown_csv,
                       "unknown classes as raw label groups, e.g. 4,5,6");
    import->add_option("--val-fraction", val_fraction, "validation share per class");
    import->add_option("--test-fraction", test_fraction, "test share per class");

    // train
    auto* train = app.add_subcommand("train", "fit a model and write a checkpoint")
                      ->configurable()
                      ->fallthrough();
    std::string train_data;
    std::string train_k = "1";
    train->add_option("--data", train_data, "dataset bundle directory")->required();
    train->add_option("--k", train_k,
                      "subcluster counts per class (a single value applies to all classes)");
    ModelOptions train_model;
    train_model.attach(train);
    TrainOptions train_opts;
    train_opts.attach(train);

    // eval
    auto* eval = app.add_subcommand("eval", "open-set evaluation of a checkpoint")
                     ->configurable()
                     ->fallthrough();
    std::string eval_data, eval_checkpoint;
    std::string algorithms = "ncd,ncu,evt";
    std::string q_csv = "0,1";
    eval->add_option("--data", eval_data, "dataset bundle directory")->required();
    eval->add_option("--checkpoint", eval_checkpoint, "checkpoint directory")->required();
    eval->add_option("--algorithms", algorithms, "comma separated: ncd,ncu,evt");
    eval->add_option("--q", q_csv, "unknown-class counts, strictly increasing");

    // scan-k
    auto* scan = app.add_subcommand("scan-k", "latent-covering scan over subcluster counts")
                     ->configurable()
                     ->fallthrough();
    std::string scan_data;
    int scan_class = 1;
    int k_max = 3;
    ScanRule rule;
    scan->add_option("--data", scan_data, "dataset bundle directory")->required();
    scan->add_option("--class", scan_class, "class label to scan");
    scan->add_option("--k-max", k_max, "largest subcluster count to try");
    scan->add_option("--abs-floor", rule.abs_floor, "absolute difference floor");
    scan->add_option("--rel-ratio", rule.rel_ratio, "fraction of the previous difference");
    scan->add_option("--truncate", rule.truncate_fraction, "fraction of early epochs to drop");
    ModelOptions scan_model;
    scan_model.attach(scan);
    TrainOptions scan_opts;
    scan_opts.attach(scan);

    // check-props
    auto* props = app.add_subcommand("check-props", "run the analytical property checkers")
                      ->configurable()
                      ->fallthrough();
    std::string prop = "all";
    int dim_x = 4;
    double mu_x_value = 0.5;
    std::string props_k = "1,2,3";
    int samples = 256;
    int mc = 256;
    std::string delta_csv = "1e-2,1e-3,1e-4";
    props->add_option("--prop", prop, "1 | 2 | all");
    props->add_option("--dim-x", dim_x, "data dimension");
    props->add_option("--mu-x", mu_x_value, "Bernoulli mean for the synthetic data");
    props->add_option("--k", props_k, "subcluster counts to check");
    props->add_option("--samples", samples, "dataset size for the checks");
    props->add_option("--mc", mc, "Monte-Carlo samples for proposition 2");
    props->add_option("--delta", delta_csv, "delta sweep for proposition 2");
    ModelOptions props_model;
    props_model.trunk = "32";
    props_model.reduce_dim = 8;
    props_model.attach(props);

    // info
    auto* info =
        app.add_subcommand("info", "describe a bundle, checkpoint or centroid directory")
            ->fallthrough();
    std::string info_path;
    info->add_option("path", info_path, "directory containing a manifest.json")->required();

    std::vector<const char*> argv;
    argv.push_back("gmvae");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            if (out_dir.empty()) throw ContractError("gen-data: --out is required");
            spec.seed = seed;
            if (placement == "heldout")
                spec.placement = UnknownPlacement::HeldOut;
            else if (placement == "between")
                spec.placement = UnknownPlacement::Between;
            else
                throw ContractError("gen-data: unknown placement '" + placement + "'");
            return cmd_gen_data(spec, out_dir);
        }
        if (import->parsed()) {
            if (out_dir.empty()) throw ContractError("import-idx: --out is required");
            return cmd_import_idx(idx_images, idx_labels, out_dir, known_csv, unknown_csv,
                                  val_fraction, test_fraction, seed);
        }
        if (train->parsed()) {
            if (out_dir.empty()) throw ContractError("train: --out is required");
            return cmd_train(train_data, out_dir, train_k, train_model, train_opts, seed);
        }
        if (eval->parsed()) {
            if (out_dir.empty()) throw ContractError("eval: --out is required");
            return cmd_eval(eval_data, eval_checkpoint, out_dir, algorithms, q_csv, seed);
        }
        if (scan->parsed()) {
            if (out_dir.empty()) throw ContractError("scan-k: --out is required");
            return cmd_scan_k(scan_data, out_dir, scan_class, k_max, scan_model, scan_opts, rule,
                              seed);
        }
        if (props->parsed()) {
            if (out_dir.empty()) throw ContractError("check-props: --out is required");
            return cmd_check_props(prop, out_dir, dim_x, mu_x_value, props_k, samples, mc,
                                   delta_csv, props_model, seed);
        }
        if (info->parsed()) return cmd_info(info_path);
    } catch (const ContractError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace gmvae::cli
