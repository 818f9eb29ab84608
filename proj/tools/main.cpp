#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sfdmc/checkpoint.hpp"
#include "sfdmc/config.hpp"
#include "sfdmc/data.hpp"
#include "sfdmc/errors.hpp"
#include "sfdmc/rng.hpp"
#include "sfdmc/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sfdmc;

namespace {

// Exit codes are part of the tool's contract; wrapper scripts dispatch on
// them. 0 is success, 1 is anything unclassified.
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;   // config missing, malformed or invalid
constexpr int kExitData = 3;     // dataset or checkpoint not found
constexpr int kExitLoss = 4;     // training hit a non-finite loss
constexpr int kExitVersion = 5;  // checkpoint unusable (wrong version or damaged)

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string data_dir;
    bool synth = false;
    std::string ablation;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
};

// Primary outputs are never written in place: the content lands in a .tmp
// sibling first and is renamed over the real name only when complete.
void atomic_write(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        os << text;
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

RunConfig load_config(const CliOptions& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = RunConfig::from_json_file(o.config_path);
    if (o.seed_set) cfg.seed = o.seed;
    if (!o.ablation.empty()) cfg.ablation = ablation_from_name(o.ablation);
    if (o.synth)
        cfg.data.dir.clear();
    else if (!o.data_dir.empty())
        cfg.data.dir = o.data_dir;
    cfg.validate();
    return cfg;
}

struct Splits {
    Dataset train;
    Dataset test;
    std::string train_hash;
    std::string test_hash;
};

// Synthetic source when data.dir is empty, otherwise a directory holding
// train/ and test/ class trees (the gen-data layout). Augmentation applies
// to the training split only, and the recorded hashes are post-augmentation
// so two runs with equal hashes saw byte-identical inputs.
Splits resolve_data(const RunConfig& cfg) {
    Splits s;
    if (cfg.data.dir.empty()) {
        s.train = synth_generate(cfg.data.synth(cfg.seed, false));
        s.test = synth_generate(cfg.data.synth(cfg.seed, true));
    } else {
        const fs::path root = cfg.data.dir;
        if (!fs::is_directory(root / "train") || !fs::is_directory(root / "test"))
            throw DataError("expected train/ and test/ class trees under " + root.string());
        s.train = load_dir((root / "train").string(), cfg.data.image_size);
        s.test = load_dir((root / "test").string(), cfg.data.image_size);
        if (s.train.num_classes != cfg.data.num_classes ||
            s.test.num_classes != cfg.data.num_classes)
            throw DataError("dataset under " + root.string() + " has " +
                            std::to_string(s.train.num_classes) + "/" +
                            std::to_string(s.test.num_classes) +
                            " train/test classes, config expects " +
                            std::to_string(cfg.data.num_classes));
    }
    if (cfg.data.augment_to > 0)
        s.train = augment_resample(s.train, cfg.data.augment_to, derive_seed(cfg.seed, "augment"));
    s.train_hash = dataset_hash(s.train);
    s.test_hash = dataset_hash(s.test);
    return s;
}

std::string confusion_csv(const EvalReport& rep) {
    const std::size_t n = rep.confusion.size();
    std::ostringstream os;
    os << "class";
    for (std::size_t j = 0; j < n; ++j) os << ",pred_" << j;
    os << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        os << i;
        for (std::size_t j = 0; j < n; ++j) os << ',' << rep.confusion[i][j];
        os << "\n";
    }
    return os.str();
}

json summary_json(const RunConfig& cfg, const Splits& data, const EvalReport& rep) {
    json j;
    j["config"] = json::parse(cfg.to_json_text());
    j["config_hash"] = cfg.hash();
    j["final_accuracy"] = rep.micro_accuracy;
    j["macro_accuracy"] = rep.macro_accuracy;
    j["per_class"] = rep.per_class_recall;
    j["seed"] = cfg.seed;
    j["test_data_hash"] = data.test_hash;
    j["train_data_hash"] = data.train_hash;
    return j;
}

void print_report(const EvalReport& rep) {
    for (std::size_t c = 0; c < rep.per_class_recall.size(); ++c)
        std::cout << "class " << c << " recall " << fmt4(rep.per_class_recall[c]) << "\n";
    std::cout << "micro accuracy " << fmt4(rep.micro_accuracy) << "\n"
              << "macro accuracy " << fmt4(rep.macro_accuracy) << "\n"
              << confusion_csv(rep);
}

// One full training run into dir: streams metrics.jsonl, then writes
// checkpoint.bin, confusion.csv and summary.json. Shared by train and
// ablate so every run leaves the same artifact set.
EvalReport run_one(const RunConfig& cfg, const Splits& data, const fs::path& dir) {
    fs::create_directories(dir);
    Model model = build_model(cfg);
    const fs::path metrics_tmp = dir / "metrics.jsonl.tmp";
    std::ofstream metrics(metrics_tmp, std::ios::binary);
    if (!metrics) throw std::runtime_error("cannot write " + metrics_tmp.string());
    const auto on_epoch = [&](const EpochStats& st) {
        json line;
        line["epoch"] = st.epoch;
        line["lr"] = st.lr;
        line["l_disc"] = st.l_disc;
        line["l_mfc"] = st.l_mfc;
        line["total"] = st.total;
        // test accuracy is sampled, not per-epoch: every tenth epoch and the last
        const int done = st.epoch + 1;
        if (done % 10 == 0 || done == cfg.train.epochs)
            line["eval_accuracy"] = evaluate(model, data.test).micro_accuracy;
        metrics << line.dump() << '\n';
    };
    run_training(model, data.train, on_epoch);
    metrics.close();
    fs::rename(metrics_tmp, dir / "metrics.jsonl");

    const EvalReport rep = evaluate(model, data.test);
    save_checkpoint(model, cfg.train.epochs, "", (dir / "checkpoint.bin").string());
    atomic_write(dir / "confusion.csv", confusion_csv(rep));
    atomic_write(dir / "summary.json", summary_json(cfg, data, rep).dump(2) + "\n");
    return rep;
}

int cmd_gen_data(const CliOptions& o) {
    const RunConfig cfg = load_config(o);
    const Dataset train = synth_generate(cfg.data.synth(cfg.seed, false));
    const Dataset test = synth_generate(cfg.data.synth(cfg.seed, true));
    const fs::path out = o.out_dir;
    fs::create_directories(out);
    // stage both trees completely before replacing anything
    const fs::path train_tmp = out / ".train.tmp";
    const fs::path test_tmp = out / ".test.tmp";
    fs::remove_all(train_tmp);
    fs::remove_all(test_tmp);
    export_dataset(train, train_tmp.string());
    export_dataset(test, test_tmp.string());
    fs::remove_all(out / "train");
    fs::remove_all(out / "test");
    fs::rename(train_tmp, out / "train");
    fs::rename(test_tmp, out / "test");
    std::cout << "gen-data: " << train.samples.size() << " train / " << test.samples.size()
              << " test samples, hashes " << dataset_hash(train) << " / " << dataset_hash(test)
              << " -> " << out.string() << "\n";
    return 0;
}

int cmd_train(const CliOptions& o) {
    const RunConfig cfg = load_config(o);
    const Splits data = resolve_data(cfg);
    const EvalReport rep = run_one(cfg, data, o.out_dir);
    std::cout << "train: accuracy " << fmt4(rep.micro_accuracy) << " macro "
              << fmt4(rep.macro_accuracy) << " config " << cfg.hash() << " -> " << o.out_dir
              << "\n";
    return 0;
}

int cmd_eval(const CliOptions& o) {
    const fs::path out = o.out_dir;
    const CheckpointData ck = load_checkpoint((out / "checkpoint.bin").string());
    RunConfig cfg = ck.model.cfg;
    if (o.seed_set) cfg.seed = o.seed;
    if (o.synth)
        cfg.data.dir.clear();
    else if (!o.data_dir.empty())
        cfg.data.dir = o.data_dir;
    cfg.validate();
    const Splits data = resolve_data(cfg);
    const EvalReport rep = evaluate(ck.model, data.test);
    print_report(rep);
    atomic_write(out / "confusion.csv", confusion_csv(rep));
    atomic_write(out / "summary.json", summary_json(cfg, data, rep).dump(2) + "\n");
    return 0;
}

int cmd_ablate(const CliOptions& o) {
    const RunConfig base = load_config(o);
    const fs::path out = o.out_dir;
    fs::create_directories(out);
    const Ablation order[] = {Ablation::V1, Ablation::V2, Ablation::V3, Ablation::FULL};

    struct Row {
        Ablation config;
        std::uint64_t seed;
        int exit_code = 0;
        std::string train_hash;
        std::string test_hash;
        EvalReport rep;
    };
    std::vector<Row> rows;
    int first_error = 0;

    for (const std::uint64_t seed : o.seeds) {
        RunConfig seeded = base;
        seeded.seed = seed;
        // one generation per seed, shared verbatim by all four configs
        const Splits data = resolve_data(seeded);
        for (const Ablation a : order) {
            RunConfig cfg = seeded;
            cfg.ablation = a;
            Row row{a, seed, 0, data.train_hash, data.test_hash, {}};
            const fs::path dir =
                out / (std::string(ablation_name(a)) + "_seed" + std::to_string(seed));
            try {
                row.rep = run_one(cfg, data, dir);
                std::cout << "ablate: " << ablation_name(a) << " seed " << seed << " accuracy "
                          << fmt4(row.rep.micro_accuracy) << "\n";
            } catch (const NonFiniteLossError& e) {
                row.exit_code = kExitLoss;
                std::cerr << "error: loss: " << e.what() << " (" << ablation_name(a) << " seed "
                          << seed << ")\n";
            }
            if (row.exit_code != 0 && first_error == 0) first_error = row.exit_code;
            rows.push_back(std::move(row));
        }
    }

    const int n = base.data.num_classes;
    std::ostringstream csv;
    csv << "config,seed,status,train_hash,test_hash,micro_accuracy,macro_accuracy";
    for (int c = 0; c < n; ++c) csv << ",recall_c" << c;
    csv << "\n";
    for (const Row& r : rows) {
        csv << ablation_name(r.config) << ',' << r.seed << ','
            << (r.exit_code == 0 ? "ok" : "error_" + std::to_string(r.exit_code)) << ','
            << r.train_hash << ',' << r.test_hash;
        if (r.exit_code == 0) {
            csv << ',' << fmt4(r.rep.micro_accuracy) << ',' << fmt4(r.rep.macro_accuracy);
            for (int c = 0; c < n; ++c)
                csv << ',' << fmt4(r.rep.per_class_recall[static_cast<std::size_t>(c)]);
        } else {
            for (int c = 0; c < n + 2; ++c) csv << ',';
        }
        csv << "\n";
    }

    // per-config means over the runs that finished
    double mean_micro[4] = {0, 0, 0, 0};
    bool have_mean[4] = {false, false, false, false};
    for (int k = 0; k < 4; ++k) {
        const Ablation a = order[k];
        double micro = 0.0, macro = 0.0;
        std::vector<double> recalls(static_cast<std::size_t>(n), 0.0);
        int count = 0;
        for (const Row& r : rows)
            if (r.config == a && r.exit_code == 0) {
                micro += r.rep.micro_accuracy;
                macro += r.rep.macro_accuracy;
                for (int c = 0; c < n; ++c)
                    recalls[static_cast<std::size_t>(c)] +=
                        r.rep.per_class_recall[static_cast<std::size_t>(c)];
                ++count;
            }
        if (count == 0) continue;
        mean_micro[k] = micro / count;
        have_mean[k] = true;
        csv << ablation_name(a) << ",mean,ok,,," << fmt4(micro / count) << ','
            << fmt4(macro / count);
        for (int c = 0; c < n; ++c) csv << ',' << fmt4(recalls[static_cast<std::size_t>(c)] / count);
        csv << "\n";
    }

    // the benchmark claim: every mechanism beats the bare backbone on average
    std::string verdict = "FAIL";
    std::string detail;
    if (have_mean[0] && have_mean[1] && have_mean[2] && have_mean[3]) {
        const bool pass = mean_micro[3] > mean_micro[0] && mean_micro[1] > mean_micro[0] &&
                          mean_micro[2] > mean_micro[0];
        verdict = pass ? "PASS" : "FAIL";
        detail = "FULL " + fmt4(mean_micro[3]) + " vs V1 " + fmt4(mean_micro[0]) + "; V2 " +
                 fmt4(mean_micro[1]) + "; V3 " + fmt4(mean_micro[2]);
    } else {
        detail = "missing results for at least one config";
    }
    csv << "verdict," << verdict << ',' << detail << "\n";
    atomic_write(out / "ablation.csv", csv.str());
    std::cout << "ablate: verdict " << verdict << " (" << detail << ") -> "
              << (out / "ablation.csv").string() << "\n";
    return first_error;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"elongated-blob ship classifier: synthetic data, training, evaluation, ablation"};
    app.require_subcommand(1);
    CliOptions o;
    int rc = 0;

    const auto guarded = [&rc](const std::function<int()>& body) {
        try {
            rc = body();
        } catch (const ConfigError& e) {
            std::cerr << "error: config: " << e.what() << "\n";
            rc = kExitConfig;
        } catch (const DataError& e) {
            std::cerr << "error: data: " << e.what() << "\n";
            rc = kExitData;
        } catch (const NonFiniteLossError& e) {
            std::cerr << "error: loss: " << e.what() << "\n";
            rc = kExitLoss;
        } catch (const CheckpointError& e) {
            std::cerr << "error: checkpoint: " << e.what() << "\n";
            rc = e.kind == CheckpointError::Kind::Missing ? kExitData : kExitVersion;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            rc = kExitError;
        }
    };

    const auto add_config = [&](CLI::App* c) {
        c->add_option("--config", o.config_path, "JSON run config; built-in defaults when omitted");
    };
    const auto add_out = [&](CLI::App* c) {
        c->add_option("--out", o.out_dir, "output directory")->required();
    };
    const auto add_seed = [&](CLI::App* c) {
        c->add_option("--seed", o.seed, "root seed, overrides the config value");
    };
    const auto add_source = [&](CLI::App* c) {
        CLI::Option* d =
            c->add_option("--data", o.data_dir, "dataset directory with train/ and test/ trees");
        CLI::Option* s = c->add_flag("--synth", o.synth, "generate synthetic data from the config");
        d->excludes(s);
        s->excludes(d);
    };

    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset as train/ and test/ image trees");
    add_config(gen);
    add_out(gen);
    add_seed(gen);
    gen->callback([&, gen] {
        o.seed_set = gen->count("--seed") > 0;
        guarded([&] { return cmd_gen_data(o); });
    });

    CLI::App* train = app.add_subcommand("train", "train a model, write metrics, checkpoint and summary");
    add_config(train);
    add_out(train);
    add_seed(train);
    add_source(train);
    train->add_option("--ablation", o.ablation, "V1, V2, V3 or FULL, overrides the config");
    train->callback([&, train] {
        o.seed_set = train->count("--seed") > 0;
        guarded([&] { return cmd_train(o); });
    });

    CLI::App* eval = app.add_subcommand("eval", "evaluate the checkpoint in --out and write its report");
    add_out(eval);
    add_seed(eval);
    add_source(eval);
    eval->callback([&, eval] {
        o.seed_set = eval->count("--seed") > 0;
        guarded([&] { return cmd_eval(o); });
    });

    CLI::App* abl = app.add_subcommand("ablate", "run the V1/V2/V3/FULL grid over a seed list");
    add_config(abl);
    add_out(abl);
    add_source(abl);
    abl->add_option("--seeds", o.seeds, "comma separated root seeds")->delimiter(',');
    abl->callback([&] { guarded([&] { return cmd_ablate(o); }); });

    CLI11_PARSE(app, argc, argv);
    return rc;
}
