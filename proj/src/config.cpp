#include "sfdmc/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sfdmc/errors.hpp"
#include "sfdmc/rng.hpp"

using json = nlohmann::json;

namespace sfdmc {

const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::V1: return "V1";
        case Ablation::V2: return "V2";
        case Ablation::V3: return "V3";
        case Ablation::FULL: return "FULL";
    }
    return "FULL";
}

Ablation ablation_from_name(const std::string& name) {
    if (name == "V1") return Ablation::V1;
    if (name == "V2") return Ablation::V2;
    if (name == "V3") return Ablation::V3;
    if (name == "FULL") return Ablation::FULL;
    throw ConfigError("unknown ablation '" + name + "' (expected V1, V2, V3 or FULL)");
}

SynthConfig DataParams::synth(std::uint64_t seed, bool test_split) const {
    SynthConfig cfg;
    cfg.num_classes = num_classes;
    cfg.modes_per_class = modes_per_class;
    cfg.inter_class_overlap = inter_class_overlap;
    cfg.speckle_sigma = speckle_sigma;
    cfg.image_size = image_size;
    cfg.samples_per_class = test_split ? test_samples_per_class : samples_per_class;
    cfg.seed = derive_seed(seed, test_split ? "data.test" : "data.train");
    return cfg;
}

void RunConfig::validate() const {
    if (!std::isfinite(train.lambda1) || !std::isfinite(train.lambda2))
        throw ConfigError("loss weights must be finite");
    if (train.lambda1 < 0.0 || train.lambda2 < 0.0)
        throw ConfigError("loss weights must be non-negative");
    if (train.lr0 <= 0.0) throw ConfigError("lr0 must be positive");
    if (train.decay_factor <= 0.0 || train.decay_factor > 1.0)
        throw ConfigError("decay_factor must lie in (0,1]");
    if (train.decay_every_epochs < 1) throw ConfigError("decay_every_epochs must be at least 1");
    if (train.warmup_epochs < 0) throw ConfigError("warmup_epochs must be non-negative");
    if (train.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (data.num_classes < 2) throw ConfigError("need at least 2 classes");
    if (train.batch_size < 2 * data.num_classes)
        throw ConfigError("batch_size " + std::to_string(train.batch_size) +
                          " cannot give every one of " + std::to_string(data.num_classes) +
                          " classes 2 samples per batch");

    extractor.validate();
    if (extractor.input_size != data.image_size)
        throw ConfigError("extractor input_size " + std::to_string(extractor.input_size) +
                          " does not match data image_size " + std::to_string(data.image_size));

    if (sfd.psi < 0.0) throw ConfigError("psi must be non-negative");

    if (classifier.centers_per_class < 1)
        throw ConfigError("centers_per_class must be at least 1");
    if (classifier.scale <= 0.0) throw ConfigError("classifier scale must be positive");
    if (classifier.delta < 0.0 || classifier.delta >= 1.0)
        throw ConfigError("delta must lie in [0,1)");
    if (extractor.embed_dim < classifier.centers_per_class)
        throw ConfigError("embed_dim " + std::to_string(extractor.embed_dim) +
                          " cannot hold " + std::to_string(classifier.centers_per_class) +
                          " orthogonal centers");
    if (classifier.ortho_all &&
        extractor.embed_dim < data.num_classes * classifier.centers_per_class)
        throw ConfigError("ortho_all needs embed_dim >= num_classes * centers_per_class");

    if (data.dir.empty()) {
        data.synth(seed, false).validate();
        if (data.test_samples_per_class < 1)
            throw ConfigError("test_samples_per_class must be at least 1");
    }
    if (data.augment_to < 0) throw ConfigError("augment_to must be non-negative");
}

namespace {

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("unknown config key '" +
                              (path.empty() ? it.key() : path + "." + it.key()) + "'");
    }
}

const json* sub_object(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) return nullptr;
    if (!it->is_object())
        throw ConfigError("config key '" + (path.empty() ? std::string(key) : path + "." + key) +
                          "' must be an object");
    return &*it;
}

template <typename T>
void fetch(const json& j, const char* key, const std::string& path, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + (path.empty() ? std::string(key) : path + "." + key) +
                          "' has the wrong type");
    }
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    check_keys(j, "", {"seed", "ablation", "train", "extractor", "sfd", "classifier", "data"});

    RunConfig cfg;
    if (auto it = j.find("seed"); it != j.end()) {
        // get<uint64_t> would wrap negatives silently
        if (!it->is_number_unsigned() &&
            !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
            throw ConfigError("config key 'seed' must be a non-negative integer");
        cfg.seed = it->get<std::uint64_t>();
    }
    if (auto it = j.find("ablation"); it != j.end()) {
        if (!it->is_string()) throw ConfigError("config key 'ablation' has the wrong type");
        cfg.ablation = ablation_from_name(it->get<std::string>());
    }

    if (const json* t = sub_object(j, "train", "")) {
        check_keys(*t, "train",
                   {"lambda1", "lambda2", "batch_size", "epochs", "lr0", "decay_factor",
                    "decay_every_epochs", "warmup_epochs"});
        fetch(*t, "lambda1", "train", cfg.train.lambda1);
        fetch(*t, "lambda2", "train", cfg.train.lambda2);
        fetch(*t, "batch_size", "train", cfg.train.batch_size);
        fetch(*t, "epochs", "train", cfg.train.epochs);
        fetch(*t, "lr0", "train", cfg.train.lr0);
        fetch(*t, "decay_factor", "train", cfg.train.decay_factor);
        fetch(*t, "decay_every_epochs", "train", cfg.train.decay_every_epochs);
        fetch(*t, "warmup_epochs", "train", cfg.train.warmup_epochs);
    }

    if (const json* e = sub_object(j, "extractor", "")) {
        check_keys(*e, "extractor",
                   {"input_size", "block_counts", "base_channels", "embed_dim", "dropout_keep"});
        fetch(*e, "input_size", "extractor", cfg.extractor.input_size);
        fetch(*e, "block_counts", "extractor", cfg.extractor.block_counts);
        fetch(*e, "base_channels", "extractor", cfg.extractor.base_channels);
        fetch(*e, "embed_dim", "extractor", cfg.extractor.embed_dim);
        fetch(*e, "dropout_keep", "extractor", cfg.extractor.dropout_keep);
    }

    if (const json* s = sub_object(j, "sfd", "")) {
        check_keys(*s, "sfd", {"psi"});
        fetch(*s, "psi", "sfd", cfg.sfd.psi);
    }

    if (const json* c = sub_object(j, "classifier", "")) {
        check_keys(*c, "classifier", {"centers_per_class", "scale", "delta", "ortho_all"});
        fetch(*c, "centers_per_class", "classifier", cfg.classifier.centers_per_class);
        fetch(*c, "scale", "classifier", cfg.classifier.scale);
        fetch(*c, "delta", "classifier", cfg.classifier.delta);
        fetch(*c, "ortho_all", "classifier", cfg.classifier.ortho_all);
    }

    if (const json* d = sub_object(j, "data", "")) {
        check_keys(*d, "data",
                   {"dir", "num_classes", "modes_per_class", "inter_class_overlap",
                    "speckle_sigma", "image_size", "samples_per_class",
                    "test_samples_per_class", "augment_to"});
        fetch(*d, "dir", "data", cfg.data.dir);
        fetch(*d, "num_classes", "data", cfg.data.num_classes);
        fetch(*d, "modes_per_class", "data", cfg.data.modes_per_class);
        fetch(*d, "inter_class_overlap", "data", cfg.data.inter_class_overlap);
        fetch(*d, "speckle_sigma", "data", cfg.data.speckle_sigma);
        fetch(*d, "image_size", "data", cfg.data.image_size);
        fetch(*d, "samples_per_class", "data", cfg.data.samples_per_class);
        fetch(*d, "test_samples_per_class", "data", cfg.data.test_samples_per_class);
        fetch(*d, "augment_to", "data", cfg.data.augment_to);
    }

    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string RunConfig::to_json_text() const {
    json j;
    j["seed"] = seed;
    j["ablation"] = ablation_name(ablation);
    j["train"] = {{"lambda1", train.lambda1},
                  {"lambda2", train.lambda2},
                  {"batch_size", train.batch_size},
                  {"epochs", train.epochs},
                  {"lr0", train.lr0},
                  {"decay_factor", train.decay_factor},
                  {"decay_every_epochs", train.decay_every_epochs},
                  {"warmup_epochs", train.warmup_epochs}};
    j["extractor"] = {{"input_size", extractor.input_size},
                      {"block_counts", extractor.block_counts},
                      {"base_channels", extractor.base_channels},
                      {"embed_dim", extractor.embed_dim},
                      {"dropout_keep", extractor.dropout_keep}};
    j["sfd"] = {{"psi", sfd.psi}};
    j["classifier"] = {{"centers_per_class", classifier.centers_per_class},
                       {"scale", classifier.scale},
                       {"delta", classifier.delta},
                       {"ortho_all", classifier.ortho_all}};
    j["data"] = {{"dir", data.dir},
                 {"num_classes", data.num_classes},
                 {"modes_per_class", data.modes_per_class},
                 {"inter_class_overlap", data.inter_class_overlap},
                 {"speckle_sigma", data.speckle_sigma},
                 {"image_size", data.image_size},
                 {"samples_per_class", data.samples_per_class},
                 {"test_samples_per_class", data.test_samples_per_class},
                 {"augment_to", data.augment_to}};
    return j.dump();  // nlohmann objects iterate sorted by key
}

std::string RunConfig::hash() const {
    const std::string text = to_json_text();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

}  // namespace sfdmc
