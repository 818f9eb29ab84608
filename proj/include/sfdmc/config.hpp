#pragma once

#include <cstdint>
#include <string>

#include "sfdmc/data.hpp"
#include "sfdmc/extractor.hpp"
#include "sfdmc/sfd.hpp"

namespace sfdmc {

// Which pieces of the model are live. V1 is the plain backbone (single
// center per class, no margin, no discrimination loss), V2 adds the
// discrimination loss only, V3 the multi-center classifier only, FULL both.
// The variants are realized by degenerating parameters, not by separate
// code paths, so V1 == V3 with H=1, delta=0, lambda2=0 holds exactly.
enum class Ablation { V1, V2, V3, FULL };

const char* ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);  // throws ConfigError

struct TrainParams {
    double lambda1 = 1.0;
    double lambda2 = 0.5;
    int batch_size = 6;
    int epochs = 70;
    double lr0 = 0.01;
    double decay_factor = 0.5;
    int decay_every_epochs = 25;
    int warmup_epochs = 5;
};

struct ClassifierParams {
    int centers_per_class = 4;
    double scale = 8.0;
    double delta = 0.02;
    bool ortho_all = false;
};

// Data source: synthetic generation parameters, or, when dir is non-empty,
// a dataset directory holding train/ and test/ class-subfolder trees (the
// gen-data layout). test_samples_per_class sizes the held out synthetic
// split; augment_to > 0 resamples every training class to that count
// before training.
struct DataParams {
    std::string dir;
    int num_classes = 3;
    int modes_per_class = 2;
    double inter_class_overlap = 0.6;
    double speckle_sigma = 0.4;
    int image_size = 48;
    int samples_per_class = 40;
    int test_samples_per_class = 40;
    int augment_to = 0;

    SynthConfig synth(std::uint64_t seed, bool test_split) const;
};

struct RunConfig {
    std::uint64_t seed = 1;
    Ablation ablation = Ablation::FULL;
    TrainParams train;
    ExtractorConfig extractor;
    SfdConfig sfd;
    ClassifierParams classifier;
    DataParams data;

    void validate() const;  // throws ConfigError

    // Strict parse: unknown keys anywhere are a ConfigError naming the key
    // path; missing keys keep their defaults. validate() runs on the result.
    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_json_file(const std::string& path);

    // Canonical form: keys sorted, doubles in shortest round-trip notation;
    // two configs are equal exactly when their canonical texts are.
    std::string to_json_text() const;

    // FNV-1a of the canonical text, 16 hex digits.
    std::string hash() const;
};

}  // namespace sfdmc
