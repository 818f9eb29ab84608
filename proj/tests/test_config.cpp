#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cctype>
#include <string>

#include "sfdmc/config.hpp"
#include "sfdmc/errors.hpp"

using namespace sfdmc;

namespace {

// Message carried by the ConfigError a parse raises, empty when it parses.
std::string parse_error(const std::string& text) {
    try {
        RunConfig::from_json_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("an empty document yields the stock configuration") {
    const RunConfig cfg = RunConfig::from_json_text("{}");
    CHECK(cfg.seed == 1);
    CHECK(cfg.ablation == Ablation::FULL);

    CHECK(cfg.train.lambda1 == 1.0);
    CHECK(cfg.train.lambda2 == 0.5);
    CHECK(cfg.train.batch_size == 6);
    CHECK(cfg.train.epochs == 70);
    CHECK(cfg.train.lr0 == 0.01);
    CHECK(cfg.train.decay_factor == 0.5);
    CHECK(cfg.train.decay_every_epochs == 25);
    CHECK(cfg.train.warmup_epochs == 5);

    CHECK(cfg.extractor.input_size == 48);
    CHECK(cfg.extractor.base_channels == 4);
    CHECK(cfg.extractor.embed_dim == 32);
    CHECK(cfg.extractor.dropout_keep == 1.0);

    CHECK(cfg.sfd.psi == 0.1);

    CHECK(cfg.classifier.centers_per_class == 4);
    CHECK(cfg.classifier.scale == 8.0);
    CHECK(cfg.classifier.delta == 0.02);
    CHECK_FALSE(cfg.classifier.ortho_all);

    CHECK(cfg.data.dir.empty());
    CHECK(cfg.data.num_classes == 3);
    CHECK(cfg.data.modes_per_class == 2);
    CHECK(cfg.data.inter_class_overlap == 0.6);
    CHECK(cfg.data.speckle_sigma == 0.4);
    CHECK(cfg.data.image_size == 48);
    CHECK(cfg.data.samples_per_class == 40);
    CHECK(cfg.data.test_samples_per_class == 40);
    CHECK(cfg.data.augment_to == 0);

    CHECK(cfg.to_json_text() == RunConfig().to_json_text());
}

TEST_CASE("canonical text is a fixed point of parse and print") {
    RunConfig cfg;
    cfg.seed = 42;
    cfg.ablation = Ablation::V2;
    cfg.train.lambda2 = 0.25;
    const std::string text = cfg.to_json_text();

    const RunConfig back = RunConfig::from_json_text(text);
    CHECK(back.seed == 42);
    CHECK(back.ablation == Ablation::V2);
    CHECK(back.train.lambda2 == 0.25);
    CHECK(back.to_json_text() == text);
    CHECK(back.hash() == cfg.hash());
}

TEST_CASE("key order and number spelling do not change the canonical form") {
    const RunConfig a = RunConfig::from_json_text(
        R"({"seed": 7, "train": {"lr0": 1e-2, "epochs": 50}})");
    const RunConfig b = RunConfig::from_json_text(
        R"({"train": {"epochs": 50.0, "lr0": 0.01}, "seed": 7})");
    CHECK(a.to_json_text() == b.to_json_text());
    CHECK(a.hash() == b.hash());

    RunConfig c;
    c.seed = 8;
    CHECK(c.hash() != a.hash());
    CHECK(a.hash().size() == 16);
    for (char ch : a.hash()) CHECK(std::isxdigit(static_cast<unsigned char>(ch)));
}

TEST_CASE("unknown keys are rejected with their dotted path") {
    CHECK(parse_error(R"({"sedd": 1})").find("'sedd'") != std::string::npos);
    CHECK(parse_error(R"({"train": {"lambda3": 1}})").find("'train.lambda3'") !=
          std::string::npos);
    CHECK(parse_error(R"({"classifier": {"margin": 0.1}})").find("'classifier.margin'") !=
          std::string::npos);
    CHECK(parse_error(R"({"data": {"overlap": 0.5}})").find("'data.overlap'") !=
          std::string::npos);
}

TEST_CASE("malformed documents and wrong value types are configuration errors") {
    CHECK_THROWS_AS(RunConfig::from_json_text("not json"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"train": 5})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"train": {"epochs": "ten"}})"),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"seed": -1})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"ablation": "V4"})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"ablation": 2})"), ConfigError);
}

TEST_CASE("ablation names round trip and bad names are rejected") {
    for (Ablation a : {Ablation::V1, Ablation::V2, Ablation::V3, Ablation::FULL})
        CHECK(ablation_from_name(ablation_name(a)) == a);
    CHECK_THROWS_AS(ablation_from_name("v1"), ConfigError);
    CHECK_THROWS_AS(ablation_from_name(""), ConfigError);

    const RunConfig cfg = RunConfig::from_json_text(R"({"ablation": "V3"})");
    CHECK(cfg.ablation == Ablation::V3);
}

TEST_CASE("validation rejects out-of-range settings") {
    const auto rejected = [](const std::string& text) {
        try {
            RunConfig::from_json_text(text);
        } catch (const ConfigError&) {
            return true;
        }
        return false;
    };

    CHECK(rejected(R"({"train": {"lambda1": -1}})"));
    CHECK(rejected(R"({"train": {"lr0": 0}})"));
    CHECK(rejected(R"({"train": {"decay_factor": 0}})"));
    CHECK(rejected(R"({"train": {"decay_factor": 1.5}})"));
    CHECK(rejected(R"({"train": {"decay_every_epochs": 0}})"));
    CHECK(rejected(R"({"train": {"warmup_epochs": -1}})"));
    CHECK(rejected(R"({"train": {"epochs": 0}})"));
    CHECK(rejected(R"({"train": {"batch_size": 5}})"));  // below 2 per class for 3 classes
    CHECK(rejected(R"({"data": {"num_classes": 1}})"));
    CHECK(rejected(R"({"sfd": {"psi": -0.1}})"));
    CHECK(rejected(R"({"classifier": {"centers_per_class": 0}})"));
    CHECK(rejected(R"({"classifier": {"scale": 0}})"));
    CHECK(rejected(R"({"classifier": {"delta": 1.0}})"));
    CHECK(rejected(R"({"classifier": {"delta": -0.01}})"));
    CHECK(rejected(R"({"classifier": {"centers_per_class": 40}})"));  // exceeds embed_dim
    // 3 classes x 12 centers = 36 directions cannot all be orthogonal in 32 dims,
    // while the stock 3 x 10 = 30 can
    CHECK(rejected(R"({"classifier": {"ortho_all": true, "centers_per_class": 12}})"));
    CHECK_NOTHROW(RunConfig::from_json_text(R"({"classifier": {"ortho_all": true}})"));
    CHECK(rejected(R"({"extractor": {"input_size": 16}})"));    // mismatches image_size
    CHECK(rejected(R"({"data": {"samples_per_class": 0}})"));
    CHECK(rejected(R"({"data": {"test_samples_per_class": 0}})"));
    CHECK(rejected(R"({"data": {"augment_to": -1}})"));

    // a directory source skips the synthetic-generator checks
    CHECK_NOTHROW(RunConfig::from_json_text(
        R"({"data": {"dir": "/somewhere", "samples_per_class": 0}})"));

    // matching resize is fine: the extractor sees images at its own size
    CHECK_NOTHROW(RunConfig::from_json_text(
        R"({"extractor": {"input_size": 16}, "data": {"image_size": 16}})"));
}

TEST_CASE("seed and ablation survive the canonical round trip") {
    const RunConfig cfg = RunConfig::from_json_text(
        R"({"seed": 123456789012345, "ablation": "V1"})");
    CHECK(cfg.seed == 123456789012345ULL);
    const RunConfig back = RunConfig::from_json_text(cfg.to_json_text());
    CHECK(back.seed == cfg.seed);
    CHECK(back.ablation == Ablation::V1);
}
