#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sfdmc/rng.hpp"
#include "sfdmc/tensor.hpp"

namespace sfdmc {

// Four stages of [3x3 conv -> relu] blocks. Each stage opens with a stride-2
// 3x3 conv that halves the spatial extent and doubles the channel count, so
// the maps come out at input_size/16 with base_channels*8 channels. No
// normalization layers and no skip connections; downsampling is always by
// strided convolution, never pooling.
struct ExtractorConfig {
    int input_size = 48;
    std::array<int, 4> block_counts{1, 1, 1, 1};
    int base_channels = 4;
    int embed_dim = 32;
    double dropout_keep = 1.0;

    int map_size() const { return input_size / 16; }
    int map_channels() const { return base_channels * 8; }
    void validate() const;  // throws ConfigError
};

struct FeatureMaps {
    Tensor values;  // [h x w x c]
    int sample_id = -1;
};

struct FeatureVector {
    Tensor values;  // [embed_dim]
    int sample_id = -1;
};

class Extractor {
public:
    Extractor(ExtractorConfig cfg, std::uint64_t seed);

    const ExtractorConfig& config() const { return cfg_; }
    std::size_t param_count() const;

    const std::vector<std::string>& param_names() const { return names_; }
    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }

    // Registers every parameter on the tape, in declaration order. The
    // returned handles feed forward_maps/embed and index the gradient map.
    std::vector<Tensor> trace(Tape& tp) const;

    // image [s x s x 1] -> maps [s/16 x s/16 x base*8]
    FeatureMaps forward_maps(Tape& tp, const std::vector<Tensor>& traced, const Tensor& image,
                             int sample_id = -1) const;

    // maps -> GAP -> dense -> dropout. The mask is drawn from `dropout_rng`
    // and scaled by 1/keep; at test time (training == false) the head is
    // deterministic and no draws are consumed. keep == 1 also skips draws.
    FeatureVector embed(Tape& tp, const std::vector<Tensor>& traced, const FeatureMaps& maps,
                        bool training, Rng* dropout_rng) const;

private:
    ExtractorConfig cfg_;
    std::vector<std::string> names_;
    std::vector<Tensor> params_;
};

inline Extractor build_extractor(const ExtractorConfig& cfg, std::uint64_t seed) {
    return Extractor(cfg, seed);
}

}  // namespace sfdmc
