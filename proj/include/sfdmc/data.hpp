#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfdmc/tensor.hpp"

namespace sfdmc {

struct Sample {
    Tensor image;  // [s x s x 1], values in [0,1]
    int label = -1;
    std::string source;  // "synth:c{class}:m{mode}" or the file path
};

struct Dataset {
    std::vector<Sample> samples;
    int num_classes = 0;
    int image_size = 0;
};

// Synthetic stand-in for ship chips: each class is a mixture of
// modes_per_class elongated bright blobs whose length, width and orientation
// follow a parameter circle. inter_class_overlap slides a class's higher
// modes toward the next class's territory, which is what manufactures large
// within-class variance next to small between-class gaps. Multiplicative
// speckle with std speckle_sigma is applied per pixel, then clipped to
// [0,1].
struct SynthConfig {
    int num_classes = 3;
    int modes_per_class = 2;
    double inter_class_overlap = 0.6;
    double speckle_sigma = 0.15;
    int image_size = 32;
    int samples_per_class = 40;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
};

// Deterministic per (config, seed); each sample draws from its own RNG
// stream keyed by (seed, class, index), so generation order never matters.
// Samples come out grouped by class, exactly balanced.
Dataset synth_generate(const SynthConfig& cfg);

// align-corners-false bilinear resampling to target x target. Identity when
// the size already matches; constants stay exact.
Tensor resize_bilinear(const Tensor& img, int target);

// One subdirectory per class, labels by sorted subdirectory name. Loads
// *.png and *.pgm (any case), ignores other directory entries, resizes
// everything to image_size. Throws DataError for unreadable or non-gray
// files and for class directories with no usable images.
Dataset load_dir(const std::string& root, int image_size);

// Resamples every class to exactly per_class_target samples: a class at or
// below the target keeps all originals and adds uniform with-replacement
// copies; a class above it keeps a without-replacement random subset.
Dataset augment_resample(const Dataset& ds, int per_class_target, std::uint64_t seed);

// Writes the load_dir layout: class_{label:02}/sample_{i:05}.pgm under dir.
void export_dataset(const Dataset& ds, const std::string& dir);

// FNV-1a over labels and pixel bytes, as a 16-digit hex string. Stable
// across runs, used to confirm two runs saw the same data.
std::string dataset_hash(const Dataset& ds);

}  // namespace sfdmc
