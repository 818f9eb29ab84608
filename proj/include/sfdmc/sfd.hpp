#pragma once

#include <vector>

#include "sfdmc/extractor.hpp"
#include "sfdmc/tensor.hpp"

namespace sfdmc {

struct SfdConfig {
    double psi = 0.1;  // hinge margin
};

// Hardest partners for one sample within its batch: the most similar
// different-class sample (inter) and the least similar same-class sample
// (inner), both by cosine over the embedding vectors.
struct MinedPair {
    int inter_idx = -1;
    int inner_idx = -1;
    double inter_sim = 0.0;
    double inner_sim = 0.0;
};

using MinedPairs = std::vector<MinedPair>;

enum class SelectMode { Inter, Inner };

// Channel index sets for one sample. p_neg holds channels whose partial
// similarity to the inter pair is positive (shared appearance to suppress),
// p_pos holds channels whose partial similarity to the inner pair is
// negative (within-class disagreement to pull together). Channels at exactly
// zero belong to neither set.
struct ChannelSelection {
    std::vector<int> p_neg;
    std::vector<int> p_pos;
};

// Plain cosine over flattened values, clamped to [-1, 1]. Both-zero inputs
// fall back to 0 via the epsilon guard.
double cosine_sim(const Tensor& a, const Tensor& b, double epsilon = 1e-12);

// Brute-force hardest-pair search, O(B^2) cosines on detached values. Ties
// break toward the lowest index. Throws MiningError when a sample has no
// same-class or no different-class partner in the batch.
MinedPairs mine_pairs(const std::vector<FeatureVector>& vectors, const std::vector<int>& labels);

// Per-channel partial similarity between two maps; keeps strictly positive
// channels in Inter mode and strictly negative ones in Inner mode. Returns
// the sorted index set. Operates on detached values.
std::vector<int> select_channels(const FeatureMaps& maps_a, const FeatureMaps& maps_b,
                                 SelectMode mode);

// Hinge loss over the batch, differentiable through the per-channel cosines
// of the selected sets; pair indices and selections stay constant. An empty
// set contributes 0 in place of its mean, so a sample with both sets empty
// costs exactly psi.
Tensor disc_loss(Tape& tp, const std::vector<FeatureMaps>& batch_maps, const MinedPairs& mined,
                 const std::vector<ChannelSelection>& selections, const SfdConfig& cfg);

}  // namespace sfdmc
