#include "sfdmc/extractor.hpp"

#include <cmath>

#include "sfdmc/errors.hpp"

namespace sfdmc {

void ExtractorConfig::validate() const {
    if (input_size < 8 || input_size % 16 != 0)
        throw ConfigError("extractor.input_size must be >= 8 and divisible by 16, got " +
                          std::to_string(input_size));
    for (int b : block_counts)
        if (b < 1) throw ConfigError("extractor.block_counts entries must be >= 1");
    if (base_channels < 1)
        throw ConfigError("extractor.base_channels must be >= 1, got " +
                          std::to_string(base_channels));
    if (embed_dim < 1)
        throw ConfigError("extractor.embed_dim must be >= 1, got " + std::to_string(embed_dim));
    if (!(dropout_keep > 0.0) || dropout_keep > 1.0)
        throw ConfigError("extractor.dropout_keep must lie in (0, 1], got " +
                          std::to_string(dropout_keep));
}

namespace {

Tensor uniform_bound(std::vector<int> shape, double bound, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

// He bound for the ReLU conv stack: variance 2/fan_in keeps activation
// magnitude flat through the 18 conv layers. Anything weaker shrinks the
// embedding norm geometrically, and the 1/||v|| factor in the cosine
// gradient then blows up the first update.
Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    return uniform_bound(std::move(shape), std::sqrt(6.0 / fan_in), rng);
}

// Conv biases start slightly positive so every channel is live at the
// first step; channels the losses want quiet must be argued down rather
// than starting dead.
Tensor constant_bias(int n) {
    Tensor t = Tensor::zeros({n});
    for (double& v : t.data) v = 0.05;
    return t;
}

}  // namespace

Extractor::Extractor(ExtractorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    int cin = 1;
    for (int s = 0; s < 4; ++s) {
        const int cout = cfg_.base_channels << s;
        const std::string stage = "stage" + std::to_string(s);
        names_.push_back(stage + ".down.weight");
        params_.push_back(he_uniform({3, 3, cin, cout}, 3 * 3 * cin, rng));
        names_.push_back(stage + ".down.bias");
        params_.push_back(constant_bias(cout));
        for (int b = 0; b < cfg_.block_counts[static_cast<std::size_t>(s)]; ++b) {
            const std::string block = stage + ".block" + std::to_string(b);
            names_.push_back(block + ".weight");
            params_.push_back(he_uniform({3, 3, cout, cout}, 3 * 3 * cout, rng));
            names_.push_back(block + ".bias");
            params_.push_back(constant_bias(cout));
        }
        cin = cout;
    }
    names_.push_back("dense.weight");
    params_.push_back(uniform_bound({cfg_.map_channels(), cfg_.embed_dim},
                                    1.0 / std::sqrt(cfg_.map_channels()), rng));
    names_.push_back("dense.bias");
    params_.push_back(Tensor::zeros({cfg_.embed_dim}));
}

std::size_t Extractor::param_count() const {
    std::size_t n = 0;
    for (const Tensor& p : params_) n += p.size();
    return n;
}

std::vector<Tensor> Extractor::trace(Tape& tp) const {
    std::vector<Tensor> traced;
    traced.reserve(params_.size());
    for (const Tensor& p : params_) traced.push_back(tp.leaf(p));
    return traced;
}

FeatureMaps Extractor::forward_maps(Tape& tp, const std::vector<Tensor>& traced,
                                    const Tensor& image, int sample_id) const {
    if (image.rank() != 3 || image.shape[0] != cfg_.input_size ||
        image.shape[1] != cfg_.input_size || image.shape[2] != 1)
        throw ShapeError("extractor expects input [" + std::to_string(cfg_.input_size) + "x" +
                         std::to_string(cfg_.input_size) + "x1], got " + image.shape_str());
    if (traced.size() != params_.size())
        throw ShapeError("traced parameter list has " + std::to_string(traced.size()) +
                         " entries, extractor owns " + std::to_string(params_.size()));

    std::size_t p = 0;
    Tensor x = image;
    for (int s = 0; s < 4; ++s) {
        x = relu(tp, bias_add(tp, conv2d(tp, x, traced[p], 2, 1), traced[p + 1]));
        p += 2;
        for (int b = 0; b < cfg_.block_counts[static_cast<std::size_t>(s)]; ++b) {
            x = relu(tp, bias_add(tp, conv2d(tp, x, traced[p], 1, 1), traced[p + 1]));
            p += 2;
        }
    }
    return FeatureMaps{x, sample_id};
}

FeatureVector Extractor::embed(Tape& tp, const std::vector<Tensor>& traced,
                               const FeatureMaps& maps, bool training, Rng* dropout_rng) const {
    const std::size_t dw = params_.size() - 2;
    Tensor pooled = global_avg_pool(tp, maps.values);
    Tensor row = reshape(tp, pooled, {1, cfg_.map_channels()});
    Tensor densed = bias_add(tp, matmul(tp, row, traced[dw]), traced[dw + 1]);
    Tensor v = reshape(tp, densed, {cfg_.embed_dim});
    if (training && cfg_.dropout_keep < 1.0) {
        if (!dropout_rng)
            throw TapeError("extractor.embed: training dropout needs an rng stream");
        Tensor mask = Tensor::zeros({cfg_.embed_dim});
        const double inv_keep = 1.0 / cfg_.dropout_keep;
        for (double& m : mask.data)
            m = dropout_rng->uniform() < cfg_.dropout_keep ? inv_keep : 0.0;
        v = mul(tp, v, mask);  // mask is a tape constant, not a leaf
    }
    return FeatureVector{v, maps.sample_id};
}

}  // namespace sfdmc
