#include "sfdmc/sfd.hpp"

#include <algorithm>
#include <cmath>

#include "sfdmc/errors.hpp"

namespace sfdmc {

double cosine_sim(const Tensor& a, const Tensor& b, double epsilon) {
    if (a.size() != b.size())
        throw ShapeError("cosine_sim needs equal sizes, got " + a.shape_str() + " and " +
                         b.shape_str());
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        ab += a.data[i] * b.data[i];
        aa += a.data[i] * a.data[i];
        bb += b.data[i] * b.data[i];
    }
    const double denom = std::max(std::sqrt(aa), epsilon) * std::max(std::sqrt(bb), epsilon);
    return std::clamp(ab / denom, -1.0, 1.0);
}

MinedPairs mine_pairs(const std::vector<FeatureVector>& vectors,
                      const std::vector<int>& labels) {
    if (vectors.size() != labels.size())
        throw MiningError("mine_pairs: " + std::to_string(vectors.size()) + " vectors vs " +
                          std::to_string(labels.size()) + " labels");
    const int n = static_cast<int>(vectors.size());
    MinedPairs out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        MinedPair& p = out[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double s = cosine_sim(vectors[static_cast<std::size_t>(i)].values,
                                        vectors[static_cast<std::size_t>(j)].values);
            if (labels[static_cast<std::size_t>(j)] != labels[static_cast<std::size_t>(i)]) {
                if (p.inter_idx < 0 || s > p.inter_sim) {
                    p.inter_idx = j;
                    p.inter_sim = s;
                }
            } else {
                if (p.inner_idx < 0 || s < p.inner_sim) {
                    p.inner_idx = j;
                    p.inner_sim = s;
                }
            }
        }
        if (p.inter_idx < 0)
            throw MiningError("mine_pairs: sample " + std::to_string(i) +
                              " has no different-class partner in the batch");
        if (p.inner_idx < 0)
            throw MiningError("mine_pairs: sample " + std::to_string(i) +
                              " has no same-class partner in the batch");
    }
    return out;
}

std::vector<int> select_channels(const FeatureMaps& maps_a, const FeatureMaps& maps_b,
                                 SelectMode mode) {
    const Tensor& a = maps_a.values;
    const Tensor& b = maps_b.values;
    if (a.shape != b.shape)
        throw ShapeError("select_channels needs matching maps, got " + a.shape_str() + " and " +
                         b.shape_str());
    if (a.rank() != 3)
        throw ShapeError("select_channels expects [h x w x c] maps, got " + a.shape_str());
    const int hw = a.shape[0] * a.shape[1];
    const int c = a.shape[2];
    std::vector<int> picked;
    Tensor sa = Tensor::zeros({hw});
    Tensor sb = Tensor::zeros({hw});
    for (int ch = 0; ch < c; ++ch) {
        for (int i = 0; i < hw; ++i) {
            sa.data[static_cast<std::size_t>(i)] =
                a.data[static_cast<std::size_t>(i) * c + ch];
            sb.data[static_cast<std::size_t>(i)] =
                b.data[static_cast<std::size_t>(i) * c + ch];
        }
        const double s = cosine_sim(sa, sb);
        if (mode == SelectMode::Inter ? s > 0.0 : s < 0.0) picked.push_back(ch);
    }
    return picked;
}

namespace {

// mean of the selected per-channel cosines, or a constant zero for an empty set
Tensor selected_mean(Tape& tp, const Tensor& ma, const Tensor& mb,
                     const std::vector<int>& channels) {
    if (channels.empty()) return Tensor::scalar(0.0);
    Tensor acc;
    bool first = true;
    for (int ch : channels) {
        Tensor ca = l2_normalize(tp, channel_flat(tp, ma, ch));
        Tensor cb = l2_normalize(tp, channel_flat(tp, mb, ch));
        Tensor cos = dot(tp, ca, cb);
        acc = first ? cos : add(tp, acc, cos);
        first = false;
    }
    return scale(tp, acc, 1.0 / static_cast<double>(channels.size()));
}

}  // namespace

Tensor disc_loss(Tape& tp, const std::vector<FeatureMaps>& batch_maps, const MinedPairs& mined,
                 const std::vector<ChannelSelection>& selections, const SfdConfig& cfg) {
    const std::size_t n = batch_maps.size();
    if (mined.size() != n || selections.size() != n)
        throw ShapeError("disc_loss: batch of " + std::to_string(n) + " maps with " +
                         std::to_string(mined.size()) + " mined pairs and " +
                         std::to_string(selections.size()) + " selections");
    if (n == 0) throw ShapeError("disc_loss: empty batch");

    Tensor total;
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor& mi = batch_maps[i].values;
        const Tensor& m_inter = batch_maps[static_cast<std::size_t>(mined[i].inter_idx)].values;
        const Tensor& m_inner = batch_maps[static_cast<std::size_t>(mined[i].inner_idx)].values;
        Tensor neg_mean = selected_mean(tp, mi, m_inter, selections[i].p_neg);
        Tensor pos_mean = selected_mean(tp, mi, m_inner, selections[i].p_pos);
        Tensor gap = add_const(tp, sub(tp, neg_mean, pos_mean), cfg.psi);
        Tensor hinged = relu(tp, gap);
        total = first ? hinged : add(tp, total, hinged);
        first = false;
    }
    return scale(tp, total, 1.0 / static_cast<double>(n));
}

}  // namespace sfdmc
