#include "sfdmc/mfcc.hpp"

#include <cmath>
#include <string>

#include "sfdmc/errors.hpp"
#include "sfdmc/rng.hpp"

namespace sfdmc {

namespace detail {

Tensor orthonormal_centers(int dim, int num_classes, int centers_per_class,
                           const std::function<void(Tensor&)>& draw, bool ortho_all,
                           int budget) {
    const int total = num_classes * centers_per_class;
    Tensor centers = Tensor::zeros({dim, total});
    std::vector<std::vector<double>> accepted;  // unit vectors, in column order
    Tensor scratch = Tensor::zeros({dim});

    for (int m = 0; m < num_classes; ++m) {
        for (int j = 0; j < centers_per_class; ++j) {
            // orthogonalize against the whole accepted set, or only against
            // the centers of this class
            const std::size_t lo =
                ortho_all ? 0 : static_cast<std::size_t>(m) * centers_per_class;
            int redraws = 0;
            for (;;) {
                draw(scratch);
                std::vector<double> v = scratch.data;
                for (std::size_t p = lo; p < accepted.size(); ++p) {
                    double proj = 0.0;
                    for (int r = 0; r < dim; ++r) proj += accepted[p][r] * v[r];
                    for (int r = 0; r < dim; ++r) v[r] -= proj * accepted[p][r];
                }
                double norm = 0.0;
                for (int r = 0; r < dim; ++r) norm += v[r] * v[r];
                norm = std::sqrt(norm);
                if (norm >= 1e-8) {
                    for (int r = 0; r < dim; ++r) v[r] /= norm;
                    accepted.push_back(std::move(v));
                    break;
                }
                if (++redraws > budget)
                    throw ConfigError("center init exceeded " + std::to_string(budget) +
                                      " redraws for class " + std::to_string(m));
            }
        }
    }

    for (int col = 0; col < total; ++col)
        for (int r = 0; r < dim; ++r)
            centers.at(r, col) = accepted[static_cast<std::size_t>(col)][r];
    return centers;
}

}  // namespace detail

CenterBank init_centers(int dim, int num_classes, int centers_per_class, std::uint64_t seed,
                        double scale, double delta, bool ortho_all) {
    if (num_classes < 1) throw ConfigError("center bank needs at least one class");
    if (centers_per_class < 1) throw ConfigError("centers per class must be at least 1");
    if (dim < centers_per_class)
        throw ConfigError("cannot fit " + std::to_string(centers_per_class) +
                          " orthogonal centers in dimension " + std::to_string(dim));
    if (ortho_all && dim < num_classes * centers_per_class)
        throw ConfigError("global orthogonality needs dimension >= " +
                          std::to_string(num_classes * centers_per_class) + ", got " +
                          std::to_string(dim));
    if (scale <= 0.0) throw ConfigError("score scale must be positive");
    if (delta < 0.0) throw ConfigError("margin must be non-negative");

    Rng rng(seed);
    auto draw = [&rng](Tensor& out) {
        for (double& x : out.data) x = rng.normal();
    };
    CenterBank bank;
    bank.centers = detail::orthonormal_centers(dim, num_classes, centers_per_class, draw,
                                               ortho_all);
    bank.num_classes = num_classes;
    bank.centers_per_class = centers_per_class;
    bank.scale = scale;
    bank.delta = delta;
    return bank;
}

Tensor sim_scores(Tape& tp, const Tensor& v, const Tensor& centers, const CenterBank& bank) {
    if (v.rank() != 1) throw ShapeError("sim_scores expects a rank-1 vector, got " + v.shape_str());
    if (centers.rank() != 2 || centers.shape[0] != v.shape[0] ||
        centers.shape[1] != bank.total_centers())
        throw ShapeError("sim_scores centers " + centers.shape_str() + " do not match vector " +
                         v.shape_str() + " with " + std::to_string(bank.total_centers()) +
                         " centers");
    Tensor vn = l2_normalize(tp, v);
    Tensor cn = l2_normalize_cols(tp, centers);
    Tensor row = reshape(tp, vn, {1, v.shape[0]});
    Tensor flat = matmul(tp, row, cn);  // [1 x N*H]
    return reshape(tp, flat, {bank.num_classes, bank.centers_per_class});
}

Tensor sim_scores(Tape& tp, const Tensor& v, const CenterBank& bank) {
    return sim_scores(tp, v, bank.centers, bank);
}

ClassProbs class_probs(Tape& tp, const Tensor& scores, const CenterBank& bank, int true_label) {
    if (scores.rank() != 2 || scores.shape[0] != bank.num_classes ||
        scores.shape[1] != bank.centers_per_class)
        throw ShapeError("class_probs expects scores [" + std::to_string(bank.num_classes) +
                         "x" + std::to_string(bank.centers_per_class) + "], got " +
                         scores.shape_str());
    if (true_label >= bank.num_classes)
        throw DataError("true label " + std::to_string(true_label) + " out of range for " +
                        std::to_string(bank.num_classes) + " classes");

    Tensor flat = reshape(tp, scores, {1, bank.total_centers()});
    Tensor sm = softmax_rows(tp, scale(tp, flat, bank.scale));
    Tensor grid = reshape(tp, sm, {bank.num_classes, bank.centers_per_class});
    Tensor pre = sum_rows(tp, grid);  // [N]

    int predicted = 0;
    for (int m = 1; m < bank.num_classes; ++m)
        if (pre.data[static_cast<std::size_t>(m)] >
            pre.data[static_cast<std::size_t>(predicted)])
            predicted = m;

    ClassProbs out;
    out.predicted = predicted;
    out.margin_applied = true_label >= 0 && predicted == true_label;
    if (out.margin_applied && bank.delta != 0.0) {
        // constant shift on the winning class; carries no gradient of its own
        Tensor shift = Tensor::zeros({bank.num_classes});
        shift.data[static_cast<std::size_t>(true_label)] = bank.delta;
        out.probs = sub(tp, pre, shift);
    } else {
        out.probs = pre;
    }
    return out;
}

Tensor mfcc_loss(Tape& tp, const std::vector<ClassProbs>& probs_batch,
                 const std::vector<int>& labels) {
    if (probs_batch.empty()) throw DataError("classifier loss needs a non-empty batch");
    if (probs_batch.size() != labels.size())
        throw DataError("got " + std::to_string(probs_batch.size()) + " probability rows for " +
                        std::to_string(labels.size()) + " labels");

    Tensor total;
    bool first = true;
    for (std::size_t i = 0; i < probs_batch.size(); ++i) {
        const int n = probs_batch[i].probs.shape[0];
        if (labels[i] < 0 || labels[i] >= n)
            throw DataError("label " + std::to_string(labels[i]) + " out of range for " +
                            std::to_string(n) + " classes");
        Tensor p = pick(tp, probs_batch[i].probs, labels[i]);
        Tensor ll = log_elem(tp, clamp_min(tp, p, 1e-12));
        total = first ? ll : add(tp, total, ll);
        first = false;
    }
    return scale(tp, total, -1.0 / static_cast<double>(probs_batch.size()));
}

int predict(const Tensor& v, const CenterBank& bank) {
    Tape tp(false);
    Tensor scores = sim_scores(tp, v, bank.centers, bank);
    ClassProbs cp = class_probs(tp, scores, bank, -1);
    return cp.predicted;
}

}  // namespace sfdmc
