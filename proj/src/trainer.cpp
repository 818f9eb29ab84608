#include "sfdmc/trainer.hpp"

#include <cmath>
#include <string>

#include "sfdmc/errors.hpp"
#include "sfdmc/sfd.hpp"

namespace sfdmc {

Model build_model(const RunConfig& cfg) {
    cfg.validate();
    const bool multi = uses_multi_center(cfg.ablation);
    const int h = multi ? cfg.classifier.centers_per_class : 1;
    const double delta = multi ? cfg.classifier.delta : 0.0;
    CenterBank bank =
        init_centers(cfg.extractor.embed_dim, cfg.data.num_classes, h,
                     derive_seed(cfg.seed, "centers"), cfg.classifier.scale, delta,
                     cfg.classifier.ortho_all);
    Extractor extractor(cfg.extractor, derive_seed(cfg.seed, "extractor"));
    return Model{cfg, std::move(extractor), std::move(bank)};
}

std::vector<Batch> make_batches(const Dataset& ds, const RunConfig& cfg, int epoch) {
    const int n = ds.num_classes;
    const int per_class = cfg.train.batch_size / n;
    if (per_class < 2)
        throw ConfigError("batch_size " + std::to_string(cfg.train.batch_size) +
                          " gives fewer than 2 samples per class");

    std::vector<std::vector<std::size_t>> perm(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        perm[static_cast<std::size_t>(ds.samples[i].label)].push_back(i);
    std::size_t largest = 0;
    for (int c = 0; c < n; ++c) {
        const std::size_t size = perm[static_cast<std::size_t>(c)].size();
        if (size < 2)
            throw DataError("class " + std::to_string(c) + " has " + std::to_string(size) +
                            " samples; mining needs at least 2");
        largest = std::max(largest, size);
    }

    Rng rng(derive_seed(derive_seed(cfg.seed, "batch"), static_cast<std::uint64_t>(epoch)));
    for (int c = 0; c < n; ++c) {
        auto& p = perm[static_cast<std::size_t>(c)];
        for (std::size_t i = p.size(); i > 1; --i)
            std::swap(p[i - 1], p[static_cast<std::size_t>(
                                    rng.uniform_int(static_cast<int>(i)))]);
    }

    const std::size_t k = static_cast<std::size_t>(per_class);
    const std::size_t num_batches = (largest + k - 1) / k;
    std::vector<Batch> batches(num_batches);
    for (std::size_t b = 0; b < num_batches; ++b) {
        batches[b].indices.reserve(k * static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) {
            const auto& p = perm[static_cast<std::size_t>(c)];
            for (std::size_t j = 0; j < k; ++j)
                batches[b].indices.push_back(p[(b * k + j) % p.size()]);
        }
    }
    return batches;
}

double lr_at(int epoch, const TrainParams& tp) {
    if (tp.warmup_epochs > 0 && epoch < tp.warmup_epochs)
        return tp.lr0 * (epoch + 1) / tp.warmup_epochs;
    const int past = epoch - tp.warmup_epochs;
    return tp.lr0 * std::pow(tp.decay_factor, past / tp.decay_every_epochs);
}

StepReport train_step(Model& model, const Dataset& ds, const Batch& batch, double lr,
                      Rng& dropout_rng, long step) {
    const RunConfig& cfg = model.cfg;
    Tape tp(true);
    std::vector<Tensor> traced = model.extractor.trace(tp);
    Tensor centers = tp.leaf(model.bank.centers);

    const std::size_t b = batch.indices.size();
    std::vector<FeatureMaps> maps;
    std::vector<FeatureVector> vecs;
    std::vector<int> labels(b);
    maps.reserve(b);
    vecs.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
        const Sample& s = ds.samples[batch.indices[i]];
        labels[i] = s.label;
        maps.push_back(model.extractor.forward_maps(tp, traced, s.image, static_cast<int>(i)));
        vecs.push_back(model.extractor.embed(tp, traced, maps.back(), true, &dropout_rng));
    }

    std::vector<ClassProbs> probs;
    probs.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
        Tensor scores = sim_scores(tp, vecs[i].values, centers, model.bank);
        probs.push_back(class_probs(tp, scores, model.bank, labels[i]));
    }
    Tensor l_mfc = mfcc_loss(tp, probs, labels);
    Tensor total = scale(tp, l_mfc, cfg.train.lambda1);

    StepReport report;
    report.l_mfc = l_mfc.item();
    if (uses_sfd(cfg.ablation)) {
        // mining and selection read detached values; only the cosines of
        // the selected channels join the graph
        MinedPairs mined = mine_pairs(vecs, labels);
        std::vector<ChannelSelection> sel(b);
        for (std::size_t i = 0; i < b; ++i) {
            sel[i].p_neg = select_channels(
                maps[i], maps[static_cast<std::size_t>(mined[i].inter_idx)],
                SelectMode::Inter);
            sel[i].p_pos = select_channels(
                maps[i], maps[static_cast<std::size_t>(mined[i].inner_idx)],
                SelectMode::Inner);
        }
        Tensor l_disc = disc_loss(tp, maps, mined, sel, cfg.sfd);
        report.l_disc = l_disc.item();
        total = add(tp, total, scale(tp, l_disc, cfg.train.lambda2));
    }
    report.total = total.item();

    if (!std::isfinite(report.total) || !std::isfinite(report.l_mfc) ||
        !std::isfinite(report.l_disc))
        throw NonFiniteLossError(step, report.l_disc, report.l_mfc, report.total,
                                 "non-finite loss at step " + std::to_string(step) +
                                     " (l_disc " + std::to_string(report.l_disc) + ", l_mfc " +
                                     std::to_string(report.l_mfc) + ", total " +
                                     std::to_string(report.total) + ")");

    GradientMap grads = tp.backward(total);
    double sq = 0.0;
    auto apply = [&](Tensor& param, int node) {
        const Tensor& g = grads.at(node);
        for (std::size_t i = 0; i < param.data.size(); ++i) {
            sq += g.data[i] * g.data[i];
            param.data[i] -= lr * g.data[i];
        }
    };
    std::vector<Tensor>& params = model.extractor.params();
    for (std::size_t p = 0; p < params.size(); ++p) apply(params[p], traced[p].node);
    apply(model.bank.centers, centers.node);

    report.grad_norm = std::sqrt(sq);
    if (!std::isfinite(report.grad_norm))
        throw NonFiniteLossError(step, report.l_disc, report.l_mfc, report.total,
                                 "non-finite gradient norm at step " + std::to_string(step));
    return report;
}

std::vector<EpochStats> run_training(Model& model, const Dataset& train_ds,
                                     const EpochCallback& on_epoch) {
    const RunConfig& cfg = model.cfg;
    Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
    std::vector<EpochStats> trace;
    trace.reserve(static_cast<std::size_t>(cfg.train.epochs));
    long step = 0;
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg.train);
        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        const std::vector<Batch> batches = make_batches(train_ds, cfg, epoch);
        for (const Batch& batch : batches) {
            const StepReport r = train_step(model, train_ds, batch, lr, dropout_rng, step++);
            stats.l_disc += r.l_disc;
            stats.l_mfc += r.l_mfc;
            stats.total += r.total;
            stats.grad_norm += r.grad_norm;
        }
        const double inv = 1.0 / static_cast<double>(batches.size());
        stats.l_disc *= inv;
        stats.l_mfc *= inv;
        stats.total *= inv;
        stats.grad_norm *= inv;
        trace.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return trace;
}

std::vector<int> evaluate_predictions(const Model& model, const Dataset& ds) {
    if (ds.samples.empty()) throw DataError("cannot evaluate an empty dataset");
    Tape tp(false);
    std::vector<Tensor> traced = model.extractor.trace(tp);
    std::vector<int> out;
    out.reserve(ds.samples.size());
    for (const Sample& s : ds.samples) {
        FeatureMaps maps = model.extractor.forward_maps(tp, traced, s.image);
        FeatureVector v = model.extractor.embed(tp, traced, maps, false, nullptr);
        out.push_back(predict(v.values, model.bank));
    }
    return out;
}

EvalReport evaluate(const Model& model, const Dataset& ds) {
    const std::vector<int> preds = evaluate_predictions(model, ds);
    const int n = ds.num_classes;
    EvalReport report;
    report.confusion.assign(static_cast<std::size_t>(n),
                            std::vector<long>(static_cast<std::size_t>(n), 0));
    for (std::size_t i = 0; i < preds.size(); ++i)
        ++report.confusion[static_cast<std::size_t>(ds.samples[i].label)]
                          [static_cast<std::size_t>(preds[i])];

    long correct = 0;
    report.per_class_recall.assign(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < n; ++c) {
        long row = 0;
        for (int p = 0; p < n; ++p) row += report.confusion[static_cast<std::size_t>(c)]
                                                           [static_cast<std::size_t>(p)];
        const long hit = report.confusion[static_cast<std::size_t>(c)]
                                         [static_cast<std::size_t>(c)];
        correct += hit;
        report.per_class_recall[static_cast<std::size_t>(c)] =
            row > 0 ? static_cast<double>(hit) / static_cast<double>(row) : 0.0;
    }
    report.micro_accuracy =
        static_cast<double>(correct) / static_cast<double>(preds.size());
    double macro = 0.0;
    for (double r : report.per_class_recall) macro += r;
    report.macro_accuracy = macro / n;
    return report;
}

}  // namespace sfdmc
