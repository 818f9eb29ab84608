#pragma once

#include <functional>
#include <vector>

#include "sfdmc/config.hpp"
#include "sfdmc/data.hpp"
#include "sfdmc/extractor.hpp"
#include "sfdmc/mfcc.hpp"
#include "sfdmc/rng.hpp"

namespace sfdmc {

// cfg stays the as-written configuration; the bank reflects the ablation:
// variants without the multi-center classifier run with one center per
// class and no margin, which the classifier tests prove is exactly a
// scaled-cosine softmax.
struct Model {
    RunConfig cfg;
    Extractor extractor;
    CenterBank bank;
};

inline bool uses_sfd(Ablation a) { return a == Ablation::V2 || a == Ablation::FULL; }
inline bool uses_multi_center(Ablation a) { return a == Ablation::V3 || a == Ablation::FULL; }

// Seeds extractor and centers from independent streams of cfg.seed.
Model build_model(const RunConfig& cfg);

struct Batch {
    std::vector<std::size_t> indices;
};

// Class-balanced batches: batch_size/N samples per class (remainder
// dropped), each class in its own seeded permutation for (seed, epoch),
// wrapping so every sample appears at least once per epoch.
std::vector<Batch> make_batches(const Dataset& ds, const RunConfig& cfg, int epoch);

// Linear warm-up to lr0 over warmup_epochs, then step decay.
double lr_at(int epoch, const TrainParams& tp);

struct StepReport {
    double l_disc = 0.0;
    double l_mfc = 0.0;
    double total = 0.0;
    double grad_norm = 0.0;
};

// One forward/backward/SGD pass over the batch. Throws NonFiniteLossError
// (with the step index and term values) the moment any loss term leaves the
// finite range.
StepReport train_step(Model& model, const Dataset& ds, const Batch& batch, double lr,
                      Rng& dropout_rng, long step);

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double l_disc = 0.0;  // means over the epoch's steps
    double l_mfc = 0.0;
    double total = 0.0;
    double grad_norm = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Full Algorithm-1 style loop over cfg.train.epochs. Deterministic per
// cfg.seed; returns the per-epoch loss trace.
std::vector<EpochStats> run_training(Model& model, const Dataset& train_ds,
                                     const EpochCallback& on_epoch = nullptr);

struct EvalReport {
    std::vector<std::vector<long>> confusion;  // [true][predicted]
    std::vector<double> per_class_recall;
    double micro_accuracy = 0.0;  // correct / total
    double macro_accuracy = 0.0;  // mean per-class recall
};

// Test-time pass: dropout off, no margin, argmax prediction per sample.
std::vector<int> evaluate_predictions(const Model& model, const Dataset& ds);
EvalReport evaluate(const Model& model, const Dataset& ds);

}  // namespace sfdmc
