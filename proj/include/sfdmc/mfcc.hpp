#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sfdmc/tensor.hpp"

namespace sfdmc {

// Learnable cosine centers, H per class, stored as the columns of a
// [dim x N*H] matrix with column m*H+j holding center j of class m. The
// bank starts with each class's H centers pairwise orthonormal; training
// moves them freely afterwards.
struct CenterBank {
    Tensor centers;  // [dim x N*H]
    int num_classes = 0;
    int centers_per_class = 0;
    double scale = 16.0;  // temperature on cosine scores before softmax
    double delta = 0.1;   // margin taken from the true class when predicted right

    int dim() const { return centers.shape[0]; }
    int total_centers() const { return num_classes * centers_per_class; }
};

// Class distribution for one sample. probs is the per-class mass after any
// margin subtraction; predicted is the pre-margin argmax (ties toward the
// lowest class) and never changes when the margin lands.
struct ClassProbs {
    Tensor probs;  // [N]
    int predicted = -1;
    bool margin_applied = false;
};

namespace detail {

// Modified Gram-Schmidt over vectors produced by `draw`. A vector whose
// residual against the accepted set falls under 1e-8 is redrawn; each slot
// gets at most `budget` redraws before a ConfigError. With ortho_all the
// accepted set spans every class, which needs dim >= N*H.
Tensor orthonormal_centers(int dim, int num_classes, int centers_per_class,
                           const std::function<void(Tensor&)>& draw, bool ortho_all,
                           int budget = 100);

}  // namespace detail

// Seeded center initialization from standard normal draws. Throws
// ConfigError when dim < centers_per_class, or when ortho_all asks for more
// orthogonal directions than dim offers.
CenterBank init_centers(int dim, int num_classes, int centers_per_class, std::uint64_t seed,
                        double scale = 16.0, double delta = 0.1, bool ortho_all = false);

// Cosine between v and every center column, reshaped to [N x H]. Pass a
// traced copy of the centers to train them; bank.centers itself works for
// detached evaluation. Differentiable in both v and centers.
Tensor sim_scores(Tape& tp, const Tensor& v, const Tensor& centers, const CenterBank& bank);
Tensor sim_scores(Tape& tp, const Tensor& v, const CenterBank& bank);

// Softmax over all N*H scaled scores, summed per class into a distribution.
// With a true label whose class wins the pre-margin argmax, delta is
// subtracted from that class's mass as a constant shift (no gradient of its
// own). Pass true_label = -1 outside training.
ClassProbs class_probs(Tape& tp, const Tensor& scores, const CenterBank& bank,
                       int true_label = -1);

// Mean negative log of each sample's true-class mass, clamped to 1e-12
// before the log. Throws DataError on an out-of-range label.
Tensor mfcc_loss(Tape& tp, const std::vector<ClassProbs>& probs_batch,
                 const std::vector<int>& labels);

// Detached argmax of the class-summed softmax mass, no margin; ties break
// toward the lowest class id.
int predict(const Tensor& v, const CenterBank& bank);

}  // namespace sfdmc
