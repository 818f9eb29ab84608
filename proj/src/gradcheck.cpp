#include "sfdmc/gradcheck.hpp"

#include <cmath>

namespace sfdmc {

double finite_diff_check_multi(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& xs, double h) {
    // analytic gradients from one recorded pass
    Tape tape(true);
    std::vector<Tensor> traced;
    traced.reserve(xs.size());
    for (const Tensor& x : xs) traced.push_back(tape.leaf(x));
    Tensor loss = f(tape, traced);
    if (!loss.is_scalar())
        throw TapeError("finite_diff_check needs a scalar-valued f, got " + loss.shape_str());
    GradientMap grads = tape.backward(loss);

    auto eval_at = [&f](const std::vector<Tensor>& points) {
        Tape silent(false);
        std::vector<Tensor> in;
        in.reserve(points.size());
        for (const Tensor& p : points) in.push_back(silent.leaf(p));
        return f(silent, in).item();
    };

    double worst = 0.0;
    std::vector<Tensor> probe = xs;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const Tensor& analytic = grads.at(traced[t].node);
        for (std::size_t i = 0; i < xs[t].data.size(); ++i) {
            const double saved = probe[t].data[i];
            probe[t].data[i] = saved + h;
            const double up = eval_at(probe);
            probe[t].data[i] = saved - h;
            const double down = eval_at(probe);
            probe[t].data[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double err =
                std::abs(analytic.data[i] - numeric) / std::max(1.0, std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x,
                         double h) {
    return finite_diff_check_multi(
        [&f](Tape& tp, const std::vector<Tensor>& xs) { return f(tp, xs[0]); }, {x}, h);
}

}  // namespace sfdmc
