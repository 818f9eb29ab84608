#include "sfdmc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sfdmc {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor dimension must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str_of(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    std::size_t n = shape_product(shape);
    t.shape = std::move(shape);
    t.data.assign(n, 0.0);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

Tensor Tensor::of(std::vector<int> shape, std::vector<double> values) {
    std::size_t n = shape_product(shape);
    if (n != values.size()) {
        throw ShapeError("tensor data size " + std::to_string(values.size()) +
                         " does not match shape " + shape_str_of(shape));
    }
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::move(values);
    return t;
}

Tensor Tensor::scalar(double v) { return of({1}, {v}); }

double Tensor::item() const {
    if (!is_scalar()) throw ShapeError("item() on non-scalar tensor " + shape_str());
    return data[0];
}

double& Tensor::at(int i, int j) {
    return data[static_cast<std::size_t>(i) * shape[1] + j];
}
double Tensor::at(int i, int j) const {
    return data[static_cast<std::size_t>(i) * shape[1] + j];
}
double& Tensor::at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * shape[1] + x) * shape[2] + c];
}
double Tensor::at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * shape[1] + x) * shape[2] + c];
}

std::string Tensor::shape_str() const { return shape_str_of(shape); }

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

// ---- tape ------------------------------------------------------------------

Tensor Tape::leaf(Tensor t) {
    t.node = recording_ ? push(t, nullptr) : -1;
    return t;
}

int Tape::push(const Tensor& value, BackFn back) {
    nodes_.push_back(Node{value.shape, std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& GradientMap::at(int node) const {
    if (node < 0 || static_cast<std::size_t>(node) >= grads_.size())
        throw TapeError("gradient lookup for node " + std::to_string(node) +
                        " outside tape of size " + std::to_string(grads_.size()));
    return grads_[static_cast<std::size_t>(node)];
}

GradientMap Tape::backward(const Tensor& loss) const {
    if (!recording_) throw TapeError("backward() on a non-recording tape");
    if (loss.node < 0 || static_cast<std::size_t>(loss.node) >= nodes_.size())
        throw TapeError("loss tensor is not a node of this tape");
    if (!loss.is_scalar())
        throw TapeError("backward() needs a scalar loss, got " + loss.shape_str());

    std::vector<Tensor> grads(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        grads[i] = Tensor::zeros(nodes_[i].value_shape);
    std::vector<char> touched(nodes_.size(), 0);

    grads[static_cast<std::size_t>(loss.node)].data[0] = 1.0;
    touched[static_cast<std::size_t>(loss.node)] = 1;

    GradSink sink(grads, touched);
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!touched[static_cast<std::size_t>(id)] || !n.back) continue;
        n.back(grads[static_cast<std::size_t>(id)], sink);
    }
    return GradientMap(std::move(grads));
}

// ---- ops -------------------------------------------------------------------

Tensor matmul(Tape& tp, const Tensor& a, const Tensor& b) {
    require(a.rank() == 2 && b.rank() == 2,
            "matmul needs rank-2 inputs, got " + a.shape_str() + " and " + b.shape_str());
    require(a.shape[1] == b.shape[0],
            "matmul inner dimensions differ: " + a.shape_str() + " vs " + b.shape_str());
    const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double av = a.at(i, p);
            for (int j = 0; j < n; ++j) out.at(i, j) += av * b.at(p, j);
        }
    if (tp.recording()) {
        out.node = tp.push(out, [a, b, m, k, n](const Tensor& g, GradSink& sink) {
            if (a.node >= 0) {
                Tensor& da = sink.grad(a.node);  // dA = g * B^T
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (int j = 0; j < n; ++j) acc += g.at(i, j) * b.at(p, j);
                        da.at(i, p) += acc;
                    }
            }
            if (b.node >= 0) {
                Tensor& db = sink.grad(b.node);  // dB = A^T * g
                for (int p = 0; p < k; ++p)
                    for (int j = 0; j < n; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < m; ++i) acc += a.at(i, p) * g.at(i, j);
                        db.at(p, j) += acc;
                    }
            }
        });
    }
    return out;
}

Tensor conv2d(Tape& tp, const Tensor& input, const Tensor& kernels, int stride, int padding) {
    require(input.rank() == 3, "conv2d input must be rank 3, got " + input.shape_str());
    require(kernels.rank() == 4, "conv2d kernels must be rank 4, got " + kernels.shape_str());
    require(stride >= 1, "conv2d stride must be >= 1");
    require(padding >= 0, "conv2d padding must be >= 0");
    const int h = input.shape[0], w = input.shape[1], cin = input.shape[2];
    const int k = kernels.shape[0];
    require(kernels.shape[1] == k, "conv2d kernels must be square, got " + kernels.shape_str());
    require(kernels.shape[2] == cin, "conv2d kernel depth " + kernels.shape_str() +
                                         " does not match input " + input.shape_str());
    const int cout = kernels.shape[3];
    require(k <= h + 2 * padding && k <= w + 2 * padding,
            "conv2d kernel " + kernels.shape_str() + " larger than padded input " +
                input.shape_str());
    const int oh = (h + 2 * padding - k) / stride + 1;
    const int ow = (w + 2 * padding - k) / stride + 1;

    auto kidx = [k, cin, cout](int ky, int kx, int ci, int co) {
        return ((static_cast<std::size_t>(ky) * k + kx) * cin + ci) * cout + co;
    };

    Tensor out = Tensor::zeros({oh, ow, cout});
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int ky = 0; ky < k; ++ky) {
                const int y = oy * stride - padding + ky;
                if (y < 0 || y >= h) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int x = ox * stride - padding + kx;
                    if (x < 0 || x >= w) continue;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double iv = input.at(y, x, ci);
                        const double* kp = &kernels.data[kidx(ky, kx, ci, 0)];
                        double* op = &out.data[(static_cast<std::size_t>(oy) * ow + ox) * cout];
                        for (int co = 0; co < cout; ++co) op[co] += iv * kp[co];
                    }
                }
            }

    if (tp.recording()) {
        out.node = tp.push(out, [input, kernels, stride, padding, h, w, cin, k, cout, oh, ow,
                                 kidx](const Tensor& g, GradSink& sink) {
            Tensor* din = input.node >= 0 ? &sink.grad(input.node) : nullptr;
            Tensor* dk = kernels.node >= 0 ? &sink.grad(kernels.node) : nullptr;
            if (!din && !dk) return;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox)
                    for (int ky = 0; ky < k; ++ky) {
                        const int y = oy * stride - padding + ky;
                        if (y < 0 || y >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int x = ox * stride - padding + kx;
                            if (x < 0 || x >= w) continue;
                            const double* gp =
                                &g.data[(static_cast<std::size_t>(oy) * ow + ox) * cout];
                            for (int ci = 0; ci < cin; ++ci) {
                                const double iv = input.at(y, x, ci);
                                const double* kp = &kernels.data[kidx(ky, kx, ci, 0)];
                                double acc = 0.0;
                                for (int co = 0; co < cout; ++co) {
                                    const double gv = gp[co];
                                    acc += gv * kp[co];
                                    if (dk) dk->data[kidx(ky, kx, ci, co)] += gv * iv;
                                }
                                if (din) din->at(y, x, ci) += acc;
                            }
                        }
                    }
        });
    }
    return out;
}

Tensor relu(Tape& tp, const Tensor& x) {
    Tensor out = x;
    out.node = -1;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    if (tp.recording()) {
        out.node = tp.push(out, [x](const Tensor& g, GradSink& sink) {
            if (x.node < 0) return;
            Tensor& dx = sink.grad(x.node);
            // subgradient at exactly 0 is 0
            for (std::size_t i = 0; i < g.data.size(); ++i)
                if (x.data[i] > 0.0) dx.data[i] += g.data[i];
        });
    }
    return out;
}

Tensor global_avg_pool(Tape& tp, const Tensor& m) {
    require(m.rank() == 3, "global_avg_pool input must be rank 3, got " + m.shape_str());
    const int h = m.shape[0], w = m.shape[1], c = m.shape[2];
    const double inv = 1.0 / (static_cast<double>(h) * w);
    Tensor out = Tensor::zeros({c});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) out.data[ch] += m.at(y, x, ch);
    for (double& v : out.data) v *= inv;
    if (tp.recording()) {
        out.node = tp.push(out, [m, h, w, c, inv](const Tensor& g, GradSink& sink) {
            if (m.node < 0) return;
            Tensor& dm = sink.grad(m.node);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    for (int ch = 0; ch < c; ++ch) dm.at(y, x, ch) += g.data[ch] * inv;
        });
    }
    return out;
}

Tensor l2_normalize(Tape& tp, const Tensor& v, double epsilon) {
    require(v.rank() == 1, "l2_normalize input must be rank 1, got " + v.shape_str());
    double sq = 0.0;
    for (double x : v.data) sq += x * x;
    const double norm = std::sqrt(sq);
    const double denom = std::max(norm, epsilon);
    Tensor out = v;
    out.node = -1;
    for (double& x : out.data) x /= denom;
    if (tp.recording()) {
        const bool guarded = norm < epsilon;
        out.node = tp.push(out, [v, out, denom, guarded](const Tensor& g, GradSink& sink) {
            if (v.node < 0) return;
            Tensor& dv = sink.grad(v.node);
            if (guarded) {
                // below the guard the op is linear: y = v / epsilon
                for (std::size_t i = 0; i < g.data.size(); ++i) dv.data[i] += g.data[i] / denom;
                return;
            }
            // d/dv (v/||v||) = (I - y y^T) / ||v||
            double gy = 0.0;
            for (std::size_t i = 0; i < g.data.size(); ++i) gy += g.data[i] * out.data[i];
            for (std::size_t i = 0; i < g.data.size(); ++i)
                dv.data[i] += (g.data[i] - gy * out.data[i]) / denom;
        });
    }
    return out;
}

Tensor l2_normalize_cols(Tape& tp, const Tensor& m, double epsilon) {
    require(m.rank() == 2, "l2_normalize_cols input must be rank 2, got " + m.shape_str());
    const int r = m.shape[0], c = m.shape[1];
    Tensor out = m;
    out.node = -1;
    std::vector<double> denom(static_cast<std::size_t>(c), 0.0);
    std::vector<char> guarded(static_cast<std::size_t>(c), 0);
    for (int j = 0; j < c; ++j) {
        double sq = 0.0;
        for (int i = 0; i < r; ++i) sq += m.at(i, j) * m.at(i, j);
        const double norm = std::sqrt(sq);
        guarded[static_cast<std::size_t>(j)] = norm < epsilon;
        denom[static_cast<std::size_t>(j)] = std::max(norm, epsilon);
        for (int i = 0; i < r; ++i) out.at(i, j) /= denom[static_cast<std::size_t>(j)];
    }
    if (tp.recording()) {
        out.node =
            tp.push(out, [m, out, denom, guarded, r, c](const Tensor& g, GradSink& sink) {
                if (m.node < 0) return;
                Tensor& dm = sink.grad(m.node);
                for (int j = 0; j < c; ++j) {
                    const double d = denom[static_cast<std::size_t>(j)];
                    if (guarded[static_cast<std::size_t>(j)]) {
                        for (int i = 0; i < r; ++i) dm.at(i, j) += g.at(i, j) / d;
                        continue;
                    }
                    double gy = 0.0;
                    for (int i = 0; i < r; ++i) gy += g.at(i, j) * out.at(i, j);
                    for (int i = 0; i < r; ++i)
                        dm.at(i, j) += (g.at(i, j) - gy * out.at(i, j)) / d;
                }
            });
    }
    return out;
}

Tensor softmax_rows(Tape& tp, const Tensor& x) {
    require(x.rank() == 2, "softmax_rows input must be rank 2, got " + x.shape_str());
    const int r = x.shape[0], c = x.shape[1];
    Tensor out = Tensor::zeros({r, c});
    for (int i = 0; i < r; ++i) {
        double mx = x.at(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, x.at(i, j));
        double z = 0.0;
        for (int j = 0; j < c; ++j) {
            const double e = std::exp(x.at(i, j) - mx);
            out.at(i, j) = e;
            z += e;
        }
        for (int j = 0; j < c; ++j) out.at(i, j) /= z;
    }
    if (tp.recording()) {
        out.node = tp.push(out, [x, out, r, c](const Tensor& g, GradSink& sink) {
            if (x.node < 0) return;
            Tensor& dx = sink.grad(x.node);
            // dx = y .* (g - <g, y>) per row
            for (int i = 0; i < r; ++i) {
                double gy = 0.0;
                for (int j = 0; j < c; ++j) gy += g.at(i, j) * out.at(i, j);
                for (int j = 0; j < c; ++j) dx.at(i, j) += out.at(i, j) * (g.at(i, j) - gy);
            }
        });
    }
    return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape != b.shape)
        throw ShapeError(std::string(op) + " needs matching shapes, got " + a.shape_str() +
                         " and " + b.shape_str());
}

}  // namespace

Tensor add(Tape& tp, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    out.node = -1;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    if (tp.recording()) {
        out.node = tp.push(out, [an = a.node, bn = b.node](const Tensor& g, GradSink& sink) {
            if (an >= 0) {
                Tensor& da = sink.grad(an);
                for (std::size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
            }
            if (bn >= 0) {
                Tensor& db = sink.grad(bn);
                for (std::size_t i = 0; i < g.data.size(); ++i) db.data[i] += g.data[i];
            }
        });
    }
    return out;
}

Tensor sub(Tape& tp, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    out.node = -1;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    if (tp.recording()) {
        out.node = tp.push(out, [an = a.node, bn = b.node](const Tensor& g, GradSink& sink) {
            if (an >= 0) {
                Tensor& da = sink.grad(an);
                for (std::size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
            }
            if (bn >= 0) {
                Tensor& db = sink.grad(bn);
                for (std::size_t i = 0; i < g.data.size(); ++i) db.data[i] -= g.data[i];
            }
        });
    }
    return out;
}

Tensor mul(Tape& tp, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a;
    out.node = -1;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    if (tp.recording()) {
        out.node = tp.push(out, [a, b](const Tensor& g, GradSink& sink) {
            if (a.node >= 0) {
                Tensor& da = sink.grad(a.node);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    da.data[i] += g.data[i] * b.data[i];
            }
            if (b.node >= 0) {
                Tensor& db = sink.grad(b.node);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    db.data[i] += g.data[i] * a.data[i];
            }
        });
    }
    return out;
}

Tensor scale(Tape& tp, const Tensor& x, double k) {
    Tensor out = x;
    out.node = -1;
    for (double& v : out.data) v *= k;
    if (tp.recording()) {
        out.node = tp.push(out, [xn = x.node, k](const Tensor& g, GradSink& sink) {
            if (xn < 0) return;
            Tensor& dx = sink.grad(xn);
            for (std::size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i] * k;
        });
    }
    return out;
}

Tensor add_const(Tape& tp, const Tensor& x, double k) {
    Tensor out = x;
    out.node = -1;
    for (double& v : out.data) v += k;
    if (tp.recording()) {
        out.node = tp.push(out, [xn = x.node](const Tensor& g, GradSink& sink) {
            if (xn < 0) return;
            Tensor& dx = sink.grad(xn);
            for (std::size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i];
        });
    }
    return out;
}

Tensor dot(Tape& tp, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    Tensor out = Tensor::scalar(acc);
    if (tp.recording()) {
        out.node = tp.push(out, [a, b](const Tensor& g, GradSink& sink) {
            const double gv = g.data[0];
            if (a.node >= 0) {
                Tensor& da = sink.grad(a.node);
                for (std::size_t i = 0; i < b.data.size(); ++i) da.data[i] += gv * b.data[i];
            }
            if (b.node >= 0) {
                Tensor& db = sink.grad(b.node);
                for (std::size_t i = 0; i < a.data.size(); ++i) db.data[i] += gv * a.data[i];
            }
        });
    }
    return out;
}

Tensor sum(Tape& tp, const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data) acc += v;
    Tensor out = Tensor::scalar(acc);
    if (tp.recording()) {
        out.node = tp.push(out, [xn = x.node, n = x.data.size()](const Tensor& g, GradSink& sink) {
            if (xn < 0) return;
            Tensor& dx = sink.grad(xn);
            const double gv = g.data[0];
            for (std::size_t i = 0; i < n; ++i) dx.data[i] += gv;
        });
    }
    return out;
}

Tensor bias_add(Tape& tp, const Tensor& x, const Tensor& b) {
    require(b.rank() == 1, "bias_add bias must be rank 1, got " + b.shape_str());
    require(x.rank() >= 1 && x.shape.back() == b.shape[0],
            "bias_add: bias " + b.shape_str() + " does not span last dim of " + x.shape_str());
    const std::size_t c = static_cast<std::size_t>(b.shape[0]);
    Tensor out = x;
    out.node = -1;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i % c];
    if (tp.recording()) {
        out.node =
            tp.push(out, [xn = x.node, bn = b.node, c](const Tensor& g, GradSink& sink) {
                if (xn >= 0) {
                    Tensor& dx = sink.grad(xn);
                    for (std::size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i];
                }
                if (bn >= 0) {
                    Tensor& db = sink.grad(bn);
                    for (std::size_t i = 0; i < g.data.size(); ++i) db.data[i % c] += g.data[i];
                }
            });
    }
    return out;
}

Tensor reshape(Tape& tp, const Tensor& x, std::vector<int> shape) {
    Tensor out;
    out.shape = std::move(shape);
    if (shape_product(out.shape) != x.data.size())
        throw ShapeError("reshape from " + x.shape_str() + " to " + out.shape_str() +
                         " changes element count");
    out.data = x.data;
    if (tp.recording()) {
        out.node = tp.push(out, [xn = x.node](const Tensor& g, GradSink& sink) {
            if (xn < 0) return;
            Tensor& dx = sink.grad(xn);
            for (std::size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i];
        });
    }
    return out;
}

Tensor sum_rows(Tape& tp, const Tensor& x) {
    require(x.rank() == 2, "sum_rows input must be rank 2, got " + x.shape_str());
    const int r = x.shape[0], c = x.shape[1];
    Tensor out = Tensor::zeros({r});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.data[static_cast<std::size_t>(i)] += x.at(i, j);
    if (tp.recording()) {
        out.node = tp.push(out, [xn = x.node, r, c](const Tensor& g, GradSink& sink) {
            if (xn < 0) return;
            Tensor& dx = sink.grad(xn);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    dx.at(i, j) += g.data[static_cast<std::size_t>(i)];
        });
    }
    return out;
}

Tensor pick(Tape& tp, const Tensor& v, int index) {
    require(v.rank() == 1, "pick input must be rank 1, got " + v.shape_str());
    require(index >= 0 && index < v.shape[0],
            "pick index " + std::to_string(index) + " out of range for " + v.shape_str());
    Tensor out = Tensor::scalar(v.data[static_cast<std::size_t>(index)]);
    if (tp.recording()) {
        out.node = tp.push(out, [vn = v.node, index](const Tensor& g, GradSink& sink) {
            if (vn < 0) return;
            sink.grad(vn).data[static_cast<std::size_t>(index)] += g.data[0];
        });
    }
    return out;
}

Tensor clamp_min(Tape& tp, const Tensor& x, double lo) {
    Tensor out = x;
    out.node = -1;
    for (double& v : out.data) v = v < lo ? lo : v;
    if (tp.recording()) {
        out.node = tp.push(out, [x, lo](const Tensor& g, GradSink& sink) {
            if (x.node < 0) return;
            Tensor& dx = sink.grad(x.node);
            for (std::size_t i = 0; i < g.data.size(); ++i)
                if (x.data[i] > lo) dx.data[i] += g.data[i];
        });
    }
    return out;
}

Tensor log_elem(Tape& tp, const Tensor& x) {
    Tensor out = x;
    out.node = -1;
    for (double& v : out.data) v = std::log(v);
    if (tp.recording()) {
        out.node = tp.push(out, [x](const Tensor& g, GradSink& sink) {
            if (x.node < 0) return;
            Tensor& dx = sink.grad(x.node);
            for (std::size_t i = 0; i < g.data.size(); ++i) dx.data[i] += g.data[i] / x.data[i];
        });
    }
    return out;
}

Tensor channel_flat(Tape& tp, const Tensor& maps, int ch) {
    require(maps.rank() == 3, "channel_flat input must be rank 3, got " + maps.shape_str());
    require(ch >= 0 && ch < maps.shape[2],
            "channel_flat channel " + std::to_string(ch) + " out of range for " +
                maps.shape_str());
    const int h = maps.shape[0], w = maps.shape[1], c = maps.shape[2];
    Tensor out = Tensor::zeros({h * w});
    for (int i = 0; i < h * w; ++i)
        out.data[static_cast<std::size_t>(i)] =
            maps.data[static_cast<std::size_t>(i) * c + ch];
    if (tp.recording()) {
        out.node = tp.push(out, [mn = maps.node, hw = h * w, c, ch](const Tensor& g,
                                                                    GradSink& sink) {
            if (mn < 0) return;
            Tensor& dm = sink.grad(mn);
            for (int i = 0; i < hw; ++i)
                dm.data[static_cast<std::size_t>(i) * c + ch] +=
                    g.data[static_cast<std::size_t>(i)];
        });
    }
    return out;
}

}  // namespace sfdmc
