#include "chatmine/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "chatmine/error.hpp"

namespace chatmine::nn {

Var Tape::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
}

Var Tape::view(const Tensor& value) {
    Node n;
    n.ref = &value;
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
    Node n;
    n.ref = &p.value;
    n.param = &p;
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ref ? *n.ref : n.value;
}

Tensor& Tape::grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.param) {
        if (n.param->grad.shape != n.param->value.shape) n.param->grad = Tensor(n.param->value.shape);
        return n.param->grad;
    }
    if (n.grad.empty() && !value(v).empty()) n.grad = Tensor(value(v).shape);
    return n.grad;
}

bool Tape::has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }

Var Tape::push(Tensor value, std::function<void(Tape&)> backward) {
    if (!value.all_finite()) throw InternalError("non-finite value produced during forward pass");
    Node n;
    n.value = std::move(value);
    if (record_) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
}

void Tape::backward(Var out) {
    CHATMINE_REQUIRE(record_, "backward on a non-recording tape");
    grad(out).fill(1.0);
    for (std::size_t i = out.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward || n.grad.empty()) continue;
        // Copy the closure: it may grow nodes_ (it never does today, but the
        // reference would dangle if it did).
        auto fn = n.backward;
        fn(*this);
    }
}

// ---------------------------------------------------------------------------

namespace {

void require_vector(const Tensor& t, const char* what) {
    CHATMINE_REQUIRE(t.rank() == 1, std::string(what) + ": expected a rank-1 tensor, got " + shape_string(t.shape));
}

}  // namespace

Var matvec(Tape& t, Var W, Var x) {
    const Tensor& w = t.value(W);
    const Tensor& xv = t.value(x);
    CHATMINE_REQUIRE(w.rank() == 2, "matvec: weight must be rank-2");
    require_vector(xv, "matvec");
    CHATMINE_REQUIRE(w.cols() == xv.size(), "matvec: inner dimensions disagree " + shape_string(w.shape) + " x " +
                                                shape_string(xv.shape));
    const std::size_t m = w.rows(), n = w.cols();
    Tensor y({m});
    for (std::size_t i = 0; i < m; ++i) {
        const double* wr = w.data.data() + i * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += wr[j] * xv.data[j];
        y.data[i] = acc;
    }
    return t.push(std::move(y), [W, x, m, n, out = t.size()](Tape& tp) {
        const Tensor& gy = tp.grad({out});
        const Tensor& w = tp.value(W);
        const Tensor& xv = tp.value(x);
        Tensor& gw = tp.grad(W);
        for (std::size_t i = 0; i < m; ++i) {
            const double g = gy.data[i];
            if (g == 0.0) continue;
            double* gr = gw.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) gr[j] += g * xv.data[j];
        }
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < m; ++i) {
            const double g = gy.data[i];
            if (g == 0.0) continue;
            const double* wr = w.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) gx.data[j] += g * wr[j];
        }
    });
}

Var add(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    CHATMINE_REQUIRE(av.shape == bv.shape, "add: shape mismatch " + shape_string(av.shape) + " vs " +
                                               shape_string(bv.shape));
    Tensor y = av;
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
    return t.push(std::move(y), [a, b, out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        Tensor& ga = tp.grad(a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga.data[i] += gy.data[i];
        Tensor& gb = tp.grad(b);
        for (std::size_t i = 0; i < gy.size(); ++i) gb.data[i] += gy.data[i];
    });
}

Var linear(Tape& t, Var x, Var W, Var b) {
    const Tensor& bv = t.value(b);
    require_vector(bv, "linear bias");
    CHATMINE_REQUIRE(t.value(W).rank() == 2 && t.value(W).rows() == bv.size(),
                     "linear: bias length does not match weight rows");
    return add(t, matvec(t, W, x), b);
}

Var scale(Tape& t, Var a, double s) {
    Tensor y = t.value(a);
    for (auto& v : y.data) v *= s;
    return t.push(std::move(y), [a, s, out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        Tensor& ga = tp.grad(a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga.data[i] += s * gy.data[i];
    });
}

Var sum(Tape& t, const std::vector<Var>& scalars, double weight) {
    CHATMINE_REQUIRE(!scalars.empty(), "sum of no terms");
    double acc = 0.0;
    for (auto v : scalars) {
        CHATMINE_REQUIRE(t.value(v).size() == 1, "sum: terms must be scalars");
        acc += t.value(v).data[0];
    }
    return t.push(Tensor::vector({weight * acc}), [scalars, weight, out = t.size()](Tape& tp) {
        const double g = tp.grad({out}).data[0] * weight;
        for (auto v : scalars) tp.grad(v).data[0] += g;
    });
}

Var relu(Tape& t, Var x) {
    Tensor y = t.value(x);
    for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
    return t.push(std::move(y), [x, out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        const Tensor& xv = tp.value(x);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i)
            if (xv.data[i] > 0.0) gx.data[i] += gy.data[i];
    });
}

double softsign_value(double x) { return x / (1.0 + std::abs(x)); }

double sigmoid_value(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Var softsign(Tape& t, Var x) {
    Tensor y = t.value(x);
    for (auto& v : y.data) v = softsign_value(v);
    return t.push(std::move(y), [x, out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        const Tensor& xv = tp.value(x);
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            const double d = 1.0 + std::abs(xv.data[i]);
            gx.data[i] += gy.data[i] / (d * d);
        }
    });
}

Var sigmoid(Tape& t, Var x) {
    Tensor y = t.value(x);
    for (auto& v : y.data) v = sigmoid_value(v);
    return t.push(std::move(y), [x, out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        const Tensor& yv = tp.value({out});
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i) gx.data[i] += gy.data[i] * yv.data[i] * (1.0 - yv.data[i]);
    });
}

std::vector<double> softmax_values(std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    if (y.empty()) return y;
    const double mx = *std::max_element(y.begin(), y.end());
    double z = 0.0;
    for (auto& v : y) {
        v = std::exp(v - mx);
        z += v;
    }
    for (auto& v : y) v /= z;
    return y;
}

Var softmax(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    CHATMINE_REQUIRE(xv.rank() >= 1 && xv.size() > 0, "softmax of empty tensor");
    const std::size_t width = xv.shape.back();
    const std::size_t rows = xv.size() / width;
    Tensor y(xv.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        auto s = softmax_values({xv.data.data() + r * width, width});
        std::copy(s.begin(), s.end(), y.data.begin() + static_cast<std::ptrdiff_t>(r * width));
    }
    return t.push(std::move(y), [x, width, rows, out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        const Tensor& yv = tp.value({out});
        Tensor& gx = tp.grad(x);
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < width; ++j) dot += gy.data[r * width + j] * yv.data[r * width + j];
            for (std::size_t j = 0; j < width; ++j) {
                const std::size_t k = r * width + j;
                gx.data[k] += yv.data[k] * (gy.data[k] - dot);
            }
        }
    });
}

Var dropout(Tape& t, Var x, double p, Rng& rng, bool training) {
    CHATMINE_REQUIRE(p >= 0.0 && p < 1.0, "dropout probability must be in [0, 1)");
    if (!training || p == 0.0) return x;
    const Tensor& xv = t.value(x);
    std::vector<double> mask(xv.size());
    const double keep_scale = 1.0 / (1.0 - p);
    for (auto& m : mask) m = rng.uniform() < p ? 0.0 : keep_scale;
    Tensor y = xv;
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= mask[i];
    return t.push(std::move(y), [x, mask = std::move(mask), out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        Tensor& gx = tp.grad(x);
        for (std::size_t i = 0; i < gy.size(); ++i) gx.data[i] += gy.data[i] * mask[i];
    });
}

Var concat(Tape& t, const std::vector<Var>& parts) {
    std::vector<double> y;
    std::vector<std::size_t> sizes;
    for (auto p : parts) {
        const Tensor& v = t.value(p);
        require_vector(v, "concat");
        y.insert(y.end(), v.data.begin(), v.data.end());
        sizes.push_back(v.size());
    }
    return t.push(Tensor::vector(std::move(y)), [parts, sizes, out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        std::size_t off = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            Tensor& g = tp.grad(parts[k]);
            for (std::size_t i = 0; i < sizes[k]; ++i) g.data[i] += gy.data[off + i];
            off += sizes[k];
        }
    });
}

Var conv1d_maxpool(Tape& t, Var x, Var K, Var b) {
    const Tensor& xv = t.value(x);
    const Tensor& kv = t.value(K);
    const Tensor& bv = t.value(b);
    require_vector(xv, "conv1d_maxpool input");
    CHATMINE_REQUIRE(kv.rank() == 2, "conv1d_maxpool: kernels must be [m, h]");
    const std::size_t n = xv.size(), m = kv.rows(), h = kv.cols();
    CHATMINE_REQUIRE(bv.size() == m, "conv1d_maxpool: bias length must equal kernel count");
    CHATMINE_REQUIRE(h >= 1 && n >= h, "conv1d_maxpool: sequence length " + std::to_string(n) +
                                           " shorter than kernel size " + std::to_string(h));
    const std::size_t positions = n - h + 1;
    Tensor y({m});
    std::vector<std::size_t> argmax(m, 0);
    const double* xd = xv.data.data();
    for (std::size_t j = 0; j < m; ++j) {
        const double* kr = kv.data.data() + j * h;
        const double bias = bv.data[j];
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_t = 0;
        for (std::size_t p = 0; p < positions; ++p) {
            double acc = bias;
            for (std::size_t q = 0; q < h; ++q) acc += kr[q] * xd[p + q];
            if (acc > best) {
                best = acc;
                best_t = p;
            }
        }
        // max(ReLU(z)) == ReLU(max z); the argmax window carries the gradient.
        y.data[j] = best > 0.0 ? best : 0.0;
        argmax[j] = best_t;
    }
    return t.push(std::move(y), [x, K, b, h, m, argmax = std::move(argmax), out = t.size()](Tape& tp) {
        const Tensor gy = tp.grad({out});
        const Tensor& yv = tp.value({out});
        const Tensor& xv = tp.value(x);
        const Tensor& kv = tp.value(K);
        Tensor& gk = tp.grad(K);
        Tensor& gb = tp.grad(b);
        Tensor& gx = tp.grad(x);
        for (std::size_t j = 0; j < m; ++j) {
            if (yv.data[j] <= 0.0) continue;
            const double g = gy.data[j];
            const std::size_t p = argmax[j];
            gb.data[j] += g;
            for (std::size_t q = 0; q < h; ++q) {
                gk.data[j * h + q] += g * xv.data[p + q];
                gx.data[p + q] += g * kv.data[j * h + q];
            }
        }
    });
}

Var cross_entropy(Tape& t, Var pred, std::size_t label) {
    const Tensor& pv = t.value(pred);
    CHATMINE_REQUIRE(label < pv.size(), "cross_entropy: label out of range");
    const double p = std::max(pv.data[label], 1e-12);
    return t.push(Tensor::vector({-std::log(p)}), [pred, label, out = t.size()](Tape& tp) {
        const double g = tp.grad({out}).data[0];
        const double p = tp.value(pred).data[label];
        if (p > 1e-12) tp.grad(pred).data[label] += -g / p;
    });
}

Var softmax_cross_entropy(Tape& t, Var logits, std::size_t label) {
    const Tensor& lv = t.value(logits);
    require_vector(lv, "softmax_cross_entropy");
    CHATMINE_REQUIRE(label < lv.size(), "softmax_cross_entropy: label out of range");
    auto probs = softmax_values(lv.data);
    const double loss = -std::log(std::max(probs[label], 1e-12));
    return t.push(Tensor::vector({loss}), [logits, label, probs = std::move(probs), out = t.size()](Tape& tp) {
        const double g = tp.grad({out}).data[0];
        Tensor& gl = tp.grad(logits);
        for (std::size_t i = 0; i < probs.size(); ++i) gl.data[i] += g * (probs[i] - (i == label ? 1.0 : 0.0));
    });
}

}  // namespace chatmine::nn
