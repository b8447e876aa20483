#pragma once

#include <functional>
#include <vector>

#include "chatmine/tensor.hpp"

namespace chatmine::nn {

struct Var {
    std::size_t id = 0;
};

/// Reverse-mode gradient tape.
///
/// Every op appends a node holding its value and a closure that pushes the
/// node's gradient to its inputs. Parameter leaves alias the parameter's
/// storage, so their gradients accumulate straight into Parameter::grad.
/// A tape built with record = false only computes values.
class Tape {
 public:
    explicit Tape(bool record = true) : record_(record) {}

    bool recording() const { return record_; }

    Var constant(Tensor value);
    /// Leaf that references external storage without copying; no gradient.
    Var view(const Tensor& value);
    Var parameter(Parameter& p);

    const Tensor& value(Var v) const;
    Tensor& grad(Var v);
    bool has_grad(Var v) const;

    /// Appends a computed node; `backward` runs only if the node received a gradient.
    Var push(Tensor value, std::function<void(Tape&)> backward);

    /// Seeds d(out)/d(out) = 1 for every element of `out` and runs the closures in reverse.
    void backward(Var out);

    std::size_t size() const { return nodes_.size(); }

 private:
    struct Node {
        Tensor value;
        const Tensor* ref = nullptr;
        Parameter* param = nullptr;
        Tensor grad;
        std::function<void(Tape&)> backward;
    };
    bool record_;
    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Ops. Shapes: vectors are rank-1, matrices rank-2 row-major.

/// W x for W [m, n], x [n].
Var matvec(Tape& t, Var W, Var x);
/// W x + b.
Var linear(Tape& t, Var x, Var W, Var b);
Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var sum(Tape& t, const std::vector<Var>& scalars, double weight = 1.0);

Var relu(Tape& t, Var x);
/// x / (1 + |x|).
Var softsign(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
/// Softmax over the last axis.
Var softmax(Tape& t, Var x);
/// Inverted dropout: zero with probability p, scale survivors by 1 / (1 - p).
/// Identity when `training` is false.
Var dropout(Tape& t, Var x, double p, Rng& rng, bool training);

Var concat(Tape& t, const std::vector<Var>& parts);

/// Per kernel j: max over t of ReLU(K[j] . x[t : t + h] + b[j]).
/// x [n], K [m, h], b [m] -> [m]. The first maximal window receives the gradient.
Var conv1d_maxpool(Tape& t, Var x, Var K, Var b);

/// -log(max(pred[label], 1e-12)) for a probability row.
Var cross_entropy(Tape& t, Var pred, std::size_t label);
/// Fused softmax + cross-entropy on logits.
Var softmax_cross_entropy(Tape& t, Var logits, std::size_t label);

// Free-function forward helpers for code that does not need a tape.
std::vector<double> softmax_values(std::span<const double> x);
double softsign_value(double x);
double sigmoid_value(double x);

}  // namespace chatmine::nn
