#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hashgen/tensor.hpp"

namespace hashgen {

// Handle to a value recorded on a Tape.
struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

// Define-by-run reverse-mode gradient engine. A tape is rebuilt per forward
// pass; operations append nodes in topological order and a single backward
// sweep visits each node exactly once, in reverse. Not thread-safe during
// recording.
class Tape {
public:
    // Leaf holding a (copied) tensor. Named leaves with requires_grad=true
    // show up in gradients() keyed by name.
    Var leaf(Tensor value, bool requires_grad = false, std::string name = {});
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    Var matmul(Var a, Var b);
    Var transpose(Var x);

    // Elementwise; b may be a rank-1 vector broadcast across the rows of a.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);

    Var tanh(Var x);
    Var sigmoid(Var x);

    // Row-normalized exponentials, stabilized by per-row max subtraction.
    // The mask (same shape, nonzero = keep) is applied as an additive -1e9
    // surrogate; masked entries come out exactly zero. A fully masked row is
    // a contract violation.
    Var softmax_rows(Var x);
    Var softmax_rows(Var x, const Tensor& mask);
    Var log_softmax_rows(Var x);

    Var concat_rows(Var a, Var b);
    Var concat_cols(Var a, Var b);
    Var stack_rows(const std::vector<Var>& rows); // k [1 x n] vars -> [k x n]
    Var slice_rows(Var x, int row_begin, int row_end);
    Var gather_rows(Var x, std::vector<int> row_ids);

    // Collects x[r, c] for each (r, c) pair into a rank-1 tensor.
    Var pick_entries(Var x, std::vector<std::pair<int, int>> entries);

    Var sum_all(Var x); // -> scalar
    Var scale(Var x, double k);
    Var neg(Var x) { return scale(x, -1.0); }

    const Tensor& value(Var v) const { return node(v.idx).value; }
    const Tensor& grad(Var v) const;

    // Accumulates d(loss)/d(node) for every node that requires grad. The
    // loss must be a scalar recorded on this tape.
    void backward(Var loss);

    // Gradient of the last backward() for every named requires_grad leaf;
    // leaves the loss never reached report exact zeros.
    std::map<std::string, Tensor> gradients() const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_ready = false;
        std::string name;
        std::function<void(Tape&, int)> backprop; // reads this node's grad, accumulates into inputs
    };

    Node& node(int idx);
    const Node& node(int idx) const;
    int push(Tensor value, bool requires_grad, std::function<void(Tape&, int)> backprop);
    Tensor& grad_buffer(int idx); // lazily allocated zeros
    void check(Var v, const char* op) const;
    Var softmax_impl(Var x, const Tensor* mask, bool log_space);

    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, int>> named_leaves_;
};

} // namespace hashgen
