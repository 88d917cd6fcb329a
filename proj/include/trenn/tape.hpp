#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "trenn/tensor.hpp"

namespace trenn {

class Tape;

// Lightweight handle to a value recorded on a tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
    bool valid() const { return tape != nullptr && id >= 0; }
};

// Gradients keyed by tape variable id. Only watched leaves appear.
struct GradMap {
    std::unordered_map<int, Tensor> grads;

    bool contains(const Var& v) const { return grads.count(v.id) > 0; }
    const Tensor& at(const Var& v) const { return grads.at(v.id); }
};

// Reverse-mode tape with a fixed op vocabulary. Every op validates shapes and
// raises on non-finite outputs. Single-threaded by contract.
class Tape {
public:
    // Leaves. `watch` marks the tensor as a gradient target (trainable
    // parameter or input-of-interest); unwatched leaves are constants.
    Var leaf(Tensor value, bool watch = false);

    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add(Var a, Var b);            // same shape
    Var add_rowvec(Var a, Var bias);  // a: NxD, bias: 1xD broadcast over rows
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    Var affine(Var a, double scale, double shift);
    Var scale(Var a, double s) { return affine(a, s, 0.0); }
    Var relu(Var a);
    Var exp(Var a);
    Var softmax_rows(Var a);
    Var concat_rows(const std::vector<Var>& parts);
    Var concat_cols(const std::vector<Var>& parts);
    Var mean_rows(Var a);  // NxD -> 1xD
    Var sum_all(Var a);    // -> 1x1
    Var mean_all(Var a);   // -> 1x1
    Var select_row(Var a, std::size_t row);  // -> 1xD

    const Tensor& value(Var v) const { return values_.at(static_cast<std::size_t>(v.id)); }

    // Backpropagates from a scalar loss. Visits each recorded op exactly once.
    GradMap backward(Var loss) const;

    std::size_t num_nodes() const { return nodes_.size(); }

private:
    enum class Op {
        Leaf,
        MatMul,
        Transpose,
        Add,
        AddRowVec,
        Sub,
        Mul,
        Affine,
        Relu,
        Exp,
        SoftmaxRows,
        ConcatRows,
        ConcatCols,
        MeanRows,
        SumAll,
        MeanAll,
        SelectRow,
    };

    struct Node {
        Op op = Op::Leaf;
        std::vector<int> inputs;
        int out = -1;
        double a = 0.0;  // op payload (affine scale, selected row index, ...)
        double b = 0.0;
    };

    Var push(Op op, std::vector<int> inputs, Tensor out, double a = 0.0, double b = 0.0);
    const Tensor& val(int id) const { return values_[static_cast<std::size_t>(id)]; }

    std::vector<Tensor> values_;
    std::vector<Node> nodes_;   // nodes_[i] produced values_[i]
    std::vector<bool> watched_;
};

}  // namespace trenn
