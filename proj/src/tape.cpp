#include "trenn/tape.hpp"

#include <algorithm>
#include <cmath>

namespace trenn {

bool Tensor::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                                " and " + b.shape_str());
}

}  // namespace

Var Tape::push(Op op, std::vector<int> inputs, Tensor out, double a, double b) {
    if (!out.all_finite()) {
        throw std::runtime_error("Tape: non-finite value produced by op");
    }
    const int id = static_cast<int>(values_.size());
    values_.push_back(std::move(out));
    nodes_.push_back(Node{op, std::move(inputs), id, a, b});
    watched_.push_back(false);
    return Var{this, id};
}

Var Tape::leaf(Tensor value, bool watch) {
    if (!value.all_finite()) {
        throw std::runtime_error("Tape: non-finite leaf value");
    }
    Var v = push(Op::Leaf, {}, std::move(value));
    watched_[static_cast<std::size_t>(v.id)] = watch;
    return v;
}

Var Tape::matmul(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (A.cols != B.rows) shape_error("matmul", A, B);
    Tensor C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t k = 0; k < A.cols; ++k) {
            const double aik = A.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < B.cols; ++j) {
                C.at(i, j) += aik * B.at(k, j);
            }
        }
    }
    return push(Op::MatMul, {a.id, b.id}, std::move(C));
}

Var Tape::transpose(Var a) {
    const Tensor& A = val(a.id);
    Tensor C(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) C.at(j, i) = A.at(i, j);
    return push(Op::Transpose, {a.id}, std::move(C));
}

Var Tape::add(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (!A.same_shape(B)) shape_error("add", A, B);
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.data[i] += B.data[i];
    return push(Op::Add, {a.id, b.id}, std::move(C));
}

Var Tape::add_rowvec(Var a, Var bias) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(bias.id);
    if (B.rows != 1 || B.cols != A.cols) shape_error("add_rowvec", A, B);
    Tensor C = A;
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) += B.at(0, j);
    return push(Op::AddRowVec, {a.id, bias.id}, std::move(C));
}

Var Tape::sub(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (!A.same_shape(B)) shape_error("sub", A, B);
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.data[i] -= B.data[i];
    return push(Op::Sub, {a.id, b.id}, std::move(C));
}

Var Tape::mul(Var a, Var b) {
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (!A.same_shape(B)) shape_error("mul", A, B);
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.data[i] *= B.data[i];
    return push(Op::Mul, {a.id, b.id}, std::move(C));
}

Var Tape::affine(Var a, double s, double shift) {
    Tensor C = val(a.id);
    for (double& x : C.data) x = s * x + shift;
    return push(Op::Affine, {a.id}, std::move(C), s, shift);
}

Var Tape::relu(Var a) {
    Tensor C = val(a.id);
    for (double& x : C.data) x = x > 0.0 ? x : 0.0;
    return push(Op::Relu, {a.id}, std::move(C));
}

Var Tape::exp(Var a) {
    Tensor C = val(a.id);
    for (double& x : C.data) x = std::exp(x);
    return push(Op::Exp, {a.id}, std::move(C));
}

Var Tape::softmax_rows(Var a) {
    Tensor C = val(a.id);
    for (std::size_t i = 0; i < C.rows; ++i) {
        double mx = C.at(i, 0);
        for (std::size_t j = 1; j < C.cols; ++j) mx = std::max(mx, C.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < C.cols; ++j) {
            C.at(i, j) = std::exp(C.at(i, j) - mx);
            sum += C.at(i, j);
        }
        for (std::size_t j = 0; j < C.cols; ++j) C.at(i, j) /= sum;
    }
    return push(Op::SoftmaxRows, {a.id}, std::move(C));
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const std::size_t cols = val(parts[0].id).cols;
    std::size_t rows = 0;
    std::vector<int> ids;
    for (const Var& p : parts) {
        const Tensor& t = val(p.id);
        if (t.cols != cols) shape_error("concat_rows", val(parts[0].id), t);
        rows += t.rows;
        ids.push_back(p.id);
    }
    Tensor C(rows, cols);
    std::size_t r = 0;
    for (const Var& p : parts) {
        const Tensor& t = val(p.id);
        std::copy(t.data.begin(), t.data.end(), C.data.begin() + static_cast<long>(r * cols));
        r += t.rows;
    }
    return push(Op::ConcatRows, std::move(ids), std::move(C));
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const std::size_t rows = val(parts[0].id).rows;
    std::size_t cols = 0;
    std::vector<int> ids;
    for (const Var& p : parts) {
        const Tensor& t = val(p.id);
        if (t.rows != rows) shape_error("concat_cols", val(parts[0].id), t);
        cols += t.cols;
        ids.push_back(p.id);
    }
    Tensor C(rows, cols);
    std::size_t c = 0;
    for (const Var& p : parts) {
        const Tensor& t = val(p.id);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < t.cols; ++j) C.at(i, c + j) = t.at(i, j);
        c += t.cols;
    }
    return push(Op::ConcatCols, std::move(ids), std::move(C));
}

Var Tape::mean_rows(Var a) {
    const Tensor& A = val(a.id);
    Tensor C(1, A.cols);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) C.at(0, j) += A.at(i, j);
    for (double& x : C.data) x /= static_cast<double>(A.rows);
    return push(Op::MeanRows, {a.id}, std::move(C));
}

Var Tape::sum_all(Var a) {
    const Tensor& A = val(a.id);
    double s = 0.0;
    for (double x : A.data) s += x;
    return push(Op::SumAll, {a.id}, Tensor::scalar(s));
}

Var Tape::mean_all(Var a) {
    const Tensor& A = val(a.id);
    double s = 0.0;
    for (double x : A.data) s += x;
    return push(Op::MeanAll, {a.id}, Tensor::scalar(s / static_cast<double>(A.size())));
}

Var Tape::select_row(Var a, std::size_t row) {
    const Tensor& A = val(a.id);
    if (row >= A.rows) {
        throw std::invalid_argument("select_row: row " + std::to_string(row) + " out of " +
                                    A.shape_str());
    }
    Tensor C(1, A.cols);
    for (std::size_t j = 0; j < A.cols; ++j) C.at(0, j) = A.at(row, j);
    return push(Op::SelectRow, {a.id}, std::move(C), static_cast<double>(row));
}

GradMap Tape::backward(Var loss) const {
    const Tensor& L = val(loss.id);
    if (!L.is_scalar()) {
        throw std::invalid_argument("backward: loss must be scalar, got " + L.shape_str());
    }

    // A value needs a gradient if a watched leaf is reachable from it.
    std::vector<bool> needs(values_.size(), false);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].op == Op::Leaf) {
            needs[i] = watched_[i];
        } else {
            for (int in : nodes_[i].inputs) {
                if (needs[static_cast<std::size_t>(in)]) {
                    needs[i] = true;
                    break;
                }
            }
        }
    }

    std::vector<Tensor> grad(values_.size());
    auto accum = [&](int id, const Tensor& g) {
        Tensor& slot = grad[static_cast<std::size_t>(id)];
        if (slot.size() == 0) {
            slot = g;
        } else {
            for (std::size_t i = 0; i < slot.size(); ++i) slot.data[i] += g.data[i];
        }
    };
    auto has_grad = [&](int id) { return grad[static_cast<std::size_t>(id)].size() != 0; };

    if (needs[static_cast<std::size_t>(loss.id)]) {
        grad[static_cast<std::size_t>(loss.id)] = Tensor::scalar(1.0);
    }

    for (std::size_t ni = nodes_.size(); ni-- > 0;) {
        const Node& n = nodes_[ni];
        if (n.op == Op::Leaf || !has_grad(n.out)) continue;
        const Tensor& g = grad[static_cast<std::size_t>(n.out)];
        auto wants = [&](std::size_t slot) { return needs[static_cast<std::size_t>(n.inputs[slot])]; };

        switch (n.op) {
            case Op::MatMul: {
                const Tensor& A = val(n.inputs[0]);
                const Tensor& B = val(n.inputs[1]);
                if (wants(0)) {
                    Tensor ga(A.rows, A.cols);
                    for (std::size_t i = 0; i < A.rows; ++i)
                        for (std::size_t j = 0; j < B.cols; ++j) {
                            const double gij = g.at(i, j);
                            if (gij == 0.0) continue;
                            for (std::size_t k = 0; k < A.cols; ++k)
                                ga.at(i, k) += gij * B.at(k, j);
                        }
                    accum(n.inputs[0], ga);
                }
                if (wants(1)) {
                    Tensor gb(B.rows, B.cols);
                    for (std::size_t i = 0; i < A.rows; ++i)
                        for (std::size_t k = 0; k < A.cols; ++k) {
                            const double aik = A.at(i, k);
                            if (aik == 0.0) continue;
                            for (std::size_t j = 0; j < B.cols; ++j)
                                gb.at(k, j) += aik * g.at(i, j);
                        }
                    accum(n.inputs[1], gb);
                }
                break;
            }
            case Op::Transpose: {
                if (wants(0)) {
                    Tensor ga(g.cols, g.rows);
                    for (std::size_t i = 0; i < g.rows; ++i)
                        for (std::size_t j = 0; j < g.cols; ++j) ga.at(j, i) = g.at(i, j);
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::Add: {
                if (wants(0)) accum(n.inputs[0], g);
                if (wants(1)) accum(n.inputs[1], g);
                break;
            }
            case Op::AddRowVec: {
                if (wants(0)) accum(n.inputs[0], g);
                if (wants(1)) {
                    Tensor gb(1, g.cols);
                    for (std::size_t i = 0; i < g.rows; ++i)
                        for (std::size_t j = 0; j < g.cols; ++j) gb.at(0, j) += g.at(i, j);
                    accum(n.inputs[1], gb);
                }
                break;
            }
            case Op::Sub: {
                if (wants(0)) accum(n.inputs[0], g);
                if (wants(1)) {
                    Tensor gb = g;
                    for (double& x : gb.data) x = -x;
                    accum(n.inputs[1], gb);
                }
                break;
            }
            case Op::Mul: {
                if (wants(0)) {
                    Tensor ga = g;
                    const Tensor& B = val(n.inputs[1]);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= B.data[i];
                    accum(n.inputs[0], ga);
                }
                if (wants(1)) {
                    Tensor gb = g;
                    const Tensor& A = val(n.inputs[0]);
                    for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] *= A.data[i];
                    accum(n.inputs[1], gb);
                }
                break;
            }
            case Op::Affine: {
                if (wants(0)) {
                    Tensor ga = g;
                    for (double& x : ga.data) x *= n.a;
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::Relu: {
                if (wants(0)) {
                    Tensor ga = g;
                    const Tensor& A = val(n.inputs[0]);
                    for (std::size_t i = 0; i < ga.size(); ++i)
                        if (A.data[i] <= 0.0) ga.data[i] = 0.0;
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::Exp: {
                if (wants(0)) {
                    Tensor ga = g;
                    const Tensor& Y = val(n.out);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= Y.data[i];
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::SoftmaxRows: {
                if (wants(0)) {
                    const Tensor& Y = val(n.out);
                    Tensor ga(Y.rows, Y.cols);
                    for (std::size_t i = 0; i < Y.rows; ++i) {
                        double dot = 0.0;
                        for (std::size_t j = 0; j < Y.cols; ++j) dot += g.at(i, j) * Y.at(i, j);
                        for (std::size_t j = 0; j < Y.cols; ++j)
                            ga.at(i, j) = Y.at(i, j) * (g.at(i, j) - dot);
                    }
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::ConcatRows: {
                std::size_t r = 0;
                for (std::size_t s = 0; s < n.inputs.size(); ++s) {
                    const Tensor& part = val(n.inputs[s]);
                    if (wants(s)) {
                        Tensor gp(part.rows, part.cols);
                        for (std::size_t i = 0; i < part.rows; ++i)
                            for (std::size_t j = 0; j < part.cols; ++j)
                                gp.at(i, j) = g.at(r + i, j);
                        accum(n.inputs[s], gp);
                    }
                    r += part.rows;
                }
                break;
            }
            case Op::ConcatCols: {
                std::size_t c = 0;
                for (std::size_t s = 0; s < n.inputs.size(); ++s) {
                    const Tensor& part = val(n.inputs[s]);
                    if (wants(s)) {
                        Tensor gp(part.rows, part.cols);
                        for (std::size_t i = 0; i < part.rows; ++i)
                            for (std::size_t j = 0; j < part.cols; ++j)
                                gp.at(i, j) = g.at(i, c + j);
                        accum(n.inputs[s], gp);
                    }
                    c += part.cols;
                }
                break;
            }
            case Op::MeanRows: {
                if (wants(0)) {
                    const Tensor& A = val(n.inputs[0]);
                    Tensor ga(A.rows, A.cols);
                    const double inv = 1.0 / static_cast<double>(A.rows);
                    for (std::size_t i = 0; i < A.rows; ++i)
                        for (std::size_t j = 0; j < A.cols; ++j) ga.at(i, j) = g.at(0, j) * inv;
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::SumAll: {
                if (wants(0)) {
                    const Tensor& A = val(n.inputs[0]);
                    Tensor ga(A.rows, A.cols);
                    for (double& x : ga.data) x = g.item();
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::MeanAll: {
                if (wants(0)) {
                    const Tensor& A = val(n.inputs[0]);
                    Tensor ga(A.rows, A.cols);
                    const double v = g.item() / static_cast<double>(A.size());
                    for (double& x : ga.data) x = v;
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::SelectRow: {
                if (wants(0)) {
                    const Tensor& A = val(n.inputs[0]);
                    Tensor ga(A.rows, A.cols);
                    const auto row = static_cast<std::size_t>(n.a);
                    for (std::size_t j = 0; j < A.cols; ++j) ga.at(row, j) = g.at(0, j);
                    accum(n.inputs[0], ga);
                }
                break;
            }
            case Op::Leaf:
                break;
        }
    }

    GradMap out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (nodes_[i].op == Op::Leaf && watched_[i] && grad[i].size() != 0) {
            out.grads.emplace(static_cast<int>(i), std::move(grad[i]));
        }
    }
    return out;
}

}  // namespace trenn
