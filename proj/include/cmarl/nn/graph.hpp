#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cmarl/error.hpp"
#include "cmarl/nn/tensor.hpp"

namespace cmarl::nn {

// Handle to a node of a Graph. Only meaningful for the graph that created it.
struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
    bool valid() const { return id != std::numeric_limits<std::size_t>::max(); }
};

// Reverse-mode tape over dense row-major matrices.
//
// Every op evaluates eagerly and, when recording and at least one operand
// needs a gradient, appends a closure that pushes the output gradient back
// into its operands. Parameter leaves add their gradient into
// Parameter::grad, so repeated backward passes accumulate.
//
// A graph built with record=false is a pure evaluator: nothing is retained
// for backward and backward() is a usage error.
class Graph {
public:
    explicit Graph(bool record = true) : record_(record) { nodes_.reserve(256); }

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = default;
    Graph& operator=(Graph&&) = default;

    bool recording() const { return record_; }
    std::size_t size() const { return nodes_.size(); }

    const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
    double scalar(Var v) const {
        const Matrix& m = value(v);
        if (m.size() != 1) throw UsageError("scalar() on a non-scalar node");
        return m(0, 0);
    }
    // Gradient of the last backward() target w.r.t. this node (empty if unreached).
    const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }

    Var input(Matrix m) { return push(std::move(m), false, nullptr); }

    Var param(Parameter& p) {
        Var v = push(p.value, record_, nullptr);
        nodes_[v.id].param = &p;
        return v;
    }

    // Variable leaf: receives a gradient but is not bound to a Parameter.
    Var leaf(Matrix m) { return push(std::move(m), record_, nullptr); }

    Var matmul(Var a, Var b) {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        if (A.cols() != B.rows())
            throw ConfigError("matmul shape mismatch: " + dims(A) + " x " + dims(B));
        Matrix out = A * B;
        return push_op(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            if (g.needs(a)) g.acc(a).noalias() += go * g.value(b).transpose();
            if (g.needs(b)) g.acc(b).noalias() += g.value(a).transpose() * go;
        });
    }

    Var add(Var a, Var b) {
        same_shape(a, b, "add");
        Matrix out = value(a) + value(b);
        return push_op(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            if (g.needs(a)) g.acc(a) += go;
            if (g.needs(b)) g.acc(b) += go;
        });
    }

    Var sub(Var a, Var b) {
        same_shape(a, b, "sub");
        Matrix out = value(a) - value(b);
        return push_op(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            if (g.needs(a)) g.acc(a) += go;
            if (g.needs(b)) g.acc(b) -= go;
        });
    }

    // a (r x c) + row (1 x c) broadcast over rows.
    Var add_row(Var a, Var row) {
        const Matrix& A = value(a);
        const Matrix& R = value(row);
        if (R.rows() != 1 || R.cols() != A.cols())
            throw ConfigError("add_row shape mismatch: " + dims(A) + " + " + dims(R));
        Matrix out = A.rowwise() + R.row(0);
        return push_op(std::move(out), {a, row}, [a, row](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            if (g.needs(a)) g.acc(a) += go;
            if (g.needs(row)) g.acc(row) += go.colwise().sum();
        });
    }

    // Elementwise product.
    Var mul(Var a, Var b) {
        same_shape(a, b, "mul");
        Matrix out = value(a).cwiseProduct(value(b));
        return push_op(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            if (g.needs(a)) g.acc(a) += go.cwiseProduct(g.value(b));
            if (g.needs(b)) g.acc(b) += go.cwiseProduct(g.value(a));
        });
    }

    // s * a + c, elementwise.
    Var affine(Var a, double s, double c = 0.0) {
        Matrix out = (value(a) * s).array() + c;
        return push_op(std::move(out), {a}, [a, s](Graph& g, std::size_t self) {
            g.acc(a) += g.nodes_[self].grad * s;
        });
    }
    Var scale(Var a, double s) { return affine(a, s, 0.0); }
    Var one_minus(Var a) { return affine(a, -1.0, 1.0); }

    // Each row of a (r x c) multiplied by the matching entry of col (r x 1).
    Var scale_rows(Var a, Var col) {
        const Matrix& A = value(a);
        const Matrix& C = value(col);
        if (C.cols() != 1 || C.rows() != A.rows())
            throw ConfigError("scale_rows shape mismatch: " + dims(A) + " * " + dims(C));
        Matrix out = A.array().colwise() * C.col(0).array();
        return push_op(std::move(out), {a, col}, [a, col](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            if (g.needs(a)) g.acc(a).array() += go.array().colwise() * g.value(col).col(0).array();
            if (g.needs(col)) g.acc(col) += go.cwiseProduct(g.value(a)).rowwise().sum();
        });
    }

    Var sigmoid(Var a) {
        Matrix out = value(a).unaryExpr([](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            double e = std::exp(x);
            return e / (1.0 + e);
        });
        return push_op(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Matrix& y = g.nodes_[self].value;
            g.acc(a).array() += g.nodes_[self].grad.array() * y.array() * (1.0 - y.array());
        });
    }

    Var tanh(Var a) {
        Matrix out = value(a).array().tanh().matrix();
        return push_op(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Matrix& y = g.nodes_[self].value;
            g.acc(a).array() += g.nodes_[self].grad.array() * (1.0 - y.array().square());
        });
    }

    Var relu(Var a) {
        Matrix out = value(a).cwiseMax(0.0);
        return push_op(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Matrix& x = g.value(a);
            g.acc(a).array() += (x.array() > 0.0).select(g.nodes_[self].grad.array(), 0.0);
        });
    }

    Var softmax_rows(Var a) {
        Matrix out = softmax_rows_value(value(a));
        return push_op(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Matrix& y = g.nodes_[self].value;
            const Matrix& go = g.nodes_[self].grad;
            Eigen::VectorXd dot = go.cwiseProduct(y).rowwise().sum();
            g.acc(a).array() += y.array() * (go.array().colwise() - dot.array());
        });
    }

    Var log_softmax_rows(Var a) {
        const Matrix& x = value(a);
        Eigen::VectorXd mx = x.rowwise().maxCoeff();
        Matrix shifted = x.colwise() - mx;
        Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
        Matrix out = shifted.colwise() - lse;
        return push_op(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            const Matrix& y = g.nodes_[self].value;
            const Matrix& go = g.nodes_[self].grad;
            Eigen::VectorXd gs = go.rowwise().sum();
            g.acc(a).array() += go.array() - y.array().exp().colwise() * gs.array();
        });
    }

    Var concat_cols(std::span<const Var> parts) {
        if (parts.empty()) throw ConfigError("concat_cols of nothing");
        Index rows = value(parts[0]).rows();
        Index cols = 0;
        for (Var p : parts) {
            if (value(p).rows() != rows) throw ConfigError("concat_cols row mismatch");
            cols += value(p).cols();
        }
        Matrix out(rows, cols);
        Index c = 0;
        for (Var p : parts) {
            out.middleCols(c, value(p).cols()) = value(p);
            c += value(p).cols();
        }
        std::vector<Var> ps(parts.begin(), parts.end());
        return push_op(std::move(out), ps, [ps](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            Index c = 0;
            for (Var p : ps) {
                Index w = g.value(p).cols();
                if (g.needs(p)) g.acc(p) += go.middleCols(c, w);
                c += w;
            }
        });
    }
    Var concat_cols(std::initializer_list<Var> parts) { return concat_cols(std::span<const Var>(parts.begin(), parts.size())); }

    Var concat_rows(std::span<const Var> parts) {
        if (parts.empty()) throw ConfigError("concat_rows of nothing");
        Index cols = value(parts[0]).cols();
        Index rows = 0;
        for (Var p : parts) {
            if (value(p).cols() != cols) throw ConfigError("concat_rows column mismatch");
            rows += value(p).rows();
        }
        Matrix out(rows, cols);
        Index r = 0;
        for (Var p : parts) {
            out.middleRows(r, value(p).rows()) = value(p);
            r += value(p).rows();
        }
        std::vector<Var> ps(parts.begin(), parts.end());
        return push_op(std::move(out), ps, [ps](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            Index r = 0;
            for (Var p : ps) {
                Index h = g.value(p).rows();
                if (g.needs(p)) g.acc(p) += go.middleRows(r, h);
                r += h;
            }
        });
    }

    Var slice_cols(Var a, Index start, Index count) {
        const Matrix& A = value(a);
        if (start < 0 || count < 0 || start + count > A.cols()) throw ConfigError("slice_cols out of range");
        Matrix out = A.middleCols(start, count);
        return push_op(std::move(out), {a}, [a, start, count](Graph& g, std::size_t self) {
            g.acc(a).middleCols(start, count) += g.nodes_[self].grad;
        });
    }

    Var slice_rows(Var a, Index start, Index count) {
        const Matrix& A = value(a);
        if (start < 0 || count < 0 || start + count > A.rows()) throw ConfigError("slice_rows out of range");
        Matrix out = A.middleRows(start, count);
        return push_op(std::move(out), {a}, [a, start, count](Graph& g, std::size_t self) {
            g.acc(a).middleRows(start, count) += g.nodes_[self].grad;
        });
    }

    // out[k] = a[index[k]]
    Var gather_rows(Var a, std::vector<Index> index) {
        const Matrix& A = value(a);
        Matrix out(static_cast<Index>(index.size()), A.cols());
        for (std::size_t k = 0; k < index.size(); ++k) {
            if (index[k] < 0 || index[k] >= A.rows()) throw ConfigError("gather_rows index out of range");
            out.row(static_cast<Index>(k)) = A.row(index[k]);
        }
        return push_op(std::move(out), {a}, [a, index = std::move(index)](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            Matrix& ga = g.acc(a);
            for (std::size_t k = 0; k < index.size(); ++k) ga.row(index[k]) += go.row(static_cast<Index>(k));
        });
    }

    // out[index[k]] += a[k], with out having `rows` rows.
    Var scatter_add_rows(Var a, std::vector<Index> index, Index rows) {
        const Matrix& A = value(a);
        if (static_cast<Index>(index.size()) != A.rows()) throw ConfigError("scatter_add_rows index length mismatch");
        Matrix out = Matrix::Zero(rows, A.cols());
        for (std::size_t k = 0; k < index.size(); ++k) {
            if (index[k] < 0 || index[k] >= rows) throw ConfigError("scatter_add_rows index out of range");
            out.row(index[k]) += A.row(static_cast<Index>(k));
        }
        return push_op(std::move(out), {a}, [a, index = std::move(index)](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            Matrix& ga = g.acc(a);
            for (std::size_t k = 0; k < index.size(); ++k) ga.row(static_cast<Index>(k)) += go.row(index[k]);
        });
    }

    // out[r] = a[r, column[r]] as an (r x 1) column.
    Var pick(Var a, std::vector<Index> column) {
        const Matrix& A = value(a);
        if (static_cast<Index>(column.size()) != A.rows()) throw ConfigError("pick index length mismatch");
        Matrix out(A.rows(), 1);
        for (Index r = 0; r < A.rows(); ++r) {
            if (column[r] < 0 || column[r] >= A.cols()) throw ConfigError("pick column out of range");
            out(r, 0) = A(r, column[r]);
        }
        return push_op(std::move(out), {a}, [a, column = std::move(column)](Graph& g, std::size_t self) {
            const Matrix& go = g.nodes_[self].grad;
            Matrix& ga = g.acc(a);
            for (Index r = 0; r < go.rows(); ++r) ga(r, column[r]) += go(r, 0);
        });
    }

    Var sum(Var a) {
        Matrix out(1, 1);
        out(0, 0) = value(a).sum();
        return push_op(std::move(out), {a}, [a](Graph& g, std::size_t self) {
            g.acc(a).array() += g.nodes_[self].grad(0, 0);
        });
    }

    // Forward value is `hard`; the gradient passes straight through to `soft`.
    Var straight_through(Var soft, Matrix hard) {
        if (hard.rows() != value(soft).rows() || hard.cols() != value(soft).cols())
            throw ConfigError("straight_through shape mismatch");
        return push_op(std::move(hard), {soft}, [soft](Graph& g, std::size_t self) {
            g.acc(soft) += g.nodes_[self].grad;
        });
    }

    // Extension point for fused ops defined outside the graph. `back` gets the
    // output gradient and the op's own value, and pushes into parents with
    // accumulate().
    using CustomBackward = std::function<void(Graph&, const Matrix& grad_out, const Matrix& value)>;
    Var custom(Matrix value, std::span<const Var> parents, CustomBackward back) {
        return push_op(std::move(value), parents, [back = std::move(back)](Graph& g, std::size_t self) {
            back(g, g.nodes_[self].grad, g.nodes_[self].value);
        });
    }
    bool needs_grad(Var v) const { return needs(v); }
    void accumulate(Var v, const Matrix& grad) {
        if (needs(v)) acc(v) += grad;
    }

    // Accumulates d(loss)/d(node) for every reachable node and adds parameter
    // gradients into their Parameter::grad.
    void backward(Var loss) {
        if (!record_) throw UsageError("backward() on a non-recording graph");
        if (value(loss).size() != 1) throw UsageError("backward() requires a scalar loss, got " + dims(value(loss)));
        for (auto& n : nodes_) n.grad.resize(0, 0);
        nodes_[loss.id].grad = Matrix::Ones(1, 1);
        for (std::size_t id = loss.id + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (n.grad.size() == 0 || !n.needs_grad) continue;
            if (n.param != nullptr) n.param->grad += n.grad;
            if (n.back) n.back(*this, id);
        }
    }

    static Matrix softmax_rows_value(const Matrix& x) {
        Eigen::VectorXd mx = x.rowwise().maxCoeff();
        Matrix e = (x.colwise() - mx).array().exp().matrix();
        Eigen::VectorXd s = e.rowwise().sum();
        return e.array().colwise() / s.array();
    }

private:
    using Backward = std::function<void(Graph&, std::size_t)>;

    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        Parameter* param = nullptr;
        Backward back;
    };

    static std::string dims(const Matrix& m) {
        return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
    }

    void same_shape(Var a, Var b, const char* op) const {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        if (A.rows() != B.rows() || A.cols() != B.cols())
            throw ConfigError(std::string(op) + " shape mismatch: " + dims(A) + " vs " + dims(B));
    }

    bool needs(Var v) const { return nodes_[v.id].needs_grad; }

    Matrix& acc(Var v) {
        Node& n = nodes_[v.id];
        if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    Var push(Matrix value, bool needs_grad, Backward back) {
        Node n;
        n.value = std::move(value);
        n.needs_grad = needs_grad;
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var{nodes_.size() - 1};
    }

    Var push_op(Matrix value, std::span<const Var> parents, Backward back) {
        bool any = false;
        if (record_)
            for (Var p : parents) any = any || needs(p);
        return push(std::move(value), any, any ? std::move(back) : Backward{});
    }
    Var push_op(Matrix value, std::initializer_list<Var> parents, Backward back) {
        return push_op(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(back));
    }

    std::vector<Node> nodes_;
    bool record_;
};

} // namespace cmarl::nn
