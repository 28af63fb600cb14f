#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cmarl/error.hpp"

namespace cmarl::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// Flat row-major tensor used at module boundaries and in checkpoints.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }

    std::size_t size() const { return values.size(); }

    bool consistent() const { return count(shape) == values.size(); }

    static Tensor from_matrix(const Matrix& m) {
        Tensor t;
        t.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
        t.values.assign(m.data(), m.data() + m.size());
        return t;
    }

    // Rank-1 tensors become a single row; higher ranks fold leading dims into rows.
    Matrix to_matrix() const {
        if (!consistent()) throw ConfigError("tensor shape does not match value count");
        Index cols = shape.empty() ? 1 : static_cast<Index>(shape.back());
        Index rows = cols == 0 ? 0 : static_cast<Index>(values.size()) / cols;
        Matrix m(rows, cols);
        std::copy(values.begin(), values.end(), m.data());
        return m;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// A learnable matrix with its gradient accumulator.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Index rows, Index cols)
        : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline void init_uniform(Parameter& p, Index fan_in, std::mt19937_64& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
}

// Ordered, non-owning view over the parameters of one or more modules.
// Order is insertion order and is what optimizers and checkpoints key on.
class ParamSet {
public:
    ParamSet() = default;
    ParamSet(std::initializer_list<Parameter*> ps) : items_(ps) {}

    void add(Parameter& p) { items_.push_back(&p); }
    void add(const ParamSet& other) { items_.insert(items_.end(), other.items_.begin(), other.items_.end()); }

    std::size_t size() const { return items_.size(); }
    Parameter& operator[](std::size_t i) const { return *items_[i]; }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    Parameter* find(std::string_view name) const {
        for (auto* p : items_)
            if (p->name == name) return p;
        return nullptr;
    }

    void zero_grad() const {
        for (auto* p : items_) p->zero_grad();
    }

    double grad_norm() const {
        double s = 0.0;
        for (auto* p : items_) s += p->grad.squaredNorm();
        return std::sqrt(s);
    }

    // Rescales all gradients so their global L2 norm is at most max_norm.
    // Returns the norm before clipping.
    double clip_grad_norm(double max_norm) const {
        double norm = grad_norm();
        if (norm > max_norm && norm > 0.0) {
            double s = max_norm / norm;
            for (auto* p : items_) p->grad *= s;
        }
        return norm;
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (auto* p : items_) n += static_cast<std::size_t>(p->value.size());
        return n;
    }

    // Copies values from another set with identical names and shapes.
    void copy_values_from(const ParamSet& src) const {
        if (src.size() != size()) throw ConfigError("parameter set size mismatch on copy");
        for (std::size_t i = 0; i < size(); ++i) {
            if (items_[i]->value.rows() != src[i].value.rows() || items_[i]->value.cols() != src[i].value.cols())
                throw ConfigError("parameter shape mismatch on copy: " + items_[i]->name);
            items_[i]->value = src[i].value;
        }
    }

    bool values_equal(const ParamSet& other) const {
        if (other.size() != size()) return false;
        for (std::size_t i = 0; i < size(); ++i)
            if (items_[i]->value != other[i].value) return false;
        return true;
    }

private:
    std::vector<Parameter*> items_;
};

} // namespace cmarl::nn
