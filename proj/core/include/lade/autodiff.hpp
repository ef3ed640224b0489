#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lade/matrix.hpp"

namespace lade {

namespace detail {
struct Node;
struct NodeAccess;
}  // namespace detail

/// Dense 64-bit tensor participating in reverse-mode differentiation.
///
/// Tensors are immutable once created: every operation allocates a fresh node
/// and records the rule that maps its output gradient back onto its inputs.
/// Supported ranks are 0 (scalar), 1 (vector) and 2 (matrix); elementwise ops
/// broadcast a vector over the leading batch dimension of a matrix and a
/// scalar over anything.
class Tensor {
 public:
    Tensor() = default;

    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(int rows, int cols, std::vector<double> values);
    static Tensor from_matrix(const Matrix& m);
    static Tensor leaf(std::vector<int> shape, std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const;
    const std::vector<double>& values() const;
    std::size_t size() const;

    /// Gradient of the last backward() loss w.r.t. this tensor.
    /// ContractError until a backward pass has touched this node.
    const std::vector<double>& grad() const;
    bool has_grad() const;

    /// Identity of the node inside its computation graph.
    std::uint64_t node_id() const;

    /// Value of a one-element tensor; ContractError otherwise.
    double item() const;

    int rows() const;  // rank-2 only
    int cols() const;
    Matrix to_matrix() const;

 private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
    friend struct detail::NodeAccess;
};

// Elementwise arithmetic. Shapes must match, or one operand may be a vector
// broadcast across the rows of a matrix, or a scalar broadcast over anything.
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, double b);
Tensor operator-(const Tensor& a, double b);
Tensor operator*(const Tensor& a, double b);
Tensor operator/(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(double a, const Tensor& b);
Tensor operator-(const Tensor& a);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);  // DomainError on non-positive entries
Tensor square(const Tensor& x);
Tensor relu(const Tensor& x);

/// [N,K] x [K,M] -> [N,M].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& x);   // full reduction to a scalar
Tensor mean(const Tensor& x);

/// Max over the last dimension: [N,C] -> [N], [C] -> scalar.
/// Ties route the gradient to the lowest index.
Tensor max_reduce(const Tensor& x);

/// log(sum(exp(x))) over the last dimension, stabilised by max shift:
/// [N,C] -> [N], [C] -> scalar. Never sums raw exponentials.
Tensor log_sum_exp(const Tensor& x);

/// Row gather: out[i] = m[i, indices[i]]. IndexError on out-of-range entries.
Tensor gather_rows(const Tensor& m, std::span<const int> indices);

/// Column slice: out[i] = m[i, col].
Tensor column(const Tensor& m, int col);

/// Reverse-mode sweep from a scalar loss. Seeds with 1, visits every node of
/// the graph exactly once in reverse topological order and attaches a
/// gradient to each. A graph is single-shot: touching any of its nodes with a
/// second backward pass is a ContractError.
void backward(const Tensor& loss);

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|)
/// for a scalar-valued tensor function evaluated at x.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double step);

}  // namespace lade
