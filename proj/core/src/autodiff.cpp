#include "lade/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <unordered_set>
#include <utility>

#include "lade/errors.hpp"

namespace lade {

namespace detail {

struct Node {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad/values and accumulates into the parents' grad.
    std::function<void(const Node&)> backprop;
    std::uint64_t id = 0;
    bool grad_live = false;
};

namespace {

std::uint64_t next_node_id() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

std::size_t shape_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

}  // namespace

struct NodeAccess {
    static std::shared_ptr<Node> make(std::vector<int> shape, std::vector<double> values,
                                      std::vector<std::shared_ptr<Node>> parents = {}) {
        for (int d : shape) {
            if (d <= 0) throw DimensionError("tensor dimension must be positive, got " +
                                             shape_str(shape));
        }
        if (values.size() != shape_size(shape)) {
            throw DimensionError("value count " + std::to_string(values.size()) +
                                 " does not match shape " + shape_str(shape));
        }
        auto node = std::make_shared<Node>();
        node->shape = std::move(shape);
        node->values = std::move(values);
        node->parents = std::move(parents);
        node->id = next_node_id();
        return node;
    }
    static const std::shared_ptr<Node>& get(const Tensor& t) { return t.node_; }
    static Tensor wrap(std::shared_ptr<Node> node) { return Tensor(std::move(node)); }
};

}  // namespace detail

using detail::Node;
using detail::NodeAccess;

namespace {

using NodePtr = std::shared_ptr<Node>;

const NodePtr& node_of(const Tensor& t) {
    const NodePtr& n = NodeAccess::get(t);
    if (!n) throw ContractError("operation on a default-constructed tensor");
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

int rank_of(const Node& n) { return static_cast<int>(n.shape.size()); }

}  // namespace

// ---------------------------------------------------------------------------
// Tensor surface

Tensor Tensor::scalar(double value) {
    return NodeAccess::wrap(NodeAccess::make({}, {value}));
}

Tensor Tensor::vector(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return NodeAccess::wrap(NodeAccess::make({n}, std::move(values)));
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> values) {
    return NodeAccess::wrap(NodeAccess::make({rows, cols}, std::move(values)));
}

Tensor Tensor::from_matrix(const Matrix& m) {
    return NodeAccess::wrap(NodeAccess::make({m.rows, m.cols}, m.data));
}

Tensor Tensor::leaf(std::vector<int> shape, std::vector<double> values) {
    return NodeAccess::wrap(NodeAccess::make(std::move(shape), std::move(values)));
}

const std::vector<int>& Tensor::shape() const { return node_of(*this)->shape; }
const std::vector<double>& Tensor::values() const { return node_of(*this)->values; }
std::size_t Tensor::size() const { return node_of(*this)->values.size(); }
std::uint64_t Tensor::node_id() const { return node_of(*this)->id; }
bool Tensor::has_grad() const { return defined() && !node_of(*this)->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
    const NodePtr& n = node_of(*this);
    if (n->grad.empty()) throw ContractError("gradient not available; run backward() first");
    return n->grad;
}

double Tensor::item() const {
    const NodePtr& n = node_of(*this);
    if (n->values.size() != 1) {
        throw ContractError("item() requires a one-element tensor, got shape " +
                            shape_str(n->shape));
    }
    return n->values[0];
}

int Tensor::rows() const {
    const NodePtr& n = node_of(*this);
    if (rank_of(*n) != 2) throw DimensionError("rows(): tensor is not rank-2: " +
                                               shape_str(n->shape));
    return n->shape[0];
}

int Tensor::cols() const {
    const NodePtr& n = node_of(*this);
    if (rank_of(*n) != 2) throw DimensionError("cols(): tensor is not rank-2: " +
                                               shape_str(n->shape));
    return n->shape[1];
}

Matrix Tensor::to_matrix() const {
    return Matrix(rows(), cols(), node_of(*this)->values);
}

// ---------------------------------------------------------------------------
// Elementwise binary ops with leading-batch / scalar broadcast

namespace {

enum class BinOp { kAdd, kSub, kMul, kDiv };

// How operand values map onto output indices.
struct OperandView {
    const Node* node;
    enum class Kind { kSame, kRowVector, kScalar } kind;

    double at(std::size_t flat_index, int cols) const {
        switch (kind) {
            case Kind::kSame:
                return node->values[flat_index];
            case Kind::kRowVector:
                return node->values[flat_index % static_cast<std::size_t>(cols)];
            case Kind::kScalar:
                return node->values[0];
        }
        return 0.0;  // unreachable
    }

    // Accumulate an output-shaped gradient contribution back onto the operand.
    void scatter(std::vector<double>& target, std::size_t flat_index, int cols,
                 double g) const {
        switch (kind) {
            case Kind::kSame:
                target[flat_index] += g;
                break;
            case Kind::kRowVector:
                target[flat_index % static_cast<std::size_t>(cols)] += g;
                break;
            case Kind::kScalar:
                target[0] += g;
                break;
        }
    }
};

OperandView::Kind classify(const Node& operand, const std::vector<int>& out_shape) {
    if (operand.shape == out_shape) return OperandView::Kind::kSame;
    if (operand.shape.empty()) return OperandView::Kind::kScalar;
    // vector of length C against matrix [N, C]
    return OperandView::Kind::kRowVector;
}

std::vector<int> broadcast_shape(const Node& a, const Node& b) {
    if (a.shape == b.shape) return a.shape;
    if (a.shape.empty()) return b.shape;
    if (b.shape.empty()) return a.shape;
    if (rank_of(a) == 2 && rank_of(b) == 1 && a.shape[1] == b.shape[0]) return a.shape;
    if (rank_of(a) == 1 && rank_of(b) == 2 && b.shape[1] == a.shape[0]) return b.shape;
    throw DimensionError("elementwise op: incompatible shapes " + shape_str(a.shape) +
                         " vs " + shape_str(b.shape));
}

Tensor binary_op(const Tensor& ta, const Tensor& tb, BinOp op) {
    const NodePtr& a = node_of(ta);
    const NodePtr& b = node_of(tb);
    const std::vector<int> out_shape = broadcast_shape(*a, *b);
    const int cols = out_shape.empty() ? 1 : out_shape.back();
    const OperandView va{a.get(), classify(*a, out_shape)};
    const OperandView vb{b.get(), classify(*b, out_shape)};

    std::vector<double> out(detail::shape_size(out_shape));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = va.at(i, cols);
        const double y = vb.at(i, cols);
        switch (op) {
            case BinOp::kAdd: out[i] = x + y; break;
            case BinOp::kSub: out[i] = x - y; break;
            case BinOp::kMul: out[i] = x * y; break;
            case BinOp::kDiv: out[i] = x / y; break;
        }
    }

    NodePtr node = NodeAccess::make(out_shape, std::move(out), {a, b});
    const auto ka = va.kind;
    const auto kb = vb.kind;
    node->backprop = [op, ka, kb, cols](const Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const OperandView va2{&pa, ka};
        const OperandView vb2{&pb, kb};
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            const double g = self.grad[i];
            const double x = va2.at(i, cols);
            const double y = vb2.at(i, cols);
            switch (op) {
                case BinOp::kAdd:
                    va2.scatter(pa.grad, i, cols, g);
                    vb2.scatter(pb.grad, i, cols, g);
                    break;
                case BinOp::kSub:
                    va2.scatter(pa.grad, i, cols, g);
                    vb2.scatter(pb.grad, i, cols, -g);
                    break;
                case BinOp::kMul:
                    va2.scatter(pa.grad, i, cols, g * y);
                    vb2.scatter(pb.grad, i, cols, g * x);
                    break;
                case BinOp::kDiv:
                    va2.scatter(pa.grad, i, cols, g / y);
                    vb2.scatter(pb.grad, i, cols, -g * x / (y * y));
                    break;
            }
        }
    };
    return NodeAccess::wrap(std::move(node));
}

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::kAdd); }
Tensor operator-(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::kSub); }
Tensor operator*(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::kMul); }
Tensor operator/(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::kDiv); }

Tensor operator+(const Tensor& a, double b) { return a + Tensor::scalar(b); }
Tensor operator-(const Tensor& a, double b) { return a - Tensor::scalar(b); }
Tensor operator*(const Tensor& a, double b) { return a * Tensor::scalar(b); }
Tensor operator/(const Tensor& a, double b) { return a / Tensor::scalar(b); }
Tensor operator+(double a, const Tensor& b) { return Tensor::scalar(a) + b; }
Tensor operator-(double a, const Tensor& b) { return Tensor::scalar(a) - b; }
Tensor operator*(double a, const Tensor& b) { return Tensor::scalar(a) * b; }
Tensor operator/(double a, const Tensor& b) { return Tensor::scalar(a) / b; }

// ---------------------------------------------------------------------------
// Elementwise unary ops

namespace {

Tensor unary_op(const Tensor& tx, const std::function<double(double)>& fwd,
                const std::function<double(double, double)>& dval_dx) {
    const NodePtr& x = node_of(tx);
    std::vector<double> out(x->values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x->values[i]);
    NodePtr node = NodeAccess::make(x->shape, std::move(out), {x});
    node->backprop = [dval_dx](const Node& self) {
        Node& p = *self.parents[0];
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            p.grad[i] += self.grad[i] * dval_dx(p.values[i], self.values[i]);
        }
    };
    return NodeAccess::wrap(std::move(node));
}

}  // namespace

Tensor operator-(const Tensor& a) {
    return unary_op(
        a, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::exp(v); }, [](double, double out) { return out; });
}

Tensor log(const Tensor& x) {
    const NodePtr& n = node_of(x);
    for (std::size_t i = 0; i < n->values.size(); ++i) {
        if (!(n->values[i] > 0.0)) {
            throw DomainError("log: non-positive input " +
                              std::to_string(n->values[i]) + " at flat index " +
                              std::to_string(i));
        }
    }
    return unary_op(
        x, [](double v) { return std::log(v); }, [](double in, double) { return 1.0 / in; });
}

Tensor square(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v * v; }, [](double in, double) { return 2.0 * in; });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// matmul

Tensor matmul(const Tensor& ta, const Tensor& tb) {
    const NodePtr& a = node_of(ta);
    const NodePtr& b = node_of(tb);
    if (rank_of(*a) != 2 || rank_of(*b) != 2) {
        throw DimensionError("matmul: expects rank-2 operands, got " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
    }
    if (a->shape[1] != b->shape[0]) {
        throw DimensionError("matmul: inner dimensions mismatch " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
    }
    const int n = a->shape[0];
    const int k = a->shape[1];
    const int m = b->shape[1];

    std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) {
                acc += a->values[static_cast<std::size_t>(i) * k + t] *
                       b->values[static_cast<std::size_t>(t) * m + j];
            }
            out[static_cast<std::size_t>(i) * m + j] = acc;
        }
    }

    NodePtr node = NodeAccess::make({n, m}, std::move(out), {a, b});
    node->backprop = [n, k, m](const Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        // dA = G * B^T
        for (int i = 0; i < n; ++i) {
            for (int t = 0; t < k; ++t) {
                double acc = 0.0;
                for (int j = 0; j < m; ++j) {
                    acc += self.grad[static_cast<std::size_t>(i) * m + j] *
                           pb.values[static_cast<std::size_t>(t) * m + j];
                }
                pa.grad[static_cast<std::size_t>(i) * k + t] += acc;
            }
        }
        // dB = A^T * G
        for (int t = 0; t < k; ++t) {
            for (int j = 0; j < m; ++j) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i) {
                    acc += pa.values[static_cast<std::size_t>(i) * k + t] *
                           self.grad[static_cast<std::size_t>(i) * m + j];
                }
                pb.grad[static_cast<std::size_t>(t) * m + j] += acc;
            }
        }
    };
    return NodeAccess::wrap(std::move(node));
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& tx) {
    const NodePtr& x = node_of(tx);
    double acc = 0.0;
    for (double v : x->values) acc += v;
    NodePtr node = NodeAccess::make({}, {acc}, {x});
    node->backprop = [](const Node& self) {
        Node& p = *self.parents[0];
        const double g = self.grad[0];
        for (double& pg : p.grad) pg += g;
    };
    return NodeAccess::wrap(std::move(node));
}

Tensor mean(const Tensor& tx) {
    const NodePtr& x = node_of(tx);
    const double n = static_cast<double>(x->values.size());
    double acc = 0.0;
    for (double v : x->values) acc += v;
    NodePtr node = NodeAccess::make({}, {acc / n}, {x});
    node->backprop = [n](const Node& self) {
        Node& p = *self.parents[0];
        const double g = self.grad[0] / n;
        for (double& pg : p.grad) pg += g;
    };
    return NodeAccess::wrap(std::move(node));
}

namespace {

// Shared layout for last-dim reductions: rank-1 [C] is one row producing a
// scalar, rank-2 [N,C] produces [N].
struct RowLayout {
    int num_rows;
    int row_len;
    std::vector<int> out_shape;
};

RowLayout row_layout(const Node& x, const char* op_name) {
    if (rank_of(x) == 1) return {1, x.shape[0], {}};
    if (rank_of(x) == 2) return {x.shape[0], x.shape[1], {x.shape[0]}};
    throw DimensionError(std::string(op_name) + ": expects rank 1 or 2, got " +
                         shape_str(x.shape));
}

}  // namespace

Tensor max_reduce(const Tensor& tx) {
    const NodePtr& x = node_of(tx);
    const RowLayout layout = row_layout(*x, "max_reduce");
    std::vector<double> out(static_cast<std::size_t>(layout.num_rows));
    std::vector<int> argmax(static_cast<std::size_t>(layout.num_rows));
    for (int i = 0; i < layout.num_rows; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * layout.row_len;
        int best = 0;
        for (int j = 1; j < layout.row_len; ++j) {
            if (x->values[base + j] > x->values[base + best]) best = j;
        }
        argmax[i] = best;
        out[i] = x->values[base + best];
    }
    NodePtr node = NodeAccess::make(layout.out_shape, std::move(out), {x});
    const int row_len = layout.row_len;
    node->backprop = [argmax, row_len](const Node& self) {
        Node& p = *self.parents[0];
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            p.grad[i * row_len + argmax[i]] += self.grad[i];
        }
    };
    return NodeAccess::wrap(std::move(node));
}

Tensor log_sum_exp(const Tensor& tx) {
    const NodePtr& x = node_of(tx);
    const RowLayout layout = row_layout(*x, "log_sum_exp");
    std::vector<double> out(static_cast<std::size_t>(layout.num_rows));
    for (int i = 0; i < layout.num_rows; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * layout.row_len;
        double m = x->values[base];
        for (int j = 1; j < layout.row_len; ++j) m = std::max(m, x->values[base + j]);
        double s = 0.0;
        for (int j = 0; j < layout.row_len; ++j) s += std::exp(x->values[base + j] - m);
        out[i] = m + std::log(s);
    }
    NodePtr node = NodeAccess::make(layout.out_shape, std::move(out), {x});
    const int row_len = layout.row_len;
    node->backprop = [row_len](const Node& self) {
        Node& p = *self.parents[0];
        // d lse / d x_j = softmax(x)_j = exp(x_j - lse)
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            const std::size_t base = i * row_len;
            for (int j = 0; j < row_len; ++j) {
                p.grad[base + j] +=
                    self.grad[i] * std::exp(p.values[base + j] - self.values[i]);
            }
        }
    };
    return NodeAccess::wrap(std::move(node));
}

Tensor gather_rows(const Tensor& tm, std::span<const int> indices) {
    const NodePtr& m = node_of(tm);
    if (rank_of(*m) != 2) {
        throw DimensionError("gather_rows: expects a rank-2 tensor, got " +
                             shape_str(m->shape));
    }
    const int n = m->shape[0];
    const int c = m->shape[1];
    if (static_cast<int>(indices.size()) != n) {
        throw DimensionError("gather_rows: " + std::to_string(indices.size()) +
                             " indices for " + std::to_string(n) + " rows");
    }
    std::vector<int> idx(indices.begin(), indices.end());
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (idx[i] < 0 || idx[i] >= c) {
            throw IndexError("gather_rows: index " + std::to_string(idx[i]) +
                             " out of range for " + std::to_string(c) +
                             " columns at row " + std::to_string(i));
        }
        out[i] = m->values[static_cast<std::size_t>(i) * c + idx[i]];
    }
    NodePtr node = NodeAccess::make({n}, std::move(out), {m});
    node->backprop = [idx, c](const Node& self) {
        Node& p = *self.parents[0];
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            p.grad[i * c + idx[i]] += self.grad[i];
        }
    };
    return NodeAccess::wrap(std::move(node));
}

Tensor column(const Tensor& tm, int col) {
    const NodePtr& m = node_of(tm);
    if (rank_of(*m) != 2) {
        throw DimensionError("column: expects a rank-2 tensor, got " + shape_str(m->shape));
    }
    const int n = m->shape[0];
    const int c = m->shape[1];
    if (col < 0 || col >= c) {
        throw IndexError("column: index " + std::to_string(col) + " out of range for " +
                         std::to_string(c) + " columns");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[i] = m->values[static_cast<std::size_t>(i) * c + col];
    NodePtr node = NodeAccess::make({n}, std::move(out), {m});
    node->backprop = [col, c](const Node& self) {
        Node& p = *self.parents[0];
        for (std::size_t i = 0; i < self.values.size(); ++i) {
            p.grad[i * c + col] += self.grad[i];
        }
    };
    return NodeAccess::wrap(std::move(node));
}

// ---------------------------------------------------------------------------
// Backward

void backward(const Tensor& loss) {
    const NodePtr& root = node_of(loss);
    if (root->values.size() != 1) {
        throw ContractError("backward: loss must be a scalar, got shape " +
                            shape_str(root->shape));
    }

    // Iterative post-order DFS: inputs appear before their consumers.
    std::vector<Node*> order;
    std::unordered_set<const Node*> seen;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
    while (!stack.empty()) {
        Frame& frame = stack.back();
        if (frame.next_parent < frame.node->parents.size()) {
            Node* parent = frame.node->parents[frame.next_parent++].get();
            if (seen.insert(parent).second) stack.push_back({parent, 0});
        } else {
            order.push_back(frame.node);
            stack.pop_back();
        }
    }

    for (Node* n : order) {
        if (n->grad_live) {
            throw ContractError(
                "backward: graph already consumed by a previous backward pass");
        }
    }
    for (Node* n : order) {
        n->grad.assign(n->values.size(), 0.0);
        n->grad_live = true;
    }
    root->grad[0] = 1.0;

    // Reverse post-order: every consumer runs before the nodes it feeds from.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop(**it);
    }
}

// ---------------------------------------------------------------------------
// Finite-difference check

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double step) {
    if (!(step > 0.0)) throw ParameterError("grad_check: step must be positive");
    const std::vector<int> shape = x.shape();
    const std::vector<double> base = x.values();

    Tensor probe = Tensor::leaf(shape, base);
    Tensor out = f(probe);
    if (out.size() != 1) {
        throw ContractError("grad_check: f must be scalar-valued");
    }
    backward(out);
    const std::vector<double> analytic = probe.grad();

    double worst = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> plus = base;
        std::vector<double> minus = base;
        plus[i] += step;
        minus[i] -= step;
        const double fp = f(Tensor::leaf(shape, std::move(plus))).item();
        const double fm = f(Tensor::leaf(shape, std::move(minus))).item();
        const double numeric = (fp - fm) / (2.0 * step);
        const double err =
            std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace lade
