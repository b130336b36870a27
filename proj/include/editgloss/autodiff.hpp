#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace editgloss::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Graph node. Interior nodes keep their parents alive through `parents`;
/// `backward` reads `grad` and accumulates into the parents' grads.
struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& g);
  template <typename Expr>
  void accumulate_expr(const Expr& g) {
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    grad += g;
  }
};

/// Handle to a node. Cheap to copy.
class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& mutable_grad() { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const { return node_->value(0, 0); }
  bool defined() const { return static_cast<bool>(node_); }

  const std::shared_ptr<Node>& node() const { return node_; }

  void zero_grad();

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Reverse pass from a 1x1 node; gradients accumulate into every reachable
/// node that requires them (leaf parameters keep accumulating across calls).
void backward(const Var& loss);

Var constant(Matrix value);

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var add_const(const Var& a, const Matrix& c);
/// Adds a 1 x c row to every row of a.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
Var relu(const Var& a);
/// Elementwise product with a constant matrix (dropout masks, gates).
Var mul_const(const Var& a, const Matrix& c);
/// Row-wise layer normalisation with learned gain and bias rows.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
/// Rows of `table` selected by `ids`.
Var gather_rows(const Var& table, std::span<const int> ids);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_cols(std::span<const Var> parts);
/// Row i of the result is softmax over columns [0, limits[i]) of row i;
/// masked columns get weight 0 and a row with limit 0 is all zeros.
Var softmax_prefix_rows(const Var& scores, std::span<const std::size_t> limits);
Var sum(std::span<const Var> scalars);
Var dropout(const Var& a, double rate, std::mt19937_64& rng);

/// One negative log-likelihood term of a masked softmax over the column
/// window [offset, offset + width) of row `row`. `allowed`, when non-empty,
/// has `width` entries; disallowed classes get probability 0.
struct NllTerm {
  Eigen::Index row = 0;
  Eigen::Index offset = 0;
  Eigen::Index width = 0;
  std::vector<char> allowed;
  Eigen::Index target = 0;
  double weight = 1.0;
};

/// Sum over terms of weight * -log softmax(window)[target].
Var nll(const Var& logits, std::span<const NllTerm> terms);

/// Masked softmax of one logits window, outside the graph.
std::vector<double> masked_softmax(const Matrix& logits, Eigen::Index row, Eigen::Index offset,
                                   Eigen::Index width, std::span<const char> allowed);

}  // namespace editgloss::ad
