#include "editgloss/autodiff.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace editgloss::ad {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

Var make_result(Matrix value, std::vector<NodePtr> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace

void Node::accumulate(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::zero_grad() {
  if (node_) node_->grad = Matrix::Zero(node_->value.rows(), node_->value.cols());
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("backward: loss must be 1x1");
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS over interior nodes.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !parent->parents.empty() && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.size() != 0) node->backward(*node);
    node->grad.resize(0, 0);
  }
}

Var constant(Matrix value) { return Var(std::move(value), false); }

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix out = a.value() * b.value();
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& a = *self.parents[0];
    Node& b = *self.parents[1];
    if (a.requires_grad) a.accumulate_expr(self.grad * b.value.transpose());
    if (b.requires_grad) b.accumulate_expr(a.value.transpose() * self.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimensions differ");
  Matrix out = a.value() * b.value().transpose();
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& a = *self.parents[0];
    Node& b = *self.parents[1];
    if (a.requires_grad) a.accumulate_expr(self.grad * b.value);
    if (b.requires_grad) b.accumulate_expr(self.grad.transpose() * a.value);
  });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value() + b.value();
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (auto& p : self.parents) {
      if (p->requires_grad) p->accumulate(self.grad);
    }
  });
}

Var add_const(const Var& a, const Matrix& c) {
  check_same_shape(a.value(), c, "add_const");
  Matrix out = a.value() + c;
  return make_result(std::move(out), {a.node()}, [](Node& self) { self.parents[0]->accumulate(self.grad); });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: bias shape mismatch");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(out), {a.node(), row.node()}, [](Node& self) {
    Node& a = *self.parents[0];
    Node& row = *self.parents[1];
    if (a.requires_grad) a.accumulate(self.grad);
    if (row.requires_grad) row.accumulate_expr(self.grad.colwise().sum());
  });
}

Var scale(const Var& a, double s) {
  Matrix out = a.value() * s;
  return make_result(std::move(out), {a.node()}, [s](Node& self) { self.parents[0]->accumulate_expr(self.grad * s); });
}

Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return make_result(std::move(out), {a.node()}, [](Node& self) {
    Node& a = *self.parents[0];
    a.accumulate_expr((a.value.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
  });
}

Var mul_const(const Var& a, const Matrix& c) {
  check_same_shape(a.value(), c, "mul_const");
  Matrix out = a.value().cwiseProduct(c);
  return make_result(std::move(out), {a.node()}, [c](Node& self) {
    self.parents[0]->accumulate_expr(self.grad.cwiseProduct(c));
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Eigen::Index n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
    throw std::invalid_argument("layer_norm: gain/bias shape mismatch");
  }
  const Matrix& xv = x.value();
  Matrix normed(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normed.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = (normed.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
  return make_result(std::move(out), {x.node(), gain.node(), bias.node()},
                     [normed = std::move(normed), inv_std = std::move(inv_std)](Node& self) {
                       Node& x = *self.parents[0];
                       Node& gain = *self.parents[1];
                       Node& bias = *self.parents[2];
                       if (gain.requires_grad) gain.accumulate_expr(self.grad.cwiseProduct(normed).colwise().sum());
                       if (bias.requires_grad) bias.accumulate_expr(self.grad.colwise().sum());
                       if (x.requires_grad) {
                         Matrix dnorm = self.grad.array().rowwise() * gain.value.row(0).array();
                         const auto n = static_cast<double>(normed.cols());
                         Matrix dx(dnorm.rows(), dnorm.cols());
                         for (Eigen::Index r = 0; r < dnorm.rows(); ++r) {
                           const double mean_d = dnorm.row(r).sum() / n;
                           const double mean_dn = dnorm.row(r).dot(normed.row(r)) / n;
                           dx.row(r) = inv_std(r) *
                                       (dnorm.row(r).array() - mean_d - normed.row(r).array() * mean_dn).matrix();
                         }
                         x.accumulate(dx);
                       }
                     });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) throw std::out_of_range("gather_rows: id out of range");
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  return make_result(std::move(out), {table.node()}, [ids = std::vector<int>(ids.begin(), ids.end())](Node& self) {
    Node& table = *self.parents[0];
    if (table.grad.size() == 0) table.grad = Matrix::Zero(table.value.rows(), table.value.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) table.grad.row(ids[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::out_of_range("slice_cols: range");
  Matrix out = a.value().middleCols(start, count);
  return make_result(std::move(out), {a.node()}, [start, count](Node& self) {
    Node& a = *self.parents[0];
    if (a.grad.size() == 0) a.grad = Matrix::Zero(a.value.rows(), a.value.cols());
    a.grad.middleCols(start, count) += self.grad;
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != parts[0].rows()) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(parts[0].rows(), cols);
  std::vector<NodePtr> parents;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    parents.push_back(p.node());
  }
  return make_result(std::move(out), std::move(parents), [](Node& self) {
    Eigen::Index at = 0;
    for (auto& p : self.parents) {
      const Eigen::Index c = p->value.cols();
      if (p->requires_grad) p->accumulate(self.grad.middleCols(at, c));
      at += c;
    }
  });
}

Var softmax_prefix_rows(const Var& scores, std::span<const std::size_t> limits) {
  if (static_cast<Eigen::Index>(limits.size()) != scores.rows()) {
    throw std::invalid_argument("softmax_prefix_rows: one limit per row required");
  }
  const Matrix& s = scores.value();
  Matrix out = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const auto limit = static_cast<Eigen::Index>(limits[static_cast<std::size_t>(r)]);
    if (limit > s.cols()) throw std::invalid_argument("softmax_prefix_rows: limit exceeds columns");
    if (limit == 0) continue;
    const double peak = s.row(r).head(limit).maxCoeff();
    out.row(r).head(limit) = (s.row(r).head(limit).array() - peak).exp().matrix();
    out.row(r).head(limit) /= out.row(r).head(limit).sum();
  }
  Matrix probs = out;
  return make_result(std::move(out), {scores.node()}, [probs = std::move(probs)](Node& self) {
    Matrix d(probs.rows(), probs.cols());
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      const double dot = self.grad.row(r).dot(probs.row(r));
      d.row(r) = probs.row(r).cwiseProduct((self.grad.row(r).array() - dot).matrix());
    }
    self.parents[0]->accumulate(d);
  });
}

Var sum(std::span<const Var> scalars) {
  Matrix out = Matrix::Zero(1, 1);
  std::vector<NodePtr> parents;
  for (const Var& v : scalars) {
    if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("sum: expects 1x1 inputs");
    out(0, 0) += v.scalar();
    parents.push_back(v.node());
  }
  return make_result(std::move(out), std::move(parents), [](Node& self) {
    for (auto& p : self.parents) {
      if (p->requires_grad) p->accumulate(self.grad);
    }
  });
}

Var dropout(const Var& a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  const double kept = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? kept : 0.0;
  return mul_const(a, mask);
}

std::vector<double> masked_softmax(const Matrix& logits, Eigen::Index row, Eigen::Index offset, Eigen::Index width,
                                   std::span<const char> allowed) {
  std::vector<double> p(static_cast<std::size_t>(width), 0.0);
  double peak = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < width; ++c) {
    if (allowed.empty() || allowed[static_cast<std::size_t>(c)]) peak = std::max(peak, logits(row, offset + c));
  }
  if (!std::isfinite(peak)) throw std::invalid_argument("masked_softmax: no allowed class or non-finite logits");
  double total = 0.0;
  for (Eigen::Index c = 0; c < width; ++c) {
    if (allowed.empty() || allowed[static_cast<std::size_t>(c)]) {
      p[static_cast<std::size_t>(c)] = std::exp(logits(row, offset + c) - peak);
      total += p[static_cast<std::size_t>(c)];
    }
  }
  for (double& v : p) v /= total;
  return p;
}

Var nll(const Var& logits, std::span<const NllTerm> terms) {
  const Matrix& l = logits.value();
  std::vector<std::vector<double>> probs;
  probs.reserve(terms.size());
  double loss = 0.0;
  for (const NllTerm& t : terms) {
    if (t.row < 0 || t.row >= l.rows() || t.offset < 0 || t.offset + t.width > l.cols()) {
      throw std::out_of_range("nll: term window outside logits");
    }
    if (t.target < 0 || t.target >= t.width) throw std::out_of_range("nll: target outside window");
    if (!t.allowed.empty() && (static_cast<Eigen::Index>(t.allowed.size()) != t.width ||
                               !t.allowed[static_cast<std::size_t>(t.target)])) {
      throw std::invalid_argument("nll: target class is masked out");
    }
    probs.push_back(masked_softmax(l, t.row, t.offset, t.width, t.allowed));
    loss -= t.weight * std::log(probs.back()[static_cast<std::size_t>(t.target)]);
  }
  Matrix out(1, 1);
  out(0, 0) = loss;
  return make_result(std::move(out), {logits.node()},
                     [terms = std::vector<NllTerm>(terms.begin(), terms.end()), probs = std::move(probs)](Node& self) {
                       Node& logits = *self.parents[0];
                       if (logits.grad.size() == 0) {
                         logits.grad = Matrix::Zero(logits.value.rows(), logits.value.cols());
                       }
                       const double g = self.grad(0, 0);
                       for (std::size_t k = 0; k < terms.size(); ++k) {
                         const NllTerm& t = terms[k];
                         for (Eigen::Index c = 0; c < t.width; ++c) {
                           double d = probs[k][static_cast<std::size_t>(c)];
                           if (c == t.target) d -= 1.0;
                           logits.grad(t.row, t.offset + c) += g * t.weight * d;
                         }
                       }
                     });
}

}  // namespace editgloss::ad
