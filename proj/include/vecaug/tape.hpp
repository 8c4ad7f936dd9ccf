#pragma once

#include "vecaug/common.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace vecaug {

/// Trainable tensor. Every Parameter participates in weight decay.
template <class Scalar>
struct Parameter {
  Mat<Scalar> value;
  Mat<Scalar> grad;
  int id = -1;
  std::string name;

  void zero_grad() { grad.setZero(); }
};

/// Owns the parameters of one model. Ids are unique within a store and
/// disjoint across stores constructed with different id bases.
template <class Scalar>
class ParameterStore {
 public:
  explicit ParameterStore(int id_base = 0) : next_id_(id_base) {}

  Parameter<Scalar>& add(std::string name, int rows, int cols) {
    auto p = std::make_unique<Parameter<Scalar>>();
    p->value = Mat<Scalar>::Zero(rows, cols);
    p->grad = Mat<Scalar>::Zero(rows, cols);
    p->id = next_id_++;
    p->name = std::move(name);
    params_.push_back(std::move(p));
    return *params_.back();
  }

  /// Xavier/Glorot uniform over [-sqrt(6/(fan_in+fan_out)), +...].
  Parameter<Scalar>& add_xavier(std::string name, int rows, int cols, std::mt19937_64& rng) {
    Parameter<Scalar>& p = add(std::move(name), rows, cols);
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) {
        p.value(r, c) = static_cast<Scalar>(dist(rng));
      }
    }
    return p;
  }

  std::size_t size() const { return params_.size(); }
  Parameter<Scalar>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<Scalar>& operator[](std::size_t i) const { return *params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grads() {
    for (auto& p : params_) p->zero_grad();
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& p : params_) s += static_cast<double>(p->value.template cast<double>().squaredNorm());
    return s;
  }

  /// FNV-1a over the raw value bytes, row-major. Used by freezing asserts.
  std::uint64_t value_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const unsigned char* bytes, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
      }
    };
    for (const auto& p : params_) {
      for (int r = 0; r < p->value.rows(); ++r) {
        for (int c = 0; c < p->value.cols(); ++c) {
          Scalar v = p->value(r, c);
          mix(reinterpret_cast<const unsigned char*>(&v), sizeof(Scalar));
        }
      }
    }
    return h;
  }

 private:
  std::vector<std::unique_ptr<Parameter<Scalar>>> params_;
  int next_id_;
};

/// Reverse-mode tape over dense Eigen matrices. One tape per forward pass;
/// parameters are external leaves whose grads are accumulated by backward().
template <class Scalar>
class Tape {
 public:
  using M = Mat<Scalar>;

  struct Var {
    int i = -1;
    bool valid() const { return i >= 0; }
  };

  const M& value(Var v) const { return nodes_[v.i].value; }
  Scalar scalar(Var v) const {
    require(v, 1, 1, "scalar");
    return nodes_[v.i].value(0, 0);
  }

  Var constant(M v) { return push(std::move(v), nullptr); }

  Var zeros(int rows, int cols) { return constant(M::Zero(rows, cols)); }

  Var param(Parameter<Scalar>& p) {
    Var out = push(p.value, nullptr);
    nodes_[out.i].param = &p;
    return out;
  }

  Var add(Var a, Var b) {
    require_same(a, b, "add");
    return push(val(a) + val(b), [a, b](Tape& t, int i) {
      t.grad(a) += t.nodes_[i].grad;
      t.grad(b) += t.nodes_[i].grad;
    });
  }

  /// Adds a column vector to every column of a.
  Var add_colwise(Var a, Var b) {
    if (val(b).cols() != 1 || val(b).rows() != val(a).rows()) {
      fail("add_colwise", a, b);
    }
    M v = val(a);
    v.colwise() += Vec<Scalar>(val(b).col(0));
    return push(std::move(v), [a, b](Tape& t, int i) {
      t.grad(a) += t.nodes_[i].grad;
      t.grad(b) += t.nodes_[i].grad.rowwise().sum();
    });
  }

  Var sub(Var a, Var b) {
    require_same(a, b, "sub");
    return push(val(a) - val(b), [a, b](Tape& t, int i) {
      t.grad(a) += t.nodes_[i].grad;
      t.grad(b) -= t.nodes_[i].grad;
    });
  }

  Var mul(Var a, Var b) {  // elementwise
    require_same(a, b, "mul");
    return push(val(a).cwiseProduct(val(b)), [a, b](Tape& t, int i) {
      t.grad(a) += t.nodes_[i].grad.cwiseProduct(t.val(b));
      t.grad(b) += t.nodes_[i].grad.cwiseProduct(t.val(a));
    });
  }

  Var scale(Var a, Scalar c) {
    return push(val(a) * c, [a, c](Tape& t, int i) { t.grad(a) += t.nodes_[i].grad * c; });
  }

  Var matmul(Var a, Var b) {
    if (val(a).cols() != val(b).rows()) fail("matmul", a, b);
    return push(val(a) * val(b), [a, b](Tape& t, int i) {
      t.grad(a) += t.nodes_[i].grad * t.val(b).transpose();
      t.grad(b) += t.val(a).transpose() * t.nodes_[i].grad;
    });
  }

  Var transpose(Var a) {
    return push(val(a).transpose(), [a](Tape& t, int i) {
      t.grad(a) += t.nodes_[i].grad.transpose();
    });
  }

  Var sigmoid(Var a) {
    M v = val(a).unaryExpr([](Scalar x) {
      return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-x))
                            : std::exp(x) / (Scalar(1) + std::exp(x));
    });
    return push(std::move(v), [a](Tape& t, int i) {
      const M& y = t.nodes_[i].value;
      t.grad(a) += t.nodes_[i].grad.cwiseProduct(y.cwiseProduct(M::Ones(y.rows(), y.cols()) - y));
    });
  }

  Var tanh_(Var a) {
    M v = val(a).array().tanh().matrix();
    return push(std::move(v), [a](Tape& t, int i) {
      const M& y = t.nodes_[i].value;
      t.grad(a) += t.nodes_[i].grad.cwiseProduct((M::Ones(y.rows(), y.cols()) - y.cwiseProduct(y)));
    });
  }

  Var exp_(Var a) {
    return push(val(a).array().exp().matrix(), [a](Tape& t, int i) {
      t.grad(a) += t.nodes_[i].grad.cwiseProduct(t.nodes_[i].value);
    });
  }

  Var log_(Var a) {
    return push(val(a).array().log().matrix(), [a](Tape& t, int i) {
      t.grad(a) += t.nodes_[i].grad.cwiseQuotient(t.val(a));
    });
  }

  Var square(Var a) {
    return push(val(a).cwiseProduct(val(a)), [a](Tape& t, int i) {
      t.grad(a) += Scalar(2) * t.nodes_[i].grad.cwiseProduct(t.val(a));
    });
  }

  Var sum(Var a) {
    M v(1, 1);
    v(0, 0) = val(a).sum();
    return push(std::move(v), [a](Tape& t, int i) {
      const Scalar g = t.nodes_[i].grad(0, 0);
      t.grad(a).array() += g;
    });
  }

  Var mean(Var a) {
    const Scalar n = static_cast<Scalar>(val(a).size());
    M v(1, 1);
    v(0, 0) = val(a).sum() / n;
    return push(std::move(v), [a, n](Tape& t, int i) {
      const Scalar g = t.nodes_[i].grad(0, 0) / n;
      t.grad(a).array() += g;
    });
  }

  /// Softmax over each row. Forward asserts every output row sums to 1.
  Var softmax_rows(Var a) {
    M v = val(a);
    for (int r = 0; r < v.rows(); ++r) {
      const Scalar mx = v.row(r).maxCoeff();
      v.row(r) = (v.row(r).array() - mx).exp();
      v.row(r) /= v.row(r).sum();
      if (std::abs(v.row(r).sum() - Scalar(1)) > Scalar(1e-6)) {
        throw NumericError("softmax_rows: row " + std::to_string(r) + " does not sum to 1");
      }
    }
    return push(std::move(v), [a](Tape& t, int i) {
      const M& y = t.nodes_[i].value;
      const M& go = t.nodes_[i].grad;
      M& ga = t.grad(a);
      for (int r = 0; r < y.rows(); ++r) {
        const Scalar dot = go.row(r).cwiseProduct(y.row(r)).sum();
        ga.row(r) += y.row(r).cwiseProduct((go.row(r) - M::Constant(1, y.cols(), dot)).eval());
      }
    });
  }

  /// Selects columns of a by index; backward scatter-adds. Used for token
  /// embedding lookup.
  Var gather_cols(Var a, std::vector<int> idx) {
    const M& src = val(a);
    M v(src.rows(), static_cast<int>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (idx[j] < 0 || idx[j] >= src.cols()) {
        throw ShapeError("gather_cols: index " + std::to_string(idx[j]) + " out of range");
      }
      v.col(static_cast<int>(j)) = src.col(idx[j]);
    }
    return push(std::move(v), [a, idx = std::move(idx)](Tape& t, int i) {
      M& ga = t.grad(a);
      const M& go = t.nodes_[i].grad;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        ga.col(idx[j]) += go.col(static_cast<int>(j));
      }
    });
  }

  Var col(Var a, int j) {
    if (j < 0 || j >= val(a).cols()) throw ShapeError("col: index out of range");
    return push(val(a).col(j), [a, j](Tape& t, int i) {
      t.grad(a).col(j) += t.nodes_[i].grad;
    });
  }

  /// Horizontal concatenation; all inputs must share a row count.
  Var hstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("hstack: empty input");
    const int rows = static_cast<int>(val(parts[0]).rows());
    int cols = 0;
    for (Var p : parts) {
      if (val(p).rows() != rows) fail("hstack", parts[0], p);
      cols += static_cast<int>(val(p).cols());
    }
    M v(rows, cols);
    int at = 0;
    for (Var p : parts) {
      const int w = static_cast<int>(val(p).cols());
      v.middleCols(at, w) = val(p);
      at += w;
    }
    return push(std::move(v), [parts](Tape& t, int i) {
      int at = 0;
      for (Var p : parts) {
        const int w = static_cast<int>(t.val(p).cols());
        t.grad(p) += t.nodes_[i].grad.middleCols(at, w);
        at += w;
      }
    });
  }

  /// Numerically stable mean binary cross-entropy from logits.
  Var bce_with_logits(Var logits, const std::vector<int>& labels) {
    const M& z = val(logits);
    if (z.rows() != 1 || z.cols() != static_cast<int>(labels.size()) || labels.empty()) {
      throw ShapeError("bce_with_logits: want 1xN logits matching N labels, N >= 1, got " +
                       shape_str(logits) + " vs " + std::to_string(labels.size()) + " labels");
    }
    const Scalar n = static_cast<Scalar>(labels.size());
    double acc = 0.0;
    for (int j = 0; j < z.cols(); ++j) {
      const double zj = static_cast<double>(z(0, j));
      const double y = labels[static_cast<std::size_t>(j)];
      acc += std::max(zj, 0.0) - y * zj + std::log1p(std::exp(-std::abs(zj)));
    }
    M v(1, 1);
    v(0, 0) = static_cast<Scalar>(acc / static_cast<double>(n));
    return push(std::move(v), [logits, labels, n](Tape& t, int i) {
      const Scalar g = t.nodes_[i].grad(0, 0) / n;
      const M& z = t.val(logits);
      M& ga = t.grad(logits);
      for (int j = 0; j < z.cols(); ++j) {
        const Scalar zj = z(0, j);
        const Scalar s = zj >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-zj))
                                         : std::exp(zj) / (Scalar(1) + std::exp(zj));
        ga(0, j) += g * (s - static_cast<Scalar>(labels[static_cast<std::size_t>(j)]));
      }
    });
  }

  /// Reverse sweep from a scalar loss; accumulates into Parameter::grad.
  void backward(Var loss) {
    if (!loss.valid() || val(loss).rows() != 1 || val(loss).cols() != 1) {
      throw ShapeError("backward: loss must be a 1x1 scalar");
    }
    for (auto& n : nodes_) {
      n.grad = M::Zero(n.value.rows(), n.value.cols());
    }
    nodes_[loss.i].grad(0, 0) = Scalar(1);
    for (int i = loss.i; i >= 0; --i) {
      if (nodes_[i].back) nodes_[i].back(*this, i);
      if (nodes_[i].param) nodes_[i].param->grad += nodes_[i].grad;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    M value;
    M grad;
    std::function<void(Tape&, int)> back;
    Parameter<Scalar>* param = nullptr;
  };

  std::vector<Node> nodes_;

  const M& val(Var v) const { return nodes_[v.i].value; }
  M& grad(Var v) { return nodes_[v.i].grad; }

  Var push(M value, std::function<void(Tape&, int)> back) {
    nodes_.push_back(Node{std::move(value), M(), std::move(back), nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::string shape_str(Var v) const {
    return std::to_string(val(v).rows()) + "x" + std::to_string(val(v).cols());
  }

  void require(Var v, int rows, int cols, const char* op) const {
    if (val(v).rows() != rows || val(v).cols() != cols) {
      throw ShapeError(std::string(op) + ": expected " + std::to_string(rows) + "x" +
                       std::to_string(cols) + ", got " + shape_str(v));
    }
  }

  void require_same(Var a, Var b, const char* op) const {
    if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols()) fail(op, a, b);
  }

  [[noreturn]] void fail(const char* op, Var a, Var b) const {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                     shape_str(b));
  }
};

/// Adam with decoupled weight decay: after the standard update every
/// parameter is scaled by (1 - lr*2*lambda), the gradient of lambda*|theta|^2.
template <class Scalar>
class Adam {
 public:
  Adam(Scalar lr, Scalar weight_decay = Scalar(0), Scalar beta1 = Scalar(0.9),
       Scalar beta2 = Scalar(0.999), Scalar eps = Scalar(1e-8))
      : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(ParameterStore<Scalar>& params) {
    ++step_;
    const Scalar bc1 = Scalar(1) - std::pow(b1_, static_cast<Scalar>(step_));
    const Scalar bc2 = Scalar(1) - std::pow(b2_, static_cast<Scalar>(step_));
    const Scalar decay = Scalar(1) - lr_ * Scalar(2) * wd_;
    for (auto& pp : params) {
      Parameter<Scalar>& p = *pp;
      if (!p.grad.allFinite()) {
        throw NumericError("adam: non-finite gradient in parameter id " + std::to_string(p.id) +
                           " (" + p.name + ")");
      }
      Slot& s = slot(p);
      s.m = b1_ * s.m + (Scalar(1) - b1_) * p.grad;
      s.v = b2_ * s.v + (Scalar(1) - b2_) * p.grad.cwiseProduct(p.grad);
      const Mat<Scalar> mhat = s.m / bc1;
      const Mat<Scalar> vhat = s.v / bc2;
      p.value -= lr_ * mhat.cwiseQuotient(vhat.cwiseSqrt().array().matrix() +
                                          Mat<Scalar>::Constant(p.value.rows(), p.value.cols(), eps_));
      p.value *= decay;
    }
  }

  long step_count() const { return step_; }

 private:
  struct Slot {
    Mat<Scalar> m, v;
  };

  Slot& slot(const Parameter<Scalar>& p) {
    Slot& s = slots_[p.id];
    if (s.m.size() == 0) {
      s.m = Mat<Scalar>::Zero(p.value.rows(), p.value.cols());
      s.v = Mat<Scalar>::Zero(p.value.rows(), p.value.cols());
    }
    return s;
  }

  Scalar lr_, wd_, b1_, b2_, eps_;
  long step_ = 0;
  std::map<int, Slot> slots_;
};

}  // namespace vecaug
