#include "hdg/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace hdg {

namespace {

void check_finite(const char* name, const Matrix& m) {
  if (!m.all_finite()) throw NumericalError(std::string(name) + ": non-finite output");
}

void require_same_shape(const char* name, const DiffTensor& a, const DiffTensor& b) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(name) + ": shape mismatch " + a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
}

void require_scalar(const char* name, const DiffTensor& s) {
  if (s.rows() != 1 || s.cols() != 1) {
    throw ShapeError(std::string(name) + ": expected (1x1), got " + s.value().shape_string());
  }
}

Matrix map(const Matrix& x, double (*f)(double)) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = f(x.data()[i]);
  return out;
}

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double DiffTensor::item() const {
  if (rows() != 1 || cols() != 1) throw ShapeError("item: tensor is " + value().shape_string());
  return value()(0, 0);
}

void GradSink::add(const DiffTensor& t, Matrix grad) {
  if (!t.requires_grad()) return;
  Matrix& slot = grads_[t.id()];
  if (slot.empty()) {
    slot = std::move(grad);
  } else {
    slot += grad;
  }
}

Matrix Gradients::of(const DiffTensor& t) const {
  if (t.tape() == tape_ && t.requires_grad() && t.id() < grads_.size() && !grads_[t.id()].empty()) {
    return grads_[t.id()];
  }
  return Matrix(t.rows(), t.cols());
}

DiffTensor Tape::variable(Matrix value) {
  if (consumed_) throw TapeError("variable: tape already consumed");
  DiffTensor t;
  Node node;
  node.rows = value.rows();
  node.cols = value.cols();
  node.name = "variable";
  t.value_ = std::make_shared<const Matrix>(std::move(value));
  t.tape_ = this;
  t.id_ = nodes_.size();
  nodes_.push_back(std::move(node));
  return t;
}

DiffTensor Tape::record(Matrix value, BackwardFn backward, const char* name) {
  if (consumed_) throw TapeError(std::string(name) + ": tape already consumed");
  DiffTensor t;
  Node node;
  node.rows = value.rows();
  node.cols = value.cols();
  node.backward = std::move(backward);
  node.name = name;
  t.value_ = std::make_shared<const Matrix>(std::move(value));
  t.tape_ = this;
  t.id_ = nodes_.size();
  nodes_.push_back(std::move(node));
  return t;
}

Gradients Tape::backward(const DiffTensor& output, double seed) {
  if (consumed_) throw TapeError("backward: tape already consumed");
  if (output.rows() != 1 || output.cols() != 1) {
    throw TapeError("backward: output must be (1x1), got " + output.value().shape_string());
  }
  consumed_ = true;
  std::vector<Matrix> grads(nodes_.size());
  if (output.tape() != this) return Gradients(this, std::move(grads));

  grads[output.id()] = Matrix(1, 1, seed);
  GradSink sink(grads);
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    if (grads[i].empty() || !nodes_[i].backward) continue;
    // Ops only write to strictly older slots, so grads[i] stays stable here.
    nodes_[i].backward(grads[i], sink);
  }
  return Gradients(this, std::move(grads));
}

Tape* common_tape(std::initializer_list<const DiffTensor*> inputs) {
  Tape* tape = nullptr;
  for (const DiffTensor* t : inputs) {
    if (!t->requires_grad()) continue;
    if (tape != nullptr && tape != t->tape()) throw TapeError("inputs belong to different tapes");
    tape = t->tape();
  }
  return tape;
}

DiffTensor matmul(const DiffTensor& a, const DiffTensor& b) {
  Matrix out = matmul(a.value(), b.value());
  check_finite("matmul", out);
  Tape* tape = common_tape({&a, &b});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out),
      [a, b](const Matrix& g, GradSink& s) {
        if (s.wants(a)) s.add(a, matmul_nt(g, b.value()));
        if (s.wants(b)) s.add(b, matmul_tn(a.value(), g));
      },
      "matmul");
}

DiffTensor spmm(const SparseGraph& graph, const DiffTensor& x) {
  Matrix out = spmm(graph, x.value());
  check_finite("spmm", out);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  const CsrMatrix* adj = &graph.norm_adjacency();
  return tape->record(
      std::move(out), [x, adj](const Matrix& g, GradSink& s) { s.add(x, spmm(*adj, g)); }, "spmm");
}

DiffTensor add(const DiffTensor& a, const DiffTensor& b) {
  require_same_shape("add", a, b);
  Matrix out = a.value() + b.value();
  check_finite("add", out);
  Tape* tape = common_tape({&a, &b});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out),
      [a, b](const Matrix& g, GradSink& s) {
        s.add(a, g);
        s.add(b, g);
      },
      "add");
}

DiffTensor sub(const DiffTensor& a, const DiffTensor& b) {
  require_same_shape("sub", a, b);
  Matrix out = a.value() - b.value();
  check_finite("sub", out);
  Tape* tape = common_tape({&a, &b});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out),
      [a, b](const Matrix& g, GradSink& s) {
        s.add(a, g);
        if (s.wants(b)) s.add(b, -1.0 * g);
      },
      "sub");
}

DiffTensor elementwise_mul(const DiffTensor& a, const DiffTensor& b) {
  require_same_shape("elementwise_mul", a, b);
  Matrix out = hadamard(a.value(), b.value());
  check_finite("elementwise_mul", out);
  Tape* tape = common_tape({&a, &b});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out),
      [a, b](const Matrix& g, GradSink& s) {
        if (s.wants(a)) s.add(a, hadamard(g, b.value()));
        if (s.wants(b)) s.add(b, hadamard(g, a.value()));
      },
      "elementwise_mul");
}

DiffTensor scale(const DiffTensor& x, double factor) {
  Matrix out = factor * x.value();
  check_finite("scale", out);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out), [x, factor](const Matrix& g, GradSink& s) { s.add(x, factor * g); }, "scale");
}

DiffTensor add_scalar(const DiffTensor& x, double c) {
  Matrix out = x.value();
  for (double& v : out.data()) v += c;
  check_finite("add_scalar", out);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out), [x](const Matrix& g, GradSink& s) { s.add(x, g); }, "add_scalar");
}

DiffTensor add_row_bias(const DiffTensor& x, const DiffTensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_row_bias: bias " + bias.value().shape_string() + " for input " +
                     x.value().shape_string());
  }
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias.value()(0, j);
  }
  check_finite("add_row_bias", out);
  Tape* tape = common_tape({&x, &bias});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out),
      [x, bias](const Matrix& g, GradSink& s) {
        s.add(x, g);
        if (s.wants(bias)) {
          Matrix gb(1, g.cols());
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
          s.add(bias, std::move(gb));
        }
      },
      "add_row_bias");
}

DiffTensor divide_by(const DiffTensor& x, const DiffTensor& denom) {
  require_scalar("divide_by", denom);
  const double d = denom.item();
  Matrix out = (1.0 / d) * x.value();
  check_finite("divide_by", out);
  Tape* tape = common_tape({&x, &denom});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out),
      [x, denom, d](const Matrix& g, GradSink& s) {
        if (s.wants(x)) s.add(x, (1.0 / d) * g);
        if (s.wants(denom)) s.add(denom, Matrix(1, 1, -frobenius_dot(g, x.value()) / (d * d)));
      },
      "divide_by");
}

DiffTensor tanh(const DiffTensor& x) {
  Matrix out = map(x.value(), [](double v) { return std::tanh(v); });
  check_finite("tanh", out);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  Matrix y = out;
  return tape->record(
      std::move(out),
      [x, y = std::move(y)](const Matrix& g, GradSink& s) {
        Matrix gx(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double t = y.data()[i];
          gx.data()[i] = g.data()[i] * (1.0 - t * t);
        }
        s.add(x, std::move(gx));
      },
      "tanh");
}

DiffTensor sigmoid(const DiffTensor& x) {
  Matrix out = map(x.value(), logistic);
  check_finite("sigmoid", out);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  Matrix y = out;
  return tape->record(
      std::move(out),
      [x, y = std::move(y)](const Matrix& g, GradSink& s) {
        Matrix gx(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double p = y.data()[i];
          gx.data()[i] = g.data()[i] * p * (1.0 - p);
        }
        s.add(x, std::move(gx));
      },
      "sigmoid");
}

DiffTensor transpose(const DiffTensor& x) {
  Matrix out = transpose(x.value());
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out), [x](const Matrix& g, GradSink& s) { s.add(x, transpose(g)); }, "transpose");
}

DiffTensor concat_cols(const DiffTensor& left, const DiffTensor& right) {
  Matrix out = hcat(left.value(), right.value());
  Tape* tape = common_tape({&left, &right});
  if (!tape) return DiffTensor(std::move(out));
  const std::size_t lc = left.cols();
  const std::size_t rc = right.cols();
  return tape->record(
      std::move(out),
      [left, right, lc, rc](const Matrix& g, GradSink& s) {
        if (s.wants(left)) s.add(left, slice_cols(g, 0, lc));
        if (s.wants(right)) s.add(right, slice_cols(g, lc, rc));
      },
      "concat_cols");
}

DiffTensor slice_cols(const DiffTensor& x, std::size_t begin, std::size_t count) {
  Matrix out = slice_cols(x.value(), begin, count);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  const std::size_t total = x.cols();
  return tape->record(
      std::move(out),
      [x, begin, total](const Matrix& g, GradSink& s) {
        Matrix gx(g.rows(), total);
        for (std::size_t i = 0; i < g.rows(); ++i)
          std::copy(g.row(i).begin(), g.row(i).end(), gx.row(i).begin() + begin);
        s.add(x, std::move(gx));
      },
      "slice_cols");
}

std::pair<DiffTensor, DiffTensor> split_cols(const DiffTensor& x, std::size_t left_cols) {
  if (left_cols > x.cols()) throw ShapeError("split_cols: split point beyond width");
  return {slice_cols(x, 0, left_cols), slice_cols(x, left_cols, x.cols() - left_cols)};
}

DiffTensor sum(const DiffTensor& x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  Matrix out(1, 1, acc);
  check_finite("sum", out);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out),
      [x](const Matrix& g, GradSink& s) { s.add(x, Matrix(x.rows(), x.cols(), g(0, 0))); },
      "sum");
}

DiffTensor frobenius_smooth(const DiffTensor& x, double eps) {
  if (eps < 0) throw NumericalError("frobenius_smooth: negative eps");
  const double norm = std::sqrt(frobenius_dot(x.value(), x.value()) + eps);
  Matrix out(1, 1, norm);
  check_finite("frobenius_smooth", out);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  return tape->record(
      std::move(out),
      [x, norm](const Matrix& g, GradSink& s) {
        Matrix gx = (g(0, 0) / norm) * x.value();
        check_finite("frobenius_smooth backward", gx);
        s.add(x, std::move(gx));
      },
      "frobenius_smooth");
}

DiffTensor softmax_rows(const DiffTensor& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto in = x.value().row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) z += (o[j] = std::exp(in[j] - mx));
    for (double& v : o) v /= z;
  }
  check_finite("softmax_rows", out);
  Tape* tape = common_tape({&x});
  if (!tape) return DiffTensor(std::move(out));
  Matrix y = out;
  return tape->record(
      std::move(out),
      [x, y = std::move(y)](const Matrix& g, GradSink& s) {
        Matrix gx(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
          for (std::size_t j = 0; j < g.cols(); ++j) gx(i, j) = y(i, j) * (g(i, j) - dot);
        }
        s.add(x, std::move(gx));
      },
      "softmax_rows");
}

DiffTensor mean_neg_log_likelihood(const DiffTensor& probs, std::span<const int> labels,
                                   std::span<const std::size_t> rows) {
  if (rows.empty()) throw ShapeError("mean_neg_log_likelihood: empty mask");
  if (labels.size() != probs.rows()) throw ShapeError("mean_neg_log_likelihood: label count mismatch");
  const double m = static_cast<double>(rows.size());
  double acc = 0.0;
  for (std::size_t r : rows) {
    const int c = labels[r];
    if (r >= probs.rows() || c < 0 || static_cast<std::size_t>(c) >= probs.cols())
      throw ShapeError("mean_neg_log_likelihood: row or label out of range");
    acc -= std::log(probs.value()(r, static_cast<std::size_t>(c)));
  }
  Matrix out(1, 1, acc / m);
  check_finite("mean_neg_log_likelihood", out);
  Tape* tape = common_tape({&probs});
  if (!tape) return DiffTensor(std::move(out));
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return tape->record(
      std::move(out),
      [probs, lab = std::move(lab), idx = std::move(idx), m](const Matrix& g, GradSink& s) {
        Matrix gp(probs.rows(), probs.cols());
        for (std::size_t r : idx) {
          const auto c = static_cast<std::size_t>(lab[r]);
          gp(r, c) -= g(0, 0) / (m * probs.value()(r, c));
        }
        s.add(probs, std::move(gp));
      },
      "mean_neg_log_likelihood");
}

DiffTensor bce_with_logits(const DiffTensor& logits, std::span<const double> targets) {
  if (logits.cols() != 1 || logits.rows() != targets.size() || targets.empty()) {
    throw ShapeError("bce_with_logits: logits " + logits.value().shape_string() + " vs " +
                     std::to_string(targets.size()) + " targets");
  }
  const double m = static_cast<double>(targets.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double z = logits.value()(i, 0);
    acc += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
  }
  Matrix out(1, 1, acc / m);
  check_finite("bce_with_logits", out);
  Tape* tape = common_tape({&logits});
  if (!tape) return DiffTensor(std::move(out));
  std::vector<double> y(targets.begin(), targets.end());
  return tape->record(
      std::move(out),
      [logits, y = std::move(y), m](const Matrix& g, GradSink& s) {
        Matrix gz(logits.rows(), 1);
        for (std::size_t i = 0; i < y.size(); ++i)
          gz(i, 0) = g(0, 0) * (logistic(logits.value()(i, 0)) - y[i]) / m;
        s.add(logits, std::move(gz));
      },
      "bce_with_logits");
}

DiffTensor pair_sq_distance(const DiffTensor& z, std::span<const Edge> pairs) {
  Matrix out(pairs.size(), 1);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [u, v] = pairs[i];
    if (u >= z.rows() || v >= z.rows()) throw ShapeError("pair_sq_distance: node out of range");
    double acc = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
      const double d = z.value()(u, j) - z.value()(v, j);
      acc += d * d;
    }
    out(i, 0) = acc;
  }
  check_finite("pair_sq_distance", out);
  Tape* tape = common_tape({&z});
  if (!tape) return DiffTensor(std::move(out));
  std::vector<Edge> pr(pairs.begin(), pairs.end());
  return tape->record(
      std::move(out),
      [z, pr = std::move(pr)](const Matrix& g, GradSink& s) {
        Matrix gz(z.rows(), z.cols());
        for (std::size_t i = 0; i < pr.size(); ++i) {
          const auto [u, v] = pr[i];
          for (std::size_t j = 0; j < z.cols(); ++j) {
            const double d = 2.0 * g(i, 0) * (z.value()(u, j) - z.value()(v, j));
            gz(u, j) += d;
            gz(v, j) -= d;
          }
        }
        s.add(z, std::move(gz));
      },
      "pair_sq_distance");
}

}  // namespace hdg
