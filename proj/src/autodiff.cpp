#include "doge/autodiff.hpp"

#include <string>

namespace doge::ad {

namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw InvalidArgument("autodiff: operands live on different tapes");
  }
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string("autodiff: shape mismatch in ") + op + ": " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

const Matrix& Var::value() const { return tape->value(*this); }

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

Var Tape::push(Matrix value, std::vector<std::size_t> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (auto p : parents) {
    n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
  }
  if (n.needs_grad) {
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) {
    return;
  }
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.has_grad) {
    return Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape != this) {
    throw InvalidArgument("autodiff: root belongs to another tape");
  }
  if (value(root).size() != 1) {
    throw InvalidArgument("autodiff: backward() needs a scalar root");
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(root.id, Matrix::Ones(1, 1));
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) {
      continue;
    }
    // Copy: the callback may append to parents' grads but never to its own.
    const Matrix upstream = n.grad;
    n.backward(*this, upstream);
  }
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw InvalidArgument("autodiff: matmul inner dimensions differ");
  }
  const std::size_t ia = a.id;
  const std::size_t ib = b.id;
  return a.tape->push(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) {
      t.accumulate(ia, g * t.value(Var{&t, ib}).transpose());
    }
    if (t.needs_grad(ib)) {
      t.accumulate(ib, t.value(Var{&t, ia}).transpose() * g);
    }
  });
}

Var add_bias(Var z, Var bias) {
  require_same_tape(z, bias);
  if (bias.cols() != 1 || bias.rows() != z.rows()) {
    throw InvalidArgument("autodiff: bias must be a column matching z's rows");
  }
  const std::size_t iz = z.id;
  const std::size_t ib = bias.id;
  Matrix out = z.value();
  out.colwise() += bias.value().col(0);
  return z.tape->push(std::move(out), {iz, ib}, [iz, ib](Tape& t, const Matrix& g) {
    t.accumulate(iz, g);
    if (t.needs_grad(ib)) {
      t.accumulate(ib, g.rowwise().sum());
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "add");
  const std::size_t ia = a.id;
  const std::size_t ib = b.id;
  return a.tape->push(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "sub");
  const std::size_t ia = a.id;
  const std::size_t ib = b.id;
  return a.tape->push(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    if (t.needs_grad(ib)) {
      t.accumulate(ib, -g);
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "mul");
  const std::size_t ia = a.id;
  const std::size_t ib = b.id;
  return a.tape->push(a.value().cwiseProduct(b.value()), {ia, ib},
                      [ia, ib](Tape& t, const Matrix& g) {
                        if (t.needs_grad(ia)) {
                          t.accumulate(ia, g.cwiseProduct(t.value(Var{&t, ib})));
                        }
                        if (t.needs_grad(ib)) {
                          t.accumulate(ib, g.cwiseProduct(t.value(Var{&t, ia})));
                        }
                      });
}

Var scale(Var a, double c) {
  const std::size_t ia = a.id;
  return a.tape->push(a.value() * c, {ia},
                      [ia, c](Tape& t, const Matrix& g) { t.accumulate(ia, g * c); });
}

Var shift(Var a, double c) {
  const std::size_t ia = a.id;
  return a.tape->push(a.value().array() + c, {ia},
                      [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var relu(Var a) {
  const std::size_t ia = a.id;
  return a.tape->push(a.value().cwiseMax(0.0), {ia}, [ia](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(Var{&t, ia});
    t.accumulate(ia, (x.array() > 0.0).select(g, 0.0));
  });
}

Var tanh(Var a) {
  const std::size_t ia = a.id;
  Matrix y = a.value().array().tanh();
  Matrix dy = 1.0 - y.array().square();
  return a.tape->push(std::move(y), {ia}, [ia, dy = std::move(dy)](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.cwiseProduct(dy));
  });
}

Var square(Var a) {
  const std::size_t ia = a.id;
  return a.tape->push(a.value().array().square(), {ia}, [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, 2.0 * g.cwiseProduct(t.value(Var{&t, ia})));
  });
}

Var min(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "min");
  const std::size_t ia = a.id;
  const std::size_t ib = b.id;
  const auto pick_a = (a.value().array() <= b.value().array()).eval();
  return a.tape->push(pick_a.select(a.value(), b.value()), {ia, ib},
                      [ia, ib, pick_a](Tape& t, const Matrix& g) {
                        if (t.needs_grad(ia)) {
                          t.accumulate(ia, pick_a.select(g, 0.0));
                        }
                        if (t.needs_grad(ib)) {
                          t.accumulate(ib, pick_a.select(0.0, g));
                        }
                      });
}

Var concat_rows(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.cols()) {
    throw InvalidArgument("autodiff: concat_rows needs equal column counts");
  }
  const std::size_t ia = a.id;
  const std::size_t ib = b.id;
  const Eigen::Index ra = a.rows();
  const Eigen::Index rb = b.rows();
  Matrix out(ra + rb, a.cols());
  out.topRows(ra) = a.value();
  out.bottomRows(rb) = b.value();
  return a.tape->push(std::move(out), {ia, ib}, [ia, ib, ra, rb](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) {
      t.accumulate(ia, g.topRows(ra));
    }
    if (t.needs_grad(ib)) {
      t.accumulate(ib, g.bottomRows(rb));
    }
  });
}

Var mean(Var a) {
  const std::size_t ia = a.id;
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  const double n = static_cast<double>(a.value().size());
  return a.tape->push(Matrix::Constant(1, 1, a.value().mean()), {ia},
                      [ia, r, c, n](Tape& t, const Matrix& g) {
                        t.accumulate(ia, Matrix::Constant(r, c, g(0, 0) / n));
                      });
}

Var sum(Var a) {
  const std::size_t ia = a.id;
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return a.tape->push(Matrix::Constant(1, 1, a.value().sum()), {ia},
                      [ia, r, c](Tape& t, const Matrix& g) {
                        t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
                      });
}

Var sum_rows(Var a) {
  const std::size_t ia = a.id;
  const Eigen::Index r = a.rows();
  return a.tape->push(a.value().colwise().sum(), {ia}, [ia, r](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.replicate(r, 1));
  });
}

}  // namespace doge::ad
