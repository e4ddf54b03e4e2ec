#include "tsgatr/tape.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace tsgatr::ad {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " + shape_str(b.value()));
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw Error("operands recorded on different tapes");
  return *a.tape();
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(*this); }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw Error("scalar() on a " + shape_str(v) + " node");
  return v(0, 0);
}

GradientBuffer::GradientBuffer(const Tape& tape)
    : tape_(tape), grads_(tape.nodes_.size()), live_(tape.nodes_.size(), false) {}

Matrix& GradientBuffer::operator[](Var v) {
  const auto id = v.id();
  if (!live_[id]) {
    const auto& val = tape_.nodes_[id].value;
    grads_[id] = Matrix::Zero(val.rows(), val.cols());
    live_[id] = true;
  }
  return grads_[id];
}

bool GradientBuffer::wants(Var v) const { return tape_.nodes_[v.id()].requires_grad; }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) throw Error("variable does not belong to this tape");
}

Var Tape::constant(Matrix value) { return push({std::move(value), {}, {}, false}); }

Var Tape::variable(Matrix value) { return push({std::move(value), {}, {}, true}); }

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (Var p : parents) {
    check_owned(p);
    needs = needs || nodes_[p.id()].requires_grad;
  }
  Node node{std::move(value), {}, {}, needs};
  if (needs) node.backward = std::move(backward);
  return push(std::move(node));
}

Matrix Tape::gradient(Var v) const {
  check_owned(v);
  const auto& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  check_owned(root);
  const auto& v = nodes_[root.id()].value;
  if (v.rows() != 1 || v.cols() != 1)
    throw Error("backward() needs a scalar root, got " + shape_str(v));
  backward(root, Matrix::Ones(1, 1));
}

void Tape::backward(Var root, const Matrix& seed) {
  check_owned(root);
  const auto& rv = nodes_[root.id()].value;
  if (seed.rows() != rv.rows() || seed.cols() != rv.cols())
    throw Error("backward seed shape " + shape_str(seed) + " does not match root " + shape_str(rv));
  if (!nodes_[root.id()].requires_grad) return;

  GradientBuffer buf(*this);
  buf[root] = seed;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    if (!buf.live_[id]) continue;
    auto& node = nodes_[id];
    if (node.backward) node.backward(node.value, buf.grads_[id], buf);
  }
  for (std::size_t id = 0; id <= root.id(); ++id) {
    if (!buf.live_[id]) continue;
    auto& node = nodes_[id];
    if (node.grad.size() == 0)
      node.grad = std::move(buf.grads_[id]);
    else
      node.grad += buf.grads_[id];
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad.resize(0, 0);
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  auto& t = tape_of(a, b);
  if (a.cols() != b.rows())
    throw Error("matmul: inner dimensions differ " + shape_str(a.value()) + " * " + shape_str(b.value()));
  Matrix out = a.value() * b.value();
  return t.record(std::move(out), {a, b}, [a, b](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    if (grads.wants(a)) grads[a].noalias() += g * b.value().transpose();
    if (grads.wants(b)) grads[b].noalias() += a.value().transpose() * g;
  });
}

Var add(Var a, Var b) {
  auto& t = tape_of(a, b);
  require_same_shape("add", a, b);
  return t.record(a.value() + b.value(), {a, b}, [a, b](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    if (grads.wants(a)) grads[a] += g;
    if (grads.wants(b)) grads[b] += g;
  });
}

Var sub(Var a, Var b) {
  auto& t = tape_of(a, b);
  require_same_shape("sub", a, b);
  return t.record(a.value() - b.value(), {a, b}, [a, b](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    if (grads.wants(a)) grads[a] += g;
    if (grads.wants(b)) grads[b] -= g;
  });
}

Var mul(Var a, Var b) {
  auto& t = tape_of(a, b);
  require_same_shape("mul", a, b);
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    if (grads.wants(a)) grads[a] += g.cwiseProduct(b.value());
    if (grads.wants(b)) grads[b] += g.cwiseProduct(a.value());
  });
}

Var add_row(Var a, Var row) {
  auto& t = tape_of(a, row);
  if (row.rows() != 1 || row.cols() != a.cols())
    throw Error("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " + shape_str(row.value()));
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(out), {a, row}, [a, row](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    if (grads.wants(a)) grads[a] += g;
    if (grads.wants(row)) grads[row] += g.colwise().sum();
  });
}

Var scale(Var a, double factor) { return affine(a, factor, 0.0); }

Var affine(Var a, double factor, double offset) {
  Matrix out = (a.value() * factor).array() + offset;
  return a.tape()->record(std::move(out), {a}, [a, factor](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    grads[a] += g * factor;
  });
}

Var sigmoid(Var a) {
  Matrix out = a.value().unaryExpr([](double x) { return sigmoid_scalar(x); });
  return a.tape()->record(std::move(out), {a}, [a](const Matrix& y, const Matrix& g, GradientBuffer& grads) {
    grads[a].array() += g.array() * y.array() * (1.0 - y.array());
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh();
  return a.tape()->record(std::move(out), {a}, [a](const Matrix& y, const Matrix& g, GradientBuffer& grads) {
    grads[a].array() += g.array() * (1.0 - y.array().square());
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape()->record(std::move(out), {a}, [a](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    grads[a].array() += (a.value().array() > 0.0).select(g.array(), 0.0);
  });
}

Var concat_cols(Var a, Var b) {
  auto& t = tape_of(a, b);
  if (a.rows() != b.rows())
    throw Error("concat_cols: row counts differ " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Index ca = a.cols();
  return t.record(std::move(out), {a, b}, [a, b, ca](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    if (grads.wants(a)) grads[a] += g.leftCols(ca);
    if (grads.wants(b)) grads[b] += g.rightCols(g.cols() - ca);
  });
}

Var transpose(Var a) {
  Matrix out = a.value().transpose();
  return a.tape()->record(std::move(out), {a}, [a](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    grads[a] += g.transpose();
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {a}, [a](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    grads[a].array() += g(0, 0);
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw Error("mean of an empty matrix");
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return a.tape()->record(std::move(out), {a}, [a, n](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    grads[a].array() += g(0, 0) / n;
  });
}

Var masked_softmax(Var logits, const Matrix& structure) {
  const Matrix& x = logits.value();
  if (structure.rows() != x.rows() || structure.cols() != x.cols())
    throw Error("masked_softmax: structure " + shape_str(structure) + " does not match logits " + shape_str(x));
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Index j = 0; j < x.cols(); ++j) {
      if (structure(i, j) != 0.0) {
        best = std::max(best, x(i, j));
        any = true;
      }
    }
    if (!any) throw Error("masked_softmax: row " + std::to_string(i) + " has an empty neighbourhood");
    double total = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      if (structure(i, j) != 0.0) {
        out(i, j) = std::exp(x(i, j) - best);
        total += out(i, j);
      }
    }
    out.row(i) /= total;
  }
  return logits.tape()->record(std::move(out), {logits}, [logits](const Matrix& y, const Matrix& g, GradientBuffer& grads) {
    // Entries outside the mask have y == 0 and therefore get no gradient.
    Eigen::VectorXd inner = g.cwiseProduct(y).rowwise().sum();
    grads[logits].array() += y.array() * (g.colwise() - inner).array();
  });
}

Var layer_norm(Var x, Var gain, Var bias) {
  auto& t = tape_of(x, gain);
  tape_of(x, bias);
  const Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d)
    throw Error("layer_norm: gain/bias must be 1x" + std::to_string(d));
  const Matrix& v = x.value();
  auto normed = std::make_shared<Matrix>(v.rows(), d);
  auto inv_std = std::make_shared<Eigen::VectorXd>(v.rows());
  for (Index i = 0; i < v.rows(); ++i) {
    const double mu = v.row(i).mean();
    const double var = (v.row(i).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    (*inv_std)(i) = is;
    normed->row(i) = (v.row(i).array() - mu) * is;
  }
  Matrix out = (normed->array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
  return t.record(std::move(out), {x, gain, bias},
                  [x, gain, bias, normed, inv_std](const Matrix&, const Matrix& g, GradientBuffer& grads) {
                    if (grads.wants(gain)) grads[gain] += g.cwiseProduct(*normed).colwise().sum();
                    if (grads.wants(bias)) grads[bias] += g.colwise().sum();
                    if (!grads.wants(x)) return;
                    Matrix dn = g.array().rowwise() * gain.value().row(0).array();
                    auto& dx = grads[x];
                    for (Index i = 0; i < dn.rows(); ++i) {
                      const double m1 = dn.row(i).mean();
                      const double m2 = dn.row(i).cwiseProduct(normed->row(i)).mean();
                      dx.row(i).array() +=
                          (*inv_std)(i) * (dn.row(i).array() - m1 - normed->row(i).array() * m2);
                    }
                  });
}

Var max_pool_stride2(Var x) {
  const Matrix& v = x.value();
  const Index rows = (v.rows() + 1) / 2;
  Matrix out(rows, v.cols());
  auto source = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(rows * v.cols()));
  for (Index r = 0; r < rows; ++r) {
    const Index a = 2 * r;
    const Index b = std::min(a + 1, v.rows() - 1);
    for (Index c = 0; c < v.cols(); ++c) {
      // Strict comparison keeps the earlier row on ties.
      const Index pick = v(b, c) > v(a, c) ? b : a;
      out(r, c) = v(pick, c);
      (*source)[static_cast<std::size_t>(r * v.cols() + c)] = pick;
    }
  }
  return x.tape()->record(std::move(out), {x}, [x, source](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    auto& dx = grads[x];
    for (Index r = 0; r < g.rows(); ++r)
      for (Index c = 0; c < g.cols(); ++c) dx((*source)[static_cast<std::size_t>(r * g.cols() + c)], c) += g(r, c);
  });
}

Var avg_pool_stride2(Var x) {
  const Matrix& v = x.value();
  const Index rows = (v.rows() + 1) / 2;
  Matrix out(rows, v.cols());
  for (Index r = 0; r < rows; ++r) {
    const Index a = 2 * r;
    out.row(r) = a + 1 < v.rows() ? Eigen::RowVectorXd(0.5 * (v.row(a) + v.row(a + 1))) : Eigen::RowVectorXd(v.row(a));
  }
  return x.tape()->record(std::move(out), {x}, [x](const Matrix&, const Matrix& g, GradientBuffer& grads) {
    auto& dx = grads[x];
    for (Index r = 0; r < g.rows(); ++r) {
      const Index a = 2 * r;
      if (a + 1 < dx.rows()) {
        dx.row(a) += 0.5 * g.row(r);
        dx.row(a + 1) += 0.5 * g.row(r);
      } else {
        dx.row(a) += g.row(r);
      }
    }
  });
}

Var gru_sequence(Var x, const GruWeights& w, Var h0) {
  auto& t = *x.tape();
  for (Var p : {w.w_update, w.u_update, w.b_update, w.w_reset, w.u_reset, w.b_reset, w.w_candidate,
                w.u_candidate, w.b_candidate, h0})
    tape_of(x, p);
  const Index d = w.u_update.rows();
  const Index din = x.cols();
  for (Var m : {w.w_update, w.w_reset, w.w_candidate})
    if (m.rows() != din || m.cols() != d) throw Error("gru: input weights must be " + std::to_string(din) + "x" + std::to_string(d));
  for (Var m : {w.u_update, w.u_reset, w.u_candidate})
    if (m.rows() != d || m.cols() != d) throw Error("gru: recurrent weights must be square");
  for (Var m : {w.b_update, w.b_reset, w.b_candidate, h0})
    if (m.rows() != 1 || m.cols() != d) throw Error("gru: biases and h0 must be 1x" + std::to_string(d));

  const Index steps = x.rows();
  struct Cache {
    Matrix z, r, c, h_prev;
  };
  auto cache = std::make_shared<Cache>();
  Matrix xz = (x.value() * w.w_update.value()).rowwise() + w.b_update.value().row(0);
  Matrix xr = (x.value() * w.w_reset.value()).rowwise() + w.b_reset.value().row(0);
  Matrix xc = (x.value() * w.w_candidate.value()).rowwise() + w.b_candidate.value().row(0);
  cache->z.resize(steps, d);
  cache->r.resize(steps, d);
  cache->c.resize(steps, d);
  cache->h_prev.resize(steps, d);
  Matrix out(steps, d);
  Eigen::RowVectorXd h = h0.value().row(0);
  const Matrix& uz = w.u_update.value();
  const Matrix& ur = w.u_reset.value();
  const Matrix& uc = w.u_candidate.value();
  for (Index s = 0; s < steps; ++s) {
    Eigen::RowVectorXd az = xz.row(s) + h * uz;
    Eigen::RowVectorXd ar = xr.row(s) + h * ur;
    Eigen::RowVectorXd z = az.unaryExpr([](double v) { return sigmoid_scalar(v); });
    Eigen::RowVectorXd r = ar.unaryExpr([](double v) { return sigmoid_scalar(v); });
    Eigen::RowVectorXd rh = r.cwiseProduct(h);
    Eigen::RowVectorXd c = (xc.row(s) + rh * uc).array().tanh();
    cache->z.row(s) = z;
    cache->r.row(s) = r;
    cache->c.row(s) = c;
    cache->h_prev.row(s) = h;
    h = (1.0 - z.array()) * h.array() + z.array() * c.array();
    out.row(s) = h;
  }

  return t.record(std::move(out),
                  {x, w.w_update, w.u_update, w.b_update, w.w_reset, w.u_reset, w.b_reset, w.w_candidate,
                   w.u_candidate, w.b_candidate, h0},
                  [x, w, h0, cache, steps, d](const Matrix&, const Matrix& g, GradientBuffer& grads) {
                    const Matrix& uz = w.u_update.value();
                    const Matrix& ur = w.u_reset.value();
                    const Matrix& uc = w.u_candidate.value();
                    Matrix daz(steps, d), dar(steps, d), dac(steps, d);
                    Matrix duz = Matrix::Zero(d, d), dur = Matrix::Zero(d, d), duc = Matrix::Zero(d, d);
                    Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(d);
                    for (Index s = steps; s-- > 0;) {
                      Eigen::RowVectorXd dh = g.row(s) + dh_next;
                      auto z = cache->z.row(s).array();
                      auto r = cache->r.row(s).array();
                      auto c = cache->c.row(s).array();
                      Eigen::RowVectorXd hp = cache->h_prev.row(s);
                      Eigen::RowVectorXd dz = dh.array() * (c - hp.array());
                      Eigen::RowVectorXd dcand = dh.array() * z;
                      Eigen::RowVectorXd dhp = dh.array() * (1.0 - z);
                      Eigen::RowVectorXd dac_s = dcand.array() * (1.0 - c.square());
                      Eigen::RowVectorXd rh = r * hp.array();
                      Eigen::RowVectorXd drh = dac_s * uc.transpose();
                      duc.noalias() += rh.transpose() * dac_s;
                      Eigen::RowVectorXd dr = drh.array() * hp.array();
                      dhp.array() += drh.array() * r;
                      Eigen::RowVectorXd daz_s = dz.array() * z * (1.0 - z);
                      Eigen::RowVectorXd dar_s = dr.array() * r * (1.0 - r);
                      duz.noalias() += hp.transpose() * daz_s;
                      dur.noalias() += hp.transpose() * dar_s;
                      dhp.noalias() += daz_s * uz.transpose();
                      dhp.noalias() += dar_s * ur.transpose();
                      daz.row(s) = daz_s;
                      dar.row(s) = dar_s;
                      dac.row(s) = dac_s;
                      dh_next = dhp;
                    }
                    const Matrix& xv = x.value();
                    if (grads.wants(w.w_update)) grads[w.w_update].noalias() += xv.transpose() * daz;
                    if (grads.wants(w.w_reset)) grads[w.w_reset].noalias() += xv.transpose() * dar;
                    if (grads.wants(w.w_candidate)) grads[w.w_candidate].noalias() += xv.transpose() * dac;
                    if (grads.wants(w.u_update)) grads[w.u_update] += duz;
                    if (grads.wants(w.u_reset)) grads[w.u_reset] += dur;
                    if (grads.wants(w.u_candidate)) grads[w.u_candidate] += duc;
                    if (grads.wants(w.b_update)) grads[w.b_update] += daz.colwise().sum();
                    if (grads.wants(w.b_reset)) grads[w.b_reset] += dar.colwise().sum();
                    if (grads.wants(w.b_candidate)) grads[w.b_candidate] += dac.colwise().sum();
                    if (grads.wants(x)) {
                      auto& dx = grads[x];
                      dx.noalias() += daz * w.w_update.value().transpose();
                      dx.noalias() += dar * w.w_reset.value().transpose();
                      dx.noalias() += dac * w.w_candidate.value().transpose();
                    }
                    if (grads.wants(h0)) grads[h0] += dh_next;
                  });
}

}  // namespace tsgatr::ad
