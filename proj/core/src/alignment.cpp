#include "tsgatr/alignment.hpp"

#include <cmath>
#include <limits>
#include <algorithm>
#include <memory>

namespace tsgatr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(const Matrix& x, const Matrix& y) {
  if (x.rows() < 1 || y.rows() < 1) throw Error("alignment needs non-empty sequences");
  if (x.cols() != y.cols())
    throw Error("alignment: feature widths differ (" + std::to_string(x.cols()) + " vs " +
                std::to_string(y.cols()) + ")");
}

// Accumulated cost with a +inf border row/column: acc(0,0) = 0.
Matrix accumulate(const Matrix& cost) {
  const Index n = cost.rows(), m = cost.cols();
  Matrix acc = Matrix::Constant(n + 1, m + 1, kInf);
  acc(0, 0) = 0.0;
  for (Index i = 1; i <= n; ++i)
    for (Index j = 1; j <= m; ++j)
      acc(i, j) = cost(i - 1, j - 1) + std::min({acc(i - 1, j - 1), acc(i - 1, j), acc(i, j - 1)});
  return acc;
}

AlignmentGradient path_gradient(const Matrix& x, const Matrix& y, const std::vector<std::pair<Index, Index>>& path,
                                double factor) {
  AlignmentGradient g{Matrix::Zero(x.rows(), x.cols()), Matrix::Zero(y.rows(), y.cols())};
  for (auto [t, s] : path) {
    Eigen::RowVectorXd diff = x.row(t) - y.row(s);
    g.dx.row(t) += 2.0 * factor * diff;
    g.dy.row(s) -= 2.0 * factor * diff;
  }
  return g;
}

struct SoftTable {
  Matrix acc;
  // Soft-min weights of the three predecessors of cell (i, j), 1-based.
  Matrix w_diag, w_up, w_left;
};

SoftTable soft_accumulate(const Matrix& cost, double gamma) {
  const Index n = cost.rows(), m = cost.cols();
  SoftTable tab{Matrix::Constant(n + 1, m + 1, kInf), Matrix::Zero(n + 1, m + 1), Matrix::Zero(n + 1, m + 1),
                Matrix::Zero(n + 1, m + 1)};
  tab.acc(0, 0) = 0.0;
  for (Index i = 1; i <= n; ++i) {
    for (Index j = 1; j <= m; ++j) {
      const double a = tab.acc(i - 1, j - 1), b = tab.acc(i - 1, j), c = tab.acc(i, j - 1);
      const double lo = std::min({a, b, c});
      const double ea = std::isinf(a) ? 0.0 : std::exp(-(a - lo) / gamma);
      const double eb = std::isinf(b) ? 0.0 : std::exp(-(b - lo) / gamma);
      const double ec = std::isinf(c) ? 0.0 : std::exp(-(c - lo) / gamma);
      const double total = ea + eb + ec;
      tab.acc(i, j) = cost(i - 1, j - 1) + lo - gamma * std::log(total);
      tab.w_diag(i, j) = ea / total;
      tab.w_up(i, j) = eb / total;
      tab.w_left(i, j) = ec / total;
    }
  }
  return tab;
}

AlignmentGradient grad_from_cell_weights(const Matrix& x, const Matrix& y, const Matrix& cell, double factor) {
  // d/dx_t sum_s w_ts |x_t - y_s|^2 = 2 (rowsum_t x_t - sum_s w_ts y_s)
  AlignmentGradient g;
  g.dx = 2.0 * factor * (x.array().colwise() * cell.rowwise().sum().array()).matrix() - 2.0 * factor * cell * y;
  g.dy = 2.0 * factor * (y.array().colwise() * cell.colwise().sum().transpose().array()).matrix() -
         2.0 * factor * cell.transpose() * x;
  return g;
}

Matrix soft_cell_weights(const SoftTable& tab) {
  const Index n = tab.acc.rows() - 1, m = tab.acc.cols() - 1;
  Matrix flow = Matrix::Zero(n + 1, m + 1);
  flow(n, m) = 1.0;
  Matrix cell(n, m);
  for (Index i = n; i >= 1; --i) {
    for (Index j = m; j >= 1; --j) {
      const double g = flow(i, j);
      cell(i - 1, j - 1) = g;
      flow(i - 1, j - 1) += g * tab.w_diag(i, j);
      flow(i - 1, j) += g * tab.w_up(i, j);
      flow(i, j - 1) += g * tab.w_left(i, j);
    }
  }
  return cell;
}

}  // namespace

Matrix pairwise_sq_distances(const Matrix& x, const Matrix& y) {
  check_inputs(x, y);
  Matrix out(x.rows(), y.rows());
  for (Index i = 0; i < x.rows(); ++i) out.row(i) = (y.rowwise() - x.row(i)).rowwise().squaredNorm().transpose();
  return out;
}

AlignmentResult dtw_distance(const Matrix& x, const Matrix& y) {
  const Matrix cost = pairwise_sq_distances(x, y);
  const Matrix acc = accumulate(cost);
  const Index n = x.rows(), m = y.rows();

  AlignmentResult res;
  res.cost = acc(n, m);
  res.normalized = res.cost / static_cast<double>(n + m);
  Index i = n, j = m;
  res.path.emplace_back(i - 1, j - 1);
  while (i > 1 || j > 1) {
    const double diag = acc(i - 1, j - 1), up = acc(i - 1, j), left = acc(i, j - 1);
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    res.path.emplace_back(i - 1, j - 1);
  }
  std::reverse(res.path.begin(), res.path.end());
  return res;
}

AlignmentGradient dtw_grad(const Matrix& x, const Matrix& y) {
  return path_gradient(x, y, dtw_distance(x, y).path, 1.0);
}

double soft_dtw(const Matrix& x, const Matrix& y, double gamma) {
  if (!(gamma > 0.0)) throw Error("soft_dtw: gamma must be positive");
  const Matrix cost = pairwise_sq_distances(x, y);
  return soft_accumulate(cost, gamma).acc(x.rows(), y.rows());
}

AlignmentGradient soft_dtw_grad(const Matrix& x, const Matrix& y, double gamma) {
  if (!(gamma > 0.0)) throw Error("soft_dtw: gamma must be positive");
  const Matrix cost = pairwise_sq_distances(x, y);
  return grad_from_cell_weights(x, y, soft_cell_weights(soft_accumulate(cost, gamma)), 1.0);
}

double alignment_distance(const Matrix& x, const Matrix& y, const DistanceOptions& options) {
  if (options.kind == DistanceKind::kHard) return dtw_distance(x, y).normalized;
  return soft_dtw(x, y, options.soft_gamma) / static_cast<double>(x.rows() + y.rows());
}

ad::Var alignment_distance(ad::Var x, ad::Var y, const DistanceOptions& options) {
  if (x.tape() != y.tape()) throw Error("alignment_distance: operands on different tapes");
  const Matrix& xv = x.value();
  const Matrix& yv = y.value();
  const double norm = 1.0 / static_cast<double>(xv.rows() + yv.rows());
  Matrix out(1, 1);
  if (options.kind == DistanceKind::kHard) {
    auto res = std::make_shared<AlignmentResult>(dtw_distance(xv, yv));
    out(0, 0) = res->normalized;
    return x.tape()->record(std::move(out), {x, y}, [x, y, res, norm](const Matrix&, const Matrix& g, ad::GradientBuffer& grads) {
      auto pg = path_gradient(x.value(), y.value(), res->path, g(0, 0) * norm);
      if (grads.wants(x)) grads[x] += pg.dx;
      if (grads.wants(y)) grads[y] += pg.dy;
    });
  }
  const double gamma = options.soft_gamma;
  out(0, 0) = soft_dtw(xv, yv, gamma) * norm;
  return x.tape()->record(std::move(out), {x, y}, [x, y, gamma, norm](const Matrix&, const Matrix& g, ad::GradientBuffer& grads) {
    const Matrix cost = pairwise_sq_distances(x.value(), y.value());
    auto pg = grad_from_cell_weights(x.value(), y.value(), soft_cell_weights(soft_accumulate(cost, gamma)),
                                     g(0, 0) * norm);
    if (grads.wants(x)) grads[x] += pg.dx;
    if (grads.wants(y)) grads[y] += pg.dy;
  });
}

}  // namespace tsgatr
