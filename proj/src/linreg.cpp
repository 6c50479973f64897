#include "advdrop/linreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advdrop/errors.hpp"

namespace advdrop {

namespace {

void check(const LinRegProblem& p) {
  if (p.x.rank() != 2) {
    throw ShapeError("linreg: design matrix must be [N, D], got " + shape_to_string(p.x.shape()));
  }
  std::size_t n = p.x.dim(0), d = p.x.dim(1);
  if (p.y.rank() != 1 || p.y.size() != n) {
    throw ShapeError("linreg: targets " + shape_to_string(p.y.shape()) + " for " +
                     std::to_string(n) + " rows");
  }
  if (p.w.rank() != 1 || p.w.size() != d) {
    throw ShapeError("linreg: weights " + shape_to_string(p.w.shape()) + " for " +
                     std::to_string(d) + " features");
  }
  if (p.delta < 0.0) throw DomainError("linreg: delta must be >= 0");
  if (p.k > d) throw DomainError("linreg: k exceeds the feature count");
}

double residual(const LinRegProblem& p, std::size_t i) {
  const double* xi = p.x.data() + i * p.x.dim(1);
  double pred = 0.0;
  for (std::size_t j = 0; j < p.w.size(); ++j) pred += xi[j] * p.w[j];
  return p.y[i] - pred;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double linreg_loss(const LinRegProblem& p) {
  check(p);
  double s = 0.0;
  for (std::size_t i = 0; i < p.x.dim(0); ++i) {
    double r = residual(p, i);
    s += r * r;
  }
  return s;
}

Tensor linreg_input_grad(const LinRegProblem& p, std::size_t i) {
  check(p);
  if (i >= p.x.dim(0)) throw DomainError("linreg_input_grad: row out of range");
  double r = residual(p, i);
  Tensor g(p.w.shape());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = -2.0 * r * p.w[j];
  return g;
}

Decomposition at_decomposition(const LinRegProblem& p) {
  check(p);
  std::size_t n = p.x.dim(0), d = p.x.dim(1);
  Decomposition out;
  double base = 0.0, first = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = p.x.data() + i * d;
    double r = residual(p, i);
    Tensor g = linreg_input_grad(p, i);

    // lhs: substitute x_i + delta * sign(g) and evaluate the loss directly.
    double pred = 0.0;
    for (std::size_t j = 0; j < d; ++j) pred += (xi[j] + p.delta * sgn(g[j])) * p.w[j];
    double ra = p.y[i] - pred;
    out.lhs += ra * ra;

    base += r * r;
    double sw = 0.0;  // sign(g) . w
    for (std::size_t j = 0; j < d; ++j) {
      first += std::fabs(p.delta * g[j]);
      sw += sgn(g[j]) * p.w[j];
    }
    quad += p.delta * p.delta * sw * sw;  // w' sign(g) sign(g)' w, summed over i
  }
  out.rhs = base + first + quad;
  return out;
}

Mask add_closed_form_mask(const LinRegProblem& p, std::size_t i) {
  check(p);
  if (i >= p.x.dim(0)) throw DomainError("add_closed_form_mask: row out of range");
  std::size_t d = p.x.dim(1);
  Mask mask(d, 1);
  if (p.k == 0) return mask;
  const double* xi = p.x.data() + i * d;
  Tensor g = linreg_input_grad(p, i);
  std::vector<double> score(d);
  for (std::size_t j = 0; j < d; ++j) score[j] = xi[j] * g[j];
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(), [&score](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] < score[b];
    return a < b;
  });
  for (std::size_t r = 0; r < p.k; ++r) {
    if (score[order[r]] > 0.0) break;  // min(s_ik, 0): positive scores never drop
    mask[order[r]] = 0;
  }
  return mask;
}

Decomposition add_decomposition(const LinRegProblem& p) {
  check(p);
  std::size_t n = p.x.dim(0), d = p.x.dim(1);
  Decomposition out;
  double base = 0.0, first = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = p.x.data() + i * d;
    double r = residual(p, i);
    Tensor g = linreg_input_grad(p, i);
    Mask eps = add_closed_form_mask(p, i);

    double pred = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (eps[j]) pred += xi[j] * p.w[j];
    }
    double rm = p.y[i] - pred;
    out.lhs += rm * rm;

    base += r * r;
    double dropped = 0.0;  // ((1-eps) . x_i) . w
    for (std::size_t j = 0; j < d; ++j) {
      if (!eps[j]) {
        first += std::fabs(xi[j] * g[j]);
        dropped += xi[j] * p.w[j];
      }
    }
    quad += dropped * dropped;
  }
  out.rhs = base + first + quad;
  return out;
}

}  // namespace advdrop
