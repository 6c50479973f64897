#include "advdrop/divergence.hpp"

#include <cmath>
#include <cstdio>

#include "advdrop/errors.hpp"

namespace advdrop {

namespace {

double clampp(double p) { return p < kProbFloor ? kProbFloor : (p > 1.0 ? 1.0 : p); }

void check_pair(const char* what, const Tensor& y, const Tensor& yp) {
  if (y.size() != yp.size()) {
    throw ShapeError(std::string(what) + ": length mismatch, " + shape_to_string(y.shape()) +
                     " vs " + shape_to_string(yp.shape()));
  }
}

void check_prob(const char* what, const Tensor& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = t[i];
    if (!(v >= -1e-9)) {
      throw DomainError(std::string(what) + ": negative probability entry");
    }
    s += v;
  }
  if (std::fabs(s - 1.0) > 1e-6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", s);
    throw DomainError(std::string(what) + ": probabilities sum to " + buf + ", not 1");
  }
}

double eval_span(Divergence kind, const double* y, const double* yp, std::size_t n) {
  double acc = 0.0;
  switch (kind) {
    case Divergence::kCe:
      for (std::size_t i = 0; i < n; ++i) acc -= y[i] * std::log(clampp(yp[i]));
      break;
    case Divergence::kKl:
      for (std::size_t i = 0; i < n; ++i) {
        if (y[i] <= 0.0) continue;  // 0 log 0 = 0
        acc += y[i] * (std::log(clampp(y[i])) - std::log(clampp(yp[i])));
      }
      break;
    case Divergence::kQe:
      for (std::size_t i = 0; i < n; ++i) {
        double d = y[i] - yp[i];
        acc += d * d;
      }
      break;
  }
  return acc;
}

void grad_span(Divergence kind, const double* y, const double* yp, double* g, std::size_t n) {
  switch (kind) {
    case Divergence::kCe:
    case Divergence::kKl:
      // Both differentiate to -y_i / y'_i in y'; the gradient vanishes where
      // the clamp pins y' (below the floor or above 1).
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = (yp[i] >= kProbFloor && yp[i] <= 1.0) ? -y[i] / yp[i] : 0.0;
      }
      break;
    case Divergence::kQe:
      for (std::size_t i = 0; i < n; ++i) g[i] = -2.0 * (y[i] - yp[i]);
      break;
  }
}

void grad_first_span(Divergence kind, const double* y, const double* yp, double* g,
                     std::size_t n) {
  switch (kind) {
    case Divergence::kCe:
      for (std::size_t i = 0; i < n; ++i) g[i] = -std::log(clampp(yp[i]));
      break;
    case Divergence::kKl:
      // d/dy of y (log clamp(y) - log clamp(y')), honoring the 0 log 0 = 0
      // convention used by eval.
      for (std::size_t i = 0; i < n; ++i) {
        if (y[i] <= 0.0) {
          g[i] = 0.0;
          continue;
        }
        g[i] = std::log(clampp(y[i])) - std::log(clampp(yp[i]));
        if (y[i] >= kProbFloor && y[i] <= 1.0) g[i] += 1.0;
      }
      break;
    case Divergence::kQe:
      for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * (y[i] - yp[i]);
      break;
  }
}

}  // namespace

Divergence divergence_from_string(const std::string& name) {
  if (name == "ce") return Divergence::kCe;
  if (name == "kl") return Divergence::kKl;
  if (name == "qe") return Divergence::kQe;
  throw ConfigError("unknown divergence '" + name + "' (expected ce, kl, or qe)");
}

std::string to_string(Divergence kind) {
  switch (kind) {
    case Divergence::kCe: return "ce";
    case Divergence::kKl: return "kl";
    case Divergence::kQe: return "qe";
  }
  return "?";
}

double div_eval(Divergence kind, const Tensor& y, const Tensor& yp) {
  check_pair("div_eval", y, yp);
  if (kind != Divergence::kQe) {
    check_prob("div_eval: first argument", y);
    check_prob("div_eval: second argument", yp);
  }
  return eval_span(kind, y.data(), yp.data(), y.size());
}

Tensor div_grad(Divergence kind, const Tensor& y, const Tensor& yp) {
  check_pair("div_grad", y, yp);
  Tensor g(yp.shape());
  grad_span(kind, y.data(), yp.data(), g.data(), y.size());
  return g;
}

Tensor div_grad_first(Divergence kind, const Tensor& y, const Tensor& yp) {
  check_pair("div_grad_first", y, yp);
  Tensor g(y.shape());
  grad_first_span(kind, y.data(), yp.data(), g.data(), y.size());
  return g;
}

std::vector<double> div_eval_rows(Divergence kind, const Tensor& y, const Tensor& yp) {
  if (y.rank() != 2 || !same_shape(y, yp)) {
    throw ShapeError("div_eval_rows: want equal [N, C] tensors, got " +
                     shape_to_string(y.shape()) + " vs " + shape_to_string(yp.shape()));
  }
  std::size_t n = y.dim(0), c = y.dim(1);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = eval_span(kind, y.data() + i * c, yp.data() + i * c, c);
  }
  return out;
}

Tensor div_grad_rows(Divergence kind, const Tensor& y, const Tensor& yp) {
  if (y.rank() != 2 || !same_shape(y, yp)) {
    throw ShapeError("div_grad_rows: want equal [N, C] tensors, got " +
                     shape_to_string(y.shape()) + " vs " + shape_to_string(yp.shape()));
  }
  std::size_t n = y.dim(0), c = y.dim(1);
  Tensor g(y.shape());
  for (std::size_t i = 0; i < n; ++i) {
    grad_span(kind, y.data() + i * c, yp.data() + i * c, g.data() + i * c, c);
  }
  return g;
}

Tensor div_grad_first_rows(Divergence kind, const Tensor& y, const Tensor& yp) {
  if (y.rank() != 2 || !same_shape(y, yp)) {
    throw ShapeError("div_grad_first_rows: want equal [N, C] tensors, got " +
                     shape_to_string(y.shape()) + " vs " + shape_to_string(yp.shape()));
  }
  std::size_t n = y.dim(0), c = y.dim(1);
  Tensor g(y.shape());
  for (std::size_t i = 0; i < n; ++i) {
    grad_first_span(kind, y.data() + i * c, yp.data() + i * c, g.data() + i * c, c);
  }
  return g;
}

}  // namespace advdrop
