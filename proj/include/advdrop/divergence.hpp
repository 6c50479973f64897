#ifndef ADVDROP_DIVERGENCE_HPP
#define ADVDROP_DIVERGENCE_HPP

#include <string>

#include "advdrop/tensor.hpp"

namespace advdrop {

enum class Divergence { kCe, kKl, kQe };

Divergence divergence_from_string(const std::string& name);
std::string to_string(Divergence kind);

// Probabilities are clamped to [1e-7, 1] before any logarithm.
constexpr double kProbFloor = 1e-7;

// D[y, y'] on equal-length vectors.
//   CE = -sum y_i log y'_i
//   KL = sum y_i log(y_i / y'_i), 0 log 0 = 0
//   QE = sum (y_i - y'_i)^2
// CE/KL require both arguments to be probability vectors.
double div_eval(Divergence kind, const Tensor& y, const Tensor& yp);

// dD/dy' (the argument AdD perturbs).
Tensor div_grad(Divergence kind, const Tensor& y, const Tensor& yp);

// dD/dy, for divergence terms that train the target branch too.
Tensor div_grad_first(Divergence kind, const Tensor& y, const Tensor& yp);

// Row-wise versions for batched [N, C] outputs: per-row divergences and
// the stacked gradients.
std::vector<double> div_eval_rows(Divergence kind, const Tensor& y, const Tensor& yp);
Tensor div_grad_rows(Divergence kind, const Tensor& y, const Tensor& yp);
Tensor div_grad_first_rows(Divergence kind, const Tensor& y, const Tensor& yp);

}  // namespace advdrop

#endif
