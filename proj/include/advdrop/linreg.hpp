#ifndef ADVDROP_LINREG_HPP
#define ADVDROP_LINREG_HPP

#include <cstddef>

#include "advdrop/rng.hpp"
#include "advdrop/tensor.hpp"

namespace advdrop {

// Fixed-weight least-squares instance used to verify the regularization
// decompositions of adversarial input noise and adversarial feature dropping.
struct LinRegProblem {
  Tensor x;        // [N, D] design matrix
  Tensor y;        // [N] targets
  Tensor w;        // [D] fixed weights (nothing here fits them)
  double delta = 0.0;   // input-noise radius
  std::size_t k = 0;    // max features dropped per point
};

// sum_i (y_i - x_i . w)^2
double linreg_loss(const LinRegProblem& p);

// d/dx_i of the squared loss: -2 (y_i - x_i . w) w.
Tensor linreg_input_grad(const LinRegProblem& p, std::size_t i);

struct Decomposition {
  double lhs = 0.0;  // direct evaluation of the perturbed loss
  double rhs = 0.0;  // loss + first-order penalty + quadratic form
};

// Adversarial input noise x_i + delta * sign(grad): lhs is the perturbed loss
// evaluated directly; rhs = l(w) + sum_i |delta * grad_i|_1 + delta^2 w' G w
// with G = sum_i sign(grad_i) sign(grad_i)'. The two agree identically.
Decomposition at_decomposition(const LinRegProblem& p);

// Per-point adversarial feature drop: score_j = x_ij * grad_ij; drop the
// features whose score is <= min(k-th lowest score, 0), ties resolved toward
// lower indices, never more than k drops.
Mask add_closed_form_mask(const LinRegProblem& p, std::size_t i);

// lhs = sum_i (y_i - (eps_i . x_i) . w)^2 with the closed-form masks; rhs =
// l(w) + sum_i sum_{j dropped} |x_ij grad_ij| + w' G w with
// G = sum_i ((1-eps_i) . x_i)((1-eps_i) . x_i)'.
Decomposition add_decomposition(const LinRegProblem& p);

}  // namespace advdrop

#endif
