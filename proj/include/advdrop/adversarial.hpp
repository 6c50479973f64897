#ifndef ADVDROP_ADVERSARIAL_HPP
#define ADVDROP_ADVERSARIAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advdrop/divergence.hpp"
#include "advdrop/network.hpp"
#include "advdrop/rng.hpp"
#include "advdrop/tensor.hpp"

namespace advdrop {

// Mask-change budget: at most floor(delta * H) coordinate flips away from
// the sampled mask. The product is nudged by 1e-9 before flooring so exact
// fractions (0.3 * 10) are not lost to binary rounding.
struct AdvBudget {
  double delta;
  std::size_t width;
  std::size_t budget;
  AdvBudget(double delta, std::size_t width);
};

enum class Objective {
  kPlain,
  kPiModel,
  kAt,
  kVat,
  kSadd,
  kVadd,
  kSaddPlusAt,
  kVaddPlusVat
};

Objective objective_from_string(const std::string& name);
std::string to_string(Objective o);
bool objective_needs_mask_search(Objective o);

// Supervised part of the loss: NLL over softmax outputs against one-hot
// targets, or squared error against arbitrary target rows (autoencoders).
enum class SupervisedLoss { kNll, kQe };

struct LossSpec {
  Objective objective = Objective::kPlain;
  SupervisedLoss supervised = SupervisedLoss::kNll;
  Divergence divergence = Divergence::kKl;
  double lambda1 = 0.0;       // weight of the main regularizer (AdD / Pi / AT / VAT)
  double lambda2 = 0.0;       // weight of the secondary term in *_plus_* modes
  double delta = 0.0;         // mask budget fraction of H
  double delta_input = 0.0;   // input perturbation radius (AT: L-inf, VAT: L2)
  double keep_prob = 1.0;     // eps^s sampling rate at the slot
  bool stop_grad_target = false;  // freeze f(x, eps^s) in the VAdD / Pi divergence
  double vat_xi = 1e-6;       // finite-difference probe length for VAT power iteration
};

// Eq.-11-style linearization coefficients: J = h (.) grad_h, elementwise.
// Accepts [H] vectors or [N, H] row batches (both arguments alike).
Tensor jacobian_estimate(const Tensor& h, const Tensor& grad_h);

// Greedy 0/1-knapsack maximization of sum_i eps_i J_i over the Hamming ball
// of radius budget.budget around eps_s: visit coordinates by descending |J|
// (ties: lower index first), flip 0->1 when J > 0 and 1->0 when J < 0, stop
// when the budget is spent. Exact for this objective.
Mask find_adversarial_mask(const Tensor& j, const Mask& eps_s, const AdvBudget& budget);

// Row-wise search over a batch; masks are 0/1-valued [N, H] tensors.
struct RowSearchResult {
  Tensor eps_adv;
  double mean_abs_j = 0.0;   // mean |J| over searched rows
  double mean_flips = 0.0;   // mean Hamming(eps_s, eps_adv) over searched rows
};
RowSearchResult find_adversarial_mask_rows(const Tensor& j, const Tensor& eps_s_rows,
                                           const AdvBudget& budget,
                                           const std::vector<std::uint8_t>* rows = nullptr);

struct AdvDivergence {
  double value;
  Mask eps_adv;
};

// Supervised adversarial dropout: target is the one-hot label; the Jacobian
// is taken at the all-ones expansion point on a pass sharing the eps_s pass's
// noise draws; returns D[g(y), f(x, eps_adv)] evaluated with those draws.
AdvDivergence sadd_divergence(const SplitNetwork& net, const Tensor& x, const Tensor& y_onehot,
                              const Mask& eps_s, const LossSpec& spec, RngStream* rng = nullptr);

// Virtual adversarial dropout: target is f(x, eps_s) itself.
AdvDivergence vadd_divergence(const SplitNetwork& net, const Tensor& x, const Mask& eps_s,
                              const LossSpec& spec, RngStream* rng = nullptr);

// Pi-model consistency: divergence between two independently sampled passes
// (fresh layer noises, fresh slot masks at spec.keep_prob). Mean over rows.
double pi_model_divergence(const SplitNetwork& net, const Tensor& x, RngStream& rng,
                           const LossSpec& spec);

// Fast gradient sign on the NLL of a noise-free pass; ||x_adv - x||_inf <= delta.
Tensor fgsm_perturbation(const SplitNetwork& net, const Tensor& x, const Tensor& y_onehot,
                         double delta_input);

// One power-iteration VAT direction from a random probe; ||x_adv - x||_2 =
// delta per row (falls back to the probe direction on zero gradient). The
// target branch is never differentiated.
Tensor vat_perturbation(const SplitNetwork& net, const Tensor& x, double delta_input,
                        RngStream& rng, const LossSpec& spec);

// One optimization step's worth of work: batch in, loss value + parameter
// gradients out. y rows must be one-hot where labeled[i] == 1 and all-zero
// where labeled[i] == 0.
struct Batch {
  Tensor x;                           // [N, D]
  Tensor y;                           // [N, C]
  std::vector<std::uint8_t> labeled;  // length N, entries {0,1}
};

struct ObjectiveStats {
  double nll = 0.0;
  double reg1 = 0.0;        // mean main regularizer value (unweighted)
  double reg2 = 0.0;        // mean secondary regularizer value (unweighted)
  double mean_abs_j = 0.0;
  double mean_flips = 0.0;
};

struct ObjectiveResult {
  double total = 0.0;
  std::vector<Tensor> param_grads;
  ObjectiveStats stats;
};

// total = NLL over labeled rows + lambda1 * reg1 + lambda2 * reg2, with
// gradients through both divergence arguments unless spec.stop_grad_target
// (VAT targets are always frozen). Zero-weight terms are skipped outright so
// lambda = 0 reproduces plain training bit-for-bit. The mask search result is
// treated as a constant.
ObjectiveResult assemble_objective(const SplitNetwork& net, const Batch& batch,
                                   const LossSpec& spec, RngStream& rng);

}  // namespace advdrop

#endif
