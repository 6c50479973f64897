#include "advdrop/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advdrop/errors.hpp"

namespace advdrop {

namespace {

Tensor sample_slot_rows(RngStream& rng, std::size_t n, std::size_t h, double keep_prob) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
    throw DomainError("keep_prob must lie in [0, 1]");
  }
  Tensor rows({n, h});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = rng.next_double() < keep_prob ? 1.0 : 0.0;
  }
  return rows;
}

void zero_unlabeled_rows(Tensor& t, const std::vector<std::uint8_t>& labeled) {
  std::size_t c = t.dim(1);
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    if (!labeled[i]) std::fill(t.data() + i * c, t.data() + (i + 1) * c, 0.0);
  }
}

double sum_rows(const std::vector<double>& vals, const std::vector<std::uint8_t>* labeled) {
  double s = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!labeled || (*labeled)[i]) s += vals[i];
  }
  return s;
}

// Row-wise L2 normalization; zero rows fall back to the first basis vector.
void normalize_rows(Tensor& t) {
  std::size_t c = t.dim(1);
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    double* row = t.data() + i * c;
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += row[j] * row[j];
    if (s == 0.0) {
      row[0] = 1.0;
      continue;
    }
    double inv = 1.0 / std::sqrt(s);
    for (std::size_t j = 0; j < c; ++j) row[j] *= inv;
  }
}

Tensor mask_to_tensor(const Mask& m) {
  Tensor t({m.size()});
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] > 1) throw DomainError("mask entries must be 0 or 1");
    t[i] = double(m[i]);
  }
  return t;
}

void check_one_hot(const Tensor& y, std::size_t want) {
  if (y.rank() != 1 || y.size() != want) {
    throw ShapeError("one-hot target shape " + shape_to_string(y.shape()) + ", want [" +
                     std::to_string(want) + "]");
  }
  std::size_t ones = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) {
      ++ones;
    } else if (y[i] != 0.0) {
      throw DomainError("one-hot target has an entry that is neither 0 nor 1");
    }
  }
  if (ones != 1) throw DomainError("one-hot target must contain exactly one 1");
}

}  // namespace

AdvBudget::AdvBudget(double d, std::size_t w) : delta(d), width(w) {
  if (!(d >= 0.0)) throw DomainError("AdvBudget: delta must be >= 0");
  double raw = std::floor(d * double(w) + 1e-9);
  budget = std::min<std::size_t>(w, std::size_t(raw));
}

Objective objective_from_string(const std::string& name) {
  if (name == "plain") return Objective::kPlain;
  if (name == "pi_model") return Objective::kPiModel;
  if (name == "at") return Objective::kAt;
  if (name == "vat") return Objective::kVat;
  if (name == "sadd") return Objective::kSadd;
  if (name == "vadd") return Objective::kVadd;
  if (name == "sadd_plus_at") return Objective::kSaddPlusAt;
  if (name == "vadd_plus_vat") return Objective::kVaddPlusVat;
  throw ConfigError("unknown objective '" + name + "'");
}

std::string to_string(Objective o) {
  switch (o) {
    case Objective::kPlain: return "plain";
    case Objective::kPiModel: return "pi_model";
    case Objective::kAt: return "at";
    case Objective::kVat: return "vat";
    case Objective::kSadd: return "sadd";
    case Objective::kVadd: return "vadd";
    case Objective::kSaddPlusAt: return "sadd_plus_at";
    case Objective::kVaddPlusVat: return "vadd_plus_vat";
  }
  return "?";
}

bool objective_needs_mask_search(Objective o) {
  return o == Objective::kSadd || o == Objective::kVadd || o == Objective::kSaddPlusAt ||
         o == Objective::kVaddPlusVat;
}

Tensor jacobian_estimate(const Tensor& h, const Tensor& grad_h) {
  if (!same_shape(h, grad_h)) {
    throw ShapeError("jacobian_estimate: " + shape_to_string(h.shape()) + " vs " +
                     shape_to_string(grad_h.shape()));
  }
  return hadamard(h, grad_h);
}

RowSearchResult find_adversarial_mask_rows(const Tensor& j, const Tensor& eps_rows,
                                           const AdvBudget& budget,
                                           const std::vector<std::uint8_t>* rows) {
  if (j.rank() != 2 || !same_shape(j, eps_rows)) {
    throw ShapeError("find_adversarial_mask_rows: J " + shape_to_string(j.shape()) +
                     " vs masks " + shape_to_string(eps_rows.shape()));
  }
  std::size_t n = j.dim(0), h = j.dim(1);
  if (h != budget.width) {
    throw ShapeError("find_adversarial_mask_rows: J width " + std::to_string(h) +
                     ", budget width " + std::to_string(budget.width));
  }
  RowSearchResult res;
  res.eps_adv = eps_rows;
  std::vector<std::size_t> order(h);
  std::size_t used_rows = 0, total_flips = 0;
  double abs_j = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (rows && !(*rows)[r]) continue;
    ++used_rows;
    const double* jr = j.data() + r * h;
    double* er = res.eps_adv.data() + r * h;
    for (std::size_t i = 0; i < h; ++i) abs_j += std::fabs(jr[i]);
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::sort(order.begin(), order.end(), [jr](std::size_t a, std::size_t b) {
      double fa = std::fabs(jr[a]), fb = std::fabs(jr[b]);
      if (fa != fb) return fa > fb;
      return a < b;
    });
    std::size_t flips = 0;
    for (std::size_t idx : order) {
      if (flips == budget.budget) break;
      if (er[idx] == 0.0 && jr[idx] > 0.0) {
        er[idx] = 1.0;
        ++flips;
      } else if (er[idx] == 1.0 && jr[idx] < 0.0) {
        er[idx] = 0.0;
        ++flips;
      }
    }
    total_flips += flips;
  }
  if (used_rows > 0) {
    res.mean_abs_j = abs_j / double(used_rows * h);
    res.mean_flips = double(total_flips) / double(used_rows);
  }
  return res;
}

Mask find_adversarial_mask(const Tensor& j, const Mask& eps_s, const AdvBudget& budget) {
  if (j.rank() != 1 || j.size() != eps_s.size()) {
    throw ShapeError("find_adversarial_mask: J " + shape_to_string(j.shape()) + " vs mask length " +
                     std::to_string(eps_s.size()));
  }
  Tensor jr = j.reshaped({1, j.size()});
  Tensor er({1, eps_s.size()});
  for (std::size_t i = 0; i < eps_s.size(); ++i) {
    if (eps_s[i] > 1) throw DomainError("find_adversarial_mask: mask entries must be 0 or 1");
    er[i] = double(eps_s[i]);
  }
  RowSearchResult res = find_adversarial_mask_rows(jr, er, budget, nullptr);
  Mask out(eps_s.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = res.eps_adv[i] != 0.0 ? 1 : 0;
  return out;
}

AdvDivergence sadd_divergence(const SplitNetwork& net, const Tensor& x, const Tensor& y_onehot,
                              const Mask& eps_s, const LossSpec& spec, RngStream* rng) {
  check_one_hot(y_onehot, net.output_dim());
  std::size_t h = net.slot_width();
  if (eps_s.size() != h) {
    throw ShapeError("sadd_divergence: mask length " + std::to_string(eps_s.size()) +
                     ", slot width " + std::to_string(h));
  }
  ForwardResult base = net.forward(x, eps_s, rng, RunMode::kTrain);
  ForwardResult at_ones = net.forward_from_slot(base.trace, Tensor::full({h}, 1.0));
  Tensor g0 = div_grad(spec.divergence, y_onehot, at_ones.output);
  Tensor gh = net.grad_wrt_hidden(at_ones.trace, g0);
  Tensor jac = jacobian_estimate(at_ones.trace.hidden().reshaped({h}), gh);
  AdvBudget budget(spec.delta, h);
  AdvDivergence out;
  out.eps_adv = find_adversarial_mask(jac, eps_s, budget);
  ForwardResult adv = net.forward_from_slot(base.trace, mask_to_tensor(out.eps_adv));
  out.value = div_eval(spec.divergence, y_onehot, adv.output);
  return out;
}

AdvDivergence vadd_divergence(const SplitNetwork& net, const Tensor& x, const Mask& eps_s,
                              const LossSpec& spec, RngStream* rng) {
  std::size_t h = net.slot_width();
  if (eps_s.size() != h) {
    throw ShapeError("vadd_divergence: mask length " + std::to_string(eps_s.size()) +
                     ", slot width " + std::to_string(h));
  }
  ForwardResult base = net.forward(x, eps_s, rng, RunMode::kTrain);
  ForwardResult at_ones = net.forward_from_slot(base.trace, Tensor::full({h}, 1.0));
  Tensor g0 = div_grad(spec.divergence, base.output, at_ones.output);
  Tensor gh = net.grad_wrt_hidden(at_ones.trace, g0);
  Tensor jac = jacobian_estimate(at_ones.trace.hidden().reshaped({h}), gh);
  AdvBudget budget(spec.delta, h);
  AdvDivergence out;
  out.eps_adv = find_adversarial_mask(jac, eps_s, budget);
  ForwardResult adv = net.forward_from_slot(base.trace, mask_to_tensor(out.eps_adv));
  out.value = div_eval(spec.divergence, base.output, adv.output);
  return out;
}

double pi_model_divergence(const SplitNetwork& net, const Tensor& x, RngStream& rng,
                           const LossSpec& spec) {
  bool squeezed = x.rank() == 1;
  std::size_t n = squeezed ? 1 : x.dim(0);
  Tensor m1, m2;
  if (net.has_slot()) {
    m1 = sample_slot_rows(rng, n, net.slot_width(), spec.keep_prob);
    m2 = sample_slot_rows(rng, n, net.slot_width(), spec.keep_prob);
  }
  ForwardResult a = net.forward(x, m1, &rng, RunMode::kTrain);
  ForwardResult b = net.forward(x, m2, &rng, RunMode::kTrain);
  if (squeezed) return div_eval(spec.divergence, a.output, b.output);
  std::vector<double> vals = div_eval_rows(spec.divergence, a.output, b.output);
  return sum_rows(vals, nullptr) / double(n);
}

Tensor fgsm_perturbation(const SplitNetwork& net, const Tensor& x, const Tensor& y_onehot,
                         double delta_input) {
  if (delta_input < 0.0) throw DomainError("fgsm_perturbation: delta must be >= 0");
  ForwardResult r = net.forward(x, nullptr, RunMode::kEval);
  Tensor g = (x.rank() == 1) ? div_grad(Divergence::kCe, y_onehot, r.output)
                             : div_grad_rows(Divergence::kCe, y_onehot, r.output);
  Tensor gin = net.backward(r.trace, g).input;
  Tensor adv = x;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    if (gin[i] > 0.0) {
      adv[i] += delta_input;
    } else if (gin[i] < 0.0) {
      adv[i] -= delta_input;
    }
  }
  return adv;
}

Tensor vat_perturbation(const SplitNetwork& net, const Tensor& x, double delta_input,
                        RngStream& rng, const LossSpec& spec) {
  if (delta_input < 0.0) throw DomainError("vat_perturbation: delta must be >= 0");
  bool squeezed = x.rank() == 1;
  Tensor xr = squeezed ? x.reshaped({1, x.size()}) : x;
  Tensor d = sample_gaussian(rng, xr.shape(), 1.0);
  normalize_rows(d);
  Tensor probe = xr;
  probe.add_scaled(d, spec.vat_xi);
  Tensor target = net.forward(xr, nullptr, RunMode::kEval).output;
  ForwardResult pr = net.forward(probe, nullptr, RunMode::kEval);
  Tensor g = div_grad_rows(spec.divergence, target, pr.output);
  Tensor gin = net.backward(pr.trace, g).input;
  // Zero-gradient rows keep the random probe direction.
  std::size_t c = xr.dim(1);
  for (std::size_t i = 0; i < xr.dim(0); ++i) {
    double* row = gin.data() + i * c;
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += row[j] * row[j];
    if (s == 0.0) std::copy(d.data() + i * c, d.data() + (i + 1) * c, row);
  }
  normalize_rows(gin);
  Tensor adv = xr;
  adv.add_scaled(gin, delta_input);
  if (squeezed) return adv.reshaped({adv.size()});
  return adv;
}

ObjectiveResult assemble_objective(const SplitNetwork& net, const Batch& batch,
                                   const LossSpec& spec, RngStream& rng) {
  if (batch.x.rank() != 2 || batch.y.rank() != 2) {
    throw ShapeError("assemble_objective: batch tensors must be [N, D] and [N, C]");
  }
  std::size_t n = batch.x.dim(0);
  if (batch.y.dim(0) != n || batch.labeled.size() != n) {
    throw ShapeError("assemble_objective: batch row counts disagree");
  }
  if (batch.y.dim(1) != net.output_dim()) {
    throw ShapeError("assemble_objective: target width " + std::to_string(batch.y.dim(1)) +
                     ", network outputs " + std::to_string(net.output_dim()));
  }
  bool nll_mode = spec.supervised == SupervisedLoss::kNll;
  std::size_t n_labeled = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (batch.labeled[i]) ++n_labeled;
    if (!nll_mode) continue;
    std::size_t ones = 0;
    bool clean = true;
    for (std::size_t jx = 0; jx < batch.y.dim(1); ++jx) {
      double v = batch.y.at2(i, jx);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        clean = false;
      }
    }
    if (batch.labeled[i]) {
      if (!clean || ones != 1) {
        throw ConfigError("assemble_objective: labeled row " + std::to_string(i) +
                          " is not one-hot");
      }
    } else if (!clean || ones != 0) {
      throw ConfigError("assemble_objective: unlabeled row " + std::to_string(i) +
                        " must be all-zero");
    }
  }
  if (n_labeled == 0) {
    throw ConfigError("assemble_objective: every objective includes an NLL term; the batch "
                      "has no labeled rows");
  }
  if (objective_needs_mask_search(spec.objective) && !net.has_slot()) {
    throw ConfigError("assemble_objective: " + to_string(spec.objective) +
                      " needs an adversarial dropout slot in the network");
  }
  bool uses_input_adv = spec.objective == Objective::kAt || spec.objective == Objective::kVat ||
                        spec.objective == Objective::kSaddPlusAt ||
                        spec.objective == Objective::kVaddPlusVat;
  if (!nll_mode && uses_input_adv) {
    throw ConfigError("assemble_objective: AT/VAT terms assume NLL supervision");
  }
  Divergence sup_div = nll_mode ? Divergence::kCe : Divergence::kQe;

  // Fixed draw order: slot mask first, then base-pass noise, then any
  // objective-specific sampling.
  Tensor eps_s;
  if (net.has_slot()) eps_s = sample_slot_rows(rng, n, net.slot_width(), spec.keep_prob);
  ForwardResult base = net.forward(batch.x, eps_s, &rng, RunMode::kTrain);
  const Tensor& out1 = base.output;

  ObjectiveResult res;
  std::vector<double> nll_rows = div_eval_rows(sup_div, batch.y, out1);
  res.stats.nll = sum_rows(nll_rows, &batch.labeled) / double(n_labeled);
  Tensor g1 = div_grad_rows(sup_div, batch.y, out1);
  zero_unlabeled_rows(g1, batch.labeled);
  g1 *= 1.0 / double(n_labeled);

  // Deferred second backwards: (trace, output grad) pairs beyond the base one.
  std::vector<std::pair<const ForwardTrace*, Tensor>> extra;
  ForwardResult at_ones, adv, pass2, at_pass, vat_pass;

  auto add_term = [&](const ForwardTrace* tr, Tensor g) { extra.emplace_back(tr, std::move(g)); };

  auto sadd_term = [&](double weight) {
    std::size_t h = net.slot_width();
    at_ones = net.forward_from_slot(base.trace, Tensor::full({n, h}, 1.0));
    Tensor g0 = div_grad_rows(spec.divergence, batch.y, at_ones.output);
    zero_unlabeled_rows(g0, batch.labeled);
    Tensor gh = net.grad_wrt_hidden(at_ones.trace, g0);
    Tensor jac = jacobian_estimate(at_ones.trace.hidden(), gh);
    AdvBudget budget(spec.delta, h);
    RowSearchResult sr = find_adversarial_mask_rows(jac, eps_s, budget, &batch.labeled);
    adv = net.forward_from_slot(base.trace, sr.eps_adv);
    std::vector<double> vals = div_eval_rows(spec.divergence, batch.y, adv.output);
    res.stats.reg1 = sum_rows(vals, &batch.labeled) / double(n_labeled);
    Tensor ga = div_grad_rows(spec.divergence, batch.y, adv.output);
    zero_unlabeled_rows(ga, batch.labeled);
    ga *= weight / double(n_labeled);
    add_term(&adv.trace, std::move(ga));
    res.stats.mean_abs_j = sr.mean_abs_j;
    res.stats.mean_flips = sr.mean_flips;
  };

  auto vadd_term = [&](double weight) {
    std::size_t h = net.slot_width();
    at_ones = net.forward_from_slot(base.trace, Tensor::full({n, h}, 1.0));
    Tensor g0 = div_grad_rows(spec.divergence, out1, at_ones.output);
    Tensor gh = net.grad_wrt_hidden(at_ones.trace, g0);
    Tensor jac = jacobian_estimate(at_ones.trace.hidden(), gh);
    AdvBudget budget(spec.delta, h);
    RowSearchResult sr = find_adversarial_mask_rows(jac, eps_s, budget, nullptr);
    adv = net.forward_from_slot(base.trace, sr.eps_adv);
    std::vector<double> vals = div_eval_rows(spec.divergence, out1, adv.output);
    res.stats.reg1 = sum_rows(vals, nullptr) / double(n);
    Tensor ga = div_grad_rows(spec.divergence, out1, adv.output);
    ga *= weight / double(n);
    add_term(&adv.trace, std::move(ga));
    if (!spec.stop_grad_target) {
      Tensor gt = div_grad_first_rows(spec.divergence, out1, adv.output);
      gt *= weight / double(n);
      g1 += gt;
    }
    res.stats.mean_abs_j = sr.mean_abs_j;
    res.stats.mean_flips = sr.mean_flips;
  };

  auto pi_term = [&](double weight) {
    Tensor eps2;
    if (net.has_slot()) eps2 = sample_slot_rows(rng, n, net.slot_width(), spec.keep_prob);
    pass2 = net.forward(batch.x, eps2, &rng, RunMode::kTrain);
    std::vector<double> vals = div_eval_rows(spec.divergence, out1, pass2.output);
    res.stats.reg1 = sum_rows(vals, nullptr) / double(n);
    Tensor g2 = div_grad_rows(spec.divergence, out1, pass2.output);
    g2 *= weight / double(n);
    add_term(&pass2.trace, std::move(g2));
    if (!spec.stop_grad_target) {
      Tensor gt = div_grad_first_rows(spec.divergence, out1, pass2.output);
      gt *= weight / double(n);
      g1 += gt;
    }
  };

  auto at_term = [&](double weight, double* reg_out) {
    Tensor x_adv = fgsm_perturbation(net, batch.x, batch.y, spec.delta_input);
    at_pass = net.forward(x_adv, nullptr, RunMode::kEval);
    std::vector<double> vals = div_eval_rows(Divergence::kCe, batch.y, at_pass.output);
    *reg_out = sum_rows(vals, &batch.labeled) / double(n_labeled);
    Tensor ga = div_grad_rows(Divergence::kCe, batch.y, at_pass.output);
    zero_unlabeled_rows(ga, batch.labeled);
    ga *= weight / double(n_labeled);
    add_term(&at_pass.trace, std::move(ga));
  };

  auto vat_term = [&](double weight, double* reg_out) {
    Tensor x_adv = vat_perturbation(net, batch.x, spec.delta_input, rng, spec);
    Tensor target = net.forward(batch.x, nullptr, RunMode::kEval).output;
    vat_pass = net.forward(x_adv, nullptr, RunMode::kEval);
    std::vector<double> vals = div_eval_rows(spec.divergence, target, vat_pass.output);
    *reg_out = sum_rows(vals, nullptr) / double(n);
    Tensor gv = div_grad_rows(spec.divergence, target, vat_pass.output);
    gv *= weight / double(n);
    add_term(&vat_pass.trace, std::move(gv));
  };

  switch (spec.objective) {
    case Objective::kPlain:
      break;
    case Objective::kPiModel:
      if (spec.lambda1 > 0.0) pi_term(spec.lambda1);
      break;
    case Objective::kAt:
      if (spec.lambda1 > 0.0) at_term(spec.lambda1, &res.stats.reg1);
      break;
    case Objective::kVat:
      if (spec.lambda1 > 0.0) vat_term(spec.lambda1, &res.stats.reg1);
      break;
    case Objective::kSadd:
      if (spec.lambda1 > 0.0) sadd_term(spec.lambda1);
      break;
    case Objective::kVadd:
      if (spec.lambda1 > 0.0) vadd_term(spec.lambda1);
      break;
    case Objective::kSaddPlusAt:
      if (spec.lambda1 > 0.0) sadd_term(spec.lambda1);
      if (spec.lambda2 > 0.0) at_term(spec.lambda2, &res.stats.reg2);
      break;
    case Objective::kVaddPlusVat:
      if (spec.lambda1 > 0.0) vadd_term(spec.lambda1);
      if (spec.lambda2 > 0.0) vat_term(spec.lambda2, &res.stats.reg2);
      break;
  }

  double w1 = 0.0, w2 = 0.0;
  if (spec.objective != Objective::kPlain) {
    w1 = spec.lambda1;
    if (spec.objective == Objective::kSaddPlusAt || spec.objective == Objective::kVaddPlusVat) {
      w2 = spec.lambda2;
    }
  }
  res.total = res.stats.nll + w1 * res.stats.reg1 + w2 * res.stats.reg2;

  Gradients gr = net.backward(base.trace, g1);
  res.param_grads = std::move(gr.params);
  for (auto& [tr, g] : extra) {
    Gradients more = net.backward(*tr, g);
    for (std::size_t i = 0; i < res.param_grads.size(); ++i) {
      res.param_grads[i] += more.params[i];
    }
  }
  return res;
}

}  // namespace advdrop
