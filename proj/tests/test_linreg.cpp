#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <vector>

#include "advdrop/linreg.hpp"
#include "advdrop/rng.hpp"
#include "advdrop/tensor.hpp"

using namespace advdrop;

namespace {

LinRegProblem single_point() {
  // w=[1,-2], x=[3,1], y=0: residual = 0 - (3 - 2) = -1.
  LinRegProblem p;
  p.x = Tensor::matrix(1, 2, {3, 1});
  p.y = Tensor::vector({0});
  p.w = Tensor::vector({1, -2});
  return p;
}

LinRegProblem random_problem(RngStream& g, std::size_t n, std::size_t d) {
  LinRegProblem p;
  p.x = Tensor({n, d});
  p.y = Tensor({n});
  p.w = Tensor({d});
  for (auto& v : p.x.raw()) v = g.uniform(-2, 2);
  for (auto& v : p.y.raw()) v = g.uniform(-2, 2);
  for (auto& v : p.w.raw()) v = g.uniform(-1.5, 1.5);
  return p;
}

}  // namespace

TEST_CASE("squared loss: zero case and pinned example") {
  LinRegProblem p;
  p.x = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  p.y = Tensor::vector({0, 0});
  p.w = Tensor::vector({0, 0, 0});
  CHECK(linreg_loss(p) == 0.0);

  LinRegProblem q = single_point();
  CHECK(linreg_loss(q) == doctest::Approx(1.0));
}

TEST_CASE("squared loss matches a naive per-point loop") {
  RngStream g(101);
  for (int rep = 0; rep < 50; ++rep) {
    LinRegProblem p = random_problem(g, 1 + rep % 7, 1 + rep % 5);
    double ref = 0;
    std::size_t n = p.x.dim(0), d = p.x.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0;
      for (std::size_t j = 0; j < d; ++j) dot += p.x.at2(i, j) * p.w[j];
      ref += (p.y[i] - dot) * (p.y[i] - dot);
    }
    CHECK(std::fabs(linreg_loss(p) - ref) < 1e-12);
  }
}

TEST_CASE("per-point input gradient on the pinned example") {
  LinRegProblem p = single_point();
  Tensor g = linreg_input_grad(p, 0);
  // -2 * residual * w = -2 * (-1) * [1,-2] = [2,-4]
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(-4.0));
}

TEST_CASE("adversarial input-noise decomposition: delta = 0 collapses to the loss") {
  RngStream g(55);
  LinRegProblem p = random_problem(g, 4, 3);
  p.delta = 0.0;
  Decomposition d = at_decomposition(p);
  CHECK(d.lhs == doctest::Approx(linreg_loss(p)).epsilon(1e-12));
  CHECK(d.rhs == doctest::Approx(linreg_loss(p)).epsilon(1e-12));
}

TEST_CASE("adversarial input-noise decomposition holds on random instances") {
  RngStream g(56);
  for (int rep = 0; rep < 50; ++rep) {
    LinRegProblem p = random_problem(g, 5, 3);
    p.delta = 0.1;
    Decomposition d = at_decomposition(p);
    CHECK(std::fabs(d.lhs - d.rhs) < 1e-9);
  }
}

TEST_CASE("adversarial input-noise decomposition: pinned single point") {
  LinRegProblem p = single_point();
  p.delta = 0.1;
  // grad = [2,-4], x_adv = x + 0.1*sign(grad) = [3.1, 0.9],
  // perturbed residual = 0 - (3.1 - 1.8) = -1.3, lhs = 1.69.
  Decomposition d = at_decomposition(p);
  CHECK(d.lhs == doctest::Approx(1.69));
  CHECK(d.rhs == doctest::Approx(1.69));
}

TEST_CASE("closed-form drop mask on the pinned example") {
  LinRegProblem p = single_point();
  p.k = 1;
  // scores x (.) grad = [6, -4]; only the negative score is dropped.
  Mask m = add_closed_form_mask(p, 0);
  CHECK(m == Mask{1, 0});
}

TEST_CASE("closed-form drop mask: k = 0 and all-positive scores never drop") {
  LinRegProblem p = single_point();
  p.k = 0;
  CHECK(add_closed_form_mask(p, 0) == Mask{1, 1});

  // w=[1,2], x=[3,1], y=10: residual positive, grad = -2 r w, scores
  // x.grad = [-6r, -4r] with r>0... flip to make all scores positive:
  LinRegProblem q;
  q.x = Tensor::matrix(1, 2, {3, 1});
  q.y = Tensor::vector({10});
  q.w = Tensor::vector({1, 2});
  q.k = 2;
  // residual = 10 - 5 = 5, grad = -2*5*[1,2] = [-10,-20], scores = [-30,-20]:
  // both negative -> both dropped is NOT optimal-free; instead verify against
  // an instance with genuinely positive scores: y below the prediction.
  q.y = Tensor::vector({-10});
  // residual = -15, grad = 30*[1,2] = [30,60], scores = [90,60] > 0.
  CHECK(add_closed_form_mask(q, 0) == Mask{1, 1});
}

TEST_CASE("feature-drop decomposition: k = 0 collapses to the loss") {
  RngStream g(57);
  LinRegProblem p = random_problem(g, 3, 4);
  p.k = 0;
  Decomposition d = add_decomposition(p);
  CHECK(d.lhs == doctest::Approx(linreg_loss(p)).epsilon(1e-12));
  CHECK(d.rhs == doctest::Approx(linreg_loss(p)).epsilon(1e-12));
}

TEST_CASE("feature-drop decomposition holds on random instances") {
  RngStream g(58);
  for (int rep = 0; rep < 50; ++rep) {
    LinRegProblem p = random_problem(g, 5, 4);
    p.k = 2;
    Decomposition d = add_decomposition(p);
    CHECK(std::fabs(d.lhs - d.rhs) < 1e-9);
  }
}

TEST_CASE("feature-drop decomposition: pinned single point") {
  LinRegProblem p = single_point();
  p.k = 1;
  // mask [1,0]: residual = 0 - 3 = -3, lhs = 9 = loss 1 + linear term 4 +
  // quadratic term 4.
  Decomposition d = add_decomposition(p);
  CHECK(d.lhs == doctest::Approx(9.0));
  CHECK(d.rhs == doctest::Approx(9.0));

  double base = linreg_loss(p);
  CHECK(base == doctest::Approx(1.0));
  // linear penalty |x_j grad_j| over dropped features = |1 * -4| = 4;
  // quadratic = ((1-eps).x.w)^2 = (1*(-2))^2 = 4.
  CHECK(d.rhs - base == doctest::Approx(8.0));
}

TEST_CASE("closed-form mask attains the brute-force optimum") {
  // The drop rule maximizes the exact masked loss when the residual dominates
  // every reachable prediction change; generate targets beyond that reach.
  RngStream g(59);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t d = 1 + rep % 6;
    LinRegProblem p = random_problem(g, 1, d);
    double reach = 0;
    for (std::size_t j = 0; j < d; ++j) reach += std::fabs(p.x.at2(0, j) * p.w[j]);
    double dot = 0;
    for (std::size_t j = 0; j < d; ++j) dot += p.x.at2(0, j) * p.w[j];
    double sign = (rep % 2 == 0) ? 1.0 : -1.0;
    p.y[0] = dot + sign * (reach + g.uniform(0.1, 1.0));
    p.k = rep % (d + 1);
    Mask m = add_closed_form_mask(p, 0);
    REQUIRE(m.size() == d);
    std::size_t drops = 0;
    for (auto b : m) drops += b == 0;
    CHECK(drops <= p.k);

    auto masked_loss = [&](unsigned bits) {
      double dot = 0;
      for (std::size_t j = 0; j < d; ++j)
        if (bits & (1u << j)) dot += p.x.at2(0, j) * p.w[j];
      double r = p.y[0] - dot;
      return r * r;
    };
    unsigned kept_bits = 0;
    for (std::size_t j = 0; j < d; ++j)
      if (m[j]) kept_bits |= 1u << j;
    double got = masked_loss(kept_bits);

    double best = -1;
    for (unsigned bits = 0; bits < (1u << d); ++bits) {
      std::size_t down = 0;
      for (std::size_t j = 0; j < d; ++j)
        if (!(bits & (1u << j))) ++down;
      if (down > p.k) continue;
      best = std::max(best, masked_loss(bits));
    }
    CHECK(got == doctest::Approx(best).epsilon(1e-9));
  }
}
