#ifndef ADVDROP_RNG_HPP
#define ADVDROP_RNG_HPP

#include <cstdint>
#include <vector>

#include "advdrop/tensor.hpp"

namespace advdrop {

using Mask = std::vector<std::uint8_t>;

// Counter-based random stream: output k is a pure function of (seed, k),
// so a stream never observes what other streams do. Identical seed and
// call sequence give bit-identical output.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), counter_(0) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  double next_double();  // uniform [0,1), 53 bits
  double uniform(double lo, double hi);
  double normal();  // N(0,1), Box-Muller (second draw cached)

  // Independent child stream; tag selects the substream.
  RngStream fork(std::uint64_t tag) const;

  // Fisher-Yates over [0, n) indices.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Binary mask of length dim, each entry 1 with probability keep_prob.
Mask sample_bernoulli_mask(RngStream& rng, std::size_t dim, double keep_prob);

// Tensor of i.i.d. N(0, sigma^2) entries.
Tensor sample_gaussian(RngStream& rng, Shape shape, double sigma);

}  // namespace advdrop

#endif
