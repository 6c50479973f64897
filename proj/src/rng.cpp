#include "advdrop/rng.hpp"

#include <cmath>

#include "advdrop/errors.hpp"

namespace advdrop {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix(seed_ + counter_ * kGolden);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0,1] keeps the log finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = next_double();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

RngStream RngStream::fork(std::uint64_t tag) const {
  return RngStream(mix(seed_ ^ mix(tag + kGolden)));
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(next_u64() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

Mask sample_bernoulli_mask(RngStream& rng, std::size_t dim, double keep_prob) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
    throw DomainError("sample_bernoulli_mask: keep_prob " + std::to_string(keep_prob) +
                      " outside [0,1]");
  }
  Mask mask(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    mask[i] = rng.next_double() < keep_prob ? 1 : 0;
  }
  return mask;
}

Tensor sample_gaussian(RngStream& rng, Shape shape, double sigma) {
  if (sigma < 0.0) {
    throw DomainError("sample_gaussian: negative sigma " + std::to_string(sigma));
  }
  Tensor out(std::move(shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigma * rng.normal();
  return out;
}

}  // namespace advdrop
