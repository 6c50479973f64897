#include "advdrop/mask_metrics.hpp"

#include <string>

#include "advdrop/errors.hpp"

namespace advdrop {

namespace {

void check_lengths(const Mask& a, const Mask& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": mask lengths " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 1 || b[i] > 1) {
      throw DomainError(std::string(what) + ": mask entries must be 0 or 1");
    }
  }
}

}  // namespace

std::size_t hamming(const Mask& a, const Mask& b) {
  check_lengths(a, b, "hamming");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

std::size_t graph_edit_distance(const MaskPair& pair) {
  if (pair.n_lower == 0 || pair.n_upper == 0) {
    throw DomainError("graph_edit_distance: layer widths must be positive");
  }
  return (pair.n_lower + pair.n_upper) * hamming(pair.eps1, pair.eps2);
}

double jaccard_distance(const Mask& a, const Mask& b) {
  check_lengths(a, b, "jaccard_distance");
  std::size_t uni = 0, inter = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    uni += a[i] | b[i];
    inter += a[i] & b[i];
  }
  if (uni == 0) {
    throw DomainError("jaccard_distance: both masks drop every unit, distance undefined");
  }
  return double(uni - inter) / double(uni);
}

}  // namespace advdrop
