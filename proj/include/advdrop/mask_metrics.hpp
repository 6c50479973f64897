#ifndef ADVDROP_MASK_METRICS_HPP
#define ADVDROP_MASK_METRICS_HPP

#include <cstddef>

#include "advdrop/rng.hpp"

namespace advdrop {

// Count of differing coordinates.
std::size_t hamming(const Mask& a, const Mask& b);

struct MaskPair {
  Mask eps1, eps2;
  std::size_t n_lower = 0, n_upper = 0;  // widths of the adjacent layers
};

// Minimum edge insertions + deletions turning one dropped subnetwork into the
// other: every node whose mask bit differs contributes its full fan
// (n_lower + n_upper) of edges.
std::size_t graph_edit_distance(const MaskPair& pair);

// 1 - |kept1 & kept2| / |kept1 | kept2|, counting units. Undefined when both
// masks drop everything.
double jaccard_distance(const Mask& a, const Mask& b);

}  // namespace advdrop

#endif
