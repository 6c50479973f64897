#ifndef ADVDROP_NETWORK_HPP
#define ADVDROP_NETWORK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advdrop/rng.hpp"
#include "advdrop/tensor.hpp"

namespace advdrop {

// Feed-forward stacks over flat [N, D] batches. Conv/pool layers carry their
// own channel geometry and read the flat vector as C x H x W, row-major.
enum class LayerKind {
  kDense,
  kConv2d,    // valid padding, stride 1
  kMaxPool,   // square window, stride == window
  kRelu,
  kLRelu,
  kSoftmax,
  kDropout,        // inverted: kept units scaled by 1/keep_prob, eval = identity
  kGaussianNoise,  // additive N(0, sigma^2), eval = identity
  kAdvDropoutSlot  // h <- h * eps, raw mask, no rescale; default eps = 1
};

struct LayerSpec {
  LayerKind kind;
  std::size_t in = 0, out = 0;                  // dense
  std::size_t in_c = 0, in_h = 0, in_w = 0;     // conv/pool input geometry
  std::size_t out_c = 0, kh = 0, kw = 0;        // conv kernel
  std::size_t pool = 0;                          // pool window and stride
  double alpha = 0.1;       // lrelu slope
  double keep_prob = 1.0;   // dropout
  double sigma = 0.0;       // gaussian noise

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv2d(std::size_t in_c, std::size_t in_h, std::size_t in_w,
                          std::size_t out_c, std::size_t kh, std::size_t kw);
  static LayerSpec maxpool(std::size_t in_c, std::size_t in_h, std::size_t in_w,
                           std::size_t pool);
  static LayerSpec relu();
  static LayerSpec lrelu(double alpha = 0.1);
  static LayerSpec softmax();
  static LayerSpec dropout(double keep_prob);
  static LayerSpec gaussian_noise(double sigma);
  static LayerSpec adv_dropout_slot();
};

enum class RunMode { kTrain, kEval };

// Everything backward() needs to replay one forward pass exactly: per-layer
// activations (acts[0] = input, acts[i+1] = output of layer i), the sampled
// noise multipliers / offsets, max-pool argmax indices, and the slot mask
// actually applied ([N, H]). `revision` pins the parameter store state.
struct ForwardTrace {
  std::vector<Tensor> acts;
  std::vector<Tensor> noise;               // dropout: multiplier; gaussian: offset; else empty
  std::vector<std::vector<std::size_t>> pool_arg;
  Tensor slot_mask;                        // [N, H], empty if the net has no slot
  RunMode mode = RunMode::kTrain;
  std::uint64_t revision = 0;
  std::ptrdiff_t slot_act = -1;            // acts index of h(x), -1 if no slot
  bool squeeze = false;                    // input arrived rank-1

  const Tensor& output() const { return acts.back(); }
  // h(x): input to the adversarial dropout slot, [N, H].
  const Tensor& hidden() const;
  std::size_t batch() const { return acts.front().dim(0); }
};

struct ForwardResult {
  Tensor output;
  ForwardTrace trace;
};

struct Gradients {
  std::vector<Tensor> params;
  Tensor input;
};

struct AdamState {
  std::vector<Tensor> m, v;
  std::size_t t = 0;
};

class SplitNetwork {
 public:
  // Validates that consecutive shapes compose and initializes dense/conv
  // weights with seeded uniform Glorot ranges, biases zero.
  SplitNetwork(std::size_t input_dim, std::vector<LayerSpec> layers, std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return widths_.back(); }
  bool has_slot() const { return slot_index_ >= 0; }
  std::size_t slot_index() const;   // layer index of the AdD slot
  std::size_t slot_width() const;   // H
  const std::vector<LayerSpec>& layers() const { return layers_; }

  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  std::vector<std::string> param_names() const;
  // Any in-place mutation of params() must go through this so traces staleness-check.
  void bump_revision() { ++revision_; }
  std::uint64_t revision() const { return revision_; }

  // x: [N, D] or rank-1 [D] (treated as one row; output squeezed back).
  // slot_mask: empty tensor = all-ones; [H] broadcast over rows; or [N, H].
  // rng may be null when the pass draws no noise (eval mode, or no stochastic
  // layers). Train mode applies dropout/gaussian layers; eval mode skips them
  // and uses eps = 1 at the slot unless a mask is given explicitly.
  ForwardResult forward(const Tensor& x, const Tensor& slot_mask, RngStream* rng,
                        RunMode mode = RunMode::kTrain) const;
  ForwardResult forward(const Tensor& x, const Mask& slot_mask, RngStream* rng,
                        RunMode mode = RunMode::kTrain) const;
  // Plain pass, slot at eps = 1.
  ForwardResult forward(const Tensor& x, RngStream* rng, RunMode mode = RunMode::kTrain) const;

  // Re-runs the upper part with a different slot mask, reusing the trace's
  // under-part activations and replaying its upper-part noise draws. The
  // result differs from `base` only through the mask.
  ForwardResult forward_from_slot(const ForwardTrace& base, const Tensor& slot_mask) const;

  // Exact reverse-mode gradients of the traced computation. output_grad shape
  // must match the traced output ([N, C], or rank-1 for a squeezed trace).
  Gradients backward(const ForwardTrace& trace, const Tensor& output_grad) const;

  // d(out . output_grad)/d h(x): backpropagates through the upper part only
  // (slot included), leaving parameters untouched. Returns [N, H].
  Tensor grad_wrt_hidden(const ForwardTrace& trace, const Tensor& output_grad) const;
  // Convenience: fresh pass at x with the given slot mask, then as above.
  Tensor grad_wrt_hidden(const Tensor& x, const Tensor& slot_mask, const Tensor& output_grad,
                         RngStream* rng, RunMode mode = RunMode::kTrain) const;

  void adam_step(const std::vector<Tensor>& grads, AdamState& state, double lr,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // JSON checkpoint: {"format":"advdrop-checkpoint","version":1,
  //   "params":[{"name":..., "shape":[...], "data":[...]}]}.
  // Doubles round-trip exactly. Load validates names and shapes.
  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  ForwardResult run_forward(const Tensor& x, const Tensor* slot_rows, RngStream* rng,
                            RunMode mode, const ForwardTrace* replay,
                            std::size_t replay_from) const;
  Gradients backprop(const ForwardTrace& trace, const Tensor& output_grad,
                     std::size_t stop_layer, bool want_params) const;
  Tensor layer_forward(std::size_t li, const Tensor& x, RngStream* rng, RunMode mode,
                       ForwardTrace& trace, const Tensor* slot_rows,
                       const ForwardTrace* replay) const;

  std::size_t input_dim_;
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> widths_;          // widths_[i] = input width of layer i; back() = output
  std::vector<Tensor> params_;
  std::vector<std::ptrdiff_t> w_index_, b_index_;  // per layer, -1 if none
  std::ptrdiff_t slot_index_ = -1;
  std::uint64_t revision_ = 0;
};

}  // namespace advdrop

#endif
