#include "advdrop/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "advdrop/errors.hpp"

namespace advdrop {

namespace {

bool has_params(LayerKind k) { return k == LayerKind::kDense || k == LayerKind::kConv2d; }

bool stochastic(const LayerSpec& s) {
  return s.kind == LayerKind::kDropout || s.kind == LayerKind::kGaussianNoise;
}

Tensor as_rows(const Tensor& x, bool* squeezed) {
  if (x.rank() == 1) {
    *squeezed = true;
    Tensor r({1, x.size()});
    std::copy(x.data(), x.data() + x.size(), r.data());
    return r;
  }
  if (x.rank() != 2) {
    throw ShapeError("forward: want [N, D] or [D] input, got " + shape_to_string(x.shape()));
  }
  *squeezed = false;
  return x;
}

}  // namespace

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  if (in == 0 || out == 0) throw ConfigError("dense: zero width");
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_c, std::size_t in_h, std::size_t in_w,
                            std::size_t out_c, std::size_t kh, std::size_t kw) {
  if (in_c == 0 || out_c == 0 || kh == 0 || kw == 0) throw ConfigError("conv2d: zero size");
  if (kh > in_h || kw > in_w) throw ConfigError("conv2d: kernel larger than input");
  LayerSpec s;
  s.kind = LayerKind::kConv2d;
  s.in_c = in_c;
  s.in_h = in_h;
  s.in_w = in_w;
  s.out_c = out_c;
  s.kh = kh;
  s.kw = kw;
  s.in = in_c * in_h * in_w;
  s.out = out_c * (in_h - kh + 1) * (in_w - kw + 1);
  return s;
}

LayerSpec LayerSpec::maxpool(std::size_t in_c, std::size_t in_h, std::size_t in_w,
                             std::size_t pool) {
  if (pool == 0) throw ConfigError("maxpool: zero window");
  if (in_h % pool != 0 || in_w % pool != 0) {
    throw ConfigError("maxpool: window must divide the input height and width");
  }
  LayerSpec s;
  s.kind = LayerKind::kMaxPool;
  s.in_c = in_c;
  s.in_h = in_h;
  s.in_w = in_w;
  s.pool = pool;
  s.in = in_c * in_h * in_w;
  s.out = in_c * (in_h / pool) * (in_w / pool);
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  return s;
}

LayerSpec LayerSpec::lrelu(double alpha) {
  LayerSpec s;
  s.kind = LayerKind::kLRelu;
  s.alpha = alpha;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::kSoftmax;
  return s;
}

LayerSpec LayerSpec::dropout(double keep_prob) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw DomainError("dropout: keep_prob must be in (0, 1]");
  }
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.keep_prob = keep_prob;
  return s;
}

LayerSpec LayerSpec::gaussian_noise(double sigma) {
  if (sigma < 0.0) throw DomainError("gaussian_noise: sigma must be >= 0");
  LayerSpec s;
  s.kind = LayerKind::kGaussianNoise;
  s.sigma = sigma;
  return s;
}

LayerSpec LayerSpec::adv_dropout_slot() {
  LayerSpec s;
  s.kind = LayerKind::kAdvDropoutSlot;
  return s;
}

const Tensor& ForwardTrace::hidden() const {
  if (slot_act < 0) throw ConfigError("ForwardTrace::hidden: network has no slot");
  return acts[std::size_t(slot_act)];
}

SplitNetwork::SplitNetwork(std::size_t input_dim, std::vector<LayerSpec> layers,
                           std::uint64_t seed)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ == 0) throw ConfigError("SplitNetwork: zero input width");
  if (layers_.empty()) throw ConfigError("SplitNetwork: no layers");
  widths_.reserve(layers_.size() + 1);
  widths_.push_back(input_dim_);
  std::size_t cur = input_dim_;
  RngStream init(seed);
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    LayerSpec& s = layers_[li];
    w_index_.push_back(-1);
    b_index_.push_back(-1);
    switch (s.kind) {
      case LayerKind::kDense: {
        if (s.in != cur) {
          throw ShapeError("layer " + std::to_string(li) + ": dense expects width " +
                           std::to_string(s.in) + ", previous layer produces " +
                           std::to_string(cur));
        }
        double r = std::sqrt(6.0 / double(s.in + s.out));
        Tensor w({s.in, s.out});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = init.uniform(-r, r);
        w_index_[li] = std::ptrdiff_t(params_.size());
        params_.push_back(std::move(w));
        b_index_[li] = std::ptrdiff_t(params_.size());
        params_.push_back(Tensor({s.out}));
        cur = s.out;
        break;
      }
      case LayerKind::kConv2d: {
        if (s.in != cur) {
          throw ShapeError("layer " + std::to_string(li) + ": conv2d expects width " +
                           std::to_string(s.in) + ", previous layer produces " +
                           std::to_string(cur));
        }
        std::size_t fan_in = s.in_c * s.kh * s.kw;
        std::size_t fan_out = s.out_c * s.kh * s.kw;
        double r = std::sqrt(6.0 / double(fan_in + fan_out));
        Tensor w({s.out_c, s.in_c, s.kh, s.kw});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = init.uniform(-r, r);
        w_index_[li] = std::ptrdiff_t(params_.size());
        params_.push_back(std::move(w));
        b_index_[li] = std::ptrdiff_t(params_.size());
        params_.push_back(Tensor({s.out_c}));
        cur = s.out;
        break;
      }
      case LayerKind::kMaxPool:
        if (s.in != cur) {
          throw ShapeError("layer " + std::to_string(li) + ": maxpool expects width " +
                           std::to_string(s.in) + ", previous layer produces " +
                           std::to_string(cur));
        }
        cur = s.out;
        break;
      case LayerKind::kAdvDropoutSlot:
        if (slot_index_ >= 0) {
          throw ConfigError("SplitNetwork: more than one adversarial dropout slot");
        }
        slot_index_ = std::ptrdiff_t(li);
        s.in = s.out = cur;
        break;
      default:
        s.in = s.out = cur;
        break;
    }
    widths_.push_back(cur);
  }
}

std::size_t SplitNetwork::slot_index() const {
  if (slot_index_ < 0) throw ConfigError("network has no adversarial dropout slot");
  return std::size_t(slot_index_);
}

std::size_t SplitNetwork::slot_width() const { return widths_[slot_index()]; }

std::vector<std::string> SplitNetwork::param_names() const {
  std::vector<std::string> names(params_.size());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    if (w_index_[li] >= 0) names[std::size_t(w_index_[li])] = "L" + std::to_string(li) + ".weight";
    if (b_index_[li] >= 0) names[std::size_t(b_index_[li])] = "L" + std::to_string(li) + ".bias";
  }
  return names;
}

Tensor SplitNetwork::layer_forward(std::size_t li, const Tensor& x, RngStream* rng,
                                   RunMode mode, ForwardTrace& trace, const Tensor* slot_rows,
                                   const ForwardTrace* replay) const {
  const LayerSpec& s = layers_[li];
  std::size_t n = x.dim(0);
  switch (s.kind) {
    case LayerKind::kDense: {
      const Tensor& w = params_[std::size_t(w_index_[li])];
      const Tensor& b = params_[std::size_t(b_index_[li])];
      Tensor y = matmul(x, w);
      for (std::size_t i = 0; i < n; ++i) {
        double* row = y.data() + i * s.out;
        for (std::size_t j = 0; j < s.out; ++j) row[j] += b[j];
      }
      return y;
    }
    case LayerKind::kConv2d: {
      const Tensor& w = params_[std::size_t(w_index_[li])];
      const Tensor& b = params_[std::size_t(b_index_[li])];
      std::size_t oh = s.in_h - s.kh + 1, ow = s.in_w - s.kw + 1;
      Tensor y({n, s.out});
      for (std::size_t ni = 0; ni < n; ++ni) {
        const double* xr = x.data() + ni * s.in;
        double* yr = y.data() + ni * s.out;
        for (std::size_t oc = 0; oc < s.out_c; ++oc) {
          for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t c = 0; c < ow; ++c) {
              double acc = b[oc];
              for (std::size_t ic = 0; ic < s.in_c; ++ic) {
                for (std::size_t u = 0; u < s.kh; ++u) {
                  const double* xp = xr + (ic * s.in_h + r + u) * s.in_w + c;
                  const double* wp = w.data() + ((oc * s.in_c + ic) * s.kh + u) * s.kw;
                  for (std::size_t v = 0; v < s.kw; ++v) acc += xp[v] * wp[v];
                }
              }
              yr[(oc * oh + r) * ow + c] = acc;
            }
          }
        }
      }
      return y;
    }
    case LayerKind::kMaxPool: {
      std::size_t oh = s.in_h / s.pool, ow = s.in_w / s.pool;
      Tensor y({n, s.out});
      std::vector<std::size_t>& arg = trace.pool_arg[li];
      arg.assign(n * s.out, 0);
      for (std::size_t ni = 0; ni < n; ++ni) {
        for (std::size_t c = 0; c < s.in_c; ++c) {
          for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t q = 0; q < ow; ++q) {
              std::size_t best = ni * s.in + (c * s.in_h + r * s.pool) * s.in_w + q * s.pool;
              double bv = x[best];
              for (std::size_t u = 0; u < s.pool; ++u) {
                for (std::size_t v = 0; v < s.pool; ++v) {
                  std::size_t idx =
                      ni * s.in + (c * s.in_h + r * s.pool + u) * s.in_w + q * s.pool + v;
                  if (x[idx] > bv) {
                    bv = x[idx];
                    best = idx;
                  }
                }
              }
              std::size_t o = ni * s.out + (c * oh + r) * ow + q;
              y[o] = bv;
              arg[o] = best;
            }
          }
        }
      }
      return y;
    }
    case LayerKind::kRelu: {
      Tensor y = x;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0.0) y[i] = 0.0;
      }
      return y;
    }
    case LayerKind::kLRelu: {
      Tensor y = x;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0.0) y[i] *= s.alpha;
      }
      return y;
    }
    case LayerKind::kSoftmax: {
      std::size_t c = x.dim(1);
      Tensor y(x.shape());
      for (std::size_t i = 0; i < n; ++i) {
        const double* xr = x.data() + i * c;
        double* yr = y.data() + i * c;
        double mx = xr[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, xr[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          yr[j] = std::exp(xr[j] - mx);
          z += yr[j];
        }
        for (std::size_t j = 0; j < c; ++j) yr[j] /= z;
      }
      return y;
    }
    case LayerKind::kDropout: {
      if (mode == RunMode::kEval) return x;
      Tensor mult;
      if (replay) {
        mult = replay->noise[li];
      } else {
        if (!rng) throw ConfigError("forward: train-mode dropout needs an rng");
        mult = Tensor(x.shape());
        double scale = 1.0 / s.keep_prob;
        for (std::size_t i = 0; i < mult.size(); ++i) {
          mult[i] = rng->next_double() < s.keep_prob ? scale : 0.0;
        }
      }
      trace.noise[li] = mult;
      return hadamard(x, mult);
    }
    case LayerKind::kGaussianNoise: {
      if (mode == RunMode::kEval) return x;
      Tensor off;
      if (replay) {
        off = replay->noise[li];
      } else {
        if (!rng) throw ConfigError("forward: train-mode gaussian noise needs an rng");
        off = sample_gaussian(*rng, x.shape(), s.sigma);
      }
      trace.noise[li] = off;
      return x + off;
    }
    case LayerKind::kAdvDropoutSlot: {
      if (slot_rows) {
        return hadamard(x, *slot_rows);
      }
      return x;  // eps = 1
    }
  }
  throw ConfigError("unreachable layer kind");
}

ForwardResult SplitNetwork::run_forward(const Tensor& x, const Tensor* slot_rows,
                                        RngStream* rng, RunMode mode,
                                        const ForwardTrace* replay,
                                        std::size_t replay_from) const {
  ForwardResult out;
  ForwardTrace& tr = out.trace;
  tr.mode = mode;
  tr.revision = revision_;
  tr.slot_act = slot_index_;
  tr.noise.resize(layers_.size());
  tr.pool_arg.resize(layers_.size());
  std::size_t n = x.dim(0);
  if (x.dim(1) != input_dim_) {
    throw ShapeError("forward: input width " + std::to_string(x.dim(1)) + ", network expects " +
                     std::to_string(input_dim_));
  }

  // Normalize the slot mask to [N, H] once.
  Tensor rows;
  const Tensor* rows_ptr = nullptr;
  if (slot_rows && slot_rows->size() > 0) {
    if (slot_index_ < 0) {
      throw ShapeError("forward: slot mask given but the network has no slot");
    }
    std::size_t h = widths_[std::size_t(slot_index_)];
    if (slot_rows->rank() == 1) {
      if (slot_rows->size() != h) {
        throw ShapeError("forward: slot mask length " + std::to_string(slot_rows->size()) +
                         ", slot width " + std::to_string(h));
      }
      rows = Tensor({n, h});
      for (std::size_t i = 0; i < n; ++i) {
        std::copy(slot_rows->data(), slot_rows->data() + h, rows.data() + i * h);
      }
    } else if (slot_rows->rank() == 2 && slot_rows->dim(0) == n && slot_rows->dim(1) == h) {
      rows = *slot_rows;
    } else {
      throw ShapeError("forward: slot mask shape " + shape_to_string(slot_rows->shape()) +
                       ", want [" + std::to_string(n) + ", " + std::to_string(h) + "] or [" +
                       std::to_string(h) + "]");
    }
    rows_ptr = &rows;
    tr.slot_mask = rows;
  } else if (slot_index_ >= 0) {
    // eps = 1 everywhere: record explicitly so backward and replay see it.
    tr.slot_mask = Tensor::full({n, widths_[std::size_t(slot_index_)]}, 1.0);
    rows = tr.slot_mask;
    rows_ptr = &rows;
  }

  tr.acts.reserve(layers_.size() + 1);
  tr.acts.push_back(x);
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    if (replay && li < replay_from) {
      tr.acts.push_back(replay->acts[li + 1]);
      tr.noise[li] = replay->noise[li];
      tr.pool_arg[li] = replay->pool_arg[li];
      continue;
    }
    const ForwardTrace* rep = (replay && li >= replay_from) ? replay : nullptr;
    tr.acts.push_back(layer_forward(li, tr.acts[li], rng, mode, tr,
                                    li == std::size_t(slot_index_) ? rows_ptr : nullptr, rep));
  }
  out.output = tr.acts.back();
  return out;
}

ForwardResult SplitNetwork::forward(const Tensor& x, const Tensor& slot_mask, RngStream* rng,
                                    RunMode mode) const {
  bool squeezed = false;
  Tensor xr = as_rows(x, &squeezed);
  ForwardResult r = run_forward(xr, &slot_mask, rng, mode, nullptr, 0);
  r.trace.squeeze = squeezed;
  if (squeezed) {
    r.output = r.output.reshaped({r.output.size()});
  }
  return r;
}

ForwardResult SplitNetwork::forward(const Tensor& x, const Mask& slot_mask, RngStream* rng,
                                    RunMode mode) const {
  Tensor m({slot_mask.size()});
  for (std::size_t i = 0; i < slot_mask.size(); ++i) m[i] = double(slot_mask[i]);
  return forward(x, m, rng, mode);
}

ForwardResult SplitNetwork::forward(const Tensor& x, RngStream* rng, RunMode mode) const {
  Tensor empty;
  return forward(x, empty, rng, mode);
}

ForwardResult SplitNetwork::forward_from_slot(const ForwardTrace& base,
                                              const Tensor& slot_mask) const {
  if (base.revision != revision_) {
    throw StaleTraceError("forward_from_slot: parameters changed since the trace was recorded");
  }
  std::size_t si = slot_index();
  std::size_t n = base.batch();
  std::size_t h = widths_[si];
  Tensor rows;
  if (slot_mask.rank() == 1 && slot_mask.size() == h) {
    rows = Tensor({n, h});
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(slot_mask.data(), slot_mask.data() + h, rows.data() + i * h);
    }
  } else if (slot_mask.rank() == 2 && slot_mask.dim(0) == n && slot_mask.dim(1) == h) {
    rows = slot_mask;
  } else {
    throw ShapeError("forward_from_slot: slot mask shape " + shape_to_string(slot_mask.shape()) +
                     ", want [" + std::to_string(n) + ", " + std::to_string(h) + "]");
  }
  ForwardResult r = run_forward(base.acts[0], &rows, nullptr, base.mode, &base, si);
  r.trace.squeeze = base.squeeze;
  if (base.squeeze) {
    r.output = r.output.reshaped({r.output.size()});
  }
  return r;
}

Gradients SplitNetwork::backprop(const ForwardTrace& trace, const Tensor& output_grad,
                                 std::size_t stop_layer, bool want_params) const {
  if (trace.revision != revision_) {
    throw StaleTraceError("backward: parameters changed since the trace was recorded");
  }
  if (trace.acts.size() != layers_.size() + 1) {
    throw ShapeError("backward: trace does not match this network");
  }
  const Tensor& out = trace.acts.back();
  Tensor g;
  if (trace.squeeze && output_grad.rank() == 1 && output_grad.size() == out.size()) {
    g = output_grad.reshaped(out.shape());
  } else if (same_shape(output_grad, out)) {
    g = output_grad;
  } else {
    throw ShapeError("backward: output grad shape " + shape_to_string(output_grad.shape()) +
                     ", traced output " + shape_to_string(out.shape()));
  }

  Gradients res;
  if (want_params) {
    res.params.reserve(params_.size());
    for (const Tensor& p : params_) res.params.emplace_back(p.shape());
  }

  for (std::size_t k = layers_.size(); k-- > stop_layer;) {
    const LayerSpec& s = layers_[k];
    const Tensor& x = trace.acts[k];
    const Tensor& y = trace.acts[k + 1];
    std::size_t n = x.dim(0);
    switch (s.kind) {
      case LayerKind::kDense: {
        const Tensor& w = params_[std::size_t(w_index_[k])];
        if (want_params) {
          res.params[std::size_t(w_index_[k])] = matmul_tn(x, g);
          Tensor& db = res.params[std::size_t(b_index_[k])];
          for (std::size_t i = 0; i < n; ++i) {
            const double* gr = g.data() + i * s.out;
            for (std::size_t j = 0; j < s.out; ++j) db[j] += gr[j];
          }
        }
        g = matmul_nt(g, w);
        break;
      }
      case LayerKind::kConv2d: {
        const Tensor& w = params_[std::size_t(w_index_[k])];
        std::size_t oh = s.in_h - s.kh + 1, ow = s.in_w - s.kw + 1;
        Tensor gx({n, s.in});
        Tensor* dw = want_params ? &res.params[std::size_t(w_index_[k])] : nullptr;
        Tensor* db = want_params ? &res.params[std::size_t(b_index_[k])] : nullptr;
        for (std::size_t ni = 0; ni < n; ++ni) {
          const double* xr = x.data() + ni * s.in;
          const double* gr = g.data() + ni * s.out;
          double* gxr = gx.data() + ni * s.in;
          for (std::size_t oc = 0; oc < s.out_c; ++oc) {
            for (std::size_t r = 0; r < oh; ++r) {
              for (std::size_t c = 0; c < ow; ++c) {
                double go = gr[(oc * oh + r) * ow + c];
                if (go == 0.0) continue;
                if (db) (*db)[oc] += go;
                for (std::size_t ic = 0; ic < s.in_c; ++ic) {
                  for (std::size_t u = 0; u < s.kh; ++u) {
                    const double* xp = xr + (ic * s.in_h + r + u) * s.in_w + c;
                    double* gxp = gxr + (ic * s.in_h + r + u) * s.in_w + c;
                    const double* wp = w.data() + ((oc * s.in_c + ic) * s.kh + u) * s.kw;
                    double* dwp = dw ? dw->data() + ((oc * s.in_c + ic) * s.kh + u) * s.kw
                                     : nullptr;
                    for (std::size_t v = 0; v < s.kw; ++v) {
                      gxp[v] += wp[v] * go;
                      if (dwp) dwp[v] += xp[v] * go;
                    }
                  }
                }
              }
            }
          }
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::kMaxPool: {
        const std::vector<std::size_t>& arg = trace.pool_arg[k];
        Tensor gx({n, s.in});
        for (std::size_t o = 0; o < arg.size(); ++o) gx[arg[o]] += g[o];
        g = std::move(gx);
        break;
      }
      case LayerKind::kRelu: {
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (x[i] <= 0.0) gx[i] = 0.0;
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::kLRelu: {
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (x[i] <= 0.0) gx[i] *= s.alpha;
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::kSoftmax: {
        std::size_t c = y.dim(1);
        Tensor gx(y.shape());
        for (std::size_t i = 0; i < n; ++i) {
          const double* yr = y.data() + i * c;
          const double* gr = g.data() + i * c;
          double dot = 0.0;
          for (std::size_t j = 0; j < c; ++j) dot += gr[j] * yr[j];
          double* gxr = gx.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) gxr[j] = yr[j] * (gr[j] - dot);
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::kDropout:
        if (trace.mode == RunMode::kTrain) g = hadamard(g, trace.noise[k]);
        break;
      case LayerKind::kGaussianNoise:
        break;
      case LayerKind::kAdvDropoutSlot:
        if (trace.slot_mask.size() > 0) g = hadamard(g, trace.slot_mask);
        break;
    }
  }
  res.input = std::move(g);
  if (trace.squeeze && stop_layer == 0) {
    res.input = res.input.reshaped({res.input.size()});
  }
  return res;
}

Gradients SplitNetwork::backward(const ForwardTrace& trace, const Tensor& output_grad) const {
  return backprop(trace, output_grad, 0, true);
}

Tensor SplitNetwork::grad_wrt_hidden(const ForwardTrace& trace,
                                     const Tensor& output_grad) const {
  std::size_t si = slot_index();
  Gradients gr = backprop(trace, output_grad, si, false);
  if (trace.squeeze) return gr.input.reshaped({gr.input.size()});
  return gr.input;
}

Tensor SplitNetwork::grad_wrt_hidden(const Tensor& x, const Tensor& slot_mask,
                                     const Tensor& output_grad, RngStream* rng,
                                     RunMode mode) const {
  ForwardResult r = forward(x, slot_mask, rng, mode);
  return grad_wrt_hidden(r.trace, output_grad);
}

void SplitNetwork::adam_step(const std::vector<Tensor>& grads, AdamState& state, double lr,
                             double beta1, double beta2, double eps) {
  if (grads.size() != params_.size()) {
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " grads for " +
                     std::to_string(params_.size()) + " parameters");
  }
  if (state.m.empty()) {
    for (const Tensor& p : params_) {
      state.m.emplace_back(p.shape());
      state.v.emplace_back(p.shape());
    }
    state.t = 0;
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!same_shape(grads[i], params_[i])) {
      throw ShapeError("adam_step: grad " + std::to_string(i) + " shape " +
                       shape_to_string(grads[i].shape()) + ", parameter " +
                       shape_to_string(params_[i].shape()));
    }
  }
  state.t += 1;
  double c1 = 1.0 - std::pow(beta1, double(state.t));
  double c2 = 1.0 - std::pow(beta2, double(state.t));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const Tensor& gt = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * gt[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * gt[j] * gt[j];
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
  }
  ++revision_;
}

void SplitNetwork::save_checkpoint(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "advdrop-checkpoint";
  j["version"] = 1;
  std::vector<std::string> names = param_names();
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    nlohmann::json e;
    e["name"] = names[i];
    e["shape"] = params_[i].shape();
    e["data"] = params_[i].raw();
    arr.push_back(std::move(e));
  }
  j["params"] = std::move(arr);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f << j.dump();
  if (!f) throw IoError("failed writing checkpoint: " + path);
}

void SplitNetwork::load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", "") != "advdrop-checkpoint" || j.value("version", 0) != 1) {
    throw FormatError("checkpoint " + path + ": unknown format or version");
  }
  const auto& arr = j.at("params");
  if (arr.size() != params_.size()) {
    throw FormatError("checkpoint " + path + ": " + std::to_string(arr.size()) +
                      " tensors, network has " + std::to_string(params_.size()));
  }
  std::vector<std::string> names = param_names();
  std::vector<Tensor> fresh;
  fresh.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& e = arr[i];
    if (e.at("name").get<std::string>() != names[i]) {
      throw FormatError("checkpoint " + path + ": tensor " + std::to_string(i) + " is '" +
                        e.at("name").get<std::string>() + "', expected '" + names[i] + "'");
    }
    Shape shp = e.at("shape").get<Shape>();
    if (shp != params_[i].shape()) {
      throw FormatError("checkpoint " + path + ": shape mismatch for " + names[i]);
    }
    std::vector<double> data = e.at("data").get<std::vector<double>>();
    Tensor t(shp);
    if (data.size() != t.size()) {
      throw FormatError("checkpoint " + path + ": data length mismatch for " + names[i]);
    }
    std::copy(data.begin(), data.end(), t.data());
    fresh.push_back(std::move(t));
  }
  params_ = std::move(fresh);
  ++revision_;
}

}  // namespace advdrop
