#pragma once

// Parameterized layers, weight initialization and the Adam optimizer.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sig2sig/autodiff.hpp"
#include "sig2sig/rng.hpp"

namespace sig2sig::nn {

enum class ParamRole { conv_weight, bias, norm_scale, norm_shift };

// Named parameters in insertion order. Iteration order is deterministic and
// is the order used by initialization, optimization and checkpoints.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    ParamRole role;
    ad::Tensor value;
  };

  void add(std::string name, ParamRole role, ad::Tensor value);

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string& name) const { return index_.contains(name); }
  std::size_t index_of(const std::string& name) const;

  const Entry& entry(std::size_t i) const { return entries_.at(i); }
  const ad::Tensor& operator[](const std::string& name) const;
  // Replaces a parameter's values; the shape must not change.
  void assign(std::size_t i, std::vector<double> values);
  std::span<double> mutable_values(std::size_t i);

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::size_t scalar_count() const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

using Gradients = std::vector<std::vector<double>>;

// A view of a ParamStore's values for one forward pass. When bound to a tape
// every parameter is a tracked leaf; otherwise parameters act as constants.
class BoundParams {
 public:
  BoundParams(const ParamStore& store, ad::Tape* tape);

  const ad::Tensor& operator[](const std::string& name) const;
  // Gradients aligned with the store's order. Requires a tape and backward().
  Gradients gradients() const;

 private:
  const ParamStore* store_;
  ad::Tape* tape_;
  std::vector<ad::Tensor> tensors_;
};

// Conv weights ~ Normal(0, 0.02) drawn in store order; biases 0; norm scale 1,
// norm shift 0.
void init_weights(ParamStore& store, SeededRng& rng, double weight_std = 0.02);

inline constexpr double kNormEps = 1e-5;

// Per-channel normalization of x [C, L] with biased (1/L) variance:
// (x - mean_c) / sqrt(var_c + eps) * scale_c + shift_c. Requires L >= 2.
ad::Tensor instance_norm(const ad::Tensor& x, const ad::Tensor& scale, const ad::Tensor& shift,
                         double eps = kNormEps);

enum class LayerKind { conv_down, conv_up, instance_norm, activation };

struct LayerSpec {
  LayerKind kind = LayerKind::activation;
  std::string name;  // parameter name prefix
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;  // also the channel count of instance_norm
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  ad::Activation act;
  bool bias = true;  // convs only; redundant in front of instance_norm

  // Output length for an input of length `len`; throws ShapeError on invalid geometry.
  std::size_t out_len(std::size_t len) const;
};

LayerSpec conv_down(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                    std::size_t stride, std::size_t pad, bool bias = true);
LayerSpec conv_up(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                  std::size_t stride, std::size_t pad, bool bias = true);
LayerSpec norm(std::string name, std::size_t channels);
LayerSpec act(ad::Activation a);

// Adds the layer's parameters (zero-filled) to the store.
void declare_params(const LayerSpec& layer, ParamStore& store);

ad::Tensor apply(const LayerSpec& layer, const BoundParams& params, const ad::Tensor& x);

// Applies the layers in order; an empty sequence is the identity.
ad::Tensor forward(std::span<const LayerSpec> layers, const BoundParams& params, ad::Tensor x);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  Gradients m;
  Gradients v;

  static AdamState for_store(const ParamStore& store, const AdamConfig& config);
};

// One bias-corrected Adam update of every parameter in the store.
void adam_step(ParamStore& store, const Gradients& grads, AdamState& state);

}  // namespace sig2sig::nn
