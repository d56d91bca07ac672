#include "sig2sig/nn.hpp"

#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "sig2sig/error.hpp"
#include "sig2sig/kernels.hpp"

namespace sig2sig::nn {

using ad::Tensor;

void ParamStore::add(std::string name, ParamRole role, Tensor value) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), role, ad::detach(value)});
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::operator[](const std::string& name) const {
  return entries_[index_of(name)].value;
}

void ParamStore::assign(std::size_t i, std::vector<double> values) {
  auto& e = entries_.at(i);
  e.value = Tensor(e.value.shape(), std::move(values));
}

std::span<double> ParamStore::mutable_values(std::size_t i) {
  return entries_.at(i).value.mutable_data();
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

BoundParams::BoundParams(const ParamStore& store, ad::Tape* tape) : store_(&store), tape_(tape) {
  tensors_.reserve(store.size());
  for (const auto& e : store) tensors_.push_back(tape ? tape->watch(e.value) : e.value);
}

const Tensor& BoundParams::operator[](const std::string& name) const {
  return tensors_[store_->index_of(name)];
}

Gradients BoundParams::gradients() const {
  if (!tape_) throw Error("parameters were not bound to a tape");
  Gradients out;
  out.reserve(tensors_.size());
  for (const auto& t : tensors_) {
    auto g = tape_->grad(t);
    out.emplace_back(g.begin(), g.end());
  }
  return out;
}

void init_weights(ParamStore& store, SeededRng& rng, double weight_std) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto values = store.mutable_values(i);
    switch (store.entry(i).role) {
      case ParamRole::conv_weight:
        for (auto& v : values) v = rng.gauss(0.0, weight_std);
        break;
      case ParamRole::bias:
      case ParamRole::norm_shift:
        for (auto& v : values) v = 0.0;
        break;
      case ParamRole::norm_scale:
        for (auto& v : values) v = 1.0;
        break;
    }
  }
}

Tensor instance_norm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps) {
  if (x.rank() != 2) {
    throw ShapeError("instance_norm input must be [C, L], got " + ad::shape_string(x.shape()));
  }
  const std::size_t channels = x.dim(0), len = x.dim(1);
  if (len < 2) throw ShapeError(fmt::format("instance_norm needs length >= 2, got {}", len));
  if (scale.shape() != ad::Shape{channels} || shift.shape() != ad::Shape{channels}) {
    throw ShapeError(fmt::format("instance_norm: scale/shift must be [{}]", channels));
  }

  std::vector<double> xhat(x.size()), inv_std(channels), out(x.size());
  const double n = static_cast<double>(len);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* row = x.data().data() + c * len;
    double mu = 0.0;
    for (std::size_t j = 0; j < len; ++j) mu += row[j];
    mu /= n;
    double var = 0.0;
    for (std::size_t j = 0; j < len; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= n;
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < len; ++j) {
      const double h = (row[j] - mu) * inv_std[c];
      xhat[c * len + j] = h;
      out[c * len + j] = h * scale[c] + shift[c];
    }
  }
  Tensor result(x.shape(), std::move(out));

  ad::Tape* tape = nullptr;
  for (const Tensor* t : {&x, &scale, &shift}) {
    if (!t->tracked()) continue;
    if (tape && tape != t->tape()) throw Error("op inputs are recorded on different tapes");
    tape = t->tape();
  }
  if (!tape) return result;

  const bool tx = x.tracked(), ts = scale.tracked(), tsh = shift.tracked();
  const auto ix = x.node(), is = scale.node(), ish = shift.node();
  return tape->record(
      std::move(result),
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std),
       gamma = scale.values()](std::span<const double> g, ad::Tape& t) {
        for (std::size_t c = 0; c < channels; ++c) {
          const double* gy = g.data() + c * len;
          const double* h = xhat.data() + c * len;
          double sum_g = 0.0, sum_gh = 0.0;
          for (std::size_t j = 0; j < len; ++j) {
            sum_g += gy[j];
            sum_gh += gy[j] * h[j];
          }
          if (ts) t.grad_buffer(is)[c] += sum_gh;
          if (tsh) t.grad_buffer(ish)[c] += sum_g;
          if (tx) {
            // d/dx of normalized output, through both the mean and the variance.
            auto gx = t.grad_buffer(ix);
            const double k = gamma[c] * inv_std[c];
            const double mean_g = sum_g / n, mean_gh = sum_gh / n;
            for (std::size_t j = 0; j < len; ++j) {
              gx[c * len + j] += k * (gy[j] - mean_g - h[j] * mean_gh);
            }
          }
        }
      });
}

std::size_t LayerSpec::out_len(std::size_t len) const {
  switch (kind) {
    case LayerKind::conv_down: {
      kernels::ConvGeometry g{in_ch, out_ch, kernel, stride, pad, len};
      kernels::validate(g);
      return g.out_len();
    }
    case LayerKind::conv_up: {
      const long long n = static_cast<long long>((len - 1) * stride + kernel) -
                          2 * static_cast<long long>(pad);
      if (len < 1 || n < 1) {
        throw ShapeError(fmt::format("{}: transposed conv output would be empty", name));
      }
      return static_cast<std::size_t>(n);
    }
    case LayerKind::instance_norm:
      if (len < 2) throw ShapeError(fmt::format("{}: instance norm needs length >= 2", name));
      return len;
    case LayerKind::activation:
      return len;
  }
  return len;
}

LayerSpec conv_down(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                    std::size_t stride, std::size_t pad, bool bias) {
  return {LayerKind::conv_down, std::move(name), in_ch, out_ch, kernel, stride, pad, {}, bias};
}

LayerSpec conv_up(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                  std::size_t stride, std::size_t pad, bool bias) {
  return {LayerKind::conv_up, std::move(name), in_ch, out_ch, kernel, stride, pad, {}, bias};
}

LayerSpec norm(std::string name, std::size_t channels) {
  return {LayerKind::instance_norm, std::move(name), channels, channels, 0, 1, 0, {}};
}

LayerSpec act(ad::Activation a) {
  LayerSpec spec;
  spec.kind = LayerKind::activation;
  spec.act = a;
  return spec;
}

void declare_params(const LayerSpec& layer, ParamStore& store) {
  switch (layer.kind) {
    case LayerKind::conv_down:
      store.add(layer.name + ".weight", ParamRole::conv_weight,
                Tensor::zeros({layer.out_ch, layer.in_ch, layer.kernel}));
      if (layer.bias) store.add(layer.name + ".bias", ParamRole::bias, Tensor::zeros({layer.out_ch}));
      break;
    case LayerKind::conv_up:
      store.add(layer.name + ".weight", ParamRole::conv_weight,
                Tensor::zeros({layer.in_ch, layer.out_ch, layer.kernel}));
      if (layer.bias) store.add(layer.name + ".bias", ParamRole::bias, Tensor::zeros({layer.out_ch}));
      break;
    case LayerKind::instance_norm:
      store.add(layer.name + ".scale", ParamRole::norm_scale, Tensor::zeros({layer.out_ch}));
      store.add(layer.name + ".shift", ParamRole::norm_shift, Tensor::zeros({layer.out_ch}));
      break;
    case LayerKind::activation:
      break;
  }
}

Tensor apply(const LayerSpec& layer, const BoundParams& params, const Tensor& x) {
  const auto bias = [&] {
    return layer.bias ? params[layer.name + ".bias"] : Tensor::zeros({layer.out_ch});
  };
  switch (layer.kind) {
    case LayerKind::conv_down:
      return ad::conv1d(x, params[layer.name + ".weight"], bias(), layer.stride, layer.pad);
    case LayerKind::conv_up:
      return ad::conv_transpose1d(x, params[layer.name + ".weight"], bias(), layer.stride,
                                  layer.pad);
    case LayerKind::instance_norm:
      return instance_norm(x, params[layer.name + ".scale"], params[layer.name + ".shift"]);
    case LayerKind::activation:
      return ad::activation(layer.act, x);
  }
  return x;
}

Tensor forward(std::span<const LayerSpec> layers, const BoundParams& params, Tensor x) {
  for (const auto& layer : layers) x = apply(layer, params, x);
  return x;
}

AdamState AdamState::for_store(const ParamStore& store, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  for (const auto& e : store) {
    state.m.emplace_back(e.value.size(), 0.0);
    state.v.emplace_back(e.value.size(), 0.0);
  }
  return state;
}

void adam_step(ParamStore& store, const Gradients& grads, AdamState& state) {
  if (grads.size() != store.size() || state.m.size() != store.size() ||
      state.v.size() != store.size()) {
    throw ShapeError(fmt::format("adam_step: {} parameters, {} gradients, {} moment buffers",
                                 store.size(), grads.size(), state.m.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    const std::size_t n = store.entry(i).value.size();
    if (grads[i].size() != n || state.m[i].size() != n || state.v[i].size() != n) {
      throw ShapeError(fmt::format("adam_step: gradient for '{}' has {} values, expected {}",
                                   store.entry(i).name, grads[i].size(), n));
    }
  }

  ++state.step;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(cfg.beta1, t);
  const double correct2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto theta = store.mutable_values(i);
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correct1;
      const double v_hat = v[j] / correct2;
      theta[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace sig2sig::nn
