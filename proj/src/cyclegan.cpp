#include "sig2sig/cyclegan.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "sig2sig/error.hpp"

namespace sig2sig::cyclegan {

using ad::Tensor;

namespace {

constexpr std::uint64_t kShuffleSalt = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kPoolSaltX = 0x8CB92BA72F3D8DD7ULL;
constexpr std::uint64_t kPoolSaltY = 0xABC98388FB8FAC03ULL;

double checked(const Tensor& t, const char* term) {
  const double v = t.item();
  if (!std::isfinite(v)) throw NumericError(fmt::format("non-finite {} loss ({})", term, v));
  return v;
}

Tensor signal_tensor(const std::vector<double>& s) { return Tensor({1, s.size()}, s); }

void shuffle(std::vector<std::size_t>& order, SeededRng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

models::GeneratorArch ModelConfig::generator() const {
  return {length, base_channels, kernel, stride, head_kernel};
}

models::DiscriminatorArch ModelConfig::discriminator() const {
  return {length, base_channels, kernel, stride, head_kernel};
}

kv::Pairs ModelConfig::to_pairs() const {
  return {{"length", std::to_string(length)},
          {"base_channels", std::to_string(base_channels)},
          {"kernel", std::to_string(kernel)},
          {"stride", std::to_string(stride)},
          {"head_kernel", std::to_string(head_kernel)}};
}

bool ModelConfig::set(const std::string& key, const std::string& value) {
  if (key == "length") length = kv::to_size(key, value);
  else if (key == "base_channels") base_channels = kv::to_size(key, value);
  else if (key == "kernel") kernel = kv::to_size(key, value);
  else if (key == "stride") stride = kv::to_size(key, value);
  else if (key == "head_kernel") head_kernel = kv::to_size(key, value);
  else return false;
  return true;
}

void TrainConfig::validate() const {
  if (!(lambda_cycle > 0.0) || !std::isfinite(lambda_cycle)) {
    throw ConfigError(fmt::format("lambda must be > 0, got {}", lambda_cycle));
  }
  if (batch_size != 1) {
    throw ConfigError(fmt::format("batch_size {} unsupported; only 1 is implemented", batch_size));
  }
  if (!(lr > 0.0)) throw ConfigError(fmt::format("lr must be > 0, got {}", lr));
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError(fmt::format("Adam betas must lie in [0, 1), got {} and {}", beta1, beta2));
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (!(identity_weight >= 0.0)) throw ConfigError("identity_weight must be >= 0");
}

kv::Pairs TrainConfig::to_pairs() const {
  return {{"lambda", kv::from_double(lambda_cycle)},
          {"beta1", kv::from_double(beta1)},
          {"epochs", std::to_string(epochs)},
          {"batch_size", std::to_string(batch_size)},
          {"lr", kv::from_double(lr)},
          {"beta2", kv::from_double(beta2)},
          {"adam_eps", kv::from_double(adam_eps)},
          {"identity_weight", kv::from_double(identity_weight)},
          {"pool_size", std::to_string(pool_size)},
          {"seed", std::to_string(seed)}};
}

bool TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "lambda") lambda_cycle = kv::to_double(key, value);
  else if (key == "beta1") beta1 = kv::to_double(key, value);
  else if (key == "epochs") epochs = kv::to_size(key, value);
  else if (key == "batch_size") batch_size = kv::to_size(key, value);
  else if (key == "lr") lr = kv::to_double(key, value);
  else if (key == "beta2") beta2 = kv::to_double(key, value);
  else if (key == "adam_eps") adam_eps = kv::to_double(key, value);
  else if (key == "identity_weight") identity_weight = kv::to_double(key, value);
  else if (key == "pool_size") pool_size = kv::to_size(key, value);
  else if (key == "seed") seed = kv::to_u64(key, value);
  else return false;
  return true;
}

// ---------------------------------------------------------------------------
// Model

CycleGanModel CycleGanModel::create(const ModelConfig& config, const nn::AdamConfig& adam,
                                    std::uint64_t seed) {
  SeededRng rng(seed);
  CycleGanModel m{config,
                  models::build_generator(config.generator(), rng),
                  models::build_generator(config.generator(), rng),
                  models::build_discriminator(config.discriminator(), rng),
                  models::build_discriminator(config.discriminator(), rng),
                  {}, {}, {}, {}};
  m.opt_g = nn::AdamState::for_store(m.g.params, adam);
  m.opt_f = nn::AdamState::for_store(m.f.params, adam);
  m.opt_dx = nn::AdamState::for_store(m.dx.params, adam);
  m.opt_dy = nn::AdamState::for_store(m.dy.params, adam);
  return m;
}

std::vector<std::pair<std::string, const nn::ParamStore*>> CycleGanModel::stores() const {
  return {{"G.", &g.params}, {"F.", &f.params}, {"DX.", &dx.params}, {"DY.", &dy.params}};
}

std::vector<std::pair<std::string, nn::ParamStore*>> CycleGanModel::stores() {
  return {{"G.", &g.params}, {"F.", &f.params}, {"DX.", &dx.params}, {"DY.", &dy.params}};
}

// ---------------------------------------------------------------------------
// Losses

Tensor lsgan_discriminator_loss(const Tensor& d_real, const Tensor& d_fake) {
  if (d_real.shape() != d_fake.shape()) {
    throw ShapeError(fmt::format("lsgan: patch maps differ {} vs {}",
                                 ad::shape_string(d_real.shape()),
                                 ad::shape_string(d_fake.shape())));
  }
  return ad::mean(ad::square(ad::sub(d_real, 1.0))) * 0.5 + ad::mean(ad::square(d_fake)) * 0.5;
}

Tensor lsgan_generator_loss(const Tensor& d_fake) {
  return ad::mean(ad::square(ad::sub(d_fake, 1.0)));
}

LsganLosses lsgan_losses(const Tensor& d_real, const Tensor& d_fake) {
  return {lsgan_discriminator_loss(d_real, d_fake), lsgan_generator_loss(d_fake)};
}

Tensor cycle_loss(const Tensor& x, const Tensor& rec_x, const Tensor& y, const Tensor& rec_y) {
  return ad::mean(ad::abs(rec_x - x)) + ad::mean(ad::abs(rec_y - y));
}

Tensor FakePool::query(const Tensor& fake) {
  Tensor detached = ad::detach(fake);
  if (capacity_ == 0) return detached;
  if (items_.size() < capacity_) {
    items_.push_back(detached);
    return detached;
  }
  if (rng_.uniform() < 0.5) return detached;
  const std::size_t slot = rng_.below(items_.size());
  Tensor old = std::move(items_[slot]);
  items_[slot] = std::move(detached);
  return old;
}

// ---------------------------------------------------------------------------
// Training

GeneratorStep generator_step(CycleGanModel& model, const Tensor& x, const Tensor& y,
                             const TrainConfig& cfg) {
  // Discriminators take part as constants so their parameters receive no
  // gradient and stay untouched.
  GeneratorStep step;
  StepLosses& out = step.losses;
  ad::Tape tape;
  const nn::BoundParams g(model.g.params, &tape), f(model.f.params, &tape);
  const nn::BoundParams dx(model.dx.params, nullptr), dy(model.dy.params, nullptr);

  const Tensor gx = model.g.forward(g, x);
  const Tensor rec_x = model.f.forward(f, gx);
  const Tensor fy = model.f.forward(f, y);
  const Tensor rec_y = model.g.forward(g, fy);

  const Tensor adv_g = lsgan_generator_loss(model.dy.forward(dy, gx));
  const Tensor adv_f = lsgan_generator_loss(model.dx.forward(dx, fy));
  const Tensor cyc_x = ad::mean(ad::abs(rec_x - x));
  const Tensor cyc_y = ad::mean(ad::abs(rec_y - y));
  const Tensor cycle_term = (cyc_x + cyc_y) * cfg.lambda_cycle;
  Tensor total = adv_g + adv_f + cycle_term;

  out.adv_g = checked(adv_g, "G adversarial");
  out.adv_f = checked(adv_f, "F adversarial");
  out.cycle_x = checked(cyc_x, "X cycle");
  out.cycle_y = checked(cyc_y, "Y cycle");
  out.cycle_term = cycle_term.item();
  if (cfg.identity_weight > 0.0) {
    const Tensor idt = ad::mean(ad::abs(model.g.forward(g, y) - y)) +
                       ad::mean(ad::abs(model.f.forward(f, x) - x));
    out.identity = checked(idt, "identity");
    total = total + idt * cfg.identity_weight;
  }
  out.generator_total = checked(total, "generator total");

  tape.backward(total);
  const auto grads_g = g.gradients();
  const auto grads_f = f.gradients();
  nn::adam_step(model.g.params, grads_g, model.opt_g);
  nn::adam_step(model.f.params, grads_f, model.opt_f);

  step.fake_x = ad::detach(fy);
  step.fake_y = ad::detach(gx);
  return step;
}

double discriminator_step(models::Discriminator& d, nn::AdamState& opt, const Tensor& real,
                          const Tensor& fake, const char* term) {
  ad::Tape tape;
  const nn::BoundParams bound(d.params, &tape);
  const Tensor loss =
      lsgan_discriminator_loss(d.forward(bound, real), d.forward(bound, ad::detach(fake)));
  const double value = checked(loss, term);
  tape.backward(loss);
  nn::adam_step(d.params, bound.gradients(), opt);
  return value;
}

StepLosses train_step(CycleGanModel& model, const Tensor& x, const Tensor& y,
                      const TrainConfig& cfg, ReplayPools* pools) {
  GeneratorStep step = generator_step(model, x, y, cfg);
  if (pools) {
    step.fake_x = pools->x.query(step.fake_x);
    step.fake_y = pools->y.query(step.fake_y);
  }
  StepLosses out = step.losses;
  out.d_x = discriminator_step(model.dx, model.opt_dx, x, step.fake_x, "D_X");
  out.d_y = discriminator_step(model.dy, model.opt_dy, y, step.fake_y, "D_Y");
  return out;
}

std::vector<EpochLog> train(CycleGanModel& model, const dataset::SignalDataset& data,
                            const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto xs = data.train_x();
  const auto ys = data.train_y();
  if (xs.empty() || ys.empty()) throw ConfigError("training needs at least one sample per domain");

  std::vector<Tensor> x_tensors, y_tensors;
  for (const auto& s : xs) x_tensors.push_back(signal_tensor(s));
  for (const auto& s : ys) y_tensors.push_back(signal_tensor(s));

  SeededRng order_rng(cfg.seed ^ kShuffleSalt);
  std::optional<ReplayPools> pools;
  if (cfg.pool_size > 0) {
    pools.emplace(ReplayPools{FakePool(cfg.pool_size, cfg.seed ^ kPoolSaltX),
                              FakePool(cfg.pool_size, cfg.seed ^ kPoolSaltY)});
  }

  std::vector<EpochLog> logs;
  std::vector<std::size_t> order_x(xs.size()), order_y(ys.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order_x.begin(), order_x.end(), 0);
    std::iota(order_y.begin(), order_y.end(), 0);
    shuffle(order_x, order_rng);
    shuffle(order_y, order_rng);

    EpochLog log;
    log.epoch = epoch + 1;
    for (std::size_t i = 0; i < order_x.size(); ++i) {
      StepLosses s;
      try {
        s = train_step(model, x_tensors[order_x[i]], y_tensors[order_y[i % order_y.size()]], cfg,
                       pools ? &*pools : nullptr);
      } catch (const NumericError& e) {
        throw NumericError(fmt::format("epoch {}, step {}: {}", epoch + 1, i + 1, e.what()));
      }
      log.adv_g += s.adv_g;
      log.adv_f += s.adv_f;
      log.d_x += s.d_x;
      log.d_y += s.d_y;
      log.cycle_x += s.cycle_x;
      log.cycle_y += s.cycle_y;
    }
    const double n = static_cast<double>(order_x.size());
    for (double* v : {&log.adv_g, &log.adv_f, &log.d_x, &log.d_y, &log.cycle_x, &log.cycle_y}) {
      *v /= n;
    }
    log.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return logs;
}

std::string losses_csv(const std::vector<EpochLog>& logs) {
  std::string out = "epoch,adv_g,adv_f,d_x,d_y,cycle_x,cycle_y\n";
  for (const auto& l : logs) {
    out += fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", l.epoch, l.adv_g,
                       l.adv_f, l.d_x, l.d_y, l.cycle_x, l.cycle_y);
  }
  return out;
}

eval::Translator translator(const CycleGanModel& model) {
  return [&model](std::span<const double> source, eval::Direction dir) {
    const Tensor x({1, source.size()}, std::vector<double>(source.begin(), source.end()));
    const auto& net = dir == eval::Direction::x2y ? model.g : model.f;
    return models::generate(net, x).values();
  };
}

}  // namespace sig2sig::cyclegan
