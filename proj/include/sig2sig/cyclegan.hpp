#pragma once

// Unpaired CycleGAN training: least-squares adversarial losses, L1
// cycle-consistency, and the per-epoch loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sig2sig/autodiff.hpp"
#include "sig2sig/dataset.hpp"
#include "sig2sig/eval.hpp"
#include "sig2sig/keyvalue.hpp"
#include "sig2sig/models.hpp"
#include "sig2sig/nn.hpp"
#include "sig2sig/rng.hpp"

namespace sig2sig::cyclegan {

// Geometry shared by all four networks.
struct ModelConfig {
  std::size_t length = 128;
  std::size_t base_channels = 32;
  std::size_t kernel = 16;
  std::size_t stride = 2;
  std::size_t head_kernel = 3;

  models::GeneratorArch generator() const;
  models::DiscriminatorArch discriminator() const;

  kv::Pairs to_pairs() const;
  bool set(const std::string& key, const std::string& value);
};

struct TrainConfig {
  double lambda_cycle = 10.0;
  double beta1 = 0.5;
  std::size_t epochs = 100;
  std::size_t batch_size = 1;
  double lr = 2e-4;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double identity_weight = 0.0;
  std::size_t pool_size = 0;  // history of generated fakes; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
  nn::AdamConfig adam() const { return {lr, beta1, beta2, adam_eps}; }

  kv::Pairs to_pairs() const;
  bool set(const std::string& key, const std::string& value);
};

struct CycleGanModel {
  ModelConfig config;
  models::Generator g;  // X -> Y
  models::Generator f;  // Y -> X
  models::Discriminator dx;
  models::Discriminator dy;
  nn::AdamState opt_g, opt_f, opt_dx, opt_dy;

  // Initializes G, F, D_X, D_Y in that order from one stream seeded with `seed`.
  static CycleGanModel create(const ModelConfig& config, const nn::AdamConfig& adam,
                              std::uint64_t seed);

  // Every parameter under a network prefix: "G.", "F.", "DX.", "DY.".
  std::vector<std::pair<std::string, const nn::ParamStore*>> stores() const;
  std::vector<std::pair<std::string, nn::ParamStore*>> stores();
};

// LSGAN objectives on patch-score maps of equal shape:
//   loss_d = 1/2 mean((d_real - 1)^2) + 1/2 mean(d_fake^2)
//   loss_g = mean((d_fake - 1)^2)
ad::Tensor lsgan_discriminator_loss(const ad::Tensor& d_real, const ad::Tensor& d_fake);
ad::Tensor lsgan_generator_loss(const ad::Tensor& d_fake);

struct LsganLosses {
  ad::Tensor loss_d;
  ad::Tensor loss_g;
};
LsganLosses lsgan_losses(const ad::Tensor& d_real, const ad::Tensor& d_fake);

// mean|rec_x - x| + mean|rec_y - y| (unscaled by lambda).
ad::Tensor cycle_loss(const ad::Tensor& x, const ad::Tensor& rec_x, const ad::Tensor& y,
                      const ad::Tensor& rec_y);

// CycleGAN's history of generated samples: until full, every fake is stored
// and returned; afterwards a coin flip either returns the new fake or swaps
// it for a random stored one.
class FakePool {
 public:
  FakePool(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {}
  ad::Tensor query(const ad::Tensor& fake);

 private:
  std::size_t capacity_;
  SeededRng rng_;
  std::vector<ad::Tensor> items_;
};

struct ReplayPools {
  FakePool x;
  FakePool y;
};

struct StepLosses {
  double adv_g = 0.0;        // mean((D_Y(G(x)) - 1)^2)
  double adv_f = 0.0;        // mean((D_X(F(y)) - 1)^2)
  double cycle_x = 0.0;      // mean|F(G(x)) - x|
  double cycle_y = 0.0;      // mean|G(F(y)) - y|
  double cycle_term = 0.0;   // lambda * (cycle_x + cycle_y) as added to the objective
  double identity = 0.0;     // mean|G(y) - y| + mean|F(x) - x| (0 when disabled)
  double generator_total = 0.0;
  double d_x = 0.0;
  double d_y = 0.0;
};

struct GeneratorStep {
  StepLosses losses;  // d_x, d_y left at 0
  ad::Tensor fake_x;  // detached F(y)
  ad::Tensor fake_y;  // detached G(x)
};

// One Adam update of G and F; discriminators are read but not modified.
GeneratorStep generator_step(CycleGanModel& model, const ad::Tensor& x, const ad::Tensor& y,
                             const TrainConfig& cfg);

// One Adam update of `d` on real vs fake; `term` names the loss in errors.
double discriminator_step(models::Discriminator& d, nn::AdamState& opt, const ad::Tensor& real,
                          const ad::Tensor& fake, const char* term);

// One unpaired update: (1) G and F jointly on the adversarial generator terms
// plus lambda * cycle (plus identity if enabled); (2) D_X on real x vs the
// detached F(y); (3) D_Y on real y vs the detached G(x). Throws NumericError
// naming the first non-finite term.
StepLosses train_step(CycleGanModel& model, const ad::Tensor& x, const ad::Tensor& y,
                      const TrainConfig& cfg, ReplayPools* pools = nullptr);

struct EpochLog {
  std::size_t epoch = 0;
  double adv_g = 0.0;
  double adv_f = 0.0;
  double d_x = 0.0;
  double d_y = 0.0;
  double cycle_x = 0.0;
  double cycle_y = 0.0;
  double seconds = 0.0;

  double cycle() const { return cycle_x + cycle_y; }
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Each epoch visits every X sample once in a seeded shuffled order, paired
// with an independently shuffled Y order. Deterministic given cfg.seed.
std::vector<EpochLog> train(CycleGanModel& model, const dataset::SignalDataset& data,
                            const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// losses.csv: `epoch,adv_g,adv_f,d_x,d_y,cycle_x,cycle_y`. Wall-clock time is
// left out so the file is reproducible.
std::string losses_csv(const std::vector<EpochLog>& logs);

// G for x2y, F for y2x.
eval::Translator translator(const CycleGanModel& model);

}  // namespace sig2sig::cyclegan
