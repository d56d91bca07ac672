// Times the serial reference kernels against the parallel ones on the conv
// geometries of the default generator and discriminator.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sig2sig/kernels.hpp"
#include "sig2sig/rng.hpp"

using namespace sig2sig;
using kernels::ConvGeometry;

namespace {

std::vector<double> noise(std::size_t n, SeededRng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.gauss(0.0, 1.0);
  return v;
}

double best_ms(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conv kernel benchmark"};
  int reps = 20;
  int threads = kernels::max_threads();
  app.add_option("--reps", reps, "Repetitions per measurement (best is reported)");
  app.add_option("--threads", threads, "Threads for the parallel kernels");
  CLI11_PARSE(app, argc, argv);
  kernels::set_threads(threads);

  // in_ch, out_ch, kernel, stride, pad, in_len. The ^T rows are transposed convs,
  // described by the forward conv they are the adjoint of.
  const std::vector<std::pair<std::string, ConvGeometry>> layers{
      {"down1", {1, 32, 16, 2, 7, 128}},  {"down2", {32, 64, 16, 2, 7, 64}},
      {"down3", {64, 128, 16, 2, 7, 32}}, {"up3^T", {64, 128, 16, 2, 7, 32}},
      {"up2^T", {32, 128, 16, 2, 7, 64}}, {"up1^T", {32, 64, 16, 2, 7, 128}},
      {"head", {32, 1, 3, 1, 1, 128}},
  };

  fmt::print("threads: {}, reps: {} (best of)\n", threads, reps);
  fmt::print("{:<7} {:<9} {:>10} {:>10} {:>8}  {}\n", "layer", "kernel", "ref ms", "fast ms",
             "speedup", "max |diff|");
  SeededRng rng(1);
  double total_ref = 0.0, total_fast = 0.0;
  for (const auto& [name, g] : layers) {
    const auto x = noise(g.in_ch * g.in_len, rng);
    const auto w = noise(g.weight_size(), rng);
    const auto b = noise(g.out_ch, rng);
    const auto gout = noise(g.out_ch * g.out_len(), rng);
    std::vector<double> out_ref(gout.size()), out_fast(gout.size());
    std::vector<double> gx_ref(x.size()), gx_fast(x.size());
    std::vector<double> gw_ref(w.size()), gw_fast(w.size()), gb_ref(b.size()), gb_fast(b.size());

    struct Case {
      const char* label;
      std::function<void()> ref, fast;
      const std::vector<double>* a;
      const std::vector<double>* z;
    };
    const std::vector<Case> cases{
        {"forward", [&] { kernels::reference::correlate(g, x, w, b, out_ref); },
         [&] { kernels::correlate(g, x, w, b, out_fast); }, &out_ref, &out_fast},
        {"adjoint", [&] { kernels::reference::correlate_adjoint(g, gout, w, gx_ref); },
         [&] { kernels::correlate_adjoint(g, gout, w, gx_fast); }, &gx_ref, &gx_fast},
        {"wgrad", [&] { kernels::reference::correlate_weight_grad(g, gout, x, gw_ref, gb_ref); },
         [&] { kernels::correlate_weight_grad(g, gout, x, gw_fast, gb_fast); }, &gw_ref, &gw_fast},
    };
    for (const auto& c : cases) {
      const double ref = best_ms(reps, c.ref);
      const double fast = best_ms(reps, c.fast);
      double diff = 0.0;
      for (std::size_t i = 0; i < c.a->size(); ++i)
        diff = std::max(diff, std::abs((*c.a)[i] - (*c.z)[i]));
      total_ref += ref;
      total_fast += fast;
      fmt::print("{:<7} {:<9} {:>10.3f} {:>10.3f} {:>7.2f}x  {:.1e}\n", name, c.label, ref, fast,
                 ref / fast, diff);
    }
  }
  fmt::print("{:<17} {:>10.3f} {:>10.3f} {:>7.2f}x\n", "total", total_ref, total_fast,
             total_ref / total_fast);
  return 0;
}
