#include "sig2sig/commands.hpp"

#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "binary_io.hpp"
#include "sig2sig/checkpoint.hpp"
#include "sig2sig/config.hpp"
#include "sig2sig/cyclegan.hpp"
#include "sig2sig/error.hpp"
#include "sig2sig/fft.hpp"
#include "sig2sig/svg.hpp"

namespace sig2sig::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& file, const std::string& text) {
  io::write_file(file, io::Bytes(text.begin(), text.end()));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError(FormatError::Kind::io, "cannot create directory " + dir.string());
}

struct GenDataArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
};

struct TrainArgs {
  std::string data, out, config;
  std::size_t epochs = 100;
  double lambda = 10.0, beta1 = 0.5, lr = 2e-4;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  bool quiet = false;
};

struct TranslateArgs {
  std::string checkpoint, input, direction, out;
};

struct EvalArgs {
  std::string checkpoint, data, report;
};

struct PlotArgs {
  std::vector<std::string> signals;
  std::string out, title;
  bool spectrum = false;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  config::RunConfig cfg;
  if (!a.config.empty()) cfg.apply_file(a.config);
  cfg.apply_overrides(a.overrides);
  cfg.data.seed = a.seed;
  const auto ds = dataset::generate_dataset(cfg.data);
  dataset::save_dataset(ds, a.out);
  out << fmt::format("wrote {}: {} train pairs, {} test pairs, N={}, seed={}\n", a.out,
                     ds.train.size(), ds.test.size(), cfg.data.window_length, cfg.data.seed);
  return kOk;
}

int train(const TrainArgs& a, const CLI::App& cmd, std::ostream& out) {
  const auto data = dataset::load_dataset(a.data);
  config::RunConfig cfg;
  cfg.model.length = data.config.window_length;
  if (!a.config.empty()) cfg.apply_file(a.config);
  cfg.apply_overrides(a.overrides);
  // Explicit flags take precedence over the config file.
  if (cmd.count("--epochs")) cfg.train.epochs = a.epochs;
  if (cmd.count("--lambda")) cfg.train.lambda_cycle = a.lambda;
  if (cmd.count("--beta1")) cfg.train.beta1 = a.beta1;
  if (cmd.count("--lr")) cfg.train.lr = a.lr;
  cfg.train.seed = a.seed;
  if (cfg.model.length != data.config.window_length) {
    throw ConfigError(fmt::format("model length {} does not match dataset window length {}",
                                  cfg.model.length, data.config.window_length));
  }
  cfg.train.validate();

  auto model = cyclegan::CycleGanModel::create(cfg.model, cfg.train.adam(), cfg.train.seed);
  const auto logs = cyclegan::train(model, data, cfg.train, [&](const cyclegan::EpochLog& l) {
    if (a.quiet) return;
    out << fmt::format("epoch {:3d}  G {:.4f}  F {:.4f}  D_X {:.4f}  D_Y {:.4f}  cycle {:.4f}  ({:.1f}s)\n",
                       l.epoch, l.adv_g, l.adv_f, l.d_x, l.d_y, l.cycle(), l.seconds);
    out.flush();
  });

  ensure_dir(a.out);
  checkpoint::write(checkpoint::snapshot(model, cfg.train), fs::path(a.out) / "model.ckpt");
  write_text(fs::path(a.out) / "losses.csv", cyclegan::losses_csv(logs));
  out << fmt::format("wrote {}/model.ckpt and {}/losses.csv ({} epochs)\n", a.out, a.out,
                     logs.size());
  return kOk;
}

int translate(const TranslateArgs& a, std::ostream& out) {
  const auto direction = eval::parse_direction(a.direction);
  const auto model = checkpoint::restore(checkpoint::read(a.checkpoint));
  const auto signals = dataset::read_signals(a.input);
  const auto fn = cyclegan::translator(model);
  std::vector<std::vector<double>> result;
  for (const auto& s : signals) {
    if (s.size() != model.config.length) {
      throw ShapeError(fmt::format("{}: signal length {} does not match model length {}",
                                   a.input, s.size(), model.config.length));
    }
    result.push_back(fn(s, direction));
  }
  dataset::write_signals(a.out, result);
  out << fmt::format("wrote {}: {} signals translated {}\n", a.out, result.size(),
                     eval::to_string(direction));
  return kOk;
}

int evaluate(const EvalArgs& a, std::ostream& out) {
  const auto model = checkpoint::restore(checkpoint::read(a.checkpoint));
  const auto data = dataset::load_dataset(a.data);
  if (data.config.window_length != model.config.length) {
    throw ShapeError(fmt::format("dataset window length {} does not match model length {}",
                                 data.config.window_length, model.config.length));
  }
  const auto reports = evaluate_dataset(cyclegan::translator(model), data);
  write_text(a.report, eval::to_csv(reports));
  for (const auto& r : reports) {
    out << fmt::format("{}: r_time {:.3f}..{:.3f}  mae_time {:.3f}..{:.3f}  r_freq {:.3f}..{:.3f}  "
                       "mae_freq {:.3f}..{:.3f}\n",
                       eval::to_string(r.direction), r.r_time.min, r.r_time.max, r.mae_time.min,
                       r.mae_time.max, r.r_freq.min, r.r_freq.max, r.mae_freq.min,
                       r.mae_freq.max);
  }
  return kOk;
}

int plot(const PlotArgs& a, std::ostream& out) {
  auto load = [&](const std::string& file) {
    auto s = dataset::read_signals(file);
    if (a.spectrum) {
      for (auto& sig : s) sig = fft::magnitude_spectrum(sig).magnitudes;
    }
    return s;
  };
  const auto primary = load(a.signals.at(0));
  std::optional<svg::Series> overlay;
  if (a.signals.size() == 2) {
    overlay = load(a.signals[1]);
    const bool same_len = overlay->empty() || primary.empty() ||
                          overlay->front().size() == primary.front().size();
    if (overlay->size() != primary.size() || !same_len) {
      throw ShapeError(fmt::format("{} and {} have different geometry", a.signals[0],
                                   a.signals[1]));
    }
  }
  std::string title = a.title;
  if (title.empty()) {
    title = fmt::format("{}{}", a.spectrum ? "FFT magnitude: " : "", a.signals[0]);
    if (overlay) title += " vs " + a.signals[1];
  }
  write_text(a.out, svg::plot_grid(primary, overlay, title));
  const auto layout = svg::grid_for(primary.size());
  out << fmt::format("wrote {}: {} panels in a {}x{} grid\n", a.out, primary.size(), layout.rows,
                     layout.cols);
  return kOk;
}

}  // namespace

std::vector<eval::MetricReport> evaluate_dataset(const eval::Translator& translate,
                                                 const dataset::SignalDataset& data) {
  return {eval::evaluate(translate, data.test, eval::Direction::x2y),
          eval::evaluate(translate, data.test, eval::Direction::y2x)};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unpaired 1D signal-to-signal translation with a CycleGAN"};
  app.name("sig2sig");
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Synthesize the paired signal dataset");
  gen_cmd->add_option("--config", gen.config, "key = value config file")->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Randomness seed (required)")->required();
  gen_cmd->add_option("--set", gen.overrides, "Override a config key (key=value)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the CycleGAN on a dataset directory");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "Output directory for model.ckpt and losses.csv")
      ->required();
  train_cmd->add_option("--config", tr.config, "key = value config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda, "Cycle-consistency weight")->capture_default_str();
  train_cmd->add_option("--beta1", tr.beta1, "Adam beta1")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Initialization and shuffling seed (required)")
      ->required();
  train_cmd->add_option("--set", tr.overrides, "Override a config key (key=value)");
  train_cmd->add_flag("--quiet", tr.quiet, "Do not print per-epoch losses");

  TranslateArgs tl;
  auto* translate_cmd = app.add_subcommand("translate", "Translate every signal of a .sig file");
  translate_cmd->add_option("--checkpoint", tl.checkpoint, "Model checkpoint")->required();
  translate_cmd->add_option("--input", tl.input, "Input .sig file")->required();
  translate_cmd->add_option("--direction", tl.direction, "x2y or y2x")
      ->required()
      ->check(CLI::IsMember({"x2y", "y2x"}));
  translate_cmd->add_option("--out", tl.out, "Output .sig file")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score test-pair translations in both directions");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--report", ev.report, "Output CSV report")->required();

  PlotArgs pl;
  auto* plot_cmd = app.add_subcommand("plot", "Render signals (or their spectra) as SVG");
  plot_cmd->add_option("--signals", pl.signals, "One or two .sig files")
      ->required()
      ->expected(1, 2);
  plot_cmd->add_option("--out", pl.out, "Output SVG file")->required();
  plot_cmd->add_option("--title", pl.title, "Figure title");
  plot_cmd->add_flag("--spectrum", pl.spectrum, "Plot FFT magnitudes instead of samples");

  std::vector<std::string> argv_store{"sig2sig"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (gen_cmd->parsed()) return gen_data(gen, out);
    if (train_cmd->parsed()) return train(tr, *train_cmd, out);
    if (translate_cmd->parsed()) return translate(tl, out);
    if (eval_cmd->parsed()) return evaluate(ev, out);
    if (plot_cmd->parsed()) return plot(pl, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace sig2sig::cli
