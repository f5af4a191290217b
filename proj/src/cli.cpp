#include "tscal/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "tscal/calibration.hpp"
#include "tscal/interchange.hpp"
#include "tscal/metrics.hpp"
#include "tscal/noise.hpp"
#include "tscal/phantom.hpp"
#include "tscal/reliability_svg.hpp"
#include "tscal/sweep.hpp"

namespace fs = std::filesystem;

namespace tscal {

namespace {

// Usage errors detected after parsing (bad flag combinations, out-of-range
// parameters).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::size_t ece_bins = kDefaultEceBins;
};

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InterchangeError("cannot create directory " + dir.string());
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
  std::string out_dir;
  std::size_t n_per_class = 50;
  std::size_t side = 64;
};

int cmd_gen_data(const GenDataOptions& o, const GlobalOptions& g, std::ostream& out) {
  PhantomConfig cfg;
  cfg.n_per_class = o.n_per_class;
  cfg.side = o.side;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir(o.out_dir);
  ensure_directory(dir);
  const PhantomSet set = generate_phantoms(cfg, g.seed);
  DatasetManifest manifest;
  std::size_t per_class[2] = {0, 0};
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%05zu.pgm", i);
    write_pgm(set.images[i], dir / name);
    manifest.entries.push_back({name, set.labels[i]});
    ++per_class[set.labels[i]];
  }
  write_manifest(manifest, dir / "manifest.csv");
  out << "wrote " << set.images.size() << " images (" << per_class[0] << " class 0, " << per_class[1]
      << " class 1) to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// inject-noise

struct NoiseFlags {
  std::string kind;
  std::optional<double> mu, sigma, salt_prob, pepper_prob, scale;
};

NoiseSpec noise_from_flags(const NoiseFlags& f) {
  auto forbid = [&](const std::optional<double>& v, const char* flag) {
    if (v) throw UsageError(std::string("--") + flag + " does not apply to --noise " + f.kind);
  };
  auto need = [&](const std::optional<double>& v, const char* flag) {
    if (!v) throw UsageError("--noise " + f.kind + " requires --" + flag);
    return *v;
  };
  try {
    if (f.kind == "gaussian") {
      forbid(f.salt_prob, "salt-prob");
      forbid(f.pepper_prob, "pepper-prob");
      forbid(f.scale, "scale");
      return NoiseSpec(GaussianNoise{f.mu.value_or(0.0), need(f.sigma, "sigma")});
    }
    if (f.kind == "salt-pepper") {
      forbid(f.mu, "mu");
      forbid(f.sigma, "sigma");
      forbid(f.scale, "scale");
      if (!f.salt_prob && !f.pepper_prob) throw UsageError("--noise salt-pepper requires --salt-prob or --pepper-prob");
      return NoiseSpec(SaltPepperNoise{f.salt_prob.value_or(0.0), f.pepper_prob.value_or(0.0)});
    }
    if (f.kind == "poisson" || f.kind == "speckle" || f.kind == "uniform") {
      forbid(f.mu, "mu");
      forbid(f.sigma, "sigma");
      forbid(f.salt_prob, "salt-prob");
      forbid(f.pepper_prob, "pepper-prob");
      const double scale = need(f.scale, "scale");
      if (f.kind == "poisson") return NoiseSpec(PoissonNoise{scale});
      if (f.kind == "speckle") return NoiseSpec(SpeckleNoise{scale});
      return NoiseSpec(UniformNoise{scale});
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  throw UsageError("unknown noise kind '" + f.kind + "' (expected gaussian, salt-pepper, poisson, speckle, uniform)");
}

struct InjectOptions {
  std::string manifest;
  std::string out_dir;
  NoiseFlags noise;
};

int cmd_inject_noise(const InjectOptions& o, const GlobalOptions& g, std::ostream& out) {
  const NoiseSpec spec = noise_from_flags(o.noise);
  const fs::path manifest_path(o.manifest);
  const DatasetManifest manifest = read_manifest(manifest_path);
  const fs::path in_dir = manifest_path.parent_path();
  const fs::path dir(o.out_dir);
  ensure_directory(dir);
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const GrayImage noisy = inject(read_pgm(in_dir / e.path), spec, Seed{g.seed, i});
    const fs::path target = dir / e.path;
    if (target.has_parent_path()) ensure_directory(target.parent_path());
    write_pgm(noisy, target);
  }
  write_manifest(manifest, dir / "manifest.csv");
  out << "injected " << spec.label() << " into " << manifest.entries.size() << " images -> " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train / predict

struct LoadedDataset {
  FeatureMatrix features;
  std::vector<int> labels;
};

LoadedDataset load_dataset(const fs::path& manifest_path) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const fs::path dir = manifest_path.parent_path();
  LoadedDataset d;
  for (const auto& e : manifest.entries) {
    d.features.push_back(featurize(read_pgm(dir / e.path)));
    d.labels.push_back(e.label);
  }
  return d;
}

struct TrainOptions {
  std::string manifest;
  std::string model_out;
  TrainParams params;
};

int cmd_train(TrainOptions o, const GlobalOptions& g, std::ostream& out) {
  const LoadedDataset d = load_dataset(o.manifest);
  o.params.seed = g.seed;
  RefModel model;
  try {
    model = train_ref_model(d.features, d.labels, o.params);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  save_ref_model(model, o.model_out);
  const auto logits = model_logits(model, d.features, d.labels);
  const auto report = make_report(apply_temperature(logits, Temperature(1.0)), g.ece_bins);
  out << "trained on " << d.labels.size() << " images; training accuracy " << fixed(report.accuracy, 4) << "\n";
  return kExitOk;
}

struct PredictOptions {
  std::string model;
  std::string manifest;
  std::string out_csv;
};

int cmd_predict(const PredictOptions& o, std::ostream& out) {
  const RefModel model = load_ref_model(o.model);
  const LoadedDataset d = load_dataset(o.manifest);
  LabeledLogits logits;
  try {
    logits = model_logits(model, d.features, d.labels);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_logits_csv(logits, o.out_csv);
  out << "wrote " << logits.size() << " logit rows to " << o.out_csv << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// calibrate / evaluate

struct CalibrateOptions {
  std::string logits;
  std::string out_json;
};

int cmd_calibrate(const CalibrateOptions& o, std::ostream& out, std::ostream& err) {
  const LabeledLogits data = read_logits_csv(o.logits);
  const FitResult fit = fit_temperature(data);
  nlohmann::ordered_json j;
  j["temperature"] = fit.temperature.value();
  j["nll_before"] = fit.nll_before;
  j["nll_after"] = fit.nll_after;
  j["converged"] = fit.converged;
  j["at_boundary"] = fit.at_boundary;
  j["evaluations"] = fit.evaluations;
  write_text_file(o.out_json, j.dump(2) + "\n");
  out << fixed(fit.temperature.value(), 3) << "\n";
  if (fit.at_boundary) err << "note: fitted temperature lies on the search bound\n";
  return kExitOk;
}

struct EvaluateOptions {
  std::string logits;
  std::optional<double> temperature;
  std::string calibration;
  std::string report;
  std::string svg;
};

int cmd_evaluate(const EvaluateOptions& o, const GlobalOptions& g, std::ostream& out) {
  if (o.temperature && !o.calibration.empty()) throw UsageError("--temperature and --calibration are exclusive");
  double t_value = 1.0;
  if (o.temperature) t_value = *o.temperature;
  if (!o.calibration.empty()) {
    try {
      t_value = nlohmann::json::parse(read_text_file(o.calibration)).at("temperature").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw InterchangeError(o.calibration + ": " + e.what());
    }
  }
  std::optional<Temperature> t;
  try {
    t.emplace(t_value);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const LabeledLogits data = read_logits_csv(o.logits);
  const ProbPredictions preds = apply_temperature(data, *t);
  const MetricsReport report =
      make_report(preds, g.ece_bins, (o.temperature || !o.calibration.empty()) ? std::optional(t_value) : std::nullopt);
  write_report_json(report, o.report);
  if (!o.svg.empty()) write_text_file(o.svg, render_reliability_svg(reliability_bins(preds, g.ece_bins)));
  out << "accuracy " << fixed(report.accuracy, 4) << "  macro-F1 " << fixed(report.macro_f1, 4) << "  NLL "
      << fixed(report.nll, 4) << "  ECE " << fixed(report.ece, 4) << "  (T = " << fixed(t_value, 3) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string out_csv;
  std::string out_md;
  std::size_t n_per_class = SweepConfig{}.phantom.n_per_class;
  std::size_t epochs = TrainParams{}.epochs;
  std::optional<std::uint64_t> data_seed, noise_seed, train_seed;
};

int cmd_sweep(const SweepOptions& o, const GlobalOptions& g, bool seed_given, std::ostream& out) {
  SweepConfig cfg;
  cfg.ece_bins = g.ece_bins;
  cfg.phantom.n_per_class = o.n_per_class;
  cfg.train.epochs = o.epochs;
  if (seed_given) {
    cfg.data_seed = derive_seed(g.seed, 1);
    cfg.noise_seed = derive_seed(g.seed, 2);
    cfg.train_seed = derive_seed(g.seed, 3);
  }
  if (o.data_seed) cfg.data_seed = *o.data_seed;
  if (o.noise_seed) cfg.noise_seed = *o.noise_seed;
  if (o.train_seed) cfg.train_seed = *o.train_seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto rows = run_sweep(cfg);
  // Both files are written only once every setting has finished.
  write_text_file(o.out_csv, format_sweep_csv(rows));
  if (!o.out_md.empty()) write_text_file(o.out_md, format_sweep_markdown(rows));
  out << "sweep: " << rows.size() << " rows over " << cfg.grid.size() << " noise settings -> " << o.out_csv << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temperature-scaling calibration toolkit", "tscal"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  auto* seed_opt = app.add_option("--seed", global.seed, "Base seed (u64)");
  app.add_option("--ece-bins", global.ece_bins, "Number of equal-width ECE bins")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic phantom dataset (PGM + manifest)");
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--n-per-class", gen.n_per_class, "Images per class")->capture_default_str();
  gen_cmd->add_option("--side", gen.side, "Image side in pixels")->capture_default_str();

  InjectOptions inj;
  auto* inj_cmd = app.add_subcommand("inject-noise", "Inject seeded noise into every image of a manifest");
  inj_cmd->add_option("--manifest", inj.manifest, "Input manifest CSV")->required()->check(CLI::ExistingFile);
  inj_cmd->add_option("--out-dir", inj.out_dir, "Output directory")->required();
  inj_cmd->add_option("--noise", inj.noise.kind, "gaussian | salt-pepper | poisson | speckle | uniform")->required();
  inj_cmd->add_option("--mu", inj.noise.mu, "Gaussian mean");
  inj_cmd->add_option("--sigma", inj.noise.sigma, "Gaussian standard deviation");
  inj_cmd->add_option("--salt-prob", inj.noise.salt_prob, "Probability of a white pixel");
  inj_cmd->add_option("--pepper-prob", inj.noise.pepper_prob, "Probability of a black pixel");
  inj_cmd->add_option("--scale", inj.noise.scale, "Poisson photon scale, speckle std or uniform half-range");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train the reference classifier on a manifest");
  train_cmd->add_option("--manifest", train.manifest, "Training manifest CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model-out", train.model_out, "Output model JSON")->required();
  train_cmd->add_option("--epochs", train.params.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.params.learning_rate)->capture_default_str();
  train_cmd->add_option("--hidden", train.params.hidden)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train.params.batch_size)->capture_default_str()->check(CLI::PositiveNumber);

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "Write raw logits of a trained model over a manifest");
  pred_cmd->add_option("--model", pred.model, "Model JSON")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--manifest", pred.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  pred_cmd->add_option("--out", pred.out_csv, "Output logits CSV")->required();

  CalibrateOptions cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit a temperature on validation logits");
  cal_cmd->add_option("--logits", cal.logits, "Validation logits CSV")->required();
  cal_cmd->add_option("--out", cal.out_json, "Output JSON")->required();

  EvaluateOptions ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Report metrics for test logits at a temperature");
  ev_cmd->add_option("--logits", ev.logits, "Test logits CSV")->required();
  ev_cmd->add_option("--temperature", ev.temperature, "Temperature (default 1 = uncalibrated)");
  ev_cmd->add_option("--calibration", ev.calibration, "JSON written by `calibrate`");
  ev_cmd->add_option("--report", ev.report, "Output report JSON")->required();
  ev_cmd->add_option("--svg", ev.svg, "Optional reliability diagram SVG");

  SweepOptions sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Run the noise-robustness sweep");
  sw_cmd->add_option("--out-csv", sw.out_csv, "Output CSV")->required();
  sw_cmd->add_option("--out-md", sw.out_md, "Output markdown table");
  sw_cmd->add_option("--n-per-class", sw.n_per_class, "Phantoms per class")->capture_default_str();
  sw_cmd->add_option("--epochs", sw.epochs, "Training epochs")->capture_default_str();
  sw_cmd->add_option("--data-seed", sw.data_seed);
  sw_cmd->add_option("--noise-seed", sw.noise_seed);
  sw_cmd->add_option("--train-seed", sw.train_seed);

  std::vector<const char*> argv{"tscal"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen, global, out);
    if (*inj_cmd) return cmd_inject_noise(inj, global, out);
    if (*train_cmd) return cmd_train(train, global, out);
    if (*pred_cmd) return cmd_predict(pred, out);
    if (*cal_cmd) return cmd_calibrate(cal, out, err);
    if (*ev_cmd) return cmd_evaluate(ev, global, out);
    if (*sw_cmd) return cmd_sweep(sw, global, seed_opt->count() > 0, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace tscal
