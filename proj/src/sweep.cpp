#include "tscal/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "tscal/calibration.hpp"

namespace tscal {

std::vector<NoiseSpec> default_noise_grid() {
  return {
      NoiseSpec(GaussianNoise{0.0, 0.02}),  NoiseSpec(GaussianNoise{0.0, 0.05}),
      NoiseSpec(GaussianNoise{0.0, 0.1}),   NoiseSpec(GaussianNoise{0.0, 0.2}),
      NoiseSpec(GaussianNoise{0.1, 0.2}),   NoiseSpec(GaussianNoise{0.1, 0.3}),
      NoiseSpec(GaussianNoise{0.2, 0.3}),   NoiseSpec(PoissonNoise{0.5}),
      NoiseSpec(PoissonNoise{1.0}),         NoiseSpec(PoissonNoise{2.0}),
      NoiseSpec(SaltPepperNoise{0.02, 0.02}), NoiseSpec(SaltPepperNoise{0.1, 0.1}),
      NoiseSpec(SaltPepperNoise{0.2, 0.2}), NoiseSpec(SpeckleNoise{0.01}),
      NoiseSpec(SpeckleNoise{0.05}),        NoiseSpec(SpeckleNoise{0.1}),
      NoiseSpec(UniformNoise{0.02}),        NoiseSpec(UniformNoise{0.05}),
      NoiseSpec(UniformNoise{0.1}),
  };
}

void SweepConfig::validate() const {
  if (grid.empty()) throw std::invalid_argument("noise grid is empty");
  if (ece_bins < 1) throw std::invalid_argument("ece_bins must be >= 1");
  if (!(train_fraction > 0.0 && val_fraction > 0.0 && test_fraction > 0.0)) {
    throw std::invalid_argument("split fractions must be positive");
  }
  if (std::fabs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  phantom.validate();
}

Split stratified_split(std::span<const int> labels, double train_fraction, double val_fraction) {
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("negative label");
    max_label = std::max(max_label, l);
  }
  std::vector<int> slot(labels.size());  // 0 train, 1 val, 2 test
  for (int c = 0; c <= max_label; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    const double n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * train_fraction));
    const auto n_val = std::min(members.size() - n_train, static_cast<std::size_t>(std::llround(n * val_fraction)));
    for (std::size_t j = 0; j < members.size(); ++j) slot[members[j]] = j < n_train ? 0 : (j < n_train + n_val ? 1 : 2);
  }
  Split split;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (slot[i] == 0 ? split.train : slot[i] == 1 ? split.val : split.test).push_back(i);
  }
  return split;
}

namespace {

SweepRow make_row(const std::string& noise, const MetricsReport& r, bool calibrated) {
  SweepRow row;
  row.noise = noise;
  row.calibrated = calibrated;
  row.accuracy = r.accuracy;
  row.prec = r.macro_precision;
  row.rec = r.macro_recall;
  row.f1 = r.macro_f1;
  row.tp = r.confusion.tp();
  row.fn = r.confusion.fn();
  row.fp = r.confusion.fp();
  row.tn = r.confusion.tn();
  row.nll = r.nll;
  row.ece = r.ece;
  if (calibrated) row.optimal_temp = r.temperature;
  return row;
}

template <class T>
std::vector<T> pick(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const PhantomSet data = generate_phantoms(cfg.phantom, cfg.data_seed);
  const Split split = stratified_split(data.labels, cfg.train_fraction, cfg.val_fraction);

  // Training only ever sees clean images, so one model serves every setting.
  const auto train_images = pick(data.images, split.train);
  const auto train_labels = pick(data.labels, split.train);
  TrainParams train = cfg.train;
  train.seed = cfg.train_seed;
  const RefModel model = train_ref_model(featurize(train_images), train_labels, train);

  const auto val_images = pick(data.images, split.val);
  const auto val_labels = pick(data.labels, split.val);
  const auto test_images = pick(data.images, split.test);
  const auto test_labels = pick(data.labels, split.test);

  std::vector<SweepRow> rows;
  rows.reserve(2 * cfg.grid.size());
  for (std::size_t s = 0; s < cfg.grid.size(); ++s) {
    const NoiseSpec& spec = cfg.grid[s];
    const std::uint64_t noise_base = derive_seed(cfg.noise_seed, s);

    FeatureMatrix val_features, test_features;
    val_features.reserve(val_images.size());
    test_features.reserve(test_images.size());
    for (std::size_t j = 0; j < val_images.size(); ++j) {
      val_features.push_back(featurize(inject(val_images[j], spec, Seed{noise_base, j})));
    }
    for (std::size_t j = 0; j < test_images.size(); ++j) {
      test_features.push_back(featurize(inject(test_images[j], spec, Seed{noise_base, val_images.size() + j})));
    }

    const LabeledLogits val_logits = model_logits(model, val_features, val_labels);
    const LabeledLogits test_logits = model_logits(model, test_features, test_labels);
    const FitResult fit = fit_temperature(val_logits);

    const auto before = make_report(apply_temperature(test_logits, Temperature(1.0)), cfg.ece_bins);
    const auto after =
        make_report(apply_temperature(test_logits, fit.temperature), cfg.ece_bins, fit.temperature.value());
    const std::string label = spec.label();
    rows.push_back(make_row(label, before, false));
    rows.push_back(make_row(label, after, true));
  }
  return rows;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string format_sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "noise,calibrated,prec,rec,f1,tp,fn,fp,tn,nll,ece,optimal_temp,accuracy\n";
  for (const auto& r : rows) {
    out += r.noise + "," + (r.calibrated ? "1" : "0");
    for (double v : {r.prec, r.rec, r.f1}) out += "," + fmt("%.17g", v);
    for (auto c : {r.tp, r.fn, r.fp, r.tn}) out += "," + std::to_string(c);
    out += "," + fmt("%.17g", r.nll) + "," + fmt("%.17g", r.ece) + ",";
    if (r.optimal_temp) out += fmt("%.17g", *r.optimal_temp);
    out += "," + fmt("%.17g", r.accuracy) + "\n";
  }
  return out;
}

std::string format_sweep_markdown(std::span<const SweepRow> rows) {
  auto grid = [](double v) { return fmt("%.3f", std::round(v / 0.005) * 0.005); };
  std::string out =
      "| Noise | Calibrated | Prec | Rec | F1 | TP | FN | FP | TN | NLL | ECE | Optimal Temp |\n"
      "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += "| " + r.noise + " | " + (r.calibrated ? "yes" : "no") + " | " + grid(r.prec) + " | " + grid(r.rec) +
           " | " + grid(r.f1) + " | " + std::to_string(r.tp) + " | " + std::to_string(r.fn) + " | " +
           std::to_string(r.fp) + " | " + std::to_string(r.tn) + " | " + fmt("%.3f", r.nll) + " | " +
           fmt("%.3f", r.ece) + " | " + (r.optimal_temp ? fmt("%.3f", *r.optimal_temp) : "") + " |\n";
  }
  return out;
}

}  // namespace tscal
