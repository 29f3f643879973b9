// wearaug: command-line front end for synthetic data generation,
// augmentation, cross-validated training, gradient checking and feature
// export.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "wearaug/wearaug.hpp"

namespace {

namespace fs = std::filesystem;
using namespace wearaug;

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kThreshold = 3 };

std::vector<AugmentPipeline> parse_pipelines(const std::string& spec, const AugmentConfig& cfg) {
  std::vector<AugmentPipeline> out;
  for (const auto& part : io::split(spec, ',')) out.push_back(AugmentPipeline::parse(part, cfg));
  if (out.empty()) out.push_back(AugmentPipeline({}, cfg));
  return out;
}

struct SynthArgs {
  std::string out;
  std::size_t subjects = 20;
  std::size_t per_subject = 20;
  std::size_t window_len = 696;
  std::uint64_t seed = 0;
  std::string nuisance = "on";
  double atypical = 0.15;
};

int cmd_synth(const SynthArgs& a) {
  SynthConfig cfg;
  cfg.n_subjects = a.subjects;
  cfg.windows_per_subject = a.per_subject;
  cfg.window_len = a.window_len;
  cfg.per_subject_rotation = a.nuisance == "on";
  cfg.atypical_fraction = a.atypical;
  RngStream rng = derive_stream(a.seed, 0);
  io::write_dataset(a.out, gen_dataset(rng, cfg));
  std::cout << "wrote " << a.subjects * a.per_subject << " windows to " << a.out << "\n";
  return kOk;
}

struct AugmentArgs {
  std::string in, out, pipeline, config;
  std::uint64_t seed = 0;
};

int cmd_augment(const AugmentArgs& a) {
  TrainConfig tc;
  if (!a.config.empty()) tc = io::load_train_config(a.config);
  const AugmentPipeline p = AugmentPipeline::parse(a.pipeline, tc.augment);
  LabeledDataset d = io::read_dataset(a.in);
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    RngStream rng = derive_stream(a.seed, i);
    d.records[i].window = p.apply(d.records[i].window, rng);
  }
  io::write_dataset(a.out, d);
  std::cout << "augmented " << d.size() << " windows with '" << p.name() << "'\n";
  return kOk;
}

struct TrainArgs {
  std::string data, pipeline, out, config;
  std::size_t folds = 5;
  std::size_t epochs = 50;
  std::size_t width_divisor = 0;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig tc;
  tc.width_divisor = 4;
  if (!a.config.empty()) tc = io::load_train_config(a.config, tc);
  tc.epochs = a.epochs;
  if (a.width_divisor) tc.width_divisor = a.width_divisor;
  const auto pipelines = parse_pipelines(a.pipeline, tc.augment);
  const LabeledDataset d = io::read_dataset(a.data);
  if (a.folds > d.subjects().size()) {
    throw InvalidArgument("--folds " + std::to_string(a.folds) + " exceeds the " +
                          std::to_string(d.subjects().size()) + " subjects in " + a.data);
  }
  const ExperimentReport r = run_experiment(d, pipelines, a.folds, a.seed, tc);

  const fs::path out = a.out;
  io::ensure_directory(out / "checkpoints");
  const std::string table = render_table(r);
  io::write_file(out / "report.txt", table);
  io::write_file(out / "curves.csv", render_curves(r));
  const auto arch = cnn::Architecture::standard(d.records.front().window.length(), tc.width_divisor);
  for (const auto& p : r.pipelines) {
    for (std::size_t f = 0; f < p.folds.size(); ++f) {
      io::save_checkpoint(out / "checkpoints" / (p.name + "_fold" + std::to_string(f + 1) + ".ckpt"), arch,
                          p.folds[f].params);
    }
  }
  std::cout << table;
  return kOk;
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  double threshold = 1e-4;
  bool inject_fault = false;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  SynthConfig sc;
  sc.n_subjects = 1;
  sc.windows_per_subject = 4;
  sc.window_len = 696;
  RngStream data_rng = derive_stream(a.seed, 1);
  const LabeledDataset d = gen_dataset(data_rng, sc);
  std::vector<const Window*> ws;
  for (const auto& r : d.records) ws.push_back(&r.window);

  RngStream init_rng = derive_stream(a.seed, 2);
  cnn::Cnn model = cnn::Cnn::initialize(cnn::Architecture::standard(696, 4), init_rng);
  if (a.inject_fault) model.set_backward_stride_skew(1);
  cnn::GradCheckOptions opt;
  opt.seed = a.seed;
  const auto report = cnn::grad_check(model, cnn::make_batch(ws), labels_of(d), opt);

  bool ok = true;
  for (const auto& [layer, err] : report.by_layer()) {
    const bool pass = err < a.threshold;
    ok = ok && pass;
    std::printf("%-6s max_rel_error=%.3e %s\n", layer.c_str(), err, pass ? "ok" : "FAIL");
  }
  std::printf("overall max_rel_error=%.3e threshold=%.1e %s\n", report.max_error(), a.threshold, ok ? "PASS" : "FAIL");
  return ok ? kOk : kThreshold;
}

struct FeaturesArgs {
  std::string in, out;
};

int cmd_features(const FeaturesArgs& a) {
  const LabeledDataset d = io::read_dataset(a.in);
  std::string csv;
  for (std::size_t j = 0; j < kFeatureDim; ++j) csv += "f" + std::to_string(j) + ",";
  csv += "label,subject_id\n";
  for (const auto& r : d.records) {
    const Tensor f = extract_features(r.window);
    for (double v : f.data()) csv += io::format_g9(v) + ",";
    csv += label_name(r.label) + "," + r.subject + "\n";
  }
  io::write_file(a.out, csv);
  std::cout << "wrote " << d.size() << " feature rows to " << a.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wearable accelerometer augmentation and CNN toolkit"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-class dataset");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--subjects", sa.subjects, "Number of subjects")->check(CLI::PositiveNumber);
  synth->add_option("--per-subject", sa.per_subject, "Windows per subject")->check(CLI::PositiveNumber);
  synth->add_option("--window-len", sa.window_len, "Samples per window")->check(CLI::Range(2, 1 << 24));
  synth->add_option("--seed", sa.seed, "Master seed");
  synth->add_option("--nuisance", sa.nuisance, "Per-subject sensor rotation")->check(CLI::IsMember({"on", "off"}));
  synth->add_option("--atypical", sa.atypical, "Fraction of atypical windows")->check(CLI::Range(0.0, 1.0));

  AugmentArgs aa;
  auto* augment = app.add_subcommand("augment", "Apply an augmentation pipeline to a dataset");
  augment->add_option("--in", aa.in, "Input dataset directory")->required();
  augment->add_option("--out", aa.out, "Output dataset directory")->required();
  augment->add_option("--pipeline", aa.pipeline, "Transforms joined by '+', e.g. rot+perm+timew");
  augment->add_option("--seed", aa.seed, "Master seed");
  augment->add_option("--config", aa.config, "key = value config file");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Subject-wise cross-validated CNN training");
  train->add_option("--data", ta.data, "Dataset directory")->required();
  train->add_option("--pipeline", ta.pipeline, "Comma-separated pipelines, e.g. none,rot,rot+perm+timew");
  train->add_option("--folds", ta.folds, "Number of subject folds")->check(CLI::Range(2, 1 << 20));
  train->add_option("--epochs", ta.epochs, "Epochs per fold")->check(CLI::PositiveNumber);
  train->add_option("--seed", ta.seed, "Master seed");
  train->add_option("--out", ta.out, "Report directory")->required();
  train->add_option("--config", ta.config, "key = value config file");
  train->add_option("--width-divisor", ta.width_divisor, "Divide feature-map counts (default 4)")
      ->check(CLI::PositiveNumber);

  GradcheckArgs ga;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the scaled-down CNN");
  gradcheck->add_option("--seed", ga.seed, "Seed for data, init and coordinate sampling");
  gradcheck->add_option("--threshold", ga.threshold, "Maximum allowed relative error");
  gradcheck->add_flag("--inject-fault", ga.inject_fault, "Corrupt the conv backward pass (negative control)");

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Export 540-dimensional statistical features");
  features->add_option("--in", fa.in, "Dataset directory")->required();
  features->add_option("--out", fa.out, "Output CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*augment) return cmd_augment(aa);
    if (*train) return cmd_train(ta);
    if (*gradcheck) return cmd_gradcheck(ga);
    if (*features) return cmd_features(fa);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}
