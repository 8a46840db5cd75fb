#pragma once

// mdcs command-line driver. Exit codes: 0 success, 1 runtime or I/O
// failure, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mdcs/checkpoint.hpp"
#include "mdcs/corpus_io.hpp"
#include "mdcs/data_synth.hpp"
#include "mdcs/experiment.hpp"
#include "mdcs/gradcheck.hpp"
#include "mdcs/heatmap.hpp"
#include "mdcs/image_io.hpp"
#include "mdcs/metrics.hpp"
#include "mdcs/parallel.hpp"
#include "mdcs/pipeline.hpp"
#include "mdcs/spectral.hpp"
#include "mdcs/training.hpp"

namespace mdcs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Default corpus: 1400 pairs split 5:1:1 gives 2000/400/400 images.
inline constexpr std::size_t kDefaultPairs = 1400;
inline constexpr SplitFractions kCliFractions{5.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0};

namespace cli {

struct SynthArgs {
  std::size_t n = kDefaultPairs;
  std::size_t size = 64;
  std::uint64_t seed = 7;
  std::string out;
};

struct SpectrumArgs {
  std::string input;
  std::string transform = "dct";
  std::string out;
  std::string csv;
  bool center = false;
};

struct TrainArgs {
  std::string data;
  std::string mode = "all";
  std::string transform = "dct";
  std::size_t epochs = 10;
  std::uint64_t seed = 7;
  std::size_t batch_size = 32;
  std::string out;
};

struct EvalArgs {
  std::string model;
  std::string data;
  std::string split = "test";
  std::string report;
};

struct GradcheckArgs {
  std::uint64_t seed = 7;
  std::string fault = "none";
};

struct AblateArgs {
  std::string data;
  std::size_t epochs = 10;
  std::uint64_t seed = 7;
  std::string out;
};

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

inline int synth(const SynthArgs& a, std::ostream& out) {
  if (a.size < kMinImageSize || a.size % 16 != 0) {
    throw CLI::ValidationError("--size", "must be a multiple of 16 and at least 16");
  }
  const Corpus c = build_corpus(a.n, a.size, kCliFractions, a.seed);
  save_corpus(c, a.out);
  out << "wrote " << c.train.size() << " train, " << c.val.size() << " val, " << c.test.size() << " test images to "
      << a.out << '\n';
  return kExitOk;
}

inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .ppm images under " + dir.string());
  return files;
}

inline int spectrum(const SpectrumArgs& a, std::ostream& out) {
  const Transform t = parse_transform(a.transform);
  if (a.center && t != Transform::FFT_AMPLITUDE) {
    throw CLI::ValidationError("--center", "only applies to --transform fft");
  }
  const std::filesystem::path root(a.input);
  const auto files = list_images(root);
  std::vector<Tensor> frames;
  std::ostringstream rows;
  rows << std::setprecision(17);
  for (const auto& f : files) {
    const Tensor img = read_ppm(f);
    if (!frames.empty() && img.dim(1) != frames.front().dim(0)) throw IoError("image size differs: " + f.string());
    for (Tensor& p : channel_planes(img)) frames.push_back(std::move(p));
    rows << std::filesystem::relative(f, root).generic_string();
    for (double e : image_band_energies(img, t)) rows << ',' << e;
    rows << '\n';
  }
  const Tensor avg = average_spectrum(frames, t);
  write_heatmap(a.out, avg, a.center);
  const std::filesystem::path csv_path =
      a.csv.empty() ? std::filesystem::path(a.out).replace_extension(".csv") : std::filesystem::path(a.csv);
  auto csv = open_output(csv_path);
  csv << "image";
  for (std::size_t b = 0; b < kRadialBands; ++b) csv << ",band" << b;
  csv << '\n' << rows.str() << "average" << std::setprecision(17);
  for (double e : radial_band_means(avg)) csv << ',' << e;
  csv << '\n';
  if (!csv) throw IoError("failed writing " + csv_path.string());
  out << "averaged " << files.size() << " images (" << transform_name(t) << "); heatmap " << a.out << ", bands "
      << csv_path.string() << '\n';
  return kExitOk;
}

inline TrainingConfig training_config(std::size_t epochs, std::uint64_t seed, std::size_t batch_size) {
  TrainingConfig cfg;
  cfg.max_epochs = epochs;
  cfg.seed = seed;
  cfg.batch_size = batch_size;
  return cfg;
}

inline int train_cmd(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus(a.data);
  const StitchMode mode = parse_mode(a.mode);
  const TrainingConfig cfg = training_config(a.epochs, a.seed, a.batch_size);
  const PreparedData data = prepare_data(corpus, parse_transform(a.transform));
  RunResult r = run_configuration(data, mode, corpus.image_size, cfg, [&](const EpochRecord& rec) {
    out << "epoch " << rec.epoch << " train_loss " << rec.train_loss << " val_loss " << rec.val_loss << " val_acc "
        << rec.val_acc << '\n'
        << std::flush;
  });
  if (r.diverged) err << "warning: training stopped early: " << r.message << '\n';
  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "model.mdcs", r.best);
  auto csv = open_output(dir / "metrics.csv");
  write_metrics_csv(csv, r.records, stitch_count(mode));
  out << "best epoch " << r.best_epoch << " val_acc " << r.best_val_acc << "; wrote " << (dir / "model.mdcs").string()
      << '\n';
  return kExitOk;
}

inline void report_row(std::ostream& os, const std::string& level, const std::string& split, const EvalReport& r) {
  os << level << ',' << split << ',' << r.n_samples << ',' << r.accuracy << ',';
  if (r.auc) os << *r.auc;
  else os << "undefined";
  os << ',' << r.counts.tp << ',' << r.counts.tn << ',' << r.counts.fp << ',' << r.counts.fn << '\n';
}

inline int eval_cmd(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  Checkpoint ckpt = load_checkpoint(a.model);
  const Corpus corpus = load_corpus(a.data);
  if (corpus.image_size != ckpt.model.input_size) {
    throw IoError("corpus images are " + std::to_string(corpus.image_size) + "x" + std::to_string(corpus.image_size) +
                  " but the checkpoint expects " + std::to_string(ckpt.model.input_size));
  }
  const std::vector<Sample>& samples =
      a.split == "train" ? corpus.train : (a.split == "val" ? corpus.val : corpus.test);
  if (samples.empty()) throw IoError("split '" + a.split + "' of " + a.data + " is empty");
  const FeatureSet features = make_features(samples, ckpt.pipeline);
  const Predictions p = predict(ckpt.model, features, TrainingConfig{}.batch_size);
  const EvalReport frame = evaluate_scores(p.fake_scores, features.labels());
  // Real and fake members of a pair share a group id, so group by (id, label).
  std::vector<std::int64_t> keys(features.size());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = features.groups()[i] * 2 + features.labels()[i];
  const GroupScores g = group_average_scores(p.fake_scores, keys, features.labels());
  const EvalReport group = evaluate_scores(g.scores, g.labels);

  std::ostringstream csv;
  csv << std::setprecision(17) << "level,split,n_samples,accuracy,auc,tp,tn,fp,fn\n";
  report_row(csv, "frame", a.split, frame);
  report_row(csv, "group", a.split, group);
  if (!a.report.empty()) {
    auto os = open_output(a.report);
    os << csv.str();
    if (!os) throw IoError("failed writing " + a.report);
  }
  for (const auto& [level, r] : {std::pair{"frame", &frame}, std::pair{"group", &group}}) {
    out << level << "-level " << a.split << ": n=" << r->n_samples << " accuracy=" << r->accuracy << " auc=";
    if (r->auc) out << *r->auc;
    else out << "undefined";
    out << '\n';
  }
  if (!frame.auc) err << "warning: split '" << a.split << "' has a single class; AUC is undefined\n";
  return kExitOk;
}

inline int gradcheck_cmd(const GradcheckArgs& a, std::ostream& out) {
  const StitchBackwardFn rule =
      a.fault == "stitch-sign" ? StitchBackwardFn(sign_flipped_stitch_backward) : StitchBackwardFn(stitch_backward);
  bool ok = true;
  out << std::left << std::setw(24) << "suite" << std::setw(8) << "probes" << std::setw(16) << "max_rel_error"
      << "result\n";
  for (const SuiteResult& r : run_gradcheck(a.seed, rule)) {
    out << std::setw(24) << r.name << std::setw(8) << r.checked << std::setw(16) << std::scientific
        << std::setprecision(3) << r.max_rel_error << std::defaultfloat << (r.passed() ? "PASS" : "FAIL") << '\n';
    ok = ok && r.passed();
  }
  out << (ok ? "all suites within " : "gradient check FAILED, tolerance ") << kGradcheckTolerance << '\n';
  return ok ? kExitOk : kExitFailure;
}

inline int ablate_cmd(const AblateArgs& a, std::ostream& out) {
  const Corpus corpus = load_corpus(a.data);
  const auto rows = run_ablation(corpus, training_config(a.epochs, a.seed, TrainingConfig{}.batch_size),
                                 [&](const RunResult& r) {
                                   out << mode_name(r.mode) << '/' << transform_name(r.transform) << ": test auc ";
                                   if (r.test.auc) out << *r.test.auc;
                                   else out << "undefined";
                                   out << " (best epoch " << r.best_epoch << ")\n" << std::flush;
                                 });
  auto os = open_output(a.out);
  write_ablation_csv(os, rows);
  if (!os) throw IoError("failed writing " + a.out);
  return kExitOk;
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multi-domain cross-stitched forgery detection toolkit", "mdcs"};
  app.require_subcommand(1);
  const std::vector<std::string> modes = {"rgb", "freq", "none", "one", "all"};
  const std::vector<std::string> transforms = {"dct", "fft", "dwt"};

  cli::SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic real/fake corpus");
  s->add_option("--n", synth.n, "Real/fake pairs (images per class)")->check(CLI::PositiveNumber);
  s->add_option("--size", synth.size, "Image side length (even, >= 16)");
  s->add_option("--seed", synth.seed, "Corpus seed");
  s->add_option("--out", synth.out, "Output directory")->required();

  cli::SpectrumArgs spec;
  auto* sp = app.add_subcommand("spectrum", "Average log-scaled spectrum heatmap and radial band energies");
  sp->add_option("--input", spec.input, "Directory searched recursively for .ppm images")->required();
  sp->add_option("--transform", spec.transform, "dct, fft or dwt")->check(CLI::IsMember(transforms));
  sp->add_option("--out", spec.out, "Heatmap PPM path")->required();
  sp->add_option("--csv", spec.csv, "Band CSV path (default: heatmap path with .csv)");
  sp->add_flag("--center", spec.center, "Put the zero frequency in the middle (fft only)");

  cli::TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model and write model.mdcs and metrics.csv");
  t->add_option("--data", tr.data, "Corpus directory")->required();
  t->add_option("--mode", tr.mode, "rgb, freq, none, one or all")->check(CLI::IsMember(modes));
  t->add_option("--transform", tr.transform, "dct, fft or dwt")->check(CLI::IsMember(transforms));
  t->add_option("--epochs", tr.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.seed, "Initialization and shuffling seed");
  t->add_option("--batch-size", tr.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  t->add_option("--out", tr.out, "Output directory")->required();

  cli::EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on one split of a corpus");
  e->add_option("--model", ev.model, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Corpus directory")->required();
  e->add_option("--split", ev.split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("--report", ev.report, "CSV report path");

  cli::GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  g->add_option("--seed", gc.seed, "Seed for inputs and parameters");
  g->add_option("--fault", gc.fault, "Inject a known bug: none or stitch-sign")
      ->check(CLI::IsMember({"none", "stitch-sign"}));

  cli::AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "Train every stitch mode and transform; write a results table");
  a->add_option("--data", ab.data, "Corpus directory")->required();
  a->add_option("--epochs", ab.epochs, "Maximum epochs per run")->check(CLI::PositiveNumber);
  a->add_option("--seed", ab.seed, "Seed for every run");
  a->add_option("--out", ab.out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  configure_threads_from_env();
  tune_allocator();
  try {
    if (*s) return cli::synth(synth, out);
    if (*sp) return cli::spectrum(spec, out);
    if (*t) return cli::train_cmd(tr, out, err);
    if (*e) return cli::eval_cmd(ev, out, err);
    if (*g) return cli::gradcheck_cmd(gc, out);
    if (*a) return cli::ablate_cmd(ab, out);
  } catch (const CLI::ValidationError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mdcs
