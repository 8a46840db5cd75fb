#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "mdcs/cli.hpp"
#include "oracles.hpp"

using namespace mdcs;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun mdcs_run(std::vector<std::string> args) {
  args.insert(args.begin(), "mdcs");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  for (std::string f; std::getline(is, f, ',');) out.push_back(f);
  return out;
}

/// Small shared corpus: 14 pairs of 16x16 images, 10/2/2 groups.
const fs::path& tiny_corpus() {
  static const fs::path dir = [] {
    fs::path d = oracle::scratch_dir("cli_corpus");
    const CliRun r = mdcs_run({"synth", "--n", "14", "--size", "16", "--seed", "3", "--out", d.string()});
    if (r.code != 0) throw std::runtime_error("synth failed: " + r.err);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(CliSynth, DeterministicTree) {
  const fs::path a = oracle::scratch_dir("synth_a"), b = oracle::scratch_dir("synth_b");
  ASSERT_EQ(mdcs_run({"synth", "--n", "100", "--size", "16", "--seed", "42", "--out", a.string()}).code, 0);
  ASSERT_EQ(mdcs_run({"synth", "--n", "100", "--size", "16", "--seed", "42", "--out", b.string()}).code, 0);
  EXPECT_EQ(oracle::tree_bytes(a), oracle::tree_bytes(b));
  const auto manifest = lines(oracle::slurp(a / "manifest.csv"));
  EXPECT_EQ(manifest.size(), 201u);
  EXPECT_EQ(manifest.front(), "path,label,group_id,seed");
}

TEST(CliSynth, UsageErrors) {
  EXPECT_EQ(mdcs_run({"synth", "--n", "10"}).code, 2);
  EXPECT_EQ(mdcs_run({"synth", "--n", "10", "--size", "24", "--out", oracle::scratch_dir("s24").string()}).code, 2);
  EXPECT_EQ(mdcs_run({"synth", "--n", "-1", "--out", "x"}).code, 2);
  EXPECT_EQ(mdcs_run({}).code, 2);
  EXPECT_EQ(mdcs_run({"frobnicate"}).code, 2);
  EXPECT_EQ(mdcs_run({"--help"}).code, 0);
}

TEST(CliSpectrum, ZeroImageGivesBlackHeatmap) {
  const fs::path dir = oracle::scratch_dir("spec_zero");
  fs::create_directories(dir / "in");
  write_ppm(dir / "in/zero.ppm", Tensor(Shape{3, 16, 16}));
  const CliRun r = mdcs_run({"spectrum", "--input", (dir / "in").string(), "--out", (dir / "h.ppm").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const PpmBytes h = read_ppm_bytes(dir / "h.ppm");
  for (std::uint8_t v : h.rgb) ASSERT_EQ(v, 0);
  const auto csv = lines(oracle::slurp(dir / "h.csv"));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0], "image,band0,band1,band2,band3");
  EXPECT_EQ(csv[1], "zero.ppm,0,0,0,0");
  EXPECT_EQ(csv[2], "average,0,0,0,0");
}

TEST(CliSpectrum, RerunIsIdenticalAndValidated) {
  const fs::path dir = oracle::scratch_dir("spec_rerun");
  const std::string in = (tiny_corpus() / "test").string();
  for (const char* name : {"a.ppm", "b.ppm"}) {
    ASSERT_EQ(mdcs_run({"spectrum", "--input", in, "--transform", "fft", "--center", "--out", (dir / name).string()})
                  .code,
              0);
  }
  EXPECT_EQ(oracle::slurp(dir / "a.ppm"), oracle::slurp(dir / "b.ppm"));
  EXPECT_EQ(oracle::slurp(dir / "a.csv"), oracle::slurp(dir / "b.csv"));
  EXPECT_EQ(lines(oracle::slurp(dir / "a.csv")).size(), 2u + 4u);

  EXPECT_EQ(mdcs_run({"spectrum", "--input", in, "--center", "--out", (dir / "c.ppm").string()}).code, 2);
  EXPECT_EQ(mdcs_run({"spectrum", "--input", in, "--transform", "wavelet", "--out", "x.ppm"}).code, 2);
  fs::create_directories(dir / "empty");
  EXPECT_EQ(mdcs_run({"spectrum", "--input", (dir / "empty").string(), "--out", (dir / "d.ppm").string()}).code, 1);
}

TEST(CliTrainEval, RoundTrip) {
  const fs::path a = oracle::scratch_dir("train_a"), b = oracle::scratch_dir("train_b");
  const std::string data = tiny_corpus().string();
  const CliRun ra = mdcs_run({"train", "--data", data, "--mode", "all", "--epochs", "2", "--out", a.string()});
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(mdcs_run({"train", "--data", data, "--mode", "all", "--epochs", "2", "--out", b.string()}).code, 0);
  EXPECT_EQ(oracle::slurp(a / "metrics.csv"), oracle::slurp(b / "metrics.csv"));
  EXPECT_EQ(oracle::slurp(a / "model.mdcs"), oracle::slurp(b / "model.mdcs"));

  const auto metrics = lines(oracle::slurp(a / "metrics.csv"));
  ASSERT_EQ(metrics.size(), 3u);
  EXPECT_EQ(split_csv(metrics[0]).size(), 6u + 16u);

  // Evaluating on val must reproduce the best validation accuracy seen in training.
  double best = 0;
  for (std::size_t i = 1; i < metrics.size(); ++i) best = std::max(best, std::stod(split_csv(metrics[i])[3]));
  const CliRun ev = mdcs_run({"eval", "--model", (a / "model.mdcs").string(), "--data", data, "--split", "val",
                           "--report", (a / "eval.csv").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const auto report = lines(oracle::slurp(a / "eval.csv"));
  ASSERT_EQ(report.size(), 3u);
  EXPECT_EQ(report[0], "level,split,n_samples,accuracy,auc,tp,tn,fp,fn");
  const auto frame = split_csv(report[1]);
  EXPECT_EQ(frame[0], "frame");
  EXPECT_EQ(frame[2], "4");
  EXPECT_EQ(std::stod(frame[3]), best);
}

TEST(CliTrainEval, RgbModeHasNoAlphaColumns) {
  const fs::path dir = oracle::scratch_dir("train_rgb");
  ASSERT_EQ(mdcs_run({"train", "--data", tiny_corpus().string(), "--mode", "rgb", "--epochs", "1", "--out",
                      dir.string()})
                .code,
            0);
  const auto header = lines(oracle::slurp(dir / "metrics.csv")).front();
  EXPECT_EQ(header, "epoch,train_loss,val_loss,val_acc,base_lr,stitch_lr");
}

TEST(CliEval, SingleClassSplitIsUndefinedNotFatal) {
  const fs::path dir = oracle::scratch_dir("eval_single");
  fs::copy(tiny_corpus(), dir / "data", fs::copy_options::recursive);
  const auto rows = lines(oracle::slurp(dir / "data/manifest.csv"));
  {
    std::ofstream m(dir / "data/manifest.csv");
    for (const auto& r : rows) {
      if (r.rfind("test/fake/", 0) != 0) m << r << '\n';
    }
  }
  ASSERT_EQ(mdcs_run({"train", "--data", (dir / "data").string(), "--mode", "none", "--epochs", "1", "--out",
                      (dir / "m").string()})
                .code,
            0);
  const CliRun ev = mdcs_run({"eval", "--model", (dir / "m/model.mdcs").string(), "--data", (dir / "data").string(),
                           "--report", (dir / "r.csv").string()});
  EXPECT_EQ(ev.code, 0);
  EXPECT_NE(ev.err.find("warning"), std::string::npos);
  EXPECT_EQ(split_csv(lines(oracle::slurp(dir / "r.csv"))[1])[4], "undefined");
}

TEST(CliEval, BadCheckpointFails) {
  const fs::path dir = oracle::scratch_dir("eval_bad");
  std::ofstream(dir / "junk.mdcs") << "not a model";
  const CliRun r = mdcs_run({"eval", "--model", (dir / "junk.mdcs").string(), "--data", tiny_corpus().string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("junk.mdcs"), std::string::npos);
  EXPECT_EQ(mdcs_run({"eval", "--model", (dir / "missing.mdcs").string(), "--data", tiny_corpus().string()}).code, 1);
}

TEST(CliGradcheck, PassesAndCatchesInjectedFault) {
  const CliRun ok = mdcs_run({"gradcheck", "--seed", "7"});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
  const CliRun bad = mdcs_run({"gradcheck", "--seed", "7", "--fault", "stitch-sign"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("cross_stitch"), std::string::npos);
  EXPECT_EQ(mdcs_run({"gradcheck", "--fault", "other"}).code, 2);
}

TEST(CliAblate, EightRows) {
  const fs::path dir = oracle::scratch_dir("ablate");
  const CliRun r = mdcs_run(
      {"ablate", "--data", tiny_corpus().string(), "--epochs", "1", "--out", (dir / "ablation.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(oracle::slurp(dir / "ablation.csv"));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0], "study,mode,transform,test_auc,test_acc,best_epoch,best_val_acc");
}
