#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "mdcs/corpus_io.hpp"
#include "mdcs/data_synth.hpp"
#include "mdcs/image_io.hpp"
#include "mdcs/pipeline.hpp"
#include "oracles.hpp"

using namespace mdcs;

TEST(GenReal, DeterministicAndInRange) {
  const Sample a = gen_real(42, 32), b = gen_real(42, 32);
  EXPECT_TRUE(identical(a.image, b.image));
  EXPECT_FALSE(identical(a.image, gen_real(43, 32).image));
  for (double v : a.image.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(gen_real(1, 8), std::invalid_argument);
}

TEST(GenReal, BandEnergyDecreases) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto bands = image_band_energies(gen_real(s, 32).image);
    for (std::size_t k = 1; k < bands.size(); ++k) ASSERT_LT(bands[k], bands[k - 1]) << "seed " << s;
  }
}

TEST(GenFake, ConstantImageUnchanged) {
  Sample flat{Tensor(Shape{3, 16, 16}, 0.42), Label::REAL, 3, 9};
  const Sample f = gen_fake(flat);
  EXPECT_TRUE(identical(f.image, flat.image));
  EXPECT_EQ(f.label, Label::FAKE);
  EXPECT_EQ(f.group_id, 3);
}

TEST(GenFake, ChangesOnlyInsideDiscAndStaysInRange) {
  const Sample r = gen_real(5, 32);
  const Sample f = gen_fake(r);
  EXPECT_FALSE(identical(f.image, r.image));
  for (double v : f.image.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(f.image.at(c, 0, 0), r.image.at(c, 0, 0));
    EXPECT_EQ(f.image.at(c, 31, 31), r.image.at(c, 31, 31));
  }
}

TEST(Corpus, SplitSizesAndDisjointGroups) {
  const Corpus c = build_corpus(100, 16, SplitFractions{}, 3);
  EXPECT_EQ(c.train.size(), 2u * 72);
  EXPECT_EQ(c.val.size(), 2u * 14);
  EXPECT_EQ(c.test.size(), 2u * 14);
  for (const auto* split : {&c.train, &c.val, &c.test}) {
    EXPECT_EQ(c.count(*split, Label::REAL), c.count(*split, Label::FAKE));
  }
  std::set<std::int64_t> tr, va, te;
  for (const Sample& s : c.train) tr.insert(s.group_id);
  for (const Sample& s : c.val) va.insert(s.group_id);
  for (const Sample& s : c.test) te.insert(s.group_id);
  for (auto g : va) EXPECT_FALSE(tr.count(g));
  for (auto g : te) EXPECT_FALSE(tr.count(g) || va.count(g));
}

TEST(Corpus, BadArgumentsRejected) {
  EXPECT_THROW(build_corpus(10, 15, SplitFractions{}, 1), std::invalid_argument);
  EXPECT_THROW(build_corpus(10, 16, SplitFractions{0.5, 0.5, 0.5}, 1), std::invalid_argument);
}

TEST(Corpus, HighFrequencyGapDetectable) {
  std::vector<Sample> pairs;
  for (std::uint64_t g = 0; g < 200; ++g) {
    Sample r = gen_real(mix_seed(11, g), 32);
    pairs.push_back(gen_fake(r));
    pairs.push_back(std::move(r));
  }
  std::vector<double> real, fake;
  for (const Sample& s : pairs) (s.label == Label::REAL ? real : fake).push_back(image_band_energies(s.image).back());
  EXPECT_LT(oracle::welch_p_value(real, fake), 0.01);
}

TEST(Ppm, RoundTripAndErrors) {
  const auto dir = oracle::scratch_dir("ppm");
  const Tensor img = quantize_8bit(gen_real(1, 16).image);
  write_ppm(dir / "a.ppm", img);
  EXPECT_TRUE(identical(read_ppm(dir / "a.ppm"), img));
  std::string bytes = oracle::slurp(dir / "a.ppm");
  std::ofstream(dir / "short.ppm", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
  try {
    read_ppm(dir / "short.ppm");
    FAIL() << "truncated file accepted";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("short.ppm"), std::string::npos);
  }
  std::ofstream(dir / "p3.ppm") << "P3\n1 1\n255\n0 0 0\n";
  EXPECT_THROW(read_ppm(dir / "p3.ppm"), IoError);
}

TEST(CorpusIo, SaveLoadSaveIsByteIdempotent) {
  const auto a = oracle::scratch_dir("corpus_a"), b = oracle::scratch_dir("corpus_b");
  const Corpus c = build_corpus(12, 16, SplitFractions{}, 5);
  save_corpus(c, a);
  const Corpus loaded = load_corpus(a);
  save_corpus(loaded, b);
  EXPECT_EQ(oracle::tree_bytes(a), oracle::tree_bytes(b));
  const Corpus q = quantized(c);
  ASSERT_EQ(loaded.train.size(), q.train.size());
  for (std::size_t i = 0; i < q.train.size(); ++i) {
    EXPECT_TRUE(identical(loaded.train[i].image, q.train[i].image));
    EXPECT_EQ(loaded.train[i].seed, q.train[i].seed);
    EXPECT_EQ(loaded.train[i].label, q.train[i].label);
  }
  EXPECT_EQ(loaded.image_size, 16u);
}

TEST(CorpusIo, MalformedFilesNamePath) {
  const auto dir = oracle::scratch_dir("corpus_bad");
  save_corpus(build_corpus(4, 16, SplitFractions{}, 6), dir);
  std::ofstream(dir / "train/real/img_000000.ppm") << "garbage";
  try {
    load_corpus(dir);
    FAIL() << "corrupt image accepted";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("img_000000.ppm"), std::string::npos);
  }
  std::ofstream(dir / "manifest.csv") << "path,label,group_id,seed\ntrain/real/x.ppm,blue,0,1\n";
  EXPECT_THROW(load_corpus(dir), IoError);
}

TEST(Pipeline, StatsFromTrainOnly) {
  const Corpus c = build_corpus(10, 16, SplitFractions{}, 7);
  const PreparedData d = prepare_data(c, Transform::DCT);
  FeatureSet raw_train(c.train, Transform::DCT);
  const FeaturePipeline refit = fit_pipeline(raw_train, Transform::DCT);
  EXPECT_EQ(d.pipeline.spatial.mean, refit.spatial.mean);
  EXPECT_EQ(d.pipeline.frequency.stddev, refit.frequency.stddev);
  const std::vector<std::size_t> idx = {1, 0};
  const ModelInput in = d.val.batch(idx);
  EXPECT_EQ(in.spatial.shape(), (Shape{2, 3, 16, 16}));
  EXPECT_TRUE(identical(Tensor(Shape{3, 16, 16}, std::vector<double>(in.frequency.raw() + 768, in.frequency.raw() + 1536)),
                        apply_normalization(spectral_feature(c.val[0].image, Transform::DCT).map,
                                            d.pipeline.frequency)));
}
