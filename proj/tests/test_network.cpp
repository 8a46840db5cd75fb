#include <gtest/gtest.h>

#include <random>

#include "mdcs/network.hpp"
#include "oracles.hpp"

using namespace mdcs;

namespace {

ModelInput random_input(std::size_t batch, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {oracle::random_tensor(Shape{batch, 3, n, n}, rng), oracle::random_tensor(Shape{batch, 3, n, n}, rng)};
}

}  // namespace

TEST(Network, SameSeedSameParameters) {
  DualBranchModel a = build_model(StitchMode::ALL_STITCHES, 32, 9);
  DualBranchModel b = build_model(StitchMode::ALL_STITCHES, 32, 9);
  auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(identical(*pa[i].tensor, *pb[i].tensor)) << pa[i].name;
  DualBranchModel c = build_model(StitchMode::ALL_STITCHES, 32, 10);
  EXPECT_FALSE(identical(*c.parameters()[0].tensor, *pa[0].tensor));
}

TEST(Network, StitchCounts) {
  EXPECT_EQ(build_model(StitchMode::ALL_STITCHES, 16, 1).stitches.size(), 4u);
  EXPECT_EQ(build_model(StitchMode::ONE_STITCH, 16, 1).stitches.size(), 1u);
  EXPECT_EQ(build_model(StitchMode::NO_STITCH, 16, 1).stitches.size(), 0u);
  DualBranchModel rgb = build_model(StitchMode::RGB_ONLY, 16, 1);
  EXPECT_TRUE(rgb.spatial.has_value());
  EXPECT_FALSE(rgb.frequency.has_value());
  EXPECT_EQ(rgb.classifier_weights.shape(), (Shape{2, 128}));
  EXPECT_EQ(build_model(StitchMode::NO_STITCH, 16, 1).classifier_weights.shape(), (Shape{2, 256}));
}

TEST(Network, ParameterCountFormula) {
  for (StitchMode m : {StitchMode::RGB_ONLY, StitchMode::FREQ_ONLY, StitchMode::NO_STITCH, StitchMode::ONE_STITCH,
                       StitchMode::ALL_STITCHES}) {
    for (std::size_t n : {16u, 32u, 64u}) EXPECT_EQ(build_model(m, n, 1).parameter_count(), parameter_count(m, n));
  }
  // 2 x (12075 + 128*2048 + 128) + 256*2 + 2 + 16
  EXPECT_EQ(parameter_count(StitchMode::ALL_STITCHES, 64), 549224u);
}

TEST(Network, PreFlattenShapeAt64) {
  DualBranchModel m = build_model(StitchMode::ALL_STITCHES, 64, 2);
  Tape tape;
  const ForwardTrace tr = m.forward(tape, random_input(1, 64, 3));
  ASSERT_EQ(tr.spatial_stages.size(), 4u);
  EXPECT_EQ(tape.value(tr.spatial_stages.back()).shape(), (Shape{1, 128, 4, 4}));
  EXPECT_EQ(tape.value(tr.frequency_stages.back()).shape(), (Shape{1, 128, 4, 4}));
  for (std::size_t s = 0; s < 4; ++s)
    EXPECT_EQ(tape.value(tr.spatial_stages[s]).shape(), tape.value(tr.frequency_stages[s]).shape());
  EXPECT_EQ(tape.value(tr.logits).shape(), (Shape{1, 2}));
}

TEST(Network, InvalidSizeAndShapeRejected) {
  EXPECT_THROW(build_model(StitchMode::ALL_STITCHES, 40, 1), std::invalid_argument);
  DualBranchModel m = build_model(StitchMode::ALL_STITCHES, 16, 1);
  Tape tape;
  EXPECT_THROW(m.forward(tape, random_input(1, 32, 1)), ShapeError);
}

TEST(Network, NoStitchBranchesIndependent) {
  DualBranchModel both = build_model(StitchMode::NO_STITCH, 32, 5);
  DualBranchModel rgb = build_model(StitchMode::RGB_ONLY, 32, 5);
  ModelInput in = random_input(2, 32, 6);
  Tape t1;
  const ForwardTrace a = both.forward(t1, in);
  ModelInput zeroed = in;
  zeroed.frequency = Tensor(in.frequency.shape());
  Tape t2;
  const ForwardTrace b = both.forward(t2, zeroed);
  EXPECT_TRUE(identical(t1.value(*a.spatial_features), t2.value(*b.spatial_features)));
  EXPECT_FALSE(identical(t1.value(*a.frequency_features), t2.value(*b.frequency_features)));
  Tape t3;
  const ForwardTrace c = rgb.forward(t3, ModelInput{in.spatial, Tensor(Shape{1})});
  EXPECT_TRUE(identical(t1.value(*a.spatial_features), t3.value(*c.spatial_features)));
}

TEST(Network, IdentityStitchesReduceToNoStitch) {
  DualBranchModel all = build_model(StitchMode::ALL_STITCHES, 32, 8);
  DualBranchModel none = build_model(StitchMode::NO_STITCH, 32, 8);
  for (CrossStitchUnit& u : all.stitches) u = CrossStitchUnit(1, 0, 0, 1);
  const ModelInput in = random_input(2, 32, 9);
  Tape ta, tb;
  EXPECT_TRUE(identical(ta.value(all.logits(ta, in)), tb.value(none.logits(tb, in))));
}

TEST(Network, StitchesCarryFrequencyIntoSpatial) {
  DualBranchModel m = build_model(StitchMode::ALL_STITCHES, 32, 10);
  ModelInput in = random_input(1, 32, 11);
  Tape t1;
  const ForwardTrace a = m.forward(t1, in);
  in.frequency[5 * 32 + 7] += 0.5;
  Tape t2;
  const ForwardTrace b = m.forward(t2, in);
  EXPECT_FALSE(identical(t1.value(a.spatial_stages[0]), t2.value(b.spatial_stages[0])));
}

TEST(Network, ParametersInCheckpointOrder) {
  DualBranchModel m = build_model(StitchMode::ALL_STITCHES, 16, 1);
  const auto p = m.parameters();
  EXPECT_EQ(p.front().name, "spatial.block1.depthwise");
  EXPECT_EQ(p[p.size() - 5].name, "classifier.bias");
  for (std::size_t u = 0; u < 4; ++u) {
    EXPECT_EQ(p[p.size() - 4 + u].group, ParamGroup::STITCH);
    EXPECT_EQ(p[p.size() - 4 + u].tensor, &m.stitches[u].alpha);
  }
}
