#include <gtest/gtest.h>

#include <cmath>

#include "pseudolidar/error.hpp"
#include "pseudolidar/fusion_net.hpp"
#include "test_support.hpp"

namespace pseudolidar {
namespace {

using testing::random_toy_sample;
using testing::toy_architecture;

StereoSample swapped(const StereoSample& s) {
  StereoSample t = s;
  std::swap(t.left_image, t.right_image);
  std::swap(t.left_sparse, t.right_sparse);
  return t;
}

std::size_t conv_count(std::size_t out, std::size_t in, std::size_t k) { return out * in * k * k + out; }

TEST(Architecture, JsonRoundTripAndValidation) {
  Architecture a = toy_architecture();
  a.cost_aggregation = true;
  a.depth_min = 2.0;
  EXPECT_EQ(Architecture::from_json(a.to_json()), a);
  a.base_channels = 0;
  EXPECT_THROW(a.validate(), InvariantError);
}

TEST(NetParams, LayoutAndCount) {
  const Architecture a = toy_architecture();  // C0 = 2, F = 4
  const NetParams p = NetParams::initialize(a, 1);
  EXPECT_EQ(p.get("image.stem.w").c(), 3);
  EXPECT_EQ(p.get("lidar.stem.w").c(), 2);
  EXPECT_EQ(p.get("image.stage4.down.w").n(), 32);
  EXPECT_EQ(p.get("image.up1.proj.w").h(), 1);
  EXPECT_EQ(p.get("lidar.up3.conv_b.w").n(), 4);
  EXPECT_FALSE(p.contains("aggregation.w"));
  EXPECT_THROW(p.get("nope"), InvariantError);

  std::size_t tower = conv_count(2, 3, 3);
  for (int i = 1; i <= 4; ++i) {
    const std::size_t cin = 2u << (i - 1), cout = 2u << i;
    tower += conv_count(cout, cin, 3) + 2 * conv_count(cout, cout, 3);
  }
  const std::size_t up[3][2] = {{32, 16}, {16, 8}, {8, 4}};
  for (const auto& [cin, cout] : up)
    tower += conv_count(cout, cin, 3) + conv_count(cout, cout, 3) + conv_count(cout, cin, 1);
  const std::size_t lidar_stem_diff = conv_count(2, 3, 3) - conv_count(2, 2, 3);
  EXPECT_EQ(p.parameter_count(), 2 * tower - lidar_stem_diff);
}

TEST(NetParams, InitialisationDeterministic) {
  const Architecture a = toy_architecture();
  EXPECT_EQ(NetParams::initialize(a, 9), NetParams::initialize(a, 9));
  EXPECT_NE(NetParams::initialize(a, 9), NetParams::initialize(a, 10));
  const NetParams p = NetParams::initialize(a, 9);
  for (std::size_t i = 0; i < p.get("image.stage2.res_a.b").size(); ++i)
    EXPECT_EQ(p.get("image.stage2.res_a.b")[i], 0.0);
}

TEST(NetParams, SerializeRoundTripBitIdentical) {
  Architecture a = toy_architecture();
  a.cost_aggregation = true;
  const NetParams p = NetParams::initialize(a, 4);
  const auto bytes = p.serialize();
  ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 8), std::string("PLCKPT\0\1", 8));
  const NetParams q = NetParams::deserialize(bytes);
  EXPECT_EQ(q, p);
  EXPECT_EQ(q.serialize(), bytes);

  testing::TempDir dir("ckpt");
  p.save(dir / "a.ckpt");
  EXPECT_EQ(NetParams::load(dir / "a.ckpt"), p);
  EXPECT_EQ(read_file_bytes(dir / "a.ckpt"), bytes);
}

TEST(NetParams, CorruptCheckpointsRejected) {
  const auto bytes = NetParams::initialize(toy_architecture(), 4).serialize();
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(NetParams::deserialize(bad_magic), FormatError);
  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 8);
  EXPECT_THROW(NetParams::deserialize(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(NetParams::deserialize(trailing), FormatError);
  EXPECT_THROW(NetParams::load("/nonexistent/x.ckpt"), IoError);
}

TEST(ExtractFeatures, ShapeAndInputChecks) {
  std::mt19937_64 rng(1);
  const StereoSample s = random_toy_sample(rng);
  const NetParams p = NetParams::initialize(toy_architecture(), 1);
  const FeatureMap f = extract_features(s.left_image, s.left_sparse, p);
  EXPECT_EQ(f.n(), 1);
  EXPECT_EQ(f.c(), 4);
  EXPECT_EQ(f.h(), 4);
  EXPECT_EQ(f.w(), 4);
  EXPECT_TRUE(f.all_finite());
  EXPECT_THROW(extract_features(RgbImage(20, 16), DepthMap(20, 16), p), ShapeError);
  EXPECT_THROW(extract_features(RgbImage(16, 16), DepthMap(16, 32), p), ShapeError);
}

TEST(ExtractFeatures, SparseTensorEncoding) {
  DepthMap d(1, 2);
  d.set(1, 0, 40.0);
  const Tensor t = sparse_tensor(d, 80.0);
  EXPECT_EQ(t.at(0, 0, 0, 1), 0.5);
  EXPECT_EQ(t.at(0, 1, 0, 1), 1.0);
  EXPECT_EQ(t.at(0, 0, 0, 0), 0.0);
  EXPECT_EQ(t.at(0, 1, 0, 0), 0.0);
}

TEST(FusionNet, SwappingInputsSwapsFeaturesBitExactly) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    const StereoSample s = random_toy_sample(rng);
    const NetParams p = NetParams::initialize(toy_architecture(), trial);
    ForwardState a, b;
    forward_full(s, p, &a);
    forward_full(swapped(s), p, &b);
    EXPECT_EQ(a.decv.left, b.decv.right);
    EXPECT_EQ(a.decv.right, b.decv.left);
  }
}

TEST(FusionNet, OutputShapeAndRange) {
  std::mt19937_64 rng(3);
  const StereoSample s = random_toy_sample(rng);
  const Architecture a = toy_architecture();
  const DepthMap d = forward_full(s, NetParams::initialize(a, 3));
  ASSERT_EQ(d.height(), 16);
  ASSERT_EQ(d.width(), 16);
  EXPECT_EQ(d.valid_count(), d.size());
  for (double v : d.values()) {
    EXPECT_GE(v, a.depth_min);
    EXPECT_LE(v, a.depth_max);
  }
}

TEST(FusionNet, ZeroLidarIgnoresSparseInput) {
  std::mt19937_64 rng(4);
  const StereoSample s = random_toy_sample(rng);
  const NetParams p = NetParams::initialize(toy_architecture(), 4);
  ForwardOptions zero;
  zero.zero_lidar = true;
  const DepthMap fused = forward_full(s, p);
  const DepthMap ablated = forward_full(s, p, nullptr, zero);
  EXPECT_NE(fused, ablated);
  StereoSample other = s;
  other.left_sparse = DepthMap(16, 16);
  other.right_sparse = DepthMap(16, 16);
  other.left_sparse.set(3, 3, 12.0);
  EXPECT_EQ(forward_full(other, p, nullptr, zero), ablated);
  EXPECT_NE(forward_full(other, p), fused);
}

TEST(FusionNet, TrainingMask) {
  DepthMap gt(1, 4);
  gt.set(0, 0, 0.5);
  gt.set(1, 0, 1.0);
  gt.set(2, 0, 80.0);
  const auto m = training_mask(gt, Architecture{});
  EXPECT_EQ(m, (std::vector<std::uint8_t>{0, 1, 1, 0}));
}

TEST(FusionNet, LossMatchesForwardAndGradientShapes) {
  std::mt19937_64 rng(5);
  const StereoSample s = random_toy_sample(rng);
  const NetParams p = NetParams::initialize(toy_architecture(), 5);
  const SampleGradient g = loss_and_gradient(s, p);
  EXPECT_DOUBLE_EQ(g.loss, sample_loss(s, p));
  EXPECT_EQ(g.grads.entries().size(), p.entries().size());
  EXPECT_EQ(g.grad_left_image.c(), 3);
  EXPECT_EQ(g.grad_right_lidar.c(), 2);
  EXPECT_GT(g.grads.get("image.stem.w").squared_norm(), 0.0);
  EXPECT_GT(g.grads.get("lidar.stem.w").squared_norm(), 0.0);
}

TEST(FusionNet, GradientCheckSmall) {
  const auto r = testing::full_chain_gradient_check(77, 3, 12);
  EXPECT_GT(r.checked, 24);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
  const auto ra = testing::full_chain_gradient_check(78, 2, 12, true);
  EXPECT_LE(ra.max_rel_error, 1e-4) << ra.worst;
}

TEST(Training, ZeroLearningRateLeavesParametersUnchanged) {
  std::mt19937_64 rng(6);
  std::vector<StereoSample> batch{random_toy_sample(rng), random_toy_sample(rng)};
  const NetParams p = NetParams::initialize(toy_architecture(), 6);
  const auto [q, loss] = train_step(batch, p, 0.0);
  EXPECT_EQ(q, p);
  EXPECT_DOUBLE_EQ(loss, dataset_loss(batch, p));
  EXPECT_THROW(train_step(std::span<const StereoSample>{}, p, 0.1), InvariantError);
}

TEST(Training, BatchGradientIndependentOfThreadCount) {
  std::mt19937_64 rng(7);
  std::vector<StereoSample> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(random_toy_sample(rng));
  const NetParams p = NetParams::initialize(toy_architecture(), 7);
  const auto one = batch_gradient(batch, p, {}, 1);
  const auto three = batch_gradient(batch, p, {}, 3);
  EXPECT_EQ(one.first, three.first);
  EXPECT_EQ(one.second, three.second);
}

TEST(Training, GradientStepsReduceLoss) {
  std::mt19937_64 rng(8);
  std::vector<StereoSample> batch{random_toy_sample(rng)};
  NetParams p = NetParams::initialize(toy_architecture(), 8);
  const double initial = dataset_loss(batch, p);
  for (int i = 0; i < 5; ++i) p = train_step(batch, p, 1e-3).first;
  EXPECT_LT(dataset_loss(batch, p), initial);
}

TEST(Training, AdamMovesEveryParameterByAboutLr) {
  std::mt19937_64 rng(9);
  std::vector<StereoSample> batch{random_toy_sample(rng)};
  NetParams p = NetParams::initialize(toy_architecture(), 9);
  const NetParams before = p;
  const auto [loss, grads] = batch_gradient(batch, p);
  AdamOptimizer adam(1e-3);
  adam.step(p, grads);
  // first step: update = lr * g / (|g| + eps) per coordinate
  const Tensor& w0 = before.get("image.stem.w");
  const Tensor& w1 = p.get("image.stem.w");
  const Tensor& g = grads.get("image.stem.w");
  for (std::size_t i = 0; i < w0.size(); ++i) {
    if (std::abs(g[i]) > 1e-4) EXPECT_NEAR(std::abs(w1[i] - w0[i]), 1e-3, 1e-6);
  }
}

}  // namespace
}  // namespace pseudolidar
