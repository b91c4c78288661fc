#include <gtest/gtest.h>

#include <cmath>

#include "pseudolidar/error.hpp"
#include "pseudolidar/synth.hpp"
#include "test_support.hpp"

namespace pseudolidar {
namespace {

Scene empty_scene() {
  Scene s;
  s.intrinsics = {64.0, 64.0, 31.5, 15.5};
  s.lidar_to_left = default_lidar_mount();
  return s;
}

Scene fronto_scene() {
  Scene s = empty_scene();
  Obstacle ob;
  ob.box.x = 0.0;
  ob.box.y = s.ground_height;
  ob.box.z = 10.0;
  ob.box.h = 1.6;
  ob.box.w = 1.8;
  ob.box.l = 4.0;
  ob.box.yaw = 0.0;  // length along x, near face at z - w / 2
  s.obstacles.push_back(ob);
  return s;
}

TEST(Synth, GroundPlaneDepthIsAnalytic) {
  const Scene s = empty_scene();
  const DepthMap d = render_depth_gt(s, Side::kLeft);
  for (int v = 0; v < s.height; ++v) {
    for (int u = 0; u < s.width; ++u) {
      if (v <= s.intrinsics.cv) {
        EXPECT_FALSE(d.valid(u, v));
        continue;
      }
      const double z = s.ground_height * s.intrinsics.fv / (v - s.intrinsics.cv);
      const double range = z * std::hypot((u - s.intrinsics.cu) / s.intrinsics.fu,
                                          (v - s.intrinsics.cv) / s.intrinsics.fv, 1.0);
      if (range > s.max_range) {
        EXPECT_FALSE(d.valid(u, v));
      } else {
        ASSERT_TRUE(d.valid(u, v));
        EXPECT_NEAR(d.at(u, v), z, 1e-9 * z);
      }
    }
  }
}

TEST(Synth, FrontoParallelFaceHasConstantDepth) {
  const Scene s = fronto_scene();
  // The roof is below the camera: rows under the horizon see the face.
  for (double u : {28.0, 31.5, 35.25}) {
    for (double v : {17.0, 19.5, 22.0}) {
      const auto z = depth_at(s, Side::kLeft, u, v);
      ASSERT_TRUE(z.has_value());
      EXPECT_NEAR(*z, 9.1, 1e-12);
    }
  }
}

TEST(Synth, RightViewIsShiftedByDisparity) {
  const Scene s = fronto_scene();
  const double disparity = s.intrinsics.fu * s.baseline / 9.1;
  for (double u : {29.0, 31.5, 34.0}) {
    const auto l = depth_at(s, Side::kLeft, u, 19.0);
    const auto r = depth_at(s, Side::kRight, u - disparity, 19.0);
    ASSERT_TRUE(l && r);
    EXPECT_NEAR(*l, *r, 1e-12);
  }
  // Ground: same row, disparity f b / Z.
  const Scene e = empty_scene();
  const double z = *depth_at(e, Side::kLeft, 20.0, 25.0);
  EXPECT_NEAR(*depth_at(e, Side::kRight, 20.0 - e.intrinsics.fu * e.baseline / z, 25.0), z, 1e-9);
}

TEST(Synth, LidarHitsAgreeWithCameraDepth) {
  const SynthSample s = make_sample(42);
  const RigidTransform& t = s.scene.lidar_to_left;
  std::size_t in_view = 0, agree = 0;
  for (const auto& p : s.scan.points) {
    const Point3 c = lidar_to_cam(p.position(), t);
    if (c.z() <= 0.5) continue;
    const PixelDepth pd = project(c, s.scene.intrinsics);
    if (pd.u < 0 || pd.v < 0 || pd.u > s.scene.width - 1 || pd.v > s.scene.height - 1) continue;
    ++in_view;
    const auto z = depth_at(s.scene, Side::kLeft, pd.u, pd.v);
    ASSERT_TRUE(z.has_value());
    EXPECT_LE(*z, c.z() + 1e-9);
    agree += std::abs(*z - c.z()) <= 1e-9 * c.z();
  }
  ASSERT_GT(in_view, 50u);
  EXPECT_GE(static_cast<double>(agree) / in_view, 0.9);
}

TEST(Synth, LidarReturnsOnlyWithinRangeAndKeptBeams) {
  const SynthSample s = make_sample(43);
  const BeamConfig four = BeamConfig::default_four_beam();
  for (const auto& p : s.sparse_scan.points) {
    EXPECT_TRUE(four.keeps(four.bin_of(elevation_angle(p.position()))));
  }
  for (const auto& p : s.scan.points) EXPECT_LE(p.position().norm(), 80.0 + 1e-9);
  EXPECT_GT(s.sparse_scan.size(), 0u);
  EXPECT_LT(s.sparse_scan.size(), s.scan.size());
}

TEST(Synth, Deterministic) {
  const SynthSample a = make_sample(7), b = make_sample(7);
  EXPECT_EQ(a.stereo.left_image, b.stereo.left_image);
  EXPECT_EQ(a.stereo.gt_depth, b.stereo.gt_depth);
  EXPECT_EQ(a.scan, b.scan);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(make_sample(8).stereo.left_image, a.stereo.left_image);
  EXPECT_NE(scene_seed(1, 0), scene_seed(1, 1));
  EXPECT_NE(scene_seed(1, 0), scene_seed(2, 0));
}

TEST(Synth, RandomScenesRespectConfig) {
  const SynthConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = random_scene(seed, cfg);
    EXPECT_GE(s.obstacles.size(), 2u);
    EXPECT_LE(s.obstacles.size(), 4u);
    for (const auto& o : s.obstacles) {
      EXPECT_GE(o.box.z, cfg.min_distance);
      EXPECT_LE(o.box.z, cfg.max_distance);
      EXPECT_EQ(o.box.y, s.ground_height);
    }
  }
}

TEST(Synth, LabelBoxesContainEveryObjectPixel) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scene s = random_scene(seed);
    const auto labels = scene_labels(s);
    ASSERT_EQ(labels.size(), s.obstacles.size());
    for (int v = 0; v < s.height; ++v) {
      for (int u = 0; u < s.width; ++u) {
        const Point3 dir((u - s.intrinsics.cu) / s.intrinsics.fu, (v - s.intrinsics.cv) / s.intrinsics.fv, 1.0);
        const auto hit = cast_ray(s, Point3::Zero(), dir);
        if (!hit || hit->obstacle < 0) continue;
        const LabelRecord& l = labels[hit->obstacle];
        EXPECT_GE(u, l.x1 - 1e-9);
        EXPECT_LE(u, l.x2 + 1e-9);
        EXPECT_GE(v, l.y1 - 1e-9);
        EXPECT_LE(v, l.y2 + 1e-9);
        EXPECT_LT(l.occlusion, 3);
      }
    }
  }
}

TEST(Synth, ImagesAreShadedAndQuantised) {
  const SynthSample s = make_sample(5);
  for (double x : s.stereo.left_image.data) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    EXPECT_DOUBLE_EQ(x * 255.0, std::round(x * 255.0));
  }
  EXPECT_EQ(quantize_8bit(s.stereo.left_image), s.stereo.left_image);
}

TEST(Synth, ExportLoadRoundTrip) {
  testing::TempDir dir("synth");
  const auto samples = make_dataset(2, 99);
  export_dataset(samples, dir.path());
  EXPECT_EQ(dataset_size(dir.path()), 2);
  const StereoSample loaded = load_sample(dir.path(), 1);
  const StereoSample& orig = samples[1].stereo;
  EXPECT_EQ(loaded.left_image, orig.left_image);
  EXPECT_EQ(loaded.right_image, orig.right_image);
  ASSERT_EQ(loaded.gt_depth.valid_count(), orig.gt_depth.valid_count());
  for (int v = 0; v < orig.gt_depth.height(); ++v)
    for (int u = 0; u < orig.gt_depth.width(); ++u)
      if (orig.gt_depth.valid(u, v)) EXPECT_NEAR(loaded.gt_depth.at(u, v), orig.gt_depth.at(u, v), 0.5 / 256);
  EXPECT_LE(std::abs(static_cast<long>(loaded.left_sparse.valid_count()) -
                     static_cast<long>(orig.left_sparse.valid_count())),
            2);
  EXPECT_EQ(read_labels(dir / ("label_2/" + sample_name(1) + ".txt")), samples[1].labels);
  EXPECT_THROW(dataset_size(dir / "missing"), IoError);
  EXPECT_THROW(make_dataset(0, 1), DomainError);
}

TEST(Synth, InvalidScenesRejected) {
  Scene s = fronto_scene();
  s.baseline = 0.0;
  EXPECT_THROW(s.validate(), InvariantError);
  s = fronto_scene();
  s.obstacles[0].box.y = 1.0;
  EXPECT_THROW(s.validate(), InvariantError);
}

}  // namespace
}  // namespace pseudolidar
