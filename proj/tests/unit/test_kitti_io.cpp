#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "pseudolidar/error.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "test_support.hpp"

namespace pseudolidar {
namespace {

constexpr const char* kKittiCalib =
    "P0: 7.215377e+02 0.000000e+00 6.095593e+02 0.000000e+00 0.000000e+00 7.215377e+02 1.728540e+02 "
    "0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00\n"
    "P1: 7.215377e+02 0.000000e+00 6.095593e+02 -3.875744e+02 0.000000e+00 7.215377e+02 1.728540e+02 "
    "0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00\n"
    "P2: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 "
    "2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03\n"
    "P3: 7.215377e+02 0.000000e+00 6.095593e+02 -3.395242e+02 0.000000e+00 7.215377e+02 1.728540e+02 "
    "2.199936e+00 0.000000e+00 0.000000e+00 1.000000e+00 2.729905e-03\n"
    "R0_rect: 9.999239e-01 9.837760e-03 -7.445048e-03 -9.869795e-03 9.999421e-01 -4.278459e-03 "
    "7.402527e-03 4.351614e-03 9.999631e-01\n"
    "Tr_velo_to_cam: 7.533745e-03 -9.999714e-01 -6.166020e-04 -4.069766e-03 1.480249e-02 7.280733e-04 "
    "-9.998902e-01 -7.631618e-02 9.998621e-01 7.523790e-03 1.480755e-02 -2.717806e-01\n"
    "Tr_imu_to_velo: 9.999976e-01 7.553071e-04 -2.035826e-03 -8.086759e-01 -7.854027e-04 9.998898e-01 "
    "-1.482298e-02 3.195559e-01 2.024406e-03 1.482454e-02 9.998881e-01 -7.997231e-01\n";

TEST(KittiCalib, ParsesKittiFile) {
  const CalibSet c = parse_calib(kKittiCalib);
  EXPECT_DOUBLE_EQ(c.intrinsics().fu, 721.5377);
  EXPECT_DOUBLE_EQ(c.intrinsics().cv, 172.854);
  EXPECT_NEAR(c.baseline(), (44.85728 + 339.5242) / 721.5377, 1e-12);
  // The camera sits about 27 cm ahead of the LiDAR.
  const Point3 p = lidar_to_cam(Point3(10.0, 0.0, 0.0), c.extrinsic());
  EXPECT_NEAR(p.z(), 9.73, 0.02);
}

TEST(KittiCalib, FormatRoundTrip) {
  std::mt19937_64 rng(5);
  const CalibSet c = testing::random_calib(rng, 64, 32);
  const CalibSet back = parse_calib(format_calib(c));
  EXPECT_EQ(back.p_left(), c.p_left());
  EXPECT_EQ(back.p_right(), c.p_right());
  EXPECT_EQ(back.velo_to_cam(), c.velo_to_cam());
  EXPECT_DOUBLE_EQ(back.baseline(), c.baseline());
  EXPECT_LE((back.extrinsic().translation() - c.extrinsic().translation()).norm(), 1e-12);
}

TEST(KittiCalib, MalformedRejected) {
  EXPECT_THROW(parse_calib("P2: 1 2 3\n"), ParseError);
  EXPECT_THROW(parse_calib("R0_rect: 1 0 0 0 1 0 0 0 1\n"), ParseError);
  std::string bad = kKittiCalib;
  bad.replace(bad.find("7.215377e+02"), 12, "seven");
  EXPECT_THROW(parse_calib(bad), ParseError);
}

TEST(KittiLabels, ParsesGroundTruthLine) {
  const auto labels =
      parse_labels("Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59\n");
  ASSERT_EQ(labels.size(), 1u);
  const LabelRecord& l = labels[0];
  EXPECT_EQ(l.type, "Car");
  EXPECT_EQ(l.occlusion, 0);
  EXPECT_DOUBLE_EQ(l.alpha, -1.58);
  EXPECT_DOUBLE_EQ(l.y2, 200.12);
  EXPECT_DOUBLE_EQ(l.h, 1.65);
  EXPECT_DOUBLE_EQ(l.l, 3.64);
  EXPECT_DOUBLE_EQ(l.z, 46.70);
  EXPECT_DOUBLE_EQ(l.rotation_y, -1.59);
  EXPECT_FALSE(l.score.has_value());
}

TEST(KittiLabels, DetectionScoreAndRoundTrip) {
  const auto labels = parse_labels(
      "Pedestrian 0.00 1 0.2 10 20 30 80 1.7 0.6 0.8 1.0 1.6 12.0 0.1 0.875\n"
      "DontCare -1 -1 -10 500 150 600 200 -1 -1 -1 -1000 -1000 -1000 -10\n");
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_DOUBLE_EQ(*labels[0].score, 0.875);
  EXPECT_TRUE(labels[1].is_dont_care());
  EXPECT_EQ(parse_labels(format_labels(labels)), labels);
}

TEST(KittiLabels, MalformedRejected) {
  EXPECT_THROW(parse_labels("Car 0 0 0 1 2 3 4 1 1 1 0 0 10\n"), ParseError);
  EXPECT_THROW(parse_labels("Car 0 7 0 1 2 3 4 1 1 1 0 0 10 0\n"), ParseError);
  EXPECT_THROW(parse_labels("Car 0 0 0 5 2 3 4 1 1 1 0 0 10 0\n"), ParseError);
  EXPECT_TRUE(parse_labels("").empty());
}

TEST(KittiVelodyne, RoundTripIsExactForFloatValues) {
  PointCloud c;
  c.points = {{1.5, -2.25, 0.125, 0.5}, {40.0, 3.0, -1.75, 0.0}};
  const auto bytes = encode_velodyne(c);
  ASSERT_EQ(bytes.size(), 32u);
  float first = 0.0f;
  std::memcpy(&first, bytes.data(), 4);
  EXPECT_EQ(first, 1.5f);
  EXPECT_EQ(decode_velodyne(bytes), c);
}

TEST(KittiVelodyne, TruncatedRecordRejected) {
  std::vector<std::uint8_t> bytes(20, 0);
  EXPECT_THROW(decode_velodyne(bytes), FormatError);
  EXPECT_TRUE(decode_velodyne({}).empty());
}

TEST(KittiVelodyne, FileRoundTrip) {
  testing::TempDir dir("velo");
  PointCloud c;
  c.points = {{0.25, 0.5, 0.75, 1.0}};
  write_velodyne_bin(c, dir / "a.bin");
  EXPECT_EQ(read_velodyne_bin(dir / "a.bin"), c);
  EXPECT_THROW(read_velodyne_bin(dir / "missing.bin"), IoError);
}

TEST(KittiDepth, SampleQuantisation) {
  EXPECT_EQ(depth_to_sample(10.0), 2560);
  EXPECT_EQ(depth_to_sample(1.0 / 1024.0), 1);
  EXPECT_EQ(depth_to_sample(1000.0), 65535);
}

TEST(KittiDepth, PgmRoundTrip) {
  DepthMap d(3, 4);
  d.set(0, 0, 10.0);
  d.set(3, 2, 33.3);
  d.set(1, 1, 79.99);
  const DepthMap back = decode_depth_pgm(encode_depth_pgm(d));
  ASSERT_EQ(back.height(), 3);
  ASSERT_EQ(back.width(), 4);
  EXPECT_EQ(back.valid_count(), 3u);
  EXPECT_DOUBLE_EQ(back.at(0, 0), 10.0);
  EXPECT_NEAR(back.at(3, 2), 33.3, 0.5 / kDepthScale);
  EXPECT_FALSE(back.valid(2, 2));
}

TEST(KittiDepth, RejectsEightBitAndPng) {
  const std::string p5 = "P5\n2 1\n255\nab";
  const std::vector<std::uint8_t> bytes(p5.begin(), p5.end());
  EXPECT_THROW(decode_depth_pgm(bytes), FormatError);
  testing::TempDir dir("depth");
  EXPECT_THROW(write_depth_image(DepthMap(2, 2), dir / "x.png"), IoError);
}

TEST(KittiPly, RoundTripExact) {
  PointCloud c;
  c.points = {{0.1, 0.2, 0.30000000000000004, 1.0}, {-5.0, 1e-7, 123.456, 0.0}};
  EXPECT_EQ(parse_ply(format_ply(c)), c);
  EXPECT_THROW(parse_ply("ply\nformat binary_little_endian 1.0\nend_header\n"), FormatError);
}

TEST(KittiPpm, RoundTripOnEightBitGrid) {
  RgbImage img(2, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i * 13 % 256) / 255.0;
  EXPECT_EQ(decode_ppm(encode_ppm(img)), img);
}

TEST(KittiFormat, ShortestRoundTripDouble) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 721.5377, 0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

}  // namespace
}  // namespace pseudolidar
