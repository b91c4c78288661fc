#pragma once

#include <string>
#include <vector>

#include "pseudolidar/depth_map.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "pseudolidar/point_cloud.hpp"

namespace pseudolidar {

/// Uniform elevation binning of a spinning LiDAR and the subset of bins
/// (beams) that a simulated sensor keeps.
struct BeamConfig {
  static constexpr double kDefaultElevMinDeg = -24.9;
  static constexpr double kDefaultElevMaxDeg = 2.0;
  // Narrow fan used for the cheap 4-beam sensor.
  static constexpr double kFanMinDeg = -2.5;
  static constexpr double kFanMaxDeg = 0.5;

  int n_bins = 64;
  double elev_min = kDefaultElevMinDeg * kDegToRad;  // rad
  double elev_max = kDefaultElevMaxDeg * kDegToRad;  // rad
  std::vector<int> kept_bins;                         // sorted, unique

  static constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

  /// 64 bins over [-24.9 deg, +2.0 deg], keeping the 4 bins that contain
  /// 4 uniformly spaced angles inside [-2.5 deg, +0.5 deg].
  static BeamConfig default_four_beam();
  /// Same binning with every bin kept.
  static BeamConfig all_beams(int n_bins = 64);
  /// `beams` == n_bins keeps everything; otherwise `beams` angles uniformly
  /// spaced over the narrow fan (or over the full field of view when the fan
  /// holds fewer distinct bins). Throws InvariantError when not realisable.
  static BeamConfig with_beams(int beams);

  /// Throws InvariantError unless elev_min < elev_max, n_bins >= 1 and
  /// kept_bins is a nonempty sorted unique subset of [0, n_bins).
  void validate() const;

  /// floor((theta - elev_min) / (elev_max - elev_min) * n_bins) clamped to
  /// [0, n_bins).
  int bin_of(double elevation_rad) const;
  /// Elevation at the centre of bin i.
  double bin_center(int bin) const;
  bool keeps(int bin) const;

  /// key=value text, keys beam.n_bins, beam.elev_min_deg, beam.elev_max_deg,
  /// beam.kept_bins (comma separated).
  std::string to_text() const;
  static BeamConfig from_text(const std::string& text);

  bool operator==(const BeamConfig&) const = default;
};

/// atan2(z, sqrt(x^2 + y^2)); throws DomainError when (x, y) = (0, 0).
double elevation_angle(const Point3& p);

/// Keeps the points whose elevation bin is in cfg.kept_bins, in input order.
/// Points directly above/below the sensor (x = y = 0) are dropped.
RawScan sparsify(const RawScan& scan, const BeamConfig& cfg);

/// Projects a LiDAR scan into one camera of the rig. Each point in front of
/// the camera writes its depth Z_c at the rounded pixel; collisions keep the
/// nearest depth.
SparseDepthMap render_sparse_depth(const RawScan& scan, const CalibSet& calib, Side side,
                                   int height, int width);

}  // namespace pseudolidar
