#pragma once

// Command-line front end. run_cli() is the whole program minus main(), so
// tests can drive every subcommand in-process.
//
// Exit status:
//   0  success
//   1  runtime failure (I/O, malformed input, architecture mismatch, ...)
//   2  usage error (unknown flag, missing required flag, bad value)
//   3  evaluation had nothing to average over (no valid pixel / no ground truth)
//
// Flags may also come from `--config FILE` (key=value lines, `#` comments,
// keys are flag names without dashes). Command-line flags override the file.

#include <iosfwd>
#include <string>
#include <vector>

#include "pseudolidar/eval.hpp"
#include "pseudolidar/point_cloud.hpp"

namespace pseudolidar {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitEmptySet = 3;

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct BevRenderOptions {
  double range = 80.0;  // m shown in front of the camera (and +-range/2 sideways)
  double scale = 6.0;   // px per m
};

/// Top-down SVG of camera-frame points and label boxes in the x-z plane.
/// Pixel coordinates: sx = (x + range / 2) * scale, sy = (range - z) * scale.
std::string render_bev_svg(const std::vector<Point3>& camera_points,
                           const std::vector<LabelRecord>& labels, const BevRenderOptions& opts = {});

}  // namespace pseudolidar
