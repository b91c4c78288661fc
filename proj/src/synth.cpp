#include "pseudolidar/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include "pseudolidar/error.hpp"

namespace pseudolidar {
namespace {

constexpr double kSkyIntensity = 0.85;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double normal() {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::mt19937_64 engine_;
};

Eigen::Matrix3d yaw_rotation(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

bool checker_parity(double a, double b, double size) {
  const auto ia = static_cast<long long>(std::floor(a / size));
  const auto ib = static_cast<long long>(std::floor(b / size));
  return ((ia + ib) & 1) == 0;
}

double textured(double albedo, bool parity, double checker_size) {
  return checker_size > 0.0 && !parity ? 0.55 * albedo : albedo;
}

// Entry hit of a ray with one box, origin outside.
std::optional<RayHit> intersect_box(const Obstacle& ob, const Point3& origin, const Point3& dir,
                                    double checker_size) {
  const Box3D& b = ob.box;
  const Eigen::Matrix3d r = yaw_rotation(b.yaw);
  const Point3 centre(b.x, b.y, b.z);
  const Point3 o = r.transpose() * (origin - centre);
  const Point3 d = r.transpose() * dir;
  const double lo[3] = {-b.l / 2, -b.h, -b.w / 2};
  const double hi[3] = {b.l / 2, 0.0, b.w / 2};
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double t1 = (lo[a] - o[a]) / d[a];
    double t2 = (hi[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > tmin) {
      tmin = t1;
      axis = a;
    }
    tmax = std::min(tmax, t2);
  }
  if (axis < 0 || tmin > tmax || tmin <= 0.0) return std::nullopt;
  RayHit hit;
  hit.t = tmin;
  hit.point = origin + tmin * dir;
  Point3 n_local = Point3::Zero();
  n_local[axis] = d[axis] > 0.0 ? -1.0 : 1.0;
  hit.normal = r * n_local;
  const Point3 local = o + tmin * d;
  const int ta = (axis + 1) % 3, tb = (axis + 2) % 3;
  hit.albedo = textured(ob.albedo, checker_parity(local[ta] - lo[ta], local[tb] - lo[tb], checker_size),
                        checker_size);
  return hit;
}

}  // namespace

// ---------------------------------------------------------------- scene

void Scene::validate() const {
  intrinsics.validate();
  if (!(baseline > 0.0)) throw InvariantError("scene: baseline must be positive");
  if (height < 1 || width < 1) throw InvariantError("scene: image size must be positive");
  if (!(max_range > 0.0)) throw InvariantError("scene: max_range must be positive");
  for (const auto& ob : obstacles) {
    ob.box.validate();
    if (std::abs(ob.box.y - ground_height) > 1e-12) {
      throw InvariantError("scene: obstacles must stand on the ground plane");
    }
  }
}

CalibSet Scene::calib() const { return CalibSet::from_rig(intrinsics, baseline, lidar_to_left); }

Point3 Scene::camera_origin(Side side) const {
  return side == Side::kLeft ? Point3::Zero() : Point3(baseline, 0.0, 0.0);
}

std::optional<RayHit> cast_ray(const Scene& scene, const Point3& origin, const Point3& dir) {
  std::optional<RayHit> best;
  if (dir.y() > 0.0 && origin.y() < scene.ground_height) {
    RayHit g;
    g.t = (scene.ground_height - origin.y()) / dir.y();
    g.point = origin + g.t * dir;
    g.point.y() = scene.ground_height;
    g.normal = Point3(0.0, -1.0, 0.0);
    g.albedo = textured(scene.ground_albedo,
                        checker_parity(g.point.x(), g.point.z(), 2.0 * scene.checker_size),
                        scene.checker_size);
    best = g;
  }
  for (int i = 0; i < static_cast<int>(scene.obstacles.size()); ++i) {
    auto hit = intersect_box(scene.obstacles[i], origin, dir, scene.checker_size);
    if (hit && (!best || hit->t < best->t)) {
      hit->obstacle = i;
      best = hit;
    }
  }
  if (best && best->t * dir.norm() > scene.max_range) return std::nullopt;
  return best;
}

namespace {

Point3 pixel_ray(const Intrinsics& k, double u, double v) {
  return {(u - k.cu) / k.fu, (v - k.cv) / k.fv, 1.0};
}

}  // namespace

std::optional<double> depth_at(const Scene& scene, Side side, double u, double v) {
  const auto hit = cast_ray(scene, scene.camera_origin(side), pixel_ray(scene.intrinsics, u, v));
  if (!hit) return std::nullopt;
  return hit->t;
}

DepthMap render_depth_gt(const Scene& scene, Side side) {
  scene.validate();
  DepthMap d(scene.height, scene.width);
  for (int v = 0; v < scene.height; ++v) {
    for (int u = 0; u < scene.width; ++u) {
      if (const auto z = depth_at(scene, side, u, v)) d.set(u, v, *z);
    }
  }
  return d;
}

RawScan simulate_lidar(const Scene& scene, const BeamConfig& cfg, int azimuth_cells,
                       double range_noise_sigma, std::uint64_t noise_seed) {
  scene.validate();
  cfg.validate();
  if (azimuth_cells < 1) throw InvariantError("simulate_lidar: azimuth_cells must be positive");
  Rng noise(noise_seed);
  const Point3 origin = scene.lidar_to_left.translation();
  const Eigen::Matrix3d& r = scene.lidar_to_left.rotation();
  RawScan scan;
  for (int bin : cfg.kept_bins) {
    const double elev = cfg.bin_center(bin);
    for (int j = 0; j < azimuth_cells; ++j) {
      const double az = -std::numbers::pi + (j + 0.5) * 2.0 * std::numbers::pi / azimuth_cells;
      const Point3 d_lidar(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
      const Point3 dir = r * d_lidar;
      const auto hit = cast_ray(scene, origin, dir);
      if (!hit) continue;
      Point3 p = hit->point;
      if (range_noise_sigma > 0.0) p = origin + (hit->t + range_noise_sigma * noise.normal()) * dir;
      const Point3 q = scene.lidar_to_left.apply_inverse(p);
      scan.points.push_back({q.x(), q.y(), q.z(), hit->albedo});
    }
  }
  return scan;
}

std::pair<RgbImage, RgbImage> render_images(const Scene& scene) {
  scene.validate();
  const Point3 light = scene.light_dir.normalized();
  auto render = [&](Side side) {
    RgbImage img(scene.height, scene.width);
    const Point3 origin = scene.camera_origin(side);
    for (int v = 0; v < scene.height; ++v) {
      for (int u = 0; u < scene.width; ++u) {
        const auto hit = cast_ray(scene, origin, pixel_ray(scene.intrinsics, u, v));
        const double value = hit ? hit->albedo * std::max(0.0, hit->normal.dot(light)) : kSkyIntensity;
        for (int c = 0; c < 3; ++c) img.at(u, v, c) = value;
      }
    }
    return img;
  };
  return {render(Side::kLeft), render(Side::kRight)};
}

RgbImage quantize_8bit(const RgbImage& image) {
  RgbImage out = image;
  for (double& x : out.data) x = std::round(std::clamp(x, 0.0, 1.0) * 255.0) / 255.0;
  return out;
}

// ---------------------------------------------------------------- datasets

void SynthConfig::validate() const {
  if (height < 1 || width < 1) throw InvariantError("synth config: image size must be positive");
  if (!(focal > 0.0) || !(baseline > 0.0)) throw InvariantError("synth config: focal and baseline must be positive");
  if (min_obstacles < 0 || max_obstacles < min_obstacles) throw InvariantError("synth config: obstacle counts");
  if (!(min_distance > 0.0) || max_distance < min_distance) throw InvariantError("synth config: distances");
  scan_beams.validate();
  sparse_beams.validate();
}

RigidTransform default_lidar_mount() {
  Eigen::Matrix3d r;
  r << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  return RigidTransform(r, Eigen::Vector3d(0.0, -0.08, -0.27));
}

std::uint64_t scene_seed(std::uint64_t dataset_seed, std::uint64_t index) {
  return splitmix64(dataset_seed ^ splitmix64(index + 1));
}

Scene random_scene(std::uint64_t seed, const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  Scene s;
  s.seed = seed;
  s.height = cfg.height;
  s.width = cfg.width;
  s.intrinsics = {cfg.focal, cfg.focal, (cfg.width - 1) / 2.0, (cfg.height - 1) / 2.0};
  s.baseline = cfg.baseline;
  s.lidar_to_left = default_lidar_mount();
  s.checker_size = cfg.checker_size;
  s.ground_albedo = rng.uniform(0.35, 0.6);
  const int count = rng.integer(cfg.min_obstacles, cfg.max_obstacles);
  const double half_fov = (cfg.width / 2.0) / cfg.focal;
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Obstacle ob;
      ob.box.z = rng.uniform(cfg.min_distance, cfg.max_distance);
      ob.box.x = rng.uniform(-0.8, 0.8) * half_fov * ob.box.z;
      ob.box.y = s.ground_height;
      ob.box.h = rng.uniform(1.4, 1.7);
      ob.box.w = rng.uniform(1.5, 1.9);
      ob.box.l = rng.uniform(3.5, 4.5);
      ob.box.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
      ob.albedo = rng.uniform(0.45, 0.95);
      Box3D padded = ob.box;
      padded.l += 1.0;
      padded.w += 1.0;
      const bool clash = std::any_of(s.obstacles.begin(), s.obstacles.end(), [&](const Obstacle& o) {
        return bev_intersection_area(padded, o.box) > 0.0;
      });
      if (!clash) {
        s.obstacles.push_back(ob);
        break;
      }
    }
  }
  s.validate();
  return s;
}

std::vector<LabelRecord> scene_labels(const Scene& scene) {
  scene.validate();
  const Intrinsics& k = scene.intrinsics;
  std::vector<LabelRecord> labels;
  for (int i = 0; i < static_cast<int>(scene.obstacles.size()); ++i) {
    const Obstacle& ob = scene.obstacles[i];
    const Box3D& b = ob.box;
    LabelRecord l;
    l.type = ob.type;
    l.h = b.h;
    l.w = b.w;
    l.l = b.l;
    l.x = b.x;
    l.y = b.y;
    l.z = b.z;
    l.rotation_y = b.yaw;
    l.alpha = std::remainder(b.yaw - std::atan2(b.x, b.z), 2.0 * std::numbers::pi);

    // 2D box from the projected corners, clipped to the image.
    const Eigen::Matrix3d r = yaw_rotation(b.yaw);
    double x1 = std::numeric_limits<double>::infinity(), y1 = x1, x2 = -x1, y2 = -x1;
    bool behind = false;
    for (int c = 0; c < 8; ++c) {
      const Point3 local((c & 1 ? 0.5 : -0.5) * b.l, c & 2 ? -b.h : 0.0, (c & 4 ? 0.5 : -0.5) * b.w);
      const Point3 p = Point3(b.x, b.y, b.z) + r * local;
      if (p.z() <= 0.1) {
        behind = true;
        continue;
      }
      const PixelDepth pd = project(p, k);
      x1 = std::min(x1, pd.u);
      x2 = std::max(x2, pd.u);
      y1 = std::min(y1, pd.v);
      y2 = std::max(y2, pd.v);
    }
    const double cx1 = std::clamp(x1, 0.0, scene.width - 1.0), cx2 = std::clamp(x2, 0.0, scene.width - 1.0);
    const double cy1 = std::clamp(y1, 0.0, scene.height - 1.0), cy2 = std::clamp(y2, 0.0, scene.height - 1.0);
    const double full = (x2 - x1) * (y2 - y1);
    const double kept = (cx2 - cx1) * (cy2 - cy1);
    l.x1 = cx1;
    l.y1 = cy1;
    l.x2 = cx2;
    l.y2 = cy2;
    l.truncation = behind || !(full > 0.0) ? 1.0 : std::clamp(1.0 - kept / full, 0.0, 1.0);

    // Occlusion from the fraction of the object's pixels that see it first.
    int covered = 0, visible = 0;
    for (int v = 0; v < scene.height; ++v) {
      for (int u = 0; u < scene.width; ++u) {
        const Point3 dir = pixel_ray(k, u, v);
        if (!intersect_box(ob, Point3::Zero(), dir, 0.0)) continue;
        ++covered;
        const auto hit = cast_ray(scene, Point3::Zero(), dir);
        if (hit && hit->obstacle == i) ++visible;
      }
    }
    const double frac = covered ? static_cast<double>(visible) / covered : 0.0;
    l.occlusion = frac >= 0.8 ? 0 : frac >= 0.4 ? 1 : frac > 0.0 ? 2 : 3;
    labels.push_back(l);
  }
  return labels;
}

SynthSample make_sample(std::uint64_t seed, const SynthConfig& cfg) {
  SynthSample s;
  s.scene = random_scene(seed, cfg);
  const CalibSet calib = s.scene.calib();
  auto [left, right] = render_images(s.scene);
  s.stereo.left_image = quantize_8bit(left);
  s.stereo.right_image = quantize_8bit(right);
  s.scan = simulate_lidar(s.scene, cfg.scan_beams, kDefaultAzimuthCells, cfg.range_noise_sigma,
                          splitmix64(seed ^ 0x6c69646172ULL));
  s.sparse_scan = sparsify(s.scan, cfg.sparse_beams);
  s.stereo.left_sparse = render_sparse_depth(s.sparse_scan, calib, Side::kLeft, cfg.height, cfg.width);
  s.stereo.right_sparse = render_sparse_depth(s.sparse_scan, calib, Side::kRight, cfg.height, cfg.width);
  s.stereo.gt_depth = render_depth_gt(s.scene, Side::kLeft);
  s.stereo.calib = calib;
  s.labels = scene_labels(s.scene);
  return s;
}

std::vector<SynthSample> make_dataset(int n_scenes, std::uint64_t seed, const SynthConfig& cfg) {
  if (n_scenes < 1) throw DomainError("make_dataset: need at least one scene");
  std::vector<SynthSample> out;
  out.reserve(n_scenes);
  for (int i = 0; i < n_scenes; ++i) out.push_back(make_sample(scene_seed(seed, i), cfg));
  return out;
}

std::string sample_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

void export_dataset(std::span<const SynthSample> samples, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  for (const char* sub : {"image_2", "image_3", "velodyne", "calib", "label_2", "depth"}) {
    std::error_code ec;
    fs::create_directories(root / sub, ec);
    if (ec) throw IoError("cannot create " + (root / sub).string() + ": " + ec.message());
  }
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    const SynthSample& s = samples[i];
    const std::string name = sample_name(i);
    write_ppm(s.stereo.left_image, root / "image_2" / (name + ".ppm"));
    write_ppm(s.stereo.right_image, root / "image_3" / (name + ".ppm"));
    write_velodyne_bin(s.scan, root / "velodyne" / (name + ".bin"));
    write_file_text(root / "calib" / (name + ".txt"), format_calib(s.stereo.calib));
    write_file_text(root / "label_2" / (name + ".txt"), format_labels(s.labels));
    write_depth_image(s.stereo.gt_depth, root / "depth" / (name + ".pgm"));
  }
}

int dataset_size(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path calib = root / "calib";
  if (!fs::is_directory(calib)) throw IoError("not a dataset (missing calib/): " + root.string());
  int n = 0;
  while (fs::exists(calib / (sample_name(n) + ".txt"))) ++n;
  return n;
}

StereoSample load_sample(const std::filesystem::path& root, int index, const BeamConfig& beams) {
  const std::string name = sample_name(index);
  StereoSample s;
  s.calib = read_calib(root / "calib" / (name + ".txt"));
  s.left_image = read_ppm(root / "image_2" / (name + ".ppm"));
  s.right_image = read_ppm(root / "image_3" / (name + ".ppm"));
  if (s.left_image.height != s.right_image.height || s.left_image.width != s.right_image.width) {
    throw FormatError("sample " + name + ": left and right images differ in size");
  }
  const RawScan scan = sparsify(read_velodyne_bin(root / "velodyne" / (name + ".bin")), beams);
  s.left_sparse = render_sparse_depth(scan, s.calib, Side::kLeft, s.left_image.height, s.left_image.width);
  s.right_sparse = render_sparse_depth(scan, s.calib, Side::kRight, s.left_image.height, s.left_image.width);
  const auto depth = root / "depth" / (name + ".pgm");
  if (std::filesystem::exists(depth)) s.gt_depth = read_depth_image(depth);
  return s;
}

}  // namespace pseudolidar
