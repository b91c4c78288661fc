#include "pseudolidar/lidar_ops.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "pseudolidar/error.hpp"
#include "pseudolidar/geometry.hpp"

namespace pseudolidar {

BeamConfig BeamConfig::all_beams(int n_bins) {
  BeamConfig cfg;
  cfg.n_bins = n_bins;
  cfg.kept_bins.clear();
  for (int i = 0; i < n_bins; ++i) cfg.kept_bins.push_back(i);
  return cfg;
}

BeamConfig BeamConfig::default_four_beam() { return with_beams(4); }

BeamConfig BeamConfig::with_beams(int beams) {
  BeamConfig cfg;
  if (beams < 1 || beams > cfg.n_bins) {
    throw InvariantError("beam config: beam count must be in [1, " + std::to_string(cfg.n_bins) +
                         "], got " + std::to_string(beams));
  }
  if (beams == cfg.n_bins) return all_beams(cfg.n_bins);

  std::set<int> bins;
  const double lo = kFanMinDeg * kDegToRad;
  const double hi = kFanMaxDeg * kDegToRad;
  for (int i = 0; i < beams; ++i) {
    const double angle = beams == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (beams - 1);
    bins.insert(cfg.bin_of(angle));
  }
  if (static_cast<int>(bins.size()) < beams) {
    bins.clear();
    for (int i = 0; i < beams; ++i) {
      bins.insert(static_cast<int>(std::lround(static_cast<double>(i) * (cfg.n_bins - 1) / (beams - 1))));
    }
  }
  cfg.kept_bins.assign(bins.begin(), bins.end());
  return cfg;
}

void BeamConfig::validate() const {
  if (n_bins < 1) throw InvariantError("beam config: n_bins must be positive");
  if (!(elev_min < elev_max) || !std::isfinite(elev_min) || !std::isfinite(elev_max)) {
    throw InvariantError("beam config: elev_min must be below elev_max");
  }
  if (kept_bins.empty()) throw InvariantError("beam config: kept_bins is empty");
  for (std::size_t i = 0; i < kept_bins.size(); ++i) {
    if (kept_bins[i] < 0 || kept_bins[i] >= n_bins) {
      throw InvariantError("beam config: kept bin " + std::to_string(kept_bins[i]) +
                           " outside [0, n_bins)");
    }
    if (i > 0 && kept_bins[i] <= kept_bins[i - 1]) {
      throw InvariantError("beam config: kept_bins must be sorted and unique");
    }
  }
}

int BeamConfig::bin_of(double elevation_rad) const {
  const double t = (elevation_rad - elev_min) / (elev_max - elev_min) * n_bins;
  const double f = std::floor(t);
  if (f < 0.0) return 0;
  if (f >= n_bins) return n_bins - 1;
  return static_cast<int>(f);
}

double BeamConfig::bin_center(int bin) const {
  return elev_min + (bin + 0.5) * (elev_max - elev_min) / n_bins;
}

bool BeamConfig::keeps(int bin) const {
  return std::binary_search(kept_bins.begin(), kept_bins.end(), bin);
}

std::string BeamConfig::to_text() const {
  std::ostringstream os;
  os << "beam.n_bins=" << n_bins << '\n';
  os << "beam.elev_min_deg=" << format_double(elev_min / kDegToRad) << '\n';
  os << "beam.elev_max_deg=" << format_double(elev_max / kDegToRad) << '\n';
  os << "beam.kept_bins=";
  for (std::size_t i = 0; i < kept_bins.size(); ++i) os << (i ? "," : "") << kept_bins[i];
  os << '\n';
  return os.str();
}

BeamConfig BeamConfig::from_text(const std::string& text) {
  BeamConfig cfg = default_four_beam();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto number = [&](const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError("beam config: line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "beam.n_bins") {
      cfg.n_bins = static_cast<int>(number(value));
    } else if (key == "beam.elev_min_deg") {
      cfg.elev_min = number(value) * kDegToRad;
    } else if (key == "beam.elev_max_deg") {
      cfg.elev_max = number(value) * kDegToRad;
    } else if (key == "beam.kept_bins") {
      cfg.kept_bins.clear();
      std::istringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (!item.empty()) cfg.kept_bins.push_back(static_cast<int>(number(item)));
      }
    }
  }
  cfg.validate();
  return cfg;
}

double elevation_angle(const Point3& p) {
  const double horizontal = std::hypot(p.x(), p.y());
  if (horizontal == 0.0) throw DomainError("elevation_angle: point lies on the vertical axis");
  return std::atan2(p.z(), horizontal);
}

RawScan sparsify(const RawScan& scan, const BeamConfig& cfg) {
  cfg.validate();
  RawScan out;
  for (const auto& p : scan.points) {
    if (p.x == 0.0 && p.y == 0.0) continue;
    if (cfg.keeps(cfg.bin_of(elevation_angle(p.position())))) out.points.push_back(p);
  }
  return out;
}

SparseDepthMap render_sparse_depth(const RawScan& scan, const CalibSet& calib, Side side,
                                   int height, int width) {
  SparseDepthMap map(height, width);
  const Intrinsics& k = calib.intrinsics(side);
  const RigidTransform& extrinsic = calib.extrinsic(side);
  for (const auto& p : scan.points) {
    const Point3 cam = lidar_to_cam(p.position(), extrinsic);
    if (!(cam.z() > 0.0)) continue;
    const PixelDepth pd = project(cam, k);
    const double uf = std::floor(pd.u + 0.5);
    const double vf = std::floor(pd.v + 0.5);
    if (uf < 0.0 || vf < 0.0 || uf >= width || vf >= height) continue;
    const int u = static_cast<int>(uf);
    const int v = static_cast<int>(vf);
    if (!map.valid(u, v) || pd.z < map.at(u, v)) map.set(u, v, pd.z);
  }
  return map;
}

}  // namespace pseudolidar
