#include "pseudolidar/kitti_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "pseudolidar/error.hpp"

namespace pseudolidar {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  if (!token.empty() && token.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

Eigen::Vector3d camera_offset(const ProjectionMatrix& p) {
  // P = K [I | t] with zero-skew upper-triangular K.
  const double tz = p(2, 3);
  const double ty = (p(1, 3) - p(1, 2) * tz) / p(1, 1);
  const double tx = (p(0, 3) - p(0, 2) * tz - p(0, 1) * ty) / p(0, 0);
  return {tx, ty, tz};
}

Intrinsics intrinsics_of(const ProjectionMatrix& p) {
  return Intrinsics{p(0, 0), p(1, 1), p(0, 2), p(1, 2)};
}

void append_u16_be(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

// Reads the whitespace/comment separated header of a binary netpbm file.
struct NetpbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

NetpbmHeader parse_netpbm_header(std::span<const std::uint8_t> bytes) {
  NetpbmHeader header;
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto next_token = [&]() -> std::string {
    skip_space_and_comments();
    std::string token;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
      token.push_back(static_cast<char>(bytes[pos++]));
    }
    if (token.empty()) throw FormatError("netpbm: truncated header");
    return token;
  };
  auto next_int = [&](const char* what) {
    const std::string token = next_token();
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || value <= 0) {
      throw FormatError(std::string("netpbm: bad ") + what + " '" + token + "'");
    }
    return value;
  };
  header.magic = next_token();
  header.width = next_int("width");
  header.height = next_int("height");
  header.maxval = next_int("maxval");
  // exactly one whitespace byte separates the header from the raster
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError("netpbm: missing raster separator");
  }
  header.data_offset = pos + 1;
  return header;
}

}  // namespace

// ---------------------------------------------------------------- files

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

std::string read_file_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_file_text(const std::filesystem::path& path, std::string_view text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return {buf.data(), ptr};
}

// ---------------------------------------------------------------- velodyne

RawScan decode_velodyne(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kStride = 16;
  if (bytes.size() % kStride != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kStride;
    throw FormatError("velodyne: truncated point record at byte offset " + std::to_string(offset) +
                      " (file length " + std::to_string(bytes.size()) +
                      " is not a multiple of 16)");
  }
  RawScan scan;
  scan.points.reserve(bytes.size() / kStride);
  for (std::size_t i = 0; i < bytes.size() / kStride; ++i) {
    std::array<float, 4> v{};
    for (int k = 0; k < 4; ++k) {
      std::uint32_t raw = 0;
      for (int b = 3; b >= 0; --b) raw = (raw << 8) | bytes[i * kStride + k * 4 + b];
      v[k] = std::bit_cast<float>(raw);
      if (!std::isfinite(v[k])) {
        throw FormatError("velodyne: non-finite value at point index " + std::to_string(i));
      }
    }
    scan.points.push_back({v[0], v[1], v[2], std::clamp(static_cast<double>(v[3]), 0.0, 1.0)});
  }
  return scan;
}

std::vector<std::uint8_t> encode_velodyne(const PointCloud& cloud) {
  std::vector<std::uint8_t> out;
  out.reserve(cloud.size() * 16);
  for (const auto& p : cloud.points) {
    for (double value : {p.x, p.y, p.z, p.reflectance}) {
      const auto raw = std::bit_cast<std::uint32_t>(static_cast<float>(value));
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(raw >> (8 * b)));
    }
  }
  return out;
}

RawScan read_velodyne_bin(const std::filesystem::path& path) {
  return decode_velodyne(read_file_bytes(path));
}

void write_velodyne_bin(const PointCloud& cloud, const std::filesystem::path& path) {
  write_file_bytes(path, encode_velodyne(cloud));
}

// ---------------------------------------------------------------- calibration

CalibSet::CalibSet(const ProjectionMatrix& p_left, const ProjectionMatrix& p_right,
                   const Eigen::Matrix3d& r_rect, const ProjectionMatrix& velo_to_cam)
    : p_left_(p_left), p_right_(p_right), r_rect_(r_rect), velo_to_cam_(velo_to_cam) {
  k_left_ = intrinsics_of(p_left_);
  k_right_ = intrinsics_of(p_right_);
  k_left_.validate();
  k_right_.validate();
  baseline_ = (p_left_(0, 3) - p_right_(0, 3)) / k_left_.fu;
  if (!(baseline_ > 0.0)) {
    throw InvariantError("calib: derived baseline must be positive, got " +
                         std::to_string(baseline_));
  }
  if (!is_rotation(r_rect_)) throw InvariantError("calib: R0_rect is not a rotation");
  const Eigen::Matrix3d velo_rot = velo_to_cam_.leftCols<3>();
  if (!is_rotation(velo_rot)) throw InvariantError("calib: Tr_velo_to_cam rotation is invalid");

  const Eigen::Matrix3d rot = r_rect_ * velo_rot;
  const Eigen::Vector3d to_rect = r_rect_ * velo_to_cam_.col(3);
  lidar_to_left_ = RigidTransform::from_approximate(rot, to_rect + camera_offset(p_left_));
  lidar_to_right_ = RigidTransform::from_approximate(rot, to_rect + camera_offset(p_right_));
}

CalibSet CalibSet::from_rig(const Intrinsics& k, double baseline_m,
                            const RigidTransform& lidar_to_left) {
  ProjectionMatrix p = ProjectionMatrix::Zero();
  p(0, 0) = k.fu;
  p(1, 1) = k.fv;
  p(0, 2) = k.cu;
  p(1, 2) = k.cv;
  p(2, 2) = 1.0;
  ProjectionMatrix pr = p;
  pr(0, 3) = -k.fu * baseline_m;
  ProjectionMatrix tr;
  tr.leftCols<3>() = lidar_to_left.rotation();
  tr.col(3) = lidar_to_left.translation();
  return CalibSet(p, pr, Eigen::Matrix3d::Identity(), tr);
}

CalibSet parse_calib(std::string_view text) {
  std::map<std::string, std::vector<double>, std::less<>> entries;
  for (std::string_view line : split_lines(text)) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    auto tokens = split_ws(line.substr(0, colon));
    if (tokens.size() != 1) continue;
    std::vector<double> values;
    for (auto token : split_ws(line.substr(colon + 1))) {
      auto value = to_double(token);
      if (!value) {
        throw ParseError("calib: key " + std::string(tokens[0]) + ": bad number '" +
                         std::string(token) + "'");
      }
      values.push_back(*value);
    }
    entries[std::string(tokens[0])] = std::move(values);
  }
  auto fetch = [&](const char* key, std::size_t arity) -> const std::vector<double>& {
    auto it = entries.find(key);
    if (it == entries.end()) throw ParseError(std::string("calib: missing key ") + key);
    if (it->second.size() != arity) {
      throw ParseError(std::string("calib: key ") + key + " expects " + std::to_string(arity) +
                       " numbers, got " + std::to_string(it->second.size()));
    }
    return it->second;
  };
  auto as34 = [](const std::vector<double>& v) {
    ProjectionMatrix m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = v[r * 4 + c];
    return m;
  };
  const ProjectionMatrix p2 = as34(fetch("P2", 12));
  const ProjectionMatrix p3 = as34(fetch("P3", 12));
  const auto& r0 = fetch("R0_rect", 9);
  const ProjectionMatrix tr = as34(fetch("Tr_velo_to_cam", 12));
  Eigen::Matrix3d r_rect;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) r_rect(r, c) = r0[r * 3 + c];
  return CalibSet(p2, p3, r_rect, tr);
}

std::string format_calib(const CalibSet& calib) {
  std::ostringstream os;
  auto row = [&](const char* key, const auto& m) {
    os << key << ':';
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) os << ' ' << format_double(m(r, c));
    os << '\n';
  };
  row("P2", calib.p_left());
  row("P3", calib.p_right());
  row("R0_rect", calib.r_rect());
  row("Tr_velo_to_cam", calib.velo_to_cam());
  return os.str();
}

CalibSet read_calib(const std::filesystem::path& path) { return parse_calib(read_file_text(path)); }

// ---------------------------------------------------------------- labels

std::vector<LabelRecord> parse_labels(std::string_view text) {
  std::vector<LabelRecord> out;
  int line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto tokens = split_ws(line);
    const auto where = "labels: line " + std::to_string(line_no) + ": ";
    if (tokens.size() != 15 && tokens.size() != 16) {
      throw ParseError(where + "expected 15 or 16 fields, got " + std::to_string(tokens.size()));
    }
    std::array<double, 15> num{};
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      auto value = to_double(tokens[i]);
      if (!value || !std::isfinite(*value)) {
        throw ParseError(where + "field " + std::to_string(i + 1) + " is not a number");
      }
      num[i - 1] = *value;
    }
    LabelRecord rec;
    rec.type = std::string(tokens[0]);
    rec.truncation = num[0];
    rec.occlusion = static_cast<int>(num[1]);
    rec.alpha = num[2];
    rec.x1 = num[3];
    rec.y1 = num[4];
    rec.x2 = num[5];
    rec.y2 = num[6];
    rec.h = num[7];
    rec.w = num[8];
    rec.l = num[9];
    rec.x = num[10];
    rec.y = num[11];
    rec.z = num[12];
    rec.rotation_y = num[13];
    if (tokens.size() == 16) rec.score = num[14];
    if (!rec.is_dont_care()) {
      if (num[1] != static_cast<double>(rec.occlusion) || rec.occlusion < 0 || rec.occlusion > 3) {
        throw ParseError(where + "occlusion must be an integer in {0,1,2,3}");
      }
      if (!(rec.x1 < rec.x2) || !(rec.y1 < rec.y2)) throw ParseError(where + "degenerate 2D box");
      if (!(rec.h > 0) || !(rec.w > 0) || !(rec.l > 0)) {
        throw ParseError(where + "dimensions must be positive");
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string format_labels(std::span<const LabelRecord> labels) {
  std::ostringstream os;
  for (const auto& r : labels) {
    os << r.type << ' ' << format_double(r.truncation) << ' ' << r.occlusion << ' '
       << format_double(r.alpha);
    for (double v : {r.x1, r.y1, r.x2, r.y2, r.h, r.w, r.l, r.x, r.y, r.z, r.rotation_y}) {
      os << ' ' << format_double(v);
    }
    if (r.score) os << ' ' << format_double(*r.score);
    os << '\n';
  }
  return os.str();
}

std::vector<LabelRecord> read_labels(const std::filesystem::path& path) {
  return parse_labels(read_file_text(path));
}

// ---------------------------------------------------------------- depth PGM

std::uint16_t depth_to_sample(double depth_m) {
  const double scaled = std::round(depth_m * kDepthScale);
  return static_cast<std::uint16_t>(std::clamp(scaled, 1.0, 65535.0));
}

std::vector<std::uint8_t> encode_depth_pgm(const DepthMap& depth) {
  const std::string header = "P5\n" + std::to_string(depth.width()) + " " +
                             std::to_string(depth.height()) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + depth.size() * 2);
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      append_u16_be(out, depth.valid(u, v) ? depth_to_sample(depth.at(u, v)) : 0);
    }
  }
  return out;
}

DepthMap decode_depth_pgm(std::span<const std::uint8_t> bytes) {
  const NetpbmHeader header = parse_netpbm_header(bytes);
  if (header.magic != "P5") throw FormatError("depth image: expected PGM 'P5', got '" + header.magic + "'");
  if (header.maxval <= 255) throw FormatError("depth image: 8-bit PGM is not a depth image");
  if (header.maxval != 65535) {
    throw FormatError("depth image: maxval must be 65535, got " + std::to_string(header.maxval));
  }
  const std::size_t n = static_cast<std::size_t>(header.width) * header.height;
  if (bytes.size() - header.data_offset != n * 2) {
    throw FormatError("depth image: raster has " + std::to_string(bytes.size() - header.data_offset) +
                      " bytes, expected " + std::to_string(n * 2));
  }
  DepthMap map(header.height, header.width);
  const std::uint8_t* p = bytes.data() + header.data_offset;
  for (int v = 0; v < header.height; ++v) {
    for (int u = 0; u < header.width; ++u, p += 2) {
      const std::uint16_t sample = static_cast<std::uint16_t>((p[0] << 8) | p[1]);
      if (sample != 0) map.set(u, v, sample / kDepthScale);
    }
  }
  return map;
}

DepthMap read_depth_image(const std::filesystem::path& path) {
  return decode_depth_pgm(read_file_bytes(path));
}

void write_depth_image(const DepthMap& depth, const std::filesystem::path& path) {
  if (path.extension() != ".pgm") {
    throw IoError("depth image: only .pgm output is supported ('" + path.string() + "')");
  }
  write_file_bytes(path, encode_depth_pgm(depth));
}

// ---------------------------------------------------------------- PLY

std::string format_ply(const PointCloud& cloud) {
  std::string out =
      "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
      "\nproperty double x\nproperty double y\nproperty double z\nproperty double "
      "reflectance\nend_header\n";
  for (const auto& p : cloud.points) {
    out += format_double(p.x) + ' ' + format_double(p.y) + ' ' + format_double(p.z) + ' ' +
           format_double(p.reflectance) + '\n';
  }
  return out;
}

PointCloud parse_ply(std::string_view text) {
  const auto lines = split_lines(text);
  std::size_t i = 0;
  if (lines.empty() || lines[0] != "ply") throw FormatError("ply: missing magic");
  long long count = -1;
  std::vector<std::string> props;
  for (i = 1; i < lines.size(); ++i) {
    const auto tokens = split_ws(lines[i]);
    if (tokens.empty()) continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "format" && (tokens.size() < 2 || tokens[1] != "ascii")) {
      throw FormatError("ply: only ASCII format is supported");
    }
    if (tokens[0] == "element" && tokens.size() == 3 && tokens[1] == "vertex") {
      auto v = to_double(tokens[2]);
      if (!v || *v < 0) throw FormatError("ply: bad vertex count");
      count = static_cast<long long>(*v);
    }
    if (tokens[0] == "property" && tokens.size() == 3) props.emplace_back(tokens[2]);
  }
  if (i == lines.size()) throw FormatError("ply: missing end_header");
  if (count < 0) throw FormatError("ply: missing vertex element");
  const std::vector<std::string> expected{"x", "y", "z", "reflectance"};
  if (props != expected) throw FormatError("ply: expected properties x y z reflectance");
  PointCloud cloud;
  for (++i; i < lines.size() && static_cast<long long>(cloud.size()) < count; ++i) {
    const auto tokens = split_ws(lines[i]);
    if (tokens.empty()) continue;
    if (tokens.size() != 4) throw FormatError("ply: vertex line " + std::to_string(i + 1) + " needs 4 values");
    std::array<double, 4> v{};
    for (int k = 0; k < 4; ++k) {
      auto value = to_double(tokens[k]);
      if (!value) throw FormatError("ply: bad number on line " + std::to_string(i + 1));
      v[k] = *value;
    }
    cloud.points.push_back({v[0], v[1], v[2], v[3]});
  }
  if (static_cast<long long>(cloud.size()) != count) {
    throw FormatError("ply: header declares " + std::to_string(count) + " vertices, body has " +
                      std::to_string(cloud.size()));
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  write_file_text(path, format_ply(cloud));
}

PointCloud read_ply(const std::filesystem::path& path) { return parse_ply(read_file_text(path)); }

// ---------------------------------------------------------------- PPM

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double value : image.data) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0)));
  }
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  const NetpbmHeader header = parse_netpbm_header(bytes);
  if (header.magic != "P6") throw FormatError("ppm: expected 'P6', got '" + header.magic + "'");
  if (header.maxval != 255) throw FormatError("ppm: only maxval 255 is supported");
  RgbImage image(header.height, header.width);
  if (bytes.size() - header.data_offset != image.data.size()) {
    throw FormatError("ppm: raster size mismatch");
  }
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    image.data[i] = bytes[header.data_offset + i] / 255.0;
  }
  return image;
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  write_file_bytes(path, encode_ppm(image));
}

RgbImage read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file_bytes(path)); }

}  // namespace pseudolidar
