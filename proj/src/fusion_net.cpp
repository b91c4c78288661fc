#include "pseudolidar/fusion_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <numbers>
#include <random>
#include <thread>

#include "pseudolidar/error.hpp"
#include "pseudolidar/nn_ops.hpp"

namespace pseudolidar {
namespace {

constexpr char kCheckpointMagic[8] = {'P', 'L', 'C', 'K', 'P', 'T', '\0', '\1'};

const char* tower_name(bool lidar) { return lidar ? "lidar" : "image"; }

std::string stage_name(bool lidar, int stage) {
  return std::string(tower_name(lidar)) + ".stage" + std::to_string(stage);
}

std::string up_name(bool lidar, int stage) {
  return std::string(tower_name(lidar)) + ".up" + std::to_string(stage);
}

int stage_channels(const Architecture& arch, int stage) { return arch.base_channels << stage; }

// Channel count entering / leaving decoder stage j (1-based).
std::pair<int, int> up_channels(const Architecture& arch, int j) {
  const int in = stage_channels(arch, Architecture::kEncoderStages - j + 1);
  const int out = j == Architecture::kDecoderStages ? arch.feature_channels : in / 2;
  return {in, out};
}

bool up_upsamples(int j) { return j < Architecture::kDecoderStages; }

// Box-Muller over raw mt19937_64 output; identical on every platform.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}
  double next() {
    if (cached_) {
      cached_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    cached_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 engine_;
  bool cached_ = false;
  double spare_ = 0.0;
};

// ---- forward/backward building blocks

Tensor conv_forward(const Tensor& x, const NetParams& p, const std::string& name, int stride,
                    FeatureTrace::Conv* trace) {
  Tensor y = nn::conv2d(x, p.get(name + ".w"), p.get(name + ".b"), stride);
  if (trace) {
    trace->input = x;
    trace->output = y;
  }
  return y;
}

Tensor conv_backward(const FeatureTrace::Conv& c, const NetParams& p, NetParams& grads,
                     const std::string& name, int stride, const Tensor& grad_out) {
  Tensor grad_x;
  nn::conv2d_backward(c.input, p.get(name + ".w"), stride, grad_out, &grad_x, grads.get(name + ".w"),
                      grads.get(name + ".b"));
  return grad_x;
}

Tensor tower_forward(const Tensor& x, bool lidar, const NetParams& p, FeatureTrace::Tower& t) {
  t.input = x;
  const std::string prefix = tower_name(lidar);
  Tensor s = nn::relu(conv_forward(x, p, prefix + ".stem", 1, &t.stem));
  t.stages.assign(Architecture::kEncoderStages, {});
  for (int i = 1; i <= Architecture::kEncoderStages; ++i) {
    auto& st = t.stages[i - 1];
    const std::string name = stage_name(lidar, i);
    Tensor d = nn::relu(conv_forward(s, p, name + ".down", 2, &st.down));
    Tensor a = nn::relu(conv_forward(d, p, name + ".res_a", 1, &st.res_a));
    Tensor b = conv_forward(a, p, name + ".res_b", 1, &st.res_b);
    st.sum = nn::add(d, b);
    s = nn::relu(st.sum);
  }
  return s;
}

Tensor tower_backward(const FeatureTrace::Tower& t, bool lidar, const NetParams& p, NetParams& grads,
                      Tensor grad) {
  for (int i = Architecture::kEncoderStages; i >= 1; --i) {
    const auto& st = t.stages[i - 1];
    const std::string name = stage_name(lidar, i);
    const Tensor g_sum = nn::relu_backward(st.sum, grad);
    const Tensor g_a = conv_backward(st.res_b, p, grads, name + ".res_b", 1, g_sum);
    Tensor g_d = g_sum;
    g_d.add_inplace(conv_backward(st.res_a, p, grads, name + ".res_a", 1,
                                  nn::relu_backward(st.res_a.output, g_a)));
    grad = conv_backward(st.down, p, grads, name + ".down", 2, nn::relu_backward(st.down.output, g_d));
  }
  return conv_backward(t.stem, p, grads, std::string(tower_name(lidar)) + ".stem", 1,
                       nn::relu_backward(t.stem.output, grad));
}

Tensor up_forward(const Tensor& x, bool lidar, int j, const NetParams& p, FeatureTrace::UpStage& st) {
  const std::string name = up_name(lidar, j);
  st.input = x;
  st.upsampled = up_upsamples(j) ? nn::upsample2x_nearest(x) : x;
  Tensor a = nn::relu(conv_forward(st.upsampled, p, name + ".conv_a", 1, &st.conv_a));
  Tensor b = conv_forward(a, p, name + ".conv_b", 1, &st.conv_b);
  Tensor proj = conv_forward(st.upsampled, p, name + ".proj", 1, &st.proj);
  st.sum = nn::add(b, proj);
  return nn::relu(st.sum);
}

Tensor up_backward(const FeatureTrace::UpStage& st, bool lidar, int j, const NetParams& p,
                   NetParams& grads, const Tensor& grad_out) {
  const std::string name = up_name(lidar, j);
  const Tensor g_sum = nn::relu_backward(st.sum, grad_out);
  const Tensor g_a = conv_backward(st.conv_b, p, grads, name + ".conv_b", 1, g_sum);
  Tensor g_u = conv_backward(st.proj, p, grads, name + ".proj", 1, g_sum);
  g_u.add_inplace(conv_backward(st.conv_a, p, grads, name + ".conv_a", 1,
                                nn::relu_backward(st.conv_a.output, g_a)));
  return up_upsamples(j) ? nn::upsample2x_nearest_backward(g_u) : g_u;
}

Tensor depth_to_tensor(const DepthMap& d) {
  Tensor t(1, 1, d.height(), d.width());
  for (int v = 0; v < d.height(); ++v)
    for (int u = 0; u < d.width(); ++u) t.at(0, 0, v, u) = d.at(u, v);
  return t;
}

DepthMap tensor_to_depth(const Tensor& t) {
  DepthMap d(t.h(), t.w());
  for (int v = 0; v < t.h(); ++v)
    for (int u = 0; u < t.w(); ++u) d.set(u, v, t.at(0, 0, v, u));
  return d;
}

void check_input_size(int h, int w) {
  if (h <= 0 || w <= 0 || h % Architecture::kInputMultiple != 0 ||
      w % Architecture::kInputMultiple != 0) {
    throw ShapeError("fusion net: input size " + std::to_string(h) + "x" + std::to_string(w) +
                     " must be a positive multiple of 16");
  }
}

}  // namespace

// ---------------------------------------------------------------- Architecture

void Architecture::validate() const {
  if (base_channels < 1 || feature_channels < 1) {
    throw InvariantError("architecture: channel counts must be positive");
  }
  if (!(lidar_depth_scale > 0.0)) throw InvariantError("architecture: lidar_depth_scale must be positive");
  grid();
}

std::string Architecture::to_json() const {
  nlohmann::ordered_json j;
  j["base_channels"] = base_channels;
  j["feature_channels"] = feature_channels;
  j["cost_aggregation"] = cost_aggregation;
  j["lidar_depth_scale"] = lidar_depth_scale;
  j["depth_min"] = depth_min;
  j["depth_max"] = depth_max;
  j["depth_count"] = depth_count;
  j["encoder_stages"] = kEncoderStages;
  j["decoder_stages"] = kDecoderStages;
  return j.dump();
}

Architecture Architecture::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Architecture a;
    a.base_channels = j.at("base_channels").get<int>();
    a.feature_channels = j.at("feature_channels").get<int>();
    a.cost_aggregation = j.at("cost_aggregation").get<bool>();
    a.lidar_depth_scale = j.at("lidar_depth_scale").get<double>();
    a.depth_min = j.at("depth_min").get<double>();
    a.depth_max = j.at("depth_max").get<double>();
    a.depth_count = j.at("depth_count").get<int>();
    if (j.at("encoder_stages").get<int>() != kEncoderStages ||
        j.at("decoder_stages").get<int>() != kDecoderStages) {
      throw FormatError("architecture: unsupported stage counts");
    }
    a.validate();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("architecture descriptor: ") + e.what());
  }
}

// ---------------------------------------------------------------- NetParams

void NetParams::add(std::string name, Tensor t) { entries_.emplace_back(std::move(name), std::move(t)); }

NetParams NetParams::initialize(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  NetParams p;
  p.arch_ = arch;
  p.seed_ = seed;
  NormalSource normal(seed);
  auto conv = [&](const std::string& name, int out, int in, int k, double gain) {
    Tensor w(out, in, k, k);
    const double std_dev = gain * std::sqrt(2.0 / (in * k * k));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std_dev * normal.next();
    p.add(name + ".w", std::move(w));
    p.add(name + ".b", Tensor(out, 1, 1, 1));
  };
  for (bool lidar : {false, true}) {
    const int in = lidar ? Architecture::kLidarChannels : Architecture::kImageChannels;
    conv(std::string(tower_name(lidar)) + ".stem", arch.base_channels, in, 3, 1.0);
    for (int i = 1; i <= Architecture::kEncoderStages; ++i) {
      const int cin = stage_channels(arch, i - 1), cout = stage_channels(arch, i);
      conv(stage_name(lidar, i) + ".down", cout, cin, 3, 1.0);
      conv(stage_name(lidar, i) + ".res_a", cout, cout, 3, 1.0);
      conv(stage_name(lidar, i) + ".res_b", cout, cout, 3, 0.5);
    }
    for (int j = 1; j <= Architecture::kDecoderStages; ++j) {
      const auto [cin, cout] = up_channels(arch, j);
      conv(up_name(lidar, j) + ".conv_a", cout, cin, 3, 1.0);
      conv(up_name(lidar, j) + ".conv_b", cout, cout, 3, 0.5);
      conv(up_name(lidar, j) + ".proj", cout, cin, 1, 0.5);
    }
  }
  if (arch.cost_aggregation) {
    p.add("aggregation.w", Tensor(1, 3, 3, 3));
    p.add("aggregation.b", Tensor(1, 1, 1, 1));
  }
  return p;
}

Tensor& NetParams::get(const std::string& name) {
  for (auto& [n, t] : entries_)
    if (n == name) return t;
  throw InvariantError("net params: no parameter named '" + name + "'");
}

const Tensor& NetParams::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw InvariantError("net params: no parameter named '" + name + "'");
}

bool NetParams::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t NetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

NetParams NetParams::zeros_like() const {
  NetParams z;
  z.arch_ = arch_;
  z.seed_ = seed_;
  for (const auto& [name, t] : entries_) z.add(name, t.zeros_like());
  return z;
}

void NetParams::axpy(double scale, const NetParams& other) {
  if (other.entries_.size() != entries_.size()) throw ShapeError("net params: layout mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    Tensor& a = entries_[i].second;
    const Tensor& b = other.entries_[i].second;
    if (entries_[i].first != other.entries_[i].first || !a.same_shape(b)) {
      throw ShapeError("net params: layout mismatch at '" + entries_[i].first + "'");
    }
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += scale * b[k];
  }
}

std::vector<std::uint8_t> NetParams::serialize() const {
  nlohmann::ordered_json header;
  header["format"] = "pseudolidar-checkpoint";
  header["version"] = 1;
  header["seed"] = seed_;
  header["architecture"] = nlohmann::ordered_json::parse(arch_.to_json());
  auto arrays = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : entries_) {
    arrays.push_back({{"name", name},
                      {"shape", {t.n(), t.c(), t.h(), t.w()}},
                      {"offset", offset},
                      {"count", t.size()}});
    offset += t.size();
  }
  header["arrays"] = arrays;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  const std::uint64_t len = text.size();
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(len >> (8 * b)));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, t] : entries_) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto raw = std::bit_cast<std::uint64_t>(t[i]);
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(raw >> (8 * b)));
    }
  }
  return out;
}

NetParams NetParams::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  std::uint64_t len = 0;
  for (int b = 7; b >= 0; --b) len = (len << 8) | bytes[8 + b];
  if (len > bytes.size() - 16) throw FormatError("checkpoint: truncated header");
  const std::string text(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len));
  NetParams p;
  std::uint64_t total = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("format") != "pseudolidar-checkpoint" || header.at("version") != 1) {
      throw FormatError("checkpoint: unsupported format/version");
    }
    p.seed_ = header.at("seed").get<std::uint64_t>();
    p.arch_ = Architecture::from_json(header.at("architecture").dump());
    const std::size_t payload = 16 + len;
    for (const auto& a : header.at("arrays")) {
      const auto shape = a.at("shape").get<std::vector<int>>();
      const auto offset = a.at("offset").get<std::uint64_t>();
      const auto count = a.at("count").get<std::uint64_t>();
      if (shape.size() != 4) throw FormatError("checkpoint: shape must have 4 dims");
      Tensor t(shape[0], shape[1], shape[2], shape[3]);
      if (t.size() != count || offset != total) throw FormatError("checkpoint: inconsistent array table");
      if (payload + (offset + count) * 8 > bytes.size()) throw FormatError("checkpoint: truncated payload");
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t raw = 0;
        const std::size_t at = payload + (offset + i) * 8;
        for (int b = 7; b >= 0; --b) raw = (raw << 8) | bytes[at + b];
        t[i] = std::bit_cast<double>(raw);
      }
      total += count;
      p.add(a.at("name").get<std::string>(), std::move(t));
    }
    if (16 + len + total * 8 != bytes.size()) throw FormatError("checkpoint: trailing bytes");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  // layout must match the architecture it claims
  const NetParams reference = initialize(p.arch_, 0);
  if (reference.entries_.size() != p.entries_.size()) {
    throw FormatError("checkpoint: parameter set does not match its architecture descriptor");
  }
  for (std::size_t i = 0; i < p.entries_.size(); ++i) {
    if (reference.entries_[i].first != p.entries_[i].first ||
        !reference.entries_[i].second.same_shape(p.entries_[i].second)) {
      throw FormatError("checkpoint: parameter '" + p.entries_[i].first +
                        "' does not match the architecture descriptor");
    }
  }
  return p;
}

void NetParams::save(const std::filesystem::path& path) const { write_file_bytes(path, serialize()); }

NetParams NetParams::load(const std::filesystem::path& path) { return deserialize(read_file_bytes(path)); }

// ---------------------------------------------------------------- features

Tensor image_tensor(const RgbImage& image) {
  Tensor t(1, 3, image.height, image.width);
  for (int v = 0; v < image.height; ++v)
    for (int u = 0; u < image.width; ++u)
      for (int c = 0; c < 3; ++c) t.at(0, c, v, u) = image.at(u, v, c);
  return t;
}

Tensor sparse_tensor(const SparseDepthMap& sparse, double depth_scale) {
  Tensor t(1, 2, sparse.height(), sparse.width());
  for (int v = 0; v < sparse.height(); ++v) {
    for (int u = 0; u < sparse.width(); ++u) {
      if (!sparse.valid(u, v)) continue;
      t.at(0, 0, v, u) = sparse.at(u, v) / depth_scale;
      t.at(0, 1, v, u) = 1.0;
    }
  }
  return t;
}

std::vector<const Tensor*> FeatureTrace::relu_inputs() const {
  std::vector<const Tensor*> out;
  for (const Tower* t : {&image, &lidar}) {
    out.push_back(&t->stem.output);
    for (const auto& st : t->stages) {
      out.push_back(&st.down.output);
      out.push_back(&st.res_a.output);
      out.push_back(&st.sum);
    }
  }
  for (const auto* ups : {&image_up, &lidar_up}) {
    for (const auto& st : *ups) {
      out.push_back(&st.conv_a.output);
      out.push_back(&st.sum);
    }
  }
  return out;
}

FeatureMap extract_features(const Tensor& image, const Tensor& lidar, const NetParams& params,
                            FeatureTrace* trace) {
  if (image.n() != 1 || image.c() != Architecture::kImageChannels || lidar.n() != 1 ||
      lidar.c() != Architecture::kLidarChannels) {
    throw ShapeError("extract_features: expected (1,3,H,W) image and (1,2,H,W) lidar tensors");
  }
  if (image.h() != lidar.h() || image.w() != lidar.w()) {
    throw ShapeError("extract_features: image " + image.shape_string() + " vs lidar " +
                     lidar.shape_string());
  }
  check_input_size(image.h(), image.w());
  FeatureTrace local;
  FeatureTrace& t = trace ? *trace : local;
  Tensor img = tower_forward(image, false, params, t.image);
  Tensor lid = tower_forward(lidar, true, params, t.lidar);
  t.image_up.assign(Architecture::kDecoderStages, {});
  t.lidar_up.assign(Architecture::kDecoderStages, {});
  for (int j = 1; j <= Architecture::kDecoderStages; ++j) {
    lid = up_forward(lid, true, j, params, t.lidar_up[j - 1]);
    img = nn::add(up_forward(img, false, j, params, t.image_up[j - 1]), lid);
  }
  t.features = img;
  return img;
}

FeatureMap extract_features(const RgbImage& image, const SparseDepthMap& sparse,
                            const NetParams& params) {
  return extract_features(image_tensor(image),
                          sparse_tensor(sparse, params.architecture().lidar_depth_scale), params);
}

FeatureGradients extract_features_backward(const FeatureTrace& trace, const FeatureMap& grad_features,
                                           const NetParams& params, NetParams& grads) {
  if (!grad_features.same_shape(trace.features)) throw ShapeError("extract_features_backward: shape");
  Tensor g_img = grad_features;
  Tensor g_lid;
  for (int j = Architecture::kDecoderStages; j >= 1; --j) {
    // fused = image_up_j(img) + lid_j, and lid_j also feeds the next lidar stage
    Tensor g_lid_out = g_img;
    if (!g_lid.empty()) g_lid_out.add_inplace(g_lid);
    g_img = up_backward(trace.image_up[j - 1], false, j, params, grads, g_img);
    g_lid = up_backward(trace.lidar_up[j - 1], true, j, params, grads, g_lid_out);
  }
  FeatureGradients out;
  out.image = tower_backward(trace.image, false, params, grads, g_img);
  out.lidar = tower_backward(trace.lidar, true, params, grads, g_lid);
  return out;
}

// ---------------------------------------------------------------- aggregation

LearnedCostAggregator::LearnedCostAggregator(const NetParams& params, NetParams* grads)
    : params_(params), grads_(grads) {}

CostVolume LearnedCostAggregator::forward(const CostVolume& raw) {
  raw_ = raw;
  const Tensor& w = params_.get("aggregation.w");
  const double bias = params_.get("aggregation.b")[0];
  CostVolume out = raw;
  const int kd = raw.depth_count();
  auto in_range = [&](int d, int y, int x) {
    return d >= 0 && d < kd && y >= 0 && y < raw.height && x >= d && x < raw.width;
  };
  for (int d = 0; d < kd; ++d) {
    for (int y = 0; y < raw.height; ++y) {
      for (int x = d; x < raw.width; ++x) {
        double acc = bias;
        for (int dd = -1; dd <= 1; ++dd)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
              if (in_range(d + dd, y + dy, x + dx))
                acc += w.at(0, dd + 1, dy + 1, dx + 1) * raw.at(d + dd, y + dy, x + dx);
        out.at(d, y, x) += acc;
      }
    }
  }
  return out;
}

CostVolume LearnedCostAggregator::backward(const CostVolume& grad_aggregated) {
  if (raw_.cost.empty()) throw Error("cost aggregator: backward before forward");
  const Tensor& w = params_.get("aggregation.w");
  CostVolume grad = raw_.zeros_like();
  Tensor* gw = grads_ ? &grads_->get("aggregation.w") : nullptr;
  Tensor* gb = grads_ ? &grads_->get("aggregation.b") : nullptr;
  const int kd = raw_.depth_count();
  auto in_range = [&](int d, int y, int x) {
    return d >= 0 && d < kd && y >= 0 && y < raw_.height && x >= d && x < raw_.width;
  };
  for (int d = 0; d < kd; ++d) {
    for (int y = 0; y < raw_.height; ++y) {
      for (int x = d; x < raw_.width; ++x) {
        const double g = grad_aggregated.at(d, y, x);
        grad.at(d, y, x) += g;
        if (gb) (*gb)[0] += g;
        for (int dd = -1; dd <= 1; ++dd)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              if (!in_range(d + dd, y + dy, x + dx)) continue;
              grad.at(d + dd, y + dy, x + dx) += g * w.at(0, dd + 1, dy + 1, dx + 1);
              if (gw) gw->at(0, dd + 1, dy + 1, dx + 1) += g * raw_.at(d + dd, y + dy, x + dx);
            }
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------- full pipeline

DepthMap forward_full(const StereoSample& sample, const NetParams& params, ForwardState* state,
                      const ForwardOptions& options, NetParams* grads_for_aggregator) {
  const Architecture& arch = params.architecture();
  const int h = sample.left_image.height, w = sample.left_image.width;
  check_input_size(h, w);
  for (const auto* img : {&sample.right_image}) {
    if (img->height != h || img->width != w) throw ShapeError("forward_full: stereo images differ in size");
  }
  for (const auto* s : {&sample.left_sparse, &sample.right_sparse}) {
    if (s->height() != h || s->width() != w) throw ShapeError("forward_full: sparse depth size mismatch");
  }
  ForwardState local;
  ForwardState& st = state ? *state : local;
  st.left_image = image_tensor(sample.left_image);
  st.right_image = image_tensor(sample.right_image);
  if (options.zero_lidar) {
    st.left_lidar = Tensor(1, Architecture::kLidarChannels, h, w);
    st.right_lidar = Tensor(1, Architecture::kLidarChannels, h, w);
  } else {
    st.left_lidar = sparse_tensor(sample.left_sparse, arch.lidar_depth_scale);
    st.right_lidar = sparse_tensor(sample.right_sparse, arch.lidar_depth_scale);
  }
  const FeatureMap left = extract_features(st.left_image, st.left_lidar, params, &st.left_trace);
  const FeatureMap right = extract_features(st.right_image, st.right_lidar, params, &st.right_trace);

  const DepthHypothesisGrid grid = arch.grid();
  const double fu = sample.calib.intrinsics(Side::kLeft).fu;
  const double b = sample.calib.baseline();
  const int max_disp = required_max_disparity(grid, fu, b);
  st.aggregator.reset();
  if (arch.cost_aggregation) {
    st.aggregator = std::make_unique<LearnedCostAggregator>(params, grads_for_aggregator);
  }
  st.decv = forward_decv(left, right, max_disp, grid, fu, b, kFeatureDownsample, st.aggregator.get());
  st.coarse_depth = st.decv.regression.depth;
  Tensor full = nn::upsample_bilinear(depth_to_tensor(st.coarse_depth), kFeatureDownsample);
  for (std::size_t i = 0; i < full.size(); ++i) full[i] = std::clamp(full[i], grid.min(), grid.max());
  st.depth = tensor_to_depth(full);
  return st.depth;
}

std::vector<std::uint8_t> training_mask(const DepthMap& gt, const Architecture& arch) {
  std::vector<std::uint8_t> mask(gt.size(), 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double d = gt.values()[i];
    mask[i] = gt.mask()[i] && d >= arch.depth_min && d <= arch.depth_max;
  }
  return mask;
}

SampleGradient loss_and_gradient(const StereoSample& sample, const NetParams& params,
                                 const ForwardOptions& options) {
  SampleGradient out;
  out.grads = params.zeros_like();
  ForwardState st;
  const DepthMap pred = forward_full(sample, params, &st, options, &out.grads);
  const auto mask = training_mask(sample.gt_depth, params.architecture());
  const SmoothL1Result loss = smooth_l1_loss(pred, sample.gt_depth, mask);
  out.loss = loss.loss;

  Tensor grad_full(1, 1, pred.height(), pred.width());
  std::copy(loss.grad.begin(), loss.grad.end(), grad_full.data());
  const Tensor grad_coarse = nn::upsample_bilinear_backward(grad_full, kFeatureDownsample);
  const DecvGradients g = backward_through_decv(st.decv, grad_coarse.values());
  const FeatureGradients gl = extract_features_backward(st.left_trace, g.left, params, out.grads);
  const FeatureGradients gr = extract_features_backward(st.right_trace, g.right, params, out.grads);
  out.grad_left_image = gl.image;
  out.grad_left_lidar = gl.lidar;
  out.grad_right_image = gr.image;
  out.grad_right_lidar = gr.lidar;
  return out;
}

double sample_loss(const StereoSample& sample, const NetParams& params, const ForwardOptions& options) {
  const DepthMap pred = forward_full(sample, params, nullptr, options);
  return smooth_l1_loss(pred, sample.gt_depth, training_mask(sample.gt_depth, params.architecture())).loss;
}

double dataset_loss(std::span<const StereoSample> samples, const NetParams& params,
                    const ForwardOptions& options) {
  if (samples.empty()) throw InvariantError("dataset_loss: empty sample set");
  double total = 0.0;
  for (const auto& s : samples) total += sample_loss(s, params, options);
  return total / static_cast<double>(samples.size());
}

std::pair<double, NetParams> batch_gradient(std::span<const StereoSample> batch, const NetParams& params,
                                            const ForwardOptions& options, int threads) {
  if (batch.empty()) throw InvariantError("batch_gradient: empty batch");
  const int n = static_cast<int>(batch.size());
  std::vector<std::optional<SampleGradient>> parts(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](int first, int stride) {
    for (int i = first; i < n; i += stride) {
      try {
        parts[i] = loss_and_gradient(batch[i], params, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(threads, 1, n);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  double loss = 0.0;
  NetParams grad = params.zeros_like();
  for (int i = 0; i < n; ++i) {
    loss += parts[i]->loss;
    grad.axpy(1.0 / n, parts[i]->grads);
  }
  return {loss / n, std::move(grad)};
}

std::pair<NetParams, double> train_step(std::span<const StereoSample> batch, const NetParams& params,
                                        double lr, const ForwardOptions& options, int threads) {
  if (batch.empty()) throw InvariantError("train_step: empty batch");
  auto [loss, grad] = batch_gradient(batch, params, options, threads);
  NetParams next = params;
  if (lr != 0.0) next.axpy(-lr, grad);
  return {std::move(next), loss};
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(NetParams& params, const NetParams& grads) {
  if (!m_) {
    m_ = params.zeros_like();
    v_ = params.zeros_like();
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& pe = params.entries();
  auto& me = m_->entries();
  auto& ve = v_->entries();
  const auto& ge = grads.entries();
  for (std::size_t i = 0; i < pe.size(); ++i) {
    Tensor& p = pe[i].second;
    Tensor& m = me[i].second;
    Tensor& v = ve[i].second;
    const Tensor& g = ge[i].second;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      p[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

int configured_threads() {
  if (const char* env = std::getenv("PSEUDOLIDAR_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace pseudolidar
