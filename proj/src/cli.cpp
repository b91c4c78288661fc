#include "pseudolidar/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <filesystem>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "pseudolidar/error.hpp"
#include "pseudolidar/fusion_net.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "pseudolidar/lidar_ops.hpp"
#include "pseudolidar/pseudo_cloud.hpp"
#include "pseudolidar/synth.hpp"

namespace fs = std::filesystem;

namespace pseudolidar {
namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string lower_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

void require_extension(const fs::path& p, std::initializer_list<const char*> allowed, const char* what) {
  const std::string ext = lower_extension(p);
  for (const char* a : allowed)
    if (ext == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw UsageError(std::string(what) + ": unknown extension '" + ext + "' for " + p.string() +
                   " (expected " + list + ")");
}

void require_exists(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("no such file or directory: " + p.string());
}

// key=value lines -> --key=value tokens
std::vector<std::string> read_config_args(const fs::path& path) {
  const std::string text = read_file_text(path);
  std::vector<std::string> args;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(number) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(number) + ": empty key");
    args.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

// Pulls --config out of the argument list and splices the file's flags in
// right after the subcommand name, so later command-line flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size();) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
      config = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + i);
    } else {
      ++i;
    }
  }
  if (!config) return args;
  const auto extra = read_config_args(*config);
  auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.starts_with("-"); });
  if (sub == args.end()) throw UsageError("--config given without a subcommand");
  args.insert(sub + 1, extra.begin(), extra.end());
  return args;
}

std::string json_dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

void emit_report(const std::string& text, const std::string& json_path, std::ostream& out) {
  if (json_path.empty()) {
    out << text;
  } else {
    write_file_text(json_path, text);
  }
}

// ---------------------------------------------------------------- commands

struct SynthGenArgs {
  int scenes = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  int height = SynthConfig{}.height;
  int width = SynthConfig{}.width;
  double focal = SynthConfig{}.focal;
};

int cmd_synth_gen(const SynthGenArgs& a, std::ostream& out) {
  if (a.scenes < 1) throw UsageError("synth-gen: --scenes must be at least 1");
  const fs::path root(a.out);
  if (fs::exists(root)) {
    if (!fs::is_directory(root)) throw IoError("synth-gen: " + root.string() + " exists and is not a directory");
    if (!fs::is_empty(root)) {
      if (!a.force) {
        throw IoError("synth-gen: output directory " + root.string() + " is not empty (use --force)");
      }
      for (const char* sub : {"image_2", "image_3", "velodyne", "calib", "label_2", "depth"}) {
        fs::remove_all(root / sub);
      }
    }
  }
  SynthConfig cfg;
  cfg.height = a.height;
  cfg.width = a.width;
  cfg.focal = a.focal;
  const auto samples = make_dataset(a.scenes, a.seed, cfg);
  export_dataset(samples, root);
  out << "wrote " << samples.size() << " samples to " << root.string() << "\n";
  return kExitOk;
}

struct SparsifyArgs {
  std::string in, out;
  int beams = 4;
};

int cmd_sparsify(const SparsifyArgs& a, std::ostream& out) {
  require_extension(a.out, {".bin"}, "sparsify");
  const BeamConfig cfg = BeamConfig::with_beams(a.beams);
  const RawScan scan = read_velodyne_bin(a.in);
  const RawScan kept = sparsify(scan, cfg);
  write_velodyne_bin(kept, a.out);
  out << "kept " << kept.size() << " of " << scan.size() << " points\n";
  return kExitOk;
}

struct PredictArgs {
  std::string sample, checkpoint, out;
  int index = 0;
  int beams = 4;
  int base_channels = 0;
  int feature_channels = 0;
};

int cmd_predict_depth(const PredictArgs& a, std::ostream& out) {
  require_extension(a.out, {".pgm"}, "predict-depth");
  require_exists(a.checkpoint);
  const NetParams params = NetParams::load(a.checkpoint);
  const Architecture& arch = params.architecture();
  if ((a.base_channels > 0 && a.base_channels != arch.base_channels) ||
      (a.feature_channels > 0 && a.feature_channels != arch.feature_channels)) {
    throw InvariantError("predict-depth: checkpoint architecture (base_channels=" +
                         std::to_string(arch.base_channels) + ", feature_channels=" +
                         std::to_string(arch.feature_channels) + ") does not match the requested one");
  }
  require_exists(a.sample);
  const StereoSample sample = load_sample(a.sample, a.index, BeamConfig::with_beams(a.beams));
  if (sample.left_image.height % Architecture::kInputMultiple != 0 ||
      sample.left_image.width % Architecture::kInputMultiple != 0) {
    throw ShapeError("predict-depth: image size " + std::to_string(sample.left_image.width) + "x" +
                     std::to_string(sample.left_image.height) +
                     " is not a multiple of 16 as the network architecture requires");
  }
  const DepthMap depth = forward_full(sample, params);
  write_depth_image(depth, a.out);
  out << "wrote " << depth.width() << "x" << depth.height() << " depth map to " << a.out << "\n";
  return kExitOk;
}

struct PseudoCloudArgs {
  std::string depth, calib, out, bin;
  bool subsample = false;
  double ceiling = kDefaultHeightCeiling;
  int subsample_beams = 64;
};

int cmd_pseudo_cloud(const PseudoCloudArgs& a, std::ostream& out) {
  require_extension(a.out, {".ply"}, "pseudo-cloud");
  if (!a.bin.empty()) require_extension(a.bin, {".bin"}, "pseudo-cloud");
  const DepthMap depth = read_depth_image(a.depth);
  const CalibSet calib = read_calib(a.calib);
  const PseudoCloud raw = depth_to_cloud(depth, calib);
  PseudoCloud cloud = postprocess(raw, a.ceiling);
  if (a.subsample) cloud = subsample_to_beams(cloud, BeamConfig::all_beams(a.subsample_beams));
  const PointCloud pc = cloud.to_point_cloud();
  write_ply(pc, a.out);
  if (!a.bin.empty()) write_velodyne_bin(pc, a.bin);
  out << "pseudo cloud: " << raw.size() << " valid pixels, " << pc.size() << " points written\n";
  return kExitOk;
}

struct EvalDepthArgs {
  std::string pred, gt, json;
};

int cmd_eval_depth(const EvalDepthArgs& a, std::ostream& out) {
  const DepthMetrics m = depth_metrics(read_depth_image(a.pred), read_depth_image(a.gt));
  emit_report(m.to_json(), a.json, out);
  return kExitOk;
}

struct EvalDetectArgs {
  std::string dets, gts, json;
  double iou = 0.7;
  std::string task = "bev";
  std::string difficulty = "moderate";
  std::string class_name = "Car";
};

int cmd_eval_detect(const EvalDetectArgs& a, std::ostream& out) {
  EvalConfig cfg;
  cfg.iou_threshold = a.iou;
  try {
    cfg.task = parse_task(a.task);
    cfg.difficulty = parse_difficulty(a.difficulty);
  } catch (const ParseError& e) {
    throw UsageError(std::string("eval-detect: ") + e.what());
  }
  cfg.class_name = a.class_name;
  require_exists(a.gts);
  std::vector<std::vector<LabelRecord>> dets, gts;
  if (fs::is_directory(a.gts)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.gts)) {
      if (e.is_regular_file() && lower_extension(e.path()) == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      gts.push_back(read_labels(f));
      const fs::path d = fs::path(a.dets) / f.filename();
      dets.push_back(fs::exists(d) ? read_labels(d) : std::vector<LabelRecord>{});
    }
  } else {
    gts.push_back(read_labels(a.gts));
    require_exists(a.dets);
    dets.push_back(read_labels(a.dets));
  }
  const ApResult r = average_precision_11(dets, gts, cfg);
  emit_report(r.to_json(cfg), a.json, out);
  return kExitOk;
}

struct RenderBevArgs {
  std::string cloud, gt, calib, out;
  BevRenderOptions opts;
};

int cmd_render_bev(const RenderBevArgs& a, std::ostream& out) {
  require_extension(a.out, {".svg"}, "render-bev");
  require_extension(a.cloud, {".ply", ".bin"}, "render-bev");
  const PointCloud cloud = lower_extension(a.cloud) == ".ply" ? read_ply(a.cloud) : read_velodyne_bin(a.cloud);
  const RigidTransform extrinsic = a.calib.empty() ? default_lidar_mount() : read_calib(a.calib).extrinsic();
  std::vector<Point3> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud.points) pts.push_back(lidar_to_cam(p.position(), extrinsic));
  const auto labels = a.gt.empty() ? std::vector<LabelRecord>{} : read_labels(a.gt);
  write_file_text(a.out, render_bev_svg(pts, labels, a.opts));
  out << "rendered " << pts.size() << " points and " << labels.size() << " boxes to " << a.out << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string data, out, log;
  int steps = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int batch = 4;
  int samples = 0;
  bool zero_lidar = false;
  std::string optimizer = "gd";
  std::string schedule = "cosine";
  int beams = 4;
  int base_channels = Architecture{}.base_channels;
  int feature_channels = Architecture{}.feature_channels;
  int depth_count = Architecture{}.depth_count;
  bool cost_aggregation = false;
  int threads = 0;
};

int cmd_train_toy(const TrainArgs& a, std::ostream& out) {
  if (a.steps < 0) throw UsageError("train-toy: --steps must be non-negative");
  if (a.batch < 1) throw UsageError("train-toy: --batch must be positive");
  if (!(a.lr >= 0.0)) throw UsageError("train-toy: --lr must be non-negative");
  if (a.optimizer != "gd" && a.optimizer != "adam") {
    throw UsageError("train-toy: --optimizer must be gd or adam");
  }
  require_exists(a.data);
  int n = dataset_size(a.data);
  if (a.samples > 0) n = std::min(n, a.samples);
  if (n == 0) throw InvariantError("train-toy: dataset " + a.data + " is empty");
  const BeamConfig beams = BeamConfig::with_beams(a.beams);
  std::vector<StereoSample> data;
  for (int i = 0; i < n; ++i) {
    data.push_back(load_sample(a.data, i, beams));
    if (data.back().gt_depth.empty()) {
      throw InvariantError("train-toy: sample " + sample_name(i) + " has no ground-truth depth");
    }
  }
  Architecture arch;
  arch.base_channels = a.base_channels;
  arch.feature_channels = a.feature_channels;
  arch.depth_count = a.depth_count;
  arch.cost_aggregation = a.cost_aggregation;
  NetParams params = NetParams::initialize(arch, a.seed);
  ForwardOptions fopt;
  fopt.zero_lidar = a.zero_lidar;
  const int threads = a.threads > 0 ? a.threads : configured_threads();

  const auto start = std::chrono::steady_clock::now();
  const double initial = dataset_loss(data, params, fopt);
  out << "step 0 loss " << format_double(initial) << "\n";
  std::vector<double> trace;
  if (a.schedule != "constant" && a.schedule != "cosine") {
    throw UsageError("train-toy: --schedule must be constant or cosine");
  }
  AdamOptimizer adam(a.lr);
  std::vector<StereoSample> batch;
  for (int step = 1; step <= a.steps; ++step) {
    batch.clear();
    for (int b = 0; b < a.batch; ++b) {
      batch.push_back(data[(static_cast<std::size_t>(step - 1) * a.batch + b) % data.size()]);
    }
    double loss = 0.0;
    const double lr = a.schedule == "cosine"
                          ? 0.5 * a.lr * (1.0 + std::cos(std::numbers::pi * (step - 1) / a.steps))
                          : a.lr;
    if (a.optimizer == "gd") {
      std::tie(params, loss) = train_step(batch, params, lr, fopt, threads);
    } else {
      auto [l, grad] = batch_gradient(batch, params, fopt, threads);
      adam.set_learning_rate(lr);
      adam.step(params, grad);
      loss = l;
    }
    trace.push_back(loss);
    out << "step " << step << " batch_loss " << format_double(loss) << "\n";
  }
  const double final_loss = a.steps > 0 ? dataset_loss(data, params, fopt) : initial;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "final loss " << format_double(final_loss) << " (" << format_double(final_loss / initial)
      << " of initial)\n";
  params.save(a.out);
  if (!a.log.empty()) {
    nlohmann::ordered_json j;
    j["samples"] = n;
    j["steps"] = a.steps;
    j["batch"] = a.batch;
    j["optimizer"] = a.optimizer;
    j["lr"] = a.lr;
    j["schedule"] = a.schedule;
    j["seed"] = a.seed;
    j["zero_lidar"] = a.zero_lidar;
    j["initial_loss"] = initial;
    j["final_loss"] = final_loss;
    j["batch_losses"] = trace;
    j["seconds"] = seconds;
    write_file_text(a.log, json_dump(j));
  }
  return kExitOk;
}

}  // namespace

std::string render_bev_svg(const std::vector<Point3>& camera_points, const std::vector<LabelRecord>& labels,
                           const BevRenderOptions& opts) {
  if (!(opts.range > 0.0) || !(opts.scale > 0.0)) throw DomainError("render-bev: range and scale must be positive");
  const double w = opts.range * opts.scale;
  const double h = opts.range * opts.scale;
  auto sx = [&](double x) { return (x + opts.range / 2.0) * opts.scale; };
  auto sy = [&](double z) { return (opts.range - z) * opts.scale; };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(w) << "\" height=\""
     << format_double(h) << "\" viewBox=\"0 0 " << format_double(w) << " " << format_double(h) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g id=\"points\" fill=\"#1f4e9c\">\n";
  for (const Point3& p : camera_points) {
    const double x = sx(p.x()), y = sy(p.z());
    if (x < 0.0 || x > w || y < 0.0 || y > h) continue;
    os << "<circle cx=\"" << format_double(x) << "\" cy=\"" << format_double(y) << "\" r=\"1\"/>\n";
  }
  os << "</g>\n<g id=\"boxes\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\">\n";
  for (const LabelRecord& l : labels) {
    if (l.is_dont_care()) continue;
    os << "<polygon class=\"" << l.type << "\" points=\"";
    const auto corners = bev_corners(Box3D::from_label(l));
    for (std::size_t i = 0; i < corners.size(); ++i) {
      os << (i ? " " : "") << format_double(sx(corners[i].x())) << "," << format_double(sy(corners[i].y()));
    }
    os << "\"/>\n";
  }
  os << "</g>\n<circle id=\"camera\" cx=\"" << format_double(sx(0.0)) << "\" cy=\"" << format_double(sy(0.0))
     << "\" r=\"3\" fill=\"black\"/>\n</svg>\n";
  return os.str();
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stereo + sparse LiDAR depth estimation toolkit"};
  app.name("pseudolidar");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_unused;
  app.add_option("--config", config_unused, "key=value file supplying any flag (command line wins)");

  SynthGenArgs sg;
  auto* synth = app.add_subcommand("synth-gen", "Write a KITTI-layout synthetic dataset");
  synth->add_option("--scenes", sg.scenes, "Number of scenes (>= 1)")->required();
  synth->add_option("--seed", sg.seed, "Dataset seed");
  synth->add_option("--out", sg.out, "Output directory")->required();
  synth->add_flag("--force", sg.force, "Overwrite a non-empty output directory");
  synth->add_option("--height", sg.height, "Image height (px)");
  synth->add_option("--width", sg.width, "Image width (px)");
  synth->add_option("--focal", sg.focal, "Focal length (px)");

  SparsifyArgs sp;
  auto* sparse = app.add_subcommand("sparsify", "Keep only the configured LiDAR beams");
  sparse->add_option("--in", sp.in, "Input velodyne .bin")->required();
  sparse->add_option("--out", sp.out, "Output velodyne .bin")->required();
  sparse->add_option("--beams", sp.beams, "Beam count (64 keeps everything)");

  PredictArgs pd;
  auto* predict = app.add_subcommand("predict-depth", "Run the fusion network on one sample");
  predict->add_option("--sample", pd.sample, "Dataset root")->required();
  predict->add_option("--index", pd.index, "Sample index");
  predict->add_option("--checkpoint", pd.checkpoint, "Checkpoint file")->required();
  predict->add_option("--out", pd.out, "Output depth .pgm")->required();
  predict->add_option("--beams", pd.beams, "LiDAR beams fed to the network");
  predict->add_option("--base-channels", pd.base_channels, "Expected base channel count");
  predict->add_option("--feature-channels", pd.feature_channels, "Expected feature channel count");

  PseudoCloudArgs pc;
  auto* cloud = app.add_subcommand("pseudo-cloud", "Convert a depth map into a pseudo LiDAR cloud");
  cloud->add_option("--depth", pc.depth, "Depth .pgm")->required();
  cloud->add_option("--calib", pc.calib, "Calibration .txt")->required();
  cloud->add_option("--out", pc.out, "Output .ply")->required();
  cloud->add_option("--bin", pc.bin, "Also write a velodyne .bin");
  cloud->add_flag("--subsample", pc.subsample, "Decimate to a 64-line pattern");
  cloud->add_option("--subsample-beams", pc.subsample_beams, "Line count for --subsample");
  cloud->add_option("--ceiling", pc.ceiling, "Drop points higher than this above the LiDAR (m)");

  EvalDepthArgs ed;
  auto* evd = app.add_subcommand("eval-depth", "Depth metrics of a prediction");
  evd->add_option("--pred", ed.pred, "Predicted depth .pgm")->required();
  evd->add_option("--gt", ed.gt, "Ground-truth depth .pgm")->required();
  evd->add_option("--json", ed.json, "Write the report here instead of stdout");

  EvalDetectArgs et;
  auto* evt = app.add_subcommand("eval-detect", "11-point AP of 3D detections");
  evt->add_option("--dets", et.dets, "Detection label file or directory")->required();
  evt->add_option("--gts", et.gts, "Ground-truth label file or directory")->required();
  evt->add_option("--iou", et.iou, "IoU threshold");
  evt->add_option("--task", et.task, "bev or 3d");
  evt->add_option("--difficulty", et.difficulty, "easy, moderate or hard");
  evt->add_option("--class", et.class_name, "Object class");
  evt->add_option("--json", et.json, "Write the report here instead of stdout");

  RenderBevArgs rb;
  auto* bev = app.add_subcommand("render-bev", "Top-down SVG of a cloud with label boxes");
  bev->add_option("--cloud", rb.cloud, "Point cloud (.ply or .bin, LiDAR frame)")->required();
  bev->add_option("--gt", rb.gt, "Label file");
  bev->add_option("--calib", rb.calib, "Calibration (default: synthetic rig mount)");
  bev->add_option("--out", rb.out, "Output .svg")->required();
  bev->add_option("--range", rb.opts.range, "Forward range shown (m)");
  bev->add_option("--scale", rb.opts.scale, "Pixels per metre");

  TrainArgs tr;
  auto* train = app.add_subcommand("train-toy", "Train the fusion network on a small dataset");
  train->add_option("--data", tr.data, "Dataset root")->required();
  train->add_option("--steps", tr.steps, "Optimisation steps");
  train->add_option("--lr", tr.lr, "Learning rate");
  train->add_option("--seed", tr.seed, "Initialisation seed");
  train->add_option("--out", tr.out, "Checkpoint path")->required();
  train->add_option("--log", tr.log, "JSON training report");
  train->add_option("--batch", tr.batch, "Batch size");
  train->add_option("--samples", tr.samples, "Use only the first N samples");
  train->add_flag("--zero-lidar", tr.zero_lidar, "Feed zeros to the LiDAR tower");
  train->add_option("--optimizer", tr.optimizer, "gd or adam");
  train->add_option("--schedule", tr.schedule, "Learning-rate schedule: cosine or constant");
  train->add_option("--beams", tr.beams, "LiDAR beams fed to the network");
  train->add_option("--base-channels", tr.base_channels, "Base channel count C0");
  train->add_option("--feature-channels", tr.feature_channels, "Output feature channels");
  train->add_option("--depth-count", tr.depth_count, "Depth hypotheses");
  train->add_flag("--cost-aggregation", tr.cost_aggregation, "Enable learned cost aggregation");
  train->add_option("--threads", tr.threads, "Worker threads (0 = PSEUDOLIDAR_THREADS / auto)");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }

  try {
    if (synth->parsed()) return cmd_synth_gen(sg, out);
    if (sparse->parsed()) return cmd_sparsify(sp, out);
    if (predict->parsed()) return cmd_predict_depth(pd, out);
    if (cloud->parsed()) return cmd_pseudo_cloud(pc, out);
    if (evd->parsed()) return cmd_eval_depth(ed, out);
    if (evt->parsed()) return cmd_eval_detect(et, out);
    if (bev->parsed()) return cmd_render_bev(rb, out);
    if (train->parsed()) return cmd_train_toy(tr, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const EmptySetError& e) {
    err << "error: " << e.what() << "\n";
    return kExitEmptySet;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace pseudolidar
