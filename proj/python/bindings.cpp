#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "pseudolidar/cli.hpp"
#include "pseudolidar/error.hpp"
#include "pseudolidar/eval.hpp"
#include "pseudolidar/fusion_net.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "pseudolidar/lidar_ops.hpp"
#include "pseudolidar/pseudo_cloud.hpp"
#include "pseudolidar/synth.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace pseudolidar;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Depth maps cross the boundary as (H, W) float64 arrays with NaN for invalid pixels.
py::array_t<double> depth_to_numpy(const DepthMap& d) {
  py::array_t<double> out({d.height(), d.width()});
  auto v = out.mutable_unchecked<2>();
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x)
      v(y, x) = d.valid(x, y) ? d.at(x, y) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

DepthMap depth_from_numpy(const DoubleArray& a) {
  if (a.ndim() != 2) throw ShapeError("depth map must be a 2-D array");
  const auto v = a.unchecked<2>();
  DepthMap d(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x)
      if (std::isfinite(v(y, x)) && v(y, x) > 0.0) d.set(x, y, v(y, x));
  return d;
}

py::array_t<double> cloud_to_numpy(const PointCloud& c) {
  py::array_t<double> out({static_cast<py::ssize_t>(c.size()), py::ssize_t{4}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& p = c.points[i];
    v(i, 0) = p.x;
    v(i, 1) = p.y;
    v(i, 2) = p.z;
    v(i, 3) = p.reflectance;
  }
  return out;
}

PointCloud cloud_from_numpy(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 4) throw ShapeError("point cloud must be an (N, 4) array");
  const auto v = a.unchecked<2>();
  PointCloud c;
  c.points.reserve(a.shape(0));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) c.points.push_back({v(i, 0), v(i, 1), v(i, 2), v(i, 3)});
  return c;
}

py::array_t<double> image_to_numpy(const RgbImage& img) {
  py::array_t<double> out({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

RgbImage image_from_numpy(const DoubleArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeError("image must be an (H, W, 3) array");
  RgbImage img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + img.data.size(), img.data.begin());
  return img;
}

Box3D box_from_tuple(const std::array<double, 7>& b) {
  Box3D box;
  box.x = b[0];
  box.y = b[1];
  box.z = b[2];
  box.h = b[3];
  box.w = b[4];
  box.l = b[5];
  box.yaw = b[6];
  return box;
}

py::dict sample_to_dict(const StereoSample& s) {
  py::dict d;
  d["left_image"] = image_to_numpy(s.left_image);
  d["right_image"] = image_to_numpy(s.right_image);
  d["left_sparse"] = depth_to_numpy(s.left_sparse);
  d["right_sparse"] = depth_to_numpy(s.right_sparse);
  d["gt_depth"] = depth_to_numpy(s.gt_depth);
  d["calib"] = s.calib;
  return d;
}

StereoSample sample_from_dict(const py::dict& d) {
  StereoSample s;
  s.left_image = image_from_numpy(d["left_image"].cast<DoubleArray>());
  s.right_image = image_from_numpy(d["right_image"].cast<DoubleArray>());
  s.left_sparse = depth_from_numpy(d["left_sparse"].cast<DoubleArray>());
  s.right_sparse = depth_from_numpy(d["right_sparse"].cast<DoubleArray>());
  if (d.contains("gt_depth")) s.gt_depth = depth_from_numpy(d["gt_depth"].cast<DoubleArray>());
  s.calib = d["calib"].cast<CalibSet>();
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stereo + sparse LiDAR depth estimation and pseudo-LiDAR tools";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  auto domain = py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<EmptySetError>(m, "EmptySetError", domain);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<InvariantError>(m, "InvariantError", base);

  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init([](double fu, double fv, double cu, double cv) { return Intrinsics{fu, fv, cu, cv}; }), "fu"_a,
           "fv"_a, "cu"_a, "cv"_a)
      .def_readonly("fu", &Intrinsics::fu)
      .def_readonly("fv", &Intrinsics::fv)
      .def_readonly("cu", &Intrinsics::cu)
      .def_readonly("cv", &Intrinsics::cv);

  py::class_<CalibSet>(m, "CalibSet")
      .def_static(
          "from_rig",
          [](const Intrinsics& k, double baseline) { return CalibSet::from_rig(k, baseline, default_lidar_mount()); },
          "intrinsics"_a, "baseline"_a, "Rectified rig with the default LiDAR mount")
      .def_static("parse", [](const std::string& text) { return parse_calib(text); }, "text"_a)
      .def_static("read", &read_calib, "path"_a)
      .def("format", &format_calib)
      .def_property_readonly("intrinsics", [](const CalibSet& c) { return c.intrinsics(); })
      .def_property_readonly("baseline", &CalibSet::baseline)
      .def_property_readonly("lidar_to_camera",
                             [](const CalibSet& c) { return Eigen::Matrix4d(c.extrinsic().homogeneous()); });

  m.def("backproject", [](double u, double v, double z, const Intrinsics& k) { return backproject({u, v, z}, k); },
        "u"_a, "v"_a, "z"_a, "intrinsics"_a);
  m.def(
      "project",
      [](const Eigen::Vector3d& p, const Intrinsics& k) {
        const PixelDepth pd = project(p, k);
        return py::make_tuple(pd.u, pd.v, pd.z);
      },
      "point"_a, "intrinsics"_a);

  py::class_<BeamConfig>(m, "BeamConfig")
      .def_static("default_four_beam", &BeamConfig::default_four_beam)
      .def_static("all_beams", &BeamConfig::all_beams, "n_bins"_a = 64)
      .def_static("with_beams", &BeamConfig::with_beams, "beams"_a)
      .def_readonly("n_bins", &BeamConfig::n_bins)
      .def_readonly("kept_bins", &BeamConfig::kept_bins)
      .def("bin_of", &BeamConfig::bin_of, "elevation"_a);

  m.def(
      "sparsify", [](const DoubleArray& points, const BeamConfig& cfg) {
        return cloud_to_numpy(sparsify(cloud_from_numpy(points), cfg));
      },
      "points"_a, "beams"_a = BeamConfig::default_four_beam(), "Keep the points of the configured beams");
  m.def(
      "render_sparse_depth",
      [](const DoubleArray& points, const CalibSet& calib, int height, int width, bool right) {
        return depth_to_numpy(
            render_sparse_depth(cloud_from_numpy(points), calib, right ? Side::kRight : Side::kLeft, height, width));
      },
      "points"_a, "calib"_a, "height"_a, "width"_a, "right"_a = false);

  m.def(
      "depth_to_cloud",
      [](const DoubleArray& depth, const CalibSet& calib, bool postprocessed, double ceiling) {
        PseudoCloud c = depth_to_cloud(depth_from_numpy(depth), calib);
        if (postprocessed) c = postprocess(c, ceiling);
        return cloud_to_numpy(c.to_point_cloud());
      },
      "depth"_a, "calib"_a, "postprocess"_a = true, "ceiling"_a = kDefaultHeightCeiling,
      "Pseudo-LiDAR points (N, 4) in the LiDAR frame");

  m.def(
      "depth_metrics",
      [](const DoubleArray& pred, const DoubleArray& gt) {
        const DepthMetrics r = depth_metrics(depth_from_numpy(pred), depth_from_numpy(gt));
        return py::dict("rmse_mm"_a = r.rmse_mm, "mae_mm"_a = r.mae_mm, "irmse"_a = r.irmse, "imae"_a = r.imae,
                        "count"_a = r.count);
      },
      "pred"_a, "gt"_a);

  m.def(
      "bev_iou", [](const std::array<double, 7>& a, const std::array<double, 7>& b) {
        return bev_iou(box_from_tuple(a), box_from_tuple(b));
      },
      "a"_a, "b"_a, "Boxes as (x, y, z, h, w, l, yaw) in the camera frame");
  m.def(
      "iou_3d", [](const std::array<double, 7>& a, const std::array<double, 7>& b) {
        return iou_3d(box_from_tuple(a), box_from_tuple(b));
      },
      "a"_a, "b"_a);
  m.def(
      "average_precision",
      [](const std::vector<std::string>& detections, const std::vector<std::string>& ground_truth, double iou,
         const std::string& task, const std::string& difficulty, const std::string& class_name) {
        std::vector<std::vector<LabelRecord>> dets, gts;
        for (const auto& t : detections) dets.push_back(parse_labels(t));
        for (const auto& t : ground_truth) gts.push_back(parse_labels(t));
        EvalConfig cfg;
        cfg.iou_threshold = iou;
        cfg.task = parse_task(task);
        cfg.difficulty = parse_difficulty(difficulty);
        cfg.class_name = class_name;
        const ApResult r = average_precision_11(dets, gts, cfg);
        return py::dict("ap"_a = r.ap, "precision"_a = r.precision, "true_positives"_a = r.true_positives,
                        "false_positives"_a = r.false_positives, "ground_truths"_a = r.ground_truths);
      },
      "detections"_a, "ground_truth"_a, "iou"_a = 0.7, "task"_a = "bev", "difficulty"_a = "moderate",
      "class_name"_a = "Car", "11-point AP; one KITTI label text per frame");

  m.def(
      "make_sample",
      [](std::uint64_t seed, int beams) {
        SynthConfig cfg;
        cfg.sparse_beams = BeamConfig::with_beams(beams);
        const SynthSample s = make_sample(seed, cfg);
        py::dict d = sample_to_dict(s.stereo);
        d["scan"] = cloud_to_numpy(s.scan);
        d["labels"] = format_labels(s.labels);
        return d;
      },
      "seed"_a, "beams"_a = 4, "Synthetic stereo + LiDAR sample with exact ground truth");
  m.def(
      "load_sample",
      [](const std::filesystem::path& root, int index, int beams) {
        return sample_to_dict(load_sample(root, index, BeamConfig::with_beams(beams)));
      },
      "root"_a, "index"_a, "beams"_a = 4);

  py::class_<Architecture>(m, "Architecture")
      .def(py::init<>())
      .def_readwrite("base_channels", &Architecture::base_channels)
      .def_readwrite("feature_channels", &Architecture::feature_channels)
      .def_readwrite("cost_aggregation", &Architecture::cost_aggregation)
      .def_readwrite("depth_count", &Architecture::depth_count)
      .def_readwrite("depth_min", &Architecture::depth_min)
      .def_readwrite("depth_max", &Architecture::depth_max)
      .def("to_json", &Architecture::to_json);

  py::class_<NetParams>(m, "NetParams")
      .def_static("initialize", &NetParams::initialize, "architecture"_a, "seed"_a)
      .def_static("load", &NetParams::load, "path"_a)
      .def("save", &NetParams::save, "path"_a)
      .def_property_readonly("architecture", &NetParams::architecture)
      .def("parameter_count", &NetParams::parameter_count)
      .def("names", [](const NetParams& p) {
        std::vector<std::string> names;
        for (const auto& [n, t] : p.entries()) names.push_back(n);
        return names;
      });

  m.def(
      "predict_depth",
      [](const py::dict& sample, const NetParams& params, bool zero_lidar) {
        ForwardOptions opt;
        opt.zero_lidar = zero_lidar;
        const StereoSample s = sample_from_dict(sample);
        py::gil_scoped_release release;
        DepthMap d = forward_full(s, params, nullptr, opt);
        py::gil_scoped_acquire acquire;
        return depth_to_numpy(d);
      },
      "sample"_a, "params"_a, "zero_lidar"_a = false);
  m.def(
      "sample_loss",
      [](const py::dict& sample, const NetParams& params, bool zero_lidar) {
        ForwardOptions opt;
        opt.zero_lidar = zero_lidar;
        return sample_loss(sample_from_dict(sample), params, opt);
      },
      "sample"_a, "params"_a, "zero_lidar"_a = false);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      "args"_a, "Run a pseudolidar subcommand in-process; returns (exit_code, stdout, stderr)");
}
