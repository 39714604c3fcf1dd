#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cplcalib/datagen.hpp"
#include "cplcalib/jacobian.hpp"
#include "cplcalib/metrics.hpp"
#include "cplcalib/mtl.hpp"
#include "cplcalib/solver.hpp"
#include "cplcalib/version.hpp"

namespace py = pybind11;
using namespace cplcalib;

namespace {

std::array<std::array<double, kNumCameraParams>, 3> jacobian_rows(
    const WorldPointJacobian& jac) {
  return jac.rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stereo pinhole projection, camera projection loss, and the "
            "parameter estimators behind the cplcalib CLI.";
  m.attr("__version__") = kVersion;

  // Exceptions mirror the C++ hierarchy under a common base.
  auto base = py::register_exception<Error>(m, "CplError");
  py::register_exception<ZeroDisparityError>(m, "ZeroDisparityError", base);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", base);
  py::register_exception<DegeneratePointError>(m, "DegeneratePointError", base);
  py::register_exception<ZeroDenominatorError>(m, "ZeroDenominatorError", base);
  py::register_exception<NonPositiveInputError>(m, "NonPositiveInputError", base);
  py::register_exception<ShapeMismatchError>(m, "ShapeMismatchError", base);
  py::register_exception<EmptyRangeAfterGuardError>(
      m, "EmptyRangeAfterGuardError", base);
  py::register_exception<DivergenceDetectedError>(
      m, "DivergenceDetectedError", base);
  py::register_exception<IoError>(m, "IoError", base);

  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init<double, double, double, double>(), py::arg("fx") = 1.0,
           py::arg("fy") = 1.0, py::arg("u0") = 0.0, py::arg("v0") = 0.0)
      .def_readwrite("fx", &Intrinsics::fx)
      .def_readwrite("fy", &Intrinsics::fy)
      .def_readwrite("u0", &Intrinsics::u0)
      .def_readwrite("v0", &Intrinsics::v0);

  py::class_<Extrinsics>(m, "Extrinsics")
      .def(py::init<double, double, double, double, double>(),
           py::arg("b") = 1.0, py::arg("theta_p") = 0.0, py::arg("tx") = 0.0,
           py::arg("ty") = 0.0, py::arg("tz") = 0.0)
      .def_readwrite("b", &Extrinsics::b)
      .def_readwrite("theta_p", &Extrinsics::theta_p)
      .def_readwrite("tx", &Extrinsics::tx)
      .def_readwrite("ty", &Extrinsics::ty)
      .def_readwrite("tz", &Extrinsics::tz);

  py::class_<CameraParams>(m, "CameraParams")
      .def(py::init<Intrinsics, Extrinsics, double>(),
           py::arg("intrinsics") = Intrinsics{},
           py::arg("extrinsics") = Extrinsics{}, py::arg("d") = 1.0)
      .def_readwrite("intrinsics", &CameraParams::intrinsics)
      .def_readwrite("extrinsics", &CameraParams::extrinsics)
      .def_readwrite("d", &CameraParams::d);

  py::class_<PixelObservation>(m, "PixelObservation")
      .def(py::init<double, double, std::optional<double>>(),
           py::arg("u") = 0.0, py::arg("v") = 0.0,
           py::arg("disparity") = py::none())
      .def_readwrite("u", &PixelObservation::u)
      .def_readwrite("v", &PixelObservation::v)
      .def_readwrite("disparity", &PixelObservation::disparity);

  py::class_<CameraPoint>(m, "CameraPoint")
      .def(py::init<double, double, double>(), py::arg("x_cam") = 0.0,
           py::arg("y_cam") = 0.0, py::arg("z_cam") = 0.0)
      .def_readwrite("x_cam", &CameraPoint::x_cam)
      .def_readwrite("y_cam", &CameraPoint::y_cam)
      .def_readwrite("z_cam", &CameraPoint::z_cam);

  py::class_<WorldPoint>(m, "WorldPoint")
      .def(py::init<double, double, double>(), py::arg("X") = 0.0,
           py::arg("Y") = 0.0, py::arg("Z") = 0.0)
      .def_readwrite("X", &WorldPoint::X)
      .def_readwrite("Y", &WorldPoint::Y)
      .def_readwrite("Z", &WorldPoint::Z);

  m.def("deg_to_rad", &deg_to_rad, py::arg("deg"));
  m.def("rad_to_deg", &rad_to_deg, py::arg("rad"));
  m.def("image_to_camera", &image_to_camera, py::arg("obs"), py::arg("params"));
  m.def("camera_to_world", &camera_to_world, py::arg("point"),
        py::arg("extrinsics"));
  m.def("project_to_world", &project_to_world, py::arg("obs"),
        py::arg("params"));
  m.def("world_to_camera", &world_to_camera, py::arg("point"),
        py::arg("extrinsics"));
  m.def("camera_to_image", &camera_to_image, py::arg("point"),
        py::arg("intrinsics"), py::arg("baseline"));
  m.def("normalized_image_to_camera", &normalized_image_to_camera,
        py::arg("obs"), py::arg("intrinsics"));

  py::class_<ParamVector13>(m, "ParamVector13")
      .def(py::init<>())
      .def(py::init([](const std::array<double, kNumParams>& values) {
             ParamVector13 v;
             v.values = values;
             return v;
           }),
           py::arg("values"))
      .def_readwrite("values", &ParamVector13::values)
      .def("__getitem__",
           [](const ParamVector13& v, int i) {
             if (i < 0 || i >= kNumParams) throw py::index_error();
             return v.at(i);
           })
      .def("__setitem__",
           [](ParamVector13& v, int i, double x) {
             if (i < 0 || i >= kNumParams) throw py::index_error();
             v.at(i) = x;
           })
      .def("__len__", [](const ParamVector13&) { return kNumParams; })
      .def_static("from_parts", &ParamVector13::from_parts, py::arg("params"),
                  py::arg("heads"))
      .def("camera_params", &ParamVector13::camera_params)
      .def("world_heads", &ParamVector13::world_heads);
  m.attr("PARAM_NAMES") = kParamNames;

  py::class_<CorrespondenceSet>(m, "CorrespondenceSet")
      .def(py::init<>())
      .def(py::init([](std::vector<PixelObservation> obs) {
             CorrespondenceSet set;
             set.observations = std::move(obs);
             return set;
           }),
           py::arg("observations"))
      .def_readwrite("observations", &CorrespondenceSet::observations)
      .def("__len__", &CorrespondenceSet::size);

  py::enum_<LossMode>(m, "LossMode")
      .value("baseline_mae", LossMode::baseline_mae)
      .value("cpl_uniform", LossMode::cpl_uniform)
      .value("cpl_adaptive", LossMode::cpl_adaptive);

  py::class_<LossReport>(m, "LossReport")
      .def_readonly("total", &LossReport::total)
      .def_readonly("per_param", &LossReport::per_param)
      .def_readonly("weights", &LossReport::weights)
      .def_readonly("mode", &LossReport::mode);

  m.def("cpl_loss", &cpl_loss, py::arg("gt"), py::arg("pred"), py::arg("obs"));
  m.def("decomposed_loss",
        py::overload_cast<const ParamVector13&, const ParamVector13&,
                          const CorrespondenceSet&>(&decomposed_loss),
        py::arg("gt"), py::arg("pred"), py::arg("obs"));
  m.def("decomposed_loss",
        py::overload_cast<const ParamVector13&, const ParamVector13&,
                          const CorrespondenceSet&,
                          const std::array<double, kNumParams>&>(
            &decomposed_loss),
        py::arg("gt"), py::arg("pred"), py::arg("obs"), py::arg("weights"));
  m.def("hybrid_vector", &hybrid_vector, py::arg("gt"), py::arg("pred"),
        py::arg("k"));

  py::class_<AdaptiveWeights>(m, "AdaptiveWeights")
      .def(py::init<double>(), py::arg("decay") = 0.99)
      .def("update", &AdaptiveWeights::update, py::arg("per_param_losses"))
      .def_property_readonly("weights", &AdaptiveWeights::weights)
      .def_property_readonly("ema", &AdaptiveWeights::ema);

  m.def(
      "grad_world_point",
      [](const PixelObservation& obs, const CameraParams& p) {
        return jacobian_rows(grad_world_point(obs, p));
      },
      py::arg("obs"), py::arg("params"),
      "3x10 Jacobian of the projected world point w.r.t. "
      "(fx, fy, u0, v0, b, d, theta_p, tx, ty, tz)");

  m.def("nmae",
        [](const std::vector<double>& t, const std::vector<double>& p) {
          return nmae(t, p);
        },
        py::arg("targets"), py::arg("preds"));
  m.def("nmae_signed",
        [](const std::vector<double>& t, const std::vector<double>& p) {
          return nmae_signed(t, p);
        },
        py::arg("targets"), py::arg("preds"));
  m.def("hfov_deg", &hfov_deg, py::arg("focal"), py::arg("width"));
  m.def("hfov_accuracy",
        [](const std::vector<double>& gt, const std::vector<double>& pred,
           double width, const std::vector<double>& thresholds) {
          return hfov_accuracy(gt, pred, width, thresholds);
        },
        py::arg("gt_focals"), py::arg("pred_focals"), py::arg("width"),
        py::arg("thresholds_deg"));

  py::class_<EvalTable>(m, "EvalTable")
      .def_readonly("nmae", &EvalTable::nmae)
      .def_readonly("hfov_accuracy", &EvalTable::hfov_accuracy)
      .def_readonly("sample_count", &EvalTable::sample_count);
  m.def("evaluate_predictions",
        [](const std::vector<ParamVector13>& t,
           const std::vector<ParamVector13>& p, double width, bool signed_) {
          return evaluate_predictions(t, p, width, signed_);
        },
        py::arg("targets"), py::arg("preds"), py::arg("width"),
        py::arg("signed_nmae") = false);
  m.def("render_eval_table", &render_eval_table, py::arg("table"),
        py::arg("delimiter") = ',');

  py::class_<ParamRange>(m, "ParamRange")
      .def(py::init<double, double>(), py::arg("min") = 0.0,
           py::arg("max") = 0.0)
      .def_readwrite("min", &ParamRange::min)
      .def_readwrite("max", &ParamRange::max);

  py::class_<ParamRanges>(m, "ParamRanges")
      .def(py::init<>())
      .def_readwrite("fx", &ParamRanges::fx)
      .def_readwrite("fy", &ParamRanges::fy)
      .def_readwrite("u0", &ParamRanges::u0)
      .def_readwrite("v0", &ParamRanges::v0)
      .def_readwrite("b", &ParamRanges::b)
      .def_readwrite("d", &ParamRanges::d)
      .def_readwrite("theta_p_deg", &ParamRanges::theta_p_deg)
      .def_readwrite("tx", &ParamRanges::tx)
      .def_readwrite("ty", &ParamRanges::ty)
      .def_readwrite("tz", &ParamRanges::tz)
      .def_readwrite("tie_fy_to_fx", &ParamRanges::tie_fy_to_fx)
      .def_readwrite("d_min_guard", &ParamRanges::d_min_guard)
      .def("validate", &ParamRanges::validate);

  m.def("cvgl_ranges", &cvgl_ranges);
  m.def("cityscapes_ranges", &cityscapes_ranges);
  m.def("tsinghua_ranges", &tsinghua_ranges);
  m.def("preset_by_name",
        [](const std::string& name) { return preset_by_name(name); },
        py::arg("name"));
  m.def("sample_config", &sample_config, py::arg("ranges"), py::arg("seed"));

  py::class_<Observation>(m, "Observation")
      .def(py::init<double, double, double>(), py::arg("u") = 0.0,
           py::arg("v") = 0.0, py::arg("disparity") = 0.0)
      .def_readwrite("u", &Observation::u)
      .def_readwrite("v", &Observation::v)
      .def_readwrite("disparity", &Observation::disparity);

  py::class_<SyntheticRecord>(m, "SyntheticRecord")
      .def(py::init<>())
      .def_readwrite("config_id", &SyntheticRecord::config_id)
      .def_readwrite("fx", &SyntheticRecord::fx)
      .def_readwrite("fy", &SyntheticRecord::fy)
      .def_readwrite("u0", &SyntheticRecord::u0)
      .def_readwrite("v0", &SyntheticRecord::v0)
      .def_readwrite("b", &SyntheticRecord::b)
      .def_readwrite("d", &SyntheticRecord::d)
      .def_readwrite("theta_p_deg", &SyntheticRecord::theta_p_deg)
      .def_readwrite("tx", &SyntheticRecord::tx)
      .def_readwrite("ty", &SyntheticRecord::ty)
      .def_readwrite("tz", &SyntheticRecord::tz)
      .def_readwrite("observations", &SyntheticRecord::observations)
      .def_readwrite("world_points", &SyntheticRecord::world_points)
      .def("camera_params", &SyntheticRecord::camera_params)
      .def("param_vector", &SyntheticRecord::param_vector)
      .def("correspondences", &SyntheticRecord::correspondences,
           py::arg("with_disparity") = true);

  m.def("generate_records", &generate_records, py::arg("ranges"),
        py::arg("n_configs"), py::arg("pts_per_config"),
        py::arg("noise_sigma"), py::arg("seed"));
  m.def("save_records", &save_records, py::arg("path"), py::arg("records"));
  m.def("load_records", &load_records, py::arg("path"));
  m.def("serialize_records", &serialize_records, py::arg("records"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &SolverConfig::learning_rate)
      .def_readwrite("batch_size", &SolverConfig::batch_size)
      .def_readwrite("max_epochs", &SolverConfig::max_epochs)
      .def_readwrite("early_stopping_patience",
                     &SolverConfig::early_stopping_patience)
      .def_readwrite("min_improvement", &SolverConfig::min_improvement)
      .def_readwrite("seed", &SolverConfig::seed)
      .def_readwrite("lr_decay", &SolverConfig::lr_decay)
      .def_readwrite("lr_patience", &SolverConfig::lr_patience);

  py::class_<FixMask>(m, "FixMask")
      .def(py::init<>())
      .def("fix",
           [](FixMask& f, const std::string& name) {
             for (int k = 0; k < kNumCameraParams; ++k) {
               if (kParamNames[static_cast<std::size_t>(k)] == name) {
                 f.fixed[static_cast<std::size_t>(k)] = true;
                 return;
               }
             }
             throw Error("unknown camera parameter '" + name + "'");
           },
           py::arg("name"));

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("loss_trace", &FitResult::loss_trace)
      .def_readonly("epochs_run", &FitResult::epochs_run)
      .def_readonly("converged", &FitResult::converged);

  m.def("fit_parameters", &fit_parameters, py::arg("obs"),
        py::arg("target_world"), py::arg("init"), py::arg("config"),
        py::arg("fix") = FixMask{});

  py::enum_<TrunkTopology>(m, "TrunkTopology")
      .value("single_net", TrunkTopology::single_net)
      .value("multi_net", TrunkTopology::multi_net);

  py::class_<MtlConfig>(m, "MtlConfig")
      .def(py::init<>())
      .def_readwrite("trunk_layers", &MtlConfig::trunk_layers)
      .def_readwrite("topology", &MtlConfig::topology)
      .def_readwrite("mode", &MtlConfig::mode)
      .def_readwrite("adaptive_decay", &MtlConfig::adaptive_decay);

  py::class_<TrainSample>(m, "TrainSample")
      .def(py::init<>())
      .def_readwrite("features", &TrainSample::features)
      .def_readwrite("target", &TrainSample::target)
      .def_readwrite("obs", &TrainSample::obs);

  py::class_<TrainHistory>(m, "TrainHistory")
      .def_readonly("epochs", &TrainHistory::epochs)
      .def_readonly("epochs_run", &TrainHistory::epochs_run)
      .def_readonly("converged", &TrainHistory::converged);

  py::class_<MtlNet>(m, "MtlNet")
      .def_static("create", &MtlNet::create, py::arg("feature_width"),
                  py::arg("config"), py::arg("head_bias"), py::arg("seed"))
      .def("forward",
           [](const MtlNet& net, const std::vector<double>& features) {
             return net.forward(features);
           },
           py::arg("features"))
      .def_property_readonly("feature_width", &MtlNet::feature_width)
      .def("get_parameters", &MtlNet::get_parameters)
      .def("set_parameters",
           [](MtlNet& net, const std::vector<double>& flat) {
             net.set_parameters(flat);
           },
           py::arg("flat"));

  m.def("mtl_train",
        [](MtlNet& net, const std::vector<TrainSample>& data,
           const SolverConfig& cfg) { return mtl_train(net, data, cfg); },
        py::arg("net"), py::arg("data"), py::arg("config"));
  m.def("mtl_evaluate",
        [](const MtlNet& net, const std::vector<TrainSample>& data,
           double width, bool signed_) {
          return mtl_evaluate(net, data, width, signed_);
        },
        py::arg("net"), py::arg("data"), py::arg("width"),
        py::arg("signed_nmae") = false);
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("net"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("features_from_record", &features_from_record, py::arg("record"),
        py::arg("with_stats") = false);
  m.def("train_samples_from_records", &train_samples_from_records,
        py::arg("records"), py::arg("with_stats") = false);
  m.def("mean_target",
        [](const std::vector<TrainSample>& data) { return mean_target(data); },
        py::arg("data"));
}
