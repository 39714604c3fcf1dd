// Command-line front end: generation, projection, calibration, training,
// evaluation, and gradient checking as reproducible file-based workflows.
//
// Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric abort, 5 check failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cplcalib/datagen.hpp"
#include "cplcalib/jacobian.hpp"
#include "cplcalib/metrics.hpp"
#include "cplcalib/mtl.hpp"
#include "cplcalib/solver.hpp"
#include "cplcalib/text.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace cplcalib;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCheckFailed = 5;

void write_text_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string());
}

ParamRanges resolve_ranges(const std::string& preset,
                           const std::string& ranges_file) {
  if (!ranges_file.empty()) return load_ranges(ranges_file);
  const auto ranges = preset_by_name(preset);
  if (!ranges) {
    throw Error("unknown preset '" + preset +
                "' (valid: cvgl, cityscapes, tsinghua, or --ranges FILE)");
  }
  return *ranges;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOpts {
  std::string preset = "cvgl";
  std::string ranges_file;
  int configs = 50;
  int points = 32;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  bool verbose = false;
};

int cmd_generate(const GenerateOpts& o) {
  cli::Manifest manifest("generate");
  manifest.set("flag.preset", o.ranges_file.empty() ? o.preset : "custom");
  manifest.set("flag.ranges", o.ranges_file);
  manifest.set("flag.configs", o.configs);
  manifest.set("flag.points", o.points);
  manifest.set("flag.noise_sigma", o.noise_sigma);
  manifest.set("seed", o.seed);
  manifest.set("output.dataset", o.out);

  const ParamRanges ranges = resolve_ranges(o.preset, o.ranges_file);
  const auto records =
      generate_records(ranges, o.configs, o.points, o.noise_sigma, o.seed);
  save_records(o.out, records);
  manifest.write(cli::manifest_path(o.out));

  std::cout << "wrote " << records.size() << " configs x " << o.points
            << " points to " << o.out << "\n";
  struct Bound {
    const char* name;
    double lo, hi;
  };
  std::array<Bound, 10> bounds = {{{"fx", 0, 0},
                                   {"fy", 0, 0},
                                   {"u0", 0, 0},
                                   {"v0", 0, 0},
                                   {"b", 0, 0},
                                   {"d", 0, 0},
                                   {"theta_p_deg", 0, 0},
                                   {"tx", 0, 0},
                                   {"ty", 0, 0},
                                   {"tz", 0, 0}}};
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SyntheticRecord& r = records[i];
    const std::array<double, 10> vals = {r.fx, r.fy, r.u0, r.v0, r.b,
                                         r.d,  r.theta_p_deg, r.tx, r.ty, r.tz};
    for (std::size_t k = 0; k < 10; ++k) {
      if (i == 0 || vals[k] < bounds[k].lo) bounds[k].lo = vals[k];
      if (i == 0 || vals[k] > bounds[k].hi) bounds[k].hi = vals[k];
    }
  }
  for (const Bound& bd : bounds) {
    std::cout << "  " << bd.name << " in [" << format_g17(bd.lo) << ", "
              << format_g17(bd.hi) << "]\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// project

struct ProjectOpts {
  double fx = 1, fy = 1, u0 = 0, v0 = 0, b = 1, d = 1;
  double pitch_deg = 0, tx = 0, ty = 0, tz = 0;
  double u = 0, v = 0;
  double disparity = 0;
  bool has_disparity = false;
  std::string to = "world";
  std::string out;
};

int cmd_project(const ProjectOpts& o) {
  CameraParams p;
  p.intrinsics = {o.fx, o.fy, o.u0, o.v0};
  p.extrinsics = {o.b, deg_to_rad(o.pitch_deg), o.tx, o.ty, o.tz};
  p.d = o.d;
  PixelObservation obs{o.u, o.v, std::nullopt};
  if (o.has_disparity) obs.disparity = o.disparity;

  std::ostringstream result;
  if (o.to == "world") {
    const WorldPoint w = project_to_world(obs, p);
    result << "X=" << format_g17(w.X) << "\nY=" << format_g17(w.Y)
           << "\nZ=" << format_g17(w.Z) << "\n";
  } else if (o.to == "camera") {
    const CameraPoint c = image_to_camera(obs, p);
    result << "x_cam=" << format_g17(c.x_cam) << "\ny_cam="
           << format_g17(c.y_cam) << "\nz_cam=" << format_g17(c.z_cam) << "\n";
  } else if (o.to == "normalized") {
    const CameraPoint c = normalized_image_to_camera(obs, p.intrinsics);
    result << "x_cam=" << format_g17(c.x_cam) << "\ny_cam="
           << format_g17(c.y_cam) << "\nz_cam=" << format_g17(c.z_cam) << "\n";
  } else {
    throw Error("unknown --to target '" + o.to +
                "' (valid: world, camera, normalized)");
  }

  std::cout << result.str();
  if (!o.out.empty()) {
    cli::Manifest manifest("project");
    manifest.set("flag.to", o.to);
    for (const auto& [k, v] : std::initializer_list<std::pair<const char*, double>>{
             {"fx", o.fx}, {"fy", o.fy}, {"u0", o.u0}, {"v0", o.v0},
             {"b", o.b}, {"d", o.d}, {"pitch_deg", o.pitch_deg},
             {"tx", o.tx}, {"ty", o.ty}, {"tz", o.tz}, {"u", o.u},
             {"v", o.v}}) {
      manifest.set(std::string("flag.") + k, v);
    }
    manifest.set("flag.disparity",
                 o.has_disparity ? format_g17(o.disparity) : "none");
    manifest.set("output.result", o.out);
    write_text_atomic(o.out, result.str());
    manifest.write(cli::manifest_path(o.out));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOpts {
  std::string data;
  std::string out;
  int config_id = -1;  // -1: all records
  std::vector<std::string> fix;
  std::string init = "perturb";
  double perturb_frac = 0.05;
  double lr = 0.05;
  int max_epochs = 6000;
  int patience = 40;
  int lr_patience = 6;
  std::uint64_t seed = 0;
  bool verbose = false;
};

int cmd_calibrate(const CalibrateOpts& o) {
  cli::Manifest manifest("calibrate");
  manifest.set("input.data", o.data);
  manifest.set("flag.config_id", o.config_id);
  {
    std::string joined;
    for (const auto& f : o.fix) {
      if (!joined.empty()) joined += ',';
      joined += f;
    }
    manifest.set("flag.fix", joined);
  }
  manifest.set("flag.init", o.init);
  manifest.set("flag.perturb_frac", o.perturb_frac);
  manifest.set("flag.lr", o.lr);
  manifest.set("flag.max_epochs", o.max_epochs);
  manifest.set("flag.patience", o.patience);
  manifest.set("flag.lr_patience", o.lr_patience);
  manifest.set("seed", o.seed);
  manifest.set("output.results", o.out);

  FixMask fix;
  for (const std::string& name : o.fix) {
    bool known = false;
    for (int k = 0; k < kNumCameraParams; ++k) {
      if (name == kParamNames[static_cast<std::size_t>(k)]) {
        fix.fixed[static_cast<std::size_t>(k)] = true;
        known = true;
        break;
      }
    }
    if (!known) {
      throw Error("--fix: unknown parameter '" + name + "'");
    }
  }
  if (o.init != "gt" && o.init != "perturb") {
    throw Error("--init must be 'gt' or 'perturb'");
  }

  const auto records = load_records(o.data);
  SolverConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.max_epochs = o.max_epochs;
  cfg.early_stopping_patience = o.patience;
  cfg.lr_patience = o.lr_patience;
  cfg.seed = o.seed;

  std::ostringstream out;
  out << "config_id,converged,epochs,final_loss";
  for (int k = 0; k < kNumCameraParams; ++k) {
    out << ',' << (k == static_cast<int>(Param::theta_p)
                       ? "theta_p_deg"
                       : kParamNames[static_cast<std::size_t>(k)]);
  }
  out << ",err_theta_p_deg,err_tx,err_ty,err_tz\n";

  for (const SyntheticRecord& rec : records) {
    if (o.config_id >= 0 && rec.config_id != o.config_id) continue;
    const CameraParams gt = rec.camera_params();
    CameraParams init = gt;
    if (o.init == "perturb") {
      Rng rng(o.seed, static_cast<std::uint64_t>(rec.config_id) + 0x9e3779b9u);
      ParamVector13 v = ParamVector13::from_parts(gt, {});
      for (int k = 0; k < kNumCameraParams; ++k) {
        if (fix.fixed[static_cast<std::size_t>(k)]) continue;
        const double scale = std::max(std::abs(v.at(k)), 0.5);
        v.at(k) += o.perturb_frac * scale * rng.uniform(-1.0, 1.0);
      }
      init = v.camera_params();
    }

    const FitResult fit = fit_parameters(rec.correspondences(true),
                                         rec.world_points, init, cfg, fix);
    const CameraParams& r = fit.params;
    out << rec.config_id << ',' << (fit.converged ? 1 : 0) << ','
        << fit.epochs_run << ',' << format_g17(fit.loss_trace.back());
    for (double val :
         {r.intrinsics.fx, r.intrinsics.fy, r.intrinsics.u0, r.intrinsics.v0,
          r.extrinsics.b, r.d, rad_to_deg(r.extrinsics.theta_p),
          r.extrinsics.tx, r.extrinsics.ty, r.extrinsics.tz}) {
      out << ',' << format_g17(val);
    }
    out << ',' << format_g17(std::abs(rad_to_deg(r.extrinsics.theta_p) -
                                      rec.theta_p_deg));
    out << ',' << format_g17(std::abs(r.extrinsics.tx - rec.tx));
    out << ',' << format_g17(std::abs(r.extrinsics.ty - rec.ty));
    out << ',' << format_g17(std::abs(r.extrinsics.tz - rec.tz));
    out << '\n';
    if (o.verbose) {
      std::cout << "config " << rec.config_id << ": converged="
                << fit.converged << " epochs=" << fit.epochs_run
                << " loss=" << fit.loss_trace.back() << "\n";
    }
  }

  write_text_atomic(o.out, out.str());
  manifest.write(cli::manifest_path(o.out));
  std::cout << "calibration results written to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data;
  std::string mode = "cpl-u";
  std::string topology = "sn";
  std::string trunk = "16,16";
  std::string features = "plain";
  std::string preset;  // optional: mid-range head bias
  double lr = 0.001;
  int batch = 16;
  int epochs = 200;
  int patience = 20;
  int lr_patience = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string log;
};

LossMode parse_mode(const std::string& mode) {
  if (mode == "baseline") return LossMode::baseline_mae;
  if (mode == "cpl-u") return LossMode::cpl_uniform;
  if (mode == "cpl-a") return LossMode::cpl_adaptive;
  throw Error("unknown --mode '" + mode + "' (valid: baseline, cpl-u, cpl-a)");
}

int cmd_train(const TrainOpts& o) {
  cli::Manifest manifest("train");
  manifest.set("input.data", o.data);
  manifest.set("flag.mode", o.mode);
  manifest.set("flag.topology", o.topology);
  manifest.set("flag.trunk", o.trunk);
  manifest.set("flag.features", o.features);
  manifest.set("flag.preset", o.preset);
  manifest.set("flag.lr", o.lr);
  manifest.set("flag.batch", o.batch);
  manifest.set("flag.epochs", o.epochs);
  manifest.set("flag.patience", o.patience);
  manifest.set("flag.lr_patience", o.lr_patience);
  manifest.set("seed", o.seed);
  manifest.set("output.checkpoint", o.out);

  MtlConfig net_cfg;
  net_cfg.mode = parse_mode(o.mode);
  if (o.topology == "sn") {
    net_cfg.topology = TrunkTopology::single_net;
  } else if (o.topology == "mn") {
    net_cfg.topology = TrunkTopology::multi_net;
  } else {
    throw Error("unknown --topology '" + o.topology + "' (valid: sn, mn)");
  }
  net_cfg.trunk_layers.clear();
  if (!o.trunk.empty()) {
    for (std::string_view tok : split(o.trunk, ',')) {
      net_cfg.trunk_layers.push_back(static_cast<int>(parse_double(tok)));
    }
  }
  if (o.features != "plain" && o.features != "stats") {
    throw Error("unknown --features '" + o.features + "' (valid: plain, stats)");
  }

  const auto records = load_records(o.data);
  const auto samples =
      train_samples_from_records(records, o.features == "stats");

  // Head biases: data means, with the camera components replaced by the
  // preset mid-ranges when a preset is named.
  ParamVector13 bias = mean_target(samples);
  if (!o.preset.empty()) {
    const auto ranges = preset_by_name(o.preset);
    if (!ranges) throw Error("unknown preset '" + o.preset + "'");
    bias[Param::fx] = (ranges->fx.min + ranges->fx.max) / 2.0;
    bias[Param::fy] = (ranges->fy.min + ranges->fy.max) / 2.0;
    bias[Param::u0] = (ranges->u0.min + ranges->u0.max) / 2.0;
    bias[Param::v0] = (ranges->v0.min + ranges->v0.max) / 2.0;
    bias[Param::b] = (ranges->b.min + ranges->b.max) / 2.0;
    bias[Param::d] = (ranges->d.min + ranges->d.max) / 2.0;
    bias[Param::theta_p] =
        deg_to_rad((ranges->theta_p_deg.min + ranges->theta_p_deg.max) / 2.0);
    bias[Param::tx] = (ranges->tx.min + ranges->tx.max) / 2.0;
    bias[Param::ty] = (ranges->ty.min + ranges->ty.max) / 2.0;
    bias[Param::tz] = (ranges->tz.min + ranges->tz.max) / 2.0;
  }

  MtlNet net = MtlNet::create(static_cast<int>(samples.front().features.size()),
                              net_cfg, bias, o.seed);
  SolverConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.max_epochs = o.epochs;
  cfg.early_stopping_patience = o.patience;
  cfg.lr_patience = o.lr_patience;
  cfg.seed = o.seed;

  const TrainHistory history = mtl_train(net, samples, cfg);

  save_checkpoint(o.out, net);
  const std::string log_path = o.log.empty() ? o.out + ".log" : o.log;
  manifest.set("output.log", log_path);

  std::ostringstream log;
  log << "epoch,total";
  for (int k = 0; k < kNumParams; ++k) {
    log << ",L_" << kParamNames[static_cast<std::size_t>(k)];
  }
  if (net_cfg.mode == LossMode::cpl_adaptive) {
    for (int k = 0; k < kNumParams; ++k) {
      log << ",alpha_" << kParamNames[static_cast<std::size_t>(k)];
    }
  }
  log << '\n';
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const LossReport& r = history.epochs[e];
    log << e << ',' << format_g17(r.total);
    for (double term : r.per_param) log << ',' << format_g17(term);
    if (r.weights.has_value()) {
      for (double w : *r.weights) log << ',' << format_g17(w);
    }
    log << '\n';
  }
  write_text_atomic(log_path, log.str());
  manifest.write(cli::manifest_path(o.out));

  std::cout << "trained " << history.epochs_run << " epochs, final loss "
            << format_g17(history.epochs.back().total) << ", checkpoint "
            << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::string data;
  std::string checkpoint;
  std::string predictor;  // "mean" for the Average baseline
  std::string train_data;
  std::string features = "plain";
  std::string preset;
  double width = 0.0;
  bool signed_nmae = false;
  std::string out;
  std::string kv;
};

int cmd_evaluate(const EvaluateOpts& o) {
  cli::Manifest manifest("evaluate");
  manifest.set("input.data", o.data);
  manifest.set("input.checkpoint", o.checkpoint);
  manifest.set("flag.predictor", o.predictor);
  manifest.set("input.train_data", o.train_data);
  manifest.set("flag.features", o.features);
  manifest.set("flag.preset", o.preset);
  manifest.set("flag.signed", o.signed_nmae);
  manifest.set("output.table", o.out);

  double width = o.width;
  if (width <= 0.0) {
    if (o.preset == "cvgl") {
      width = 112.0;  // principal point 56 at image center
    } else {
      throw Error("--width is required (default 112 applies only with "
                  "--preset cvgl)");
    }
  }
  manifest.set("flag.width", width);

  const auto records = load_records(o.data);
  const bool with_stats = o.features == "stats";
  const auto samples = train_samples_from_records(records, with_stats);

  std::vector<ParamVector13> targets, preds;
  targets.reserve(samples.size());
  for (const TrainSample& s : samples) targets.push_back(s.target);

  if (!o.checkpoint.empty() && !o.predictor.empty()) {
    throw Error("choose one of --checkpoint or --predictor");
  }
  if (!o.checkpoint.empty()) {
    const MtlNet net = load_checkpoint(o.checkpoint);
    for (const TrainSample& s : samples) {
      preds.push_back(net.forward(s.features));
    }
  } else if (o.predictor == "mean") {
    const auto train_records =
        o.train_data.empty() ? records : load_records(o.train_data);
    const auto train_samples =
        train_samples_from_records(train_records, with_stats);
    const ParamVector13 mean = mean_target(train_samples);
    preds.assign(samples.size(), mean);
  } else if (o.predictor.empty()) {
    throw Error("evaluate needs --checkpoint CKPT or --predictor mean");
  } else {
    throw Error("unknown --predictor '" + o.predictor + "' (valid: mean)");
  }

  const EvalTable table =
      evaluate_predictions(targets, preds, width, o.signed_nmae);
  write_text_atomic(o.out, render_eval_table(table));
  if (!o.kv.empty()) {
    manifest.set("output.record", o.kv);
    write_text_atomic(o.kv, render_eval_record(table));
  }
  manifest.write(cli::manifest_path(o.out));
  std::cout << render_eval_table(table);
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckOpts {
  int samples = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
  std::string out;
};

int cmd_gradcheck(const GradcheckOpts& o) {
  Rng rng(o.seed);
  const ParamRanges ranges = cvgl_ranges();
  double max_rel = 0.0;
  for (int i = 0; i < o.samples; ++i) {
    const RawConfig cfg = sample_raw_config(ranges, rng);
    const CameraParams params = cfg.camera_params();
    const PixelObservation obs{rng.uniform(0.0, 2.0 * cfg.u0),
                               rng.uniform(0.0, 2.0 * cfg.v0), std::nullopt};
    const WorldPointJacobian jac = grad_world_point(obs, params);

    ParamVector13 v = ParamVector13::from_parts(params, {});
    for (int k = 0; k < kNumCameraParams; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(v.at(k)));
      ParamVector13 plus = v, minus = v;
      plus.at(k) += h;
      minus.at(k) -= h;
      const WorldPoint wp = project_to_world(obs, plus.camera_params());
      const WorldPoint wm = project_to_world(obs, minus.camera_params());
      const std::array<double, 3> fd = {(wp.X - wm.X) / (2.0 * h),
                                        (wp.Y - wm.Y) / (2.0 * h),
                                        (wp.Z - wm.Z) / (2.0 * h)};
      for (int c = 0; c < 3; ++c) {
        const double analytic = jac.rows[static_cast<std::size_t>(c)]
                                        [static_cast<std::size_t>(k)];
        const double f = fd[static_cast<std::size_t>(c)];
        const double scale = std::max(std::abs(analytic), std::abs(f));
        if (scale >= 1e-12) {
          max_rel = std::max(max_rel, std::abs(analytic - f) / scale);
        }
      }
    }
  }

  const bool pass = max_rel <= o.tolerance;
  std::cout << "gradcheck: " << o.samples << " samples, max relative error "
            << format_g17(max_rel) << " (tolerance "
            << format_g17(o.tolerance) << ") -> "
            << (pass ? "pass" : "FAIL") << "\n";
  if (!o.out.empty()) {
    cli::Manifest manifest("gradcheck");
    manifest.set("flag.samples", o.samples);
    manifest.set("seed", o.seed);
    manifest.set("flag.tolerance", o.tolerance);
    manifest.set("output.report", o.out);
    std::ostringstream report;
    report << "samples=" << o.samples << "\nseed=" << o.seed
           << "\nmax_rel_error=" << format_g17(max_rel)
           << "\ntolerance=" << format_g17(o.tolerance)
           << "\nstatus=" << (pass ? "pass" : "fail") << "\n";
    write_text_atomic(o.out, report.str());
    manifest.write(cli::manifest_path(o.out));
  }
  return pass ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camera projection loss calibration toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenerateOpts gen;
  CLI::App* c_gen = app.add_subcommand("generate", "generate a synthetic dataset");
  c_gen->add_option("--preset", gen.preset, "cvgl | cityscapes | tsinghua");
  c_gen->add_option("--ranges", gen.ranges_file, "custom ranges file (key=value)");
  c_gen->add_option("--configs", gen.configs, "camera configurations")
      ->check(CLI::PositiveNumber);
  c_gen->add_option("--points", gen.points, "observations per configuration")
      ->check(CLI::PositiveNumber);
  c_gen->add_option("--noise-sigma", gen.noise_sigma, "pixel noise sigma")
      ->check(CLI::NonNegativeNumber);
  c_gen->add_option("--seed", gen.seed, "RNG seed");
  c_gen->add_option("--out", gen.out, "output dataset file")->required();
  c_gen->add_flag("--verbose", gen.verbose);

  ProjectOpts proj;
  CLI::App* c_proj = app.add_subcommand("project", "project one pixel");
  c_proj->add_option("--fx", proj.fx)->required();
  c_proj->add_option("--fy", proj.fy)->required();
  c_proj->add_option("--u0", proj.u0)->required();
  c_proj->add_option("--v0", proj.v0)->required();
  c_proj->add_option("--b", proj.b)->required();
  c_proj->add_option("--d", proj.d)->required();
  c_proj->add_option("--pitch-deg", proj.pitch_deg)->required();
  c_proj->add_option("--tx", proj.tx)->required();
  c_proj->add_option("--ty", proj.ty)->required();
  c_proj->add_option("--tz", proj.tz)->required();
  c_proj->add_option("--u", proj.u)->required();
  c_proj->add_option("--v", proj.v)->required();
  CLI::Option* disp_opt = c_proj->add_option("--disparity", proj.disparity,
                                             "per-point disparity override");
  c_proj->add_option("--to", proj.to, "world | camera | normalized");
  c_proj->add_option("--out", proj.out, "also write the result to a file");

  CalibrateOpts cal;
  CLI::App* c_cal = app.add_subcommand("calibrate", "fit camera parameters");
  c_cal->add_option("--data", cal.data, "dataset file")->required();
  c_cal->add_option("--out", cal.out, "results file")->required();
  c_cal->add_option("--config-id", cal.config_id, "fit one config (default all)");
  c_cal->add_option("--fix", cal.fix, "comma list of parameters to pin")
      ->delimiter(',');
  c_cal->add_option("--init", cal.init, "gt | perturb");
  c_cal->add_option("--perturb-frac", cal.perturb_frac);
  c_cal->add_option("--lr", cal.lr)->check(CLI::PositiveNumber);
  c_cal->add_option("--max-epochs", cal.max_epochs)->check(CLI::PositiveNumber);
  c_cal->add_option("--patience", cal.patience)->check(CLI::PositiveNumber);
  c_cal->add_option("--lr-patience", cal.lr_patience)->check(CLI::PositiveNumber);
  c_cal->add_option("--seed", cal.seed, "RNG seed");
  c_cal->add_flag("--verbose", cal.verbose);

  TrainOpts tr;
  CLI::App* c_tr = app.add_subcommand("train", "train the MTL regressor");
  c_tr->add_option("--data", tr.data, "dataset file")->required();
  c_tr->add_option("--mode", tr.mode, "baseline | cpl-u | cpl-a");
  c_tr->add_option("--topology", tr.topology, "sn | mn");
  c_tr->add_option("--trunk", tr.trunk, "hidden layer widths, e.g. 16,16");
  c_tr->add_option("--features", tr.features, "plain | stats");
  c_tr->add_option("--preset", tr.preset,
                   "use this preset's mid-ranges as head biases");
  c_tr->add_option("--lr", tr.lr)->check(CLI::PositiveNumber);
  c_tr->add_option("--batch", tr.batch)->check(CLI::PositiveNumber);
  c_tr->add_option("--epochs", tr.epochs)->check(CLI::PositiveNumber);
  c_tr->add_option("--patience", tr.patience)->check(CLI::PositiveNumber);
  c_tr->add_option("--lr-patience", tr.lr_patience)->check(CLI::PositiveNumber);
  c_tr->add_option("--seed", tr.seed, "RNG seed");
  c_tr->add_option("--out", tr.out, "checkpoint file")->required();
  c_tr->add_option("--log", tr.log, "epoch log file (default <out>.log)");

  EvaluateOpts ev;
  CLI::App* c_ev = app.add_subcommand("evaluate", "score predictions");
  c_ev->add_option("--data", ev.data, "test dataset")->required();
  c_ev->add_option("--checkpoint", ev.checkpoint, "trained model");
  c_ev->add_option("--predictor", ev.predictor, "mean (the Average baseline)");
  c_ev->add_option("--train-data", ev.train_data,
                   "training dataset for --predictor mean (default: --data)");
  c_ev->add_option("--features", ev.features, "plain | stats");
  c_ev->add_option("--preset", ev.preset, "preset used to default --width");
  c_ev->add_option("--width", ev.width, "image width for hFOV");
  c_ev->add_flag("--signed", ev.signed_nmae, "signed NMAE variant");
  c_ev->add_option("--out", ev.out, "table output file")->required();
  c_ev->add_option("--kv", ev.kv, "key=value record output file");

  GradcheckOpts gc;
  CLI::App* c_gc = app.add_subcommand("gradcheck",
                                      "compare the analytic Jacobian with "
                                      "finite differences");
  c_gc->add_option("--samples", gc.samples)->check(CLI::PositiveNumber);
  c_gc->add_option("--seed", gc.seed, "RNG seed");
  c_gc->add_option("--tolerance", gc.tolerance)->check(CLI::PositiveNumber);
  c_gc->add_option("--out", gc.out, "report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (c_gen->parsed()) return cmd_generate(gen);
    if (c_proj->parsed()) {
      proj.has_disparity = disp_opt->count() > 0;
      return cmd_project(proj);
    }
    if (c_cal->parsed()) return cmd_calibrate(cal);
    if (c_tr->parsed()) return cmd_train(tr);
    if (c_ev->parsed()) return cmd_evaluate(ev);
    if (c_gc->parsed()) return cmd_gradcheck(gc);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ZeroDisparityError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NonFiniteError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DegeneratePointError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DivergenceDetectedError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ZeroDenominatorError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
