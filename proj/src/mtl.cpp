#include "cplcalib/mtl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "cplcalib/text.hpp"

namespace cplcalib {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double glorot_limit(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

DenseLayer make_layer(int in, int out) {
  DenseLayer l;
  l.in = in;
  l.out = out;
  l.w.assign(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), 0.0);
  l.bias.assign(static_cast<std::size_t>(out), 0.0);
  return l;
}

void init_glorot(DenseLayer& l, Rng& rng) {
  const double limit = glorot_limit(l.in, l.out);
  for (double& w : l.w) w = rng.uniform(-limit, limit);
}

void dense_forward(const DenseLayer& l, const std::vector<double>& in,
                   std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(l.out), 0.0);
  for (int r = 0; r < l.out; ++r) {
    const double* row = l.w.data() + static_cast<std::size_t>(r) * l.in;
    double acc = l.bias[static_cast<std::size_t>(r)];
    for (int c = 0; c < l.in; ++c) acc += row[c] * in[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
}

// acts[0] is the trunk input; acts[l+1] = tanh(W_l acts[l] + b_l).
void trunk_forward(const std::vector<DenseLayer>& trunk,
                   std::vector<double> input,
                   std::vector<std::vector<double>>& acts) {
  acts.clear();
  acts.push_back(std::move(input));
  std::vector<double> z;
  for (const DenseLayer& l : trunk) {
    dense_forward(l, acts.back(), z);
    for (double& v : z) v = std::tanh(v);
    acts.push_back(z);
  }
}

struct FlatLayout {
  // Offsets of each layer's weights/biases inside the flat parameter vector.
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
};

void layout_append(FlatLayout& layout, const std::vector<DenseLayer>& layers) {
  for (const DenseLayer& l : layers) {
    layout.offsets.push_back(layout.total);
    layout.total += l.w.size();
    layout.offsets.push_back(layout.total);
    layout.total += l.bias.size();
  }
}

}  // namespace

MtlNet MtlNet::create(int feature_width, const MtlConfig& cfg,
                      const ParamVector13& head_bias, std::uint64_t seed) {
  if (feature_width < 1) throw Error("MtlNet: feature_width must be >= 1");
  for (int w : cfg.trunk_layers) {
    if (w < 1) throw Error("MtlNet: trunk layer width must be >= 1");
  }
  if (cfg.topology == TrunkTopology::multi_net && feature_width < 2) {
    throw Error("MtlNet: multi_net needs at least two features");
  }

  MtlNet net;
  net.feature_width_ = feature_width;
  net.cfg_ = cfg;
  net.input_mean_.assign(static_cast<std::size_t>(feature_width), 0.0);
  net.input_std_.assign(static_cast<std::size_t>(feature_width), 1.0);

  Rng rng(seed);
  auto build_trunk = [&](int in_width) {
    std::vector<DenseLayer> trunk;
    int in = in_width;
    for (int out : cfg.trunk_layers) {
      DenseLayer l = make_layer(in, out);
      init_glorot(l, rng);
      trunk.push_back(std::move(l));
      in = out;
    }
    return trunk;
  };

  int head_in = 0;
  if (cfg.topology == TrunkTopology::single_net) {
    net.split_ = feature_width;
    net.trunk_a_ = build_trunk(feature_width);
    head_in = cfg.trunk_layers.empty() ? feature_width
                                       : cfg.trunk_layers.back();
  } else {
    net.split_ = (feature_width + 1) / 2;
    net.trunk_a_ = build_trunk(net.split_);
    net.trunk_b_ = build_trunk(feature_width - net.split_);
    if (cfg.trunk_layers.empty()) {
      head_in = feature_width;
    } else {
      head_in = 2 * cfg.trunk_layers.back();
    }
  }

  net.heads_.reserve(kNumParams);
  for (int k = 0; k < kNumParams; ++k) {
    DenseLayer head = make_layer(head_in, 1);
    head.bias[0] = head_bias.at(k);
    net.heads_.push_back(std::move(head));
  }
  return net;
}

ParamVector13 MtlNet::forward(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != feature_width_) {
    throw ShapeMismatchError("MtlNet::forward: feature width mismatch");
  }
  std::vector<double> x(features.begin(), features.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = (x[i] - input_mean_[i]) / input_std_[i];
  }

  std::vector<std::vector<double>> acts_a, acts_b;
  std::vector<double> fused;
  if (cfg_.topology == TrunkTopology::single_net) {
    trunk_forward(trunk_a_, std::move(x), acts_a);
    fused = acts_a.back();
  } else {
    std::vector<double> xa(x.begin(), x.begin() + split_);
    std::vector<double> xb(x.begin() + split_, x.end());
    trunk_forward(trunk_a_, std::move(xa), acts_a);
    trunk_forward(trunk_b_, std::move(xb), acts_b);
    fused = acts_a.back();
    fused.insert(fused.end(), acts_b.back().begin(), acts_b.back().end());
  }

  ParamVector13 out;
  std::vector<double> y;
  for (int k = 0; k < kNumParams; ++k) {
    dense_forward(heads_[static_cast<std::size_t>(k)], fused, y);
    out.at(k) = y[0];
  }
  return out;
}

std::size_t MtlNet::parameter_count() const {
  FlatLayout layout;
  layout_append(layout, trunk_a_);
  layout_append(layout, trunk_b_);
  layout_append(layout, heads_);
  return layout.total;
}

std::vector<double> MtlNet::get_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto* group : {&trunk_a_, &trunk_b_, &heads_}) {
    for (const DenseLayer& l : *group) {
      flat.insert(flat.end(), l.w.begin(), l.w.end());
      flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
  }
  return flat;
}

void MtlNet::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw ShapeMismatchError("MtlNet::set_parameters: size mismatch");
  }
  std::size_t pos = 0;
  for (auto* group : {&trunk_a_, &trunk_b_, &heads_}) {
    for (DenseLayer& l : *group) {
      std::copy_n(flat.begin() + pos, l.w.size(), l.w.begin());
      pos += l.w.size();
      std::copy_n(flat.begin() + pos, l.bias.size(), l.bias.begin());
      pos += l.bias.size();
    }
  }
}

void MtlNet::set_input_normalization(std::vector<double> mean,
                                     std::vector<double> stddev) {
  if (static_cast<int>(mean.size()) != feature_width_ ||
      static_cast<int>(stddev.size()) != feature_width_) {
    throw ShapeMismatchError("set_input_normalization: width mismatch");
  }
  for (double s : stddev) {
    if (!(s > 0.0)) throw Error("set_input_normalization: stddev must be > 0");
  }
  input_mean_ = std::move(mean);
  input_std_ = std::move(stddev);
}

// ---------------------------------------------------------------------------
// Training internals

struct MtlBackprop {
  const MtlNet& net;
  std::vector<std::vector<double>> acts_a, acts_b;
  std::vector<double> fused;
  ParamVector13 outputs;

  explicit MtlBackprop(const MtlNet& n) : net(n) {}

  void forward(const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != net.feature_width_) {
      throw ShapeMismatchError("mtl training: feature width mismatch");
    }
    std::vector<double> x = features;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = (x[i] - net.input_mean_[i]) / net.input_std_[i];
    }
    if (net.cfg_.topology == TrunkTopology::single_net) {
      trunk_forward(net.trunk_a_, std::move(x), acts_a);
      fused = acts_a.back();
    } else {
      std::vector<double> xa(x.begin(), x.begin() + net.split_);
      std::vector<double> xb(x.begin() + net.split_, x.end());
      trunk_forward(net.trunk_a_, std::move(xa), acts_a);
      trunk_forward(net.trunk_b_, std::move(xb), acts_b);
      fused = acts_a.back();
      fused.insert(fused.end(), acts_b.back().begin(), acts_b.back().end());
    }
    std::vector<double> y;
    for (int k = 0; k < kNumParams; ++k) {
      dense_forward(net.heads_[static_cast<std::size_t>(k)], fused, y);
      outputs.at(k) = y[0];
    }
  }

  // Accumulates parameter gradients for dL/d(outputs) = out_grad into the
  // flat gradient vector (same layout as get_parameters).
  void backward(const std::array<double, kNumParams>& out_grad,
                std::vector<double>& flat_grad) const {
    FlatLayout layout;
    layout_append(layout, net.trunk_a_);
    layout_append(layout, net.trunk_b_);
    layout_append(layout, net.heads_);

    const std::size_t n_a = 2 * net.trunk_a_.size();
    const std::size_t n_b = 2 * net.trunk_b_.size();

    std::vector<double> fused_grad(fused.size(), 0.0);
    for (int k = 0; k < kNumParams; ++k) {
      const double g = out_grad[static_cast<std::size_t>(k)];
      if (g == 0.0) continue;
      const DenseLayer& head = net.heads_[static_cast<std::size_t>(k)];
      const std::size_t w_off =
          layout.offsets[n_a + n_b + 2 * static_cast<std::size_t>(k)];
      const std::size_t b_off =
          layout.offsets[n_a + n_b + 2 * static_cast<std::size_t>(k) + 1];
      for (std::size_t c = 0; c < fused.size(); ++c) {
        flat_grad[w_off + c] += g * fused[c];
        fused_grad[c] += g * head.w[c];
      }
      flat_grad[b_off] += g;
    }

    auto backprop_trunk = [&](const std::vector<DenseLayer>& trunk,
                              const std::vector<std::vector<double>>& acts,
                              std::vector<double> delta,
                              std::size_t layout_base) {
      // delta arrives as dL/d(post-activation) of the trunk output.
      for (std::size_t li = trunk.size(); li-- > 0;) {
        const DenseLayer& l = trunk[li];
        const std::vector<double>& out_act = acts[li + 1];
        const std::vector<double>& in_act = acts[li];
        for (int r = 0; r < l.out; ++r) {
          delta[static_cast<std::size_t>(r)] *=
              1.0 - out_act[static_cast<std::size_t>(r)] *
                        out_act[static_cast<std::size_t>(r)];
        }
        const std::size_t w_off = layout.offsets[layout_base + 2 * li];
        const std::size_t b_off = layout.offsets[layout_base + 2 * li + 1];
        std::vector<double> prev(static_cast<std::size_t>(l.in), 0.0);
        for (int r = 0; r < l.out; ++r) {
          const double dr = delta[static_cast<std::size_t>(r)];
          const std::size_t row = static_cast<std::size_t>(r) *
                                  static_cast<std::size_t>(l.in);
          for (int c = 0; c < l.in; ++c) {
            flat_grad[w_off + row + static_cast<std::size_t>(c)] +=
                dr * in_act[static_cast<std::size_t>(c)];
            prev[static_cast<std::size_t>(c)] +=
                dr * l.w[row + static_cast<std::size_t>(c)];
          }
          flat_grad[b_off + static_cast<std::size_t>(r)] += dr;
        }
        delta = std::move(prev);
      }
    };

    if (net.cfg_.topology == TrunkTopology::single_net) {
      if (!net.trunk_a_.empty()) {
        backprop_trunk(net.trunk_a_, acts_a, fused_grad, 0);
      }
    } else {
      const std::size_t wa =
          net.trunk_a_.empty() ? static_cast<std::size_t>(net.split_)
                               : acts_a.back().size();
      std::vector<double> ga(fused_grad.begin(),
                             fused_grad.begin() + static_cast<long>(wa));
      std::vector<double> gb(fused_grad.begin() + static_cast<long>(wa),
                             fused_grad.end());
      if (!net.trunk_a_.empty()) backprop_trunk(net.trunk_a_, acts_a, ga, 0);
      if (!net.trunk_b_.empty()) backprop_trunk(net.trunk_b_, acts_b, gb, n_a);
    }
  }
};

namespace {

// Per-parameter loss terms and their derivatives w.r.t. the corresponding
// network output, for one sample.
void sample_terms(const TrainSample& s, const ParamVector13& pred,
                  LossMode mode, std::array<double, kNumParams>& terms,
                  std::array<double, kNumParams>& dterms) {
  terms.fill(0.0);
  dterms.fill(0.0);
  if (mode == LossMode::baseline_mae) {
    for (int k = 0; k < kNumParams; ++k) {
      const double r = pred.at(k) - s.target.at(k);
      terms[static_cast<std::size_t>(k)] = std::abs(r);
      dterms[static_cast<std::size_t>(k)] = sign(r);
    }
    return;
  }
  if (s.obs.empty()) {
    throw ShapeMismatchError("mtl training: CPL mode needs correspondences");
  }
  const CameraParams gt_cam = s.target.camera_params();
  std::vector<WorldPoint> gt_world;
  gt_world.reserve(s.obs.size());
  for (const PixelObservation& o : s.obs.observations) {
    gt_world.push_back(project_to_world(o, gt_cam));
  }
  const double inv3n = 1.0 / (3.0 * static_cast<double>(s.obs.size()));
  for (int k = 0; k < kNumCameraParams; ++k) {
    ParamVector13 hybrid = s.target;
    hybrid.at(k) = pred.at(k);
    const CameraParams hybrid_cam = hybrid.camera_params();
    double term = 0.0;
    double dterm = 0.0;
    for (std::size_t i = 0; i < s.obs.observations.size(); ++i) {
      const PixelObservation& o = s.obs.observations[i];
      const WorldPoint w = project_to_world(o, hybrid_cam);
      const WorldPointJacobian jac = grad_world_point(o, hybrid_cam);
      const std::array<double, 3> r = {w.X - gt_world[i].X,
                                       w.Y - gt_world[i].Y,
                                       w.Z - gt_world[i].Z};
      for (std::size_t c = 0; c < 3; ++c) {
        term += std::abs(r[c]);
        dterm += sign(r[c]) * jac.rows[c][static_cast<std::size_t>(k)];
      }
    }
    terms[static_cast<std::size_t>(k)] = term * inv3n;
    dterms[static_cast<std::size_t>(k)] = dterm * inv3n;
  }
  for (int k = kNumCameraParams; k < kNumParams; ++k) {
    const double r = pred.at(k) - s.target.at(k);
    terms[static_cast<std::size_t>(k)] = std::abs(r) / 3.0;
    dterms[static_cast<std::size_t>(k)] = sign(r) / 3.0;
  }
}

// Combination coefficients of the per-parameter terms for each mode.
std::array<double, kNumParams> term_coefficients(
    LossMode mode, const std::array<double, kNumParams>& weights) {
  std::array<double, kNumParams> c{};
  if (mode == LossMode::cpl_adaptive) {
    c = weights;
  } else {
    c.fill(1.0 / static_cast<double>(kNumParams));
  }
  return c;
}

struct BatchResult {
  double total = 0.0;
  std::array<double, kNumParams> per_param_sum{};
};

BatchResult batch_pass(const MtlNet& net, std::span<const TrainSample> batch,
                       const std::array<double, kNumParams>& weights,
                       std::vector<double>* grad_out) {
  const std::array<double, kNumParams> coeff =
      term_coefficients(net.config().mode, weights);
  BatchResult result;
  MtlBackprop bp(net);
  std::array<double, kNumParams> terms{}, dterms{}, out_grad{};
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const TrainSample& s : batch) {
    bp.forward(s.features);
    sample_terms(s, bp.outputs, net.config().mode, terms, dterms);
    double sample_total = 0.0;
    for (int k = 0; k < kNumParams; ++k) {
      const auto i = static_cast<std::size_t>(k);
      sample_total += coeff[i] * terms[i];
      result.per_param_sum[i] += terms[i];
      out_grad[i] = inv_b * coeff[i] * dterms[i];
    }
    result.total += inv_b * sample_total;
    if (grad_out != nullptr) bp.backward(out_grad, *grad_out);
  }
  return result;
}

}  // namespace

double mtl_loss_and_grad(const MtlNet& net, std::span<const TrainSample> batch,
                         const std::array<double, kNumParams>& weights,
                         std::vector<double>& grad_out) {
  if (batch.empty()) throw ShapeMismatchError("mtl_loss_and_grad: empty batch");
  grad_out.assign(net.parameter_count(), 0.0);
  return batch_pass(net, batch, weights, &grad_out).total;
}

TrainHistory mtl_train(MtlNet& net, std::span<const TrainSample> data,
                       const SolverConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ShapeMismatchError("mtl_train: no training data");
  for (const TrainSample& s : data) {
    if (static_cast<int>(s.features.size()) != net.feature_width()) {
      throw ShapeMismatchError("mtl_train: inconsistent feature width");
    }
  }

  // Fit input normalization on the training set.
  {
    const auto fw = static_cast<std::size_t>(net.feature_width());
    std::vector<double> mean(fw, 0.0), sd(fw, 0.0);
    for (const TrainSample& s : data) {
      for (std::size_t i = 0; i < fw; ++i) mean[i] += s.features[i];
    }
    for (double& m : mean) m /= static_cast<double>(data.size());
    for (const TrainSample& s : data) {
      for (std::size_t i = 0; i < fw; ++i) {
        const double dlt = s.features[i] - mean[i];
        sd[i] += dlt * dlt;
      }
    }
    for (double& v : sd) {
      v = std::sqrt(v / static_cast<double>(data.size()));
      if (v < 1e-12) v = 1.0;
    }
    net.set_input_normalization(std::move(mean), std::move(sd));
  }

  std::vector<double> params = net.get_parameters();
  std::vector<double> grads(params.size(), 0.0);
  const std::vector<char> mask(params.size(), 1);
  Adam adam(params.size(), cfg);
  Rng rng(cfg.seed);
  AdaptiveWeights adaptive(net.config().adaptive_decay);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  double lr = cfg.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0, lr_stall = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Seeded Fisher-Yates shuffle.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() *
                                              static_cast<double>(i));
      std::swap(order[i - 1], order[j < i ? j : i - 1]);
    }

    const std::array<double, kNumParams> epoch_weights = adaptive.weights();
    std::array<double, kNumParams> per_param_sum{};
    std::vector<TrainSample> batch;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(data[order[i]]);
      }
      std::fill(grads.begin(), grads.end(), 0.0);
      const BatchResult r = batch_pass(net, batch, epoch_weights, &grads);
      for (int k = 0; k < kNumParams; ++k) {
        per_param_sum[static_cast<std::size_t>(k)] +=
            r.per_param_sum[static_cast<std::size_t>(k)];
      }
      adam.step(params, grads, mask, lr);
      net.set_parameters(params);
    }

    LossReport report;
    report.mode = net.config().mode;
    for (int k = 0; k < kNumParams; ++k) {
      report.per_param[static_cast<std::size_t>(k)] =
          per_param_sum[static_cast<std::size_t>(k)] /
          static_cast<double>(data.size());
    }
    const std::array<double, kNumParams> coeff =
        term_coefficients(net.config().mode, epoch_weights);
    double total = 0.0;
    for (int k = 0; k < kNumParams; ++k) {
      total += coeff[static_cast<std::size_t>(k)] *
               report.per_param[static_cast<std::size_t>(k)];
    }
    report.total = total;
    if (net.config().mode == LossMode::cpl_adaptive) {
      report.weights = epoch_weights;
    }
    history.epochs.push_back(report);
    history.epochs_run = epoch + 1;

    if (!std::isfinite(total)) {
      throw DivergenceDetectedError("mtl_train: non-finite loss");
    }
    if (net.config().mode == LossMode::cpl_adaptive) {
      adaptive.update(report.per_param);
    }

    const double improvement = best - total;
    if (total < best) best = total;
    if (improvement < cfg.min_improvement) {
      ++stall;
      ++lr_stall;
    } else {
      stall = 0;
      lr_stall = 0;
    }
    if (stall >= cfg.early_stopping_patience) {
      history.converged = true;
      break;
    }
    if (lr_stall >= cfg.lr_patience) {
      lr = std::max(lr * cfg.lr_decay, cfg.min_learning_rate);
      lr_stall = 0;
    }
  }
  return history;
}

EvalTable mtl_evaluate(const MtlNet& net, std::span<const TrainSample> data,
                       double width, bool signed_nmae) {
  if (data.empty()) throw ShapeMismatchError("mtl_evaluate: empty test set");
  std::vector<ParamVector13> targets, preds;
  targets.reserve(data.size());
  preds.reserve(data.size());
  for (const TrainSample& s : data) {
    targets.push_back(s.target);
    preds.push_back(net.forward(s.features));
  }
  return evaluate_predictions(targets, preds, width, signed_nmae);
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

void write_array(std::ostream& out, const std::string& name,
                 std::span<const double> values, int rows, int cols) {
  out << "array " << name << ' ' << rows << ' ' << cols << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ' ';
    out << format_g17(values[i]);
  }
  out << '\n';
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MtlNet& net) {
  std::ostringstream out;
  out << "cplcalib-checkpoint v1\n";
  out << "feature_width=" << net.feature_width_ << '\n';
  out << "split=" << net.split_ << '\n';
  out << "topology=" << topology_name(net.cfg_.topology) << '\n';
  out << "mode=" << loss_mode_name(net.cfg_.mode) << '\n';
  out << "adaptive_decay=" << format_g17(net.cfg_.adaptive_decay) << '\n';
  out << "trunk_layers=";
  for (std::size_t i = 0; i < net.cfg_.trunk_layers.size(); ++i) {
    if (i > 0) out << ',';
    out << net.cfg_.trunk_layers[i];
  }
  out << '\n';
  write_array(out, "input_mean", net.input_mean_, 1, net.feature_width_);
  write_array(out, "input_std", net.input_std_, 1, net.feature_width_);
  const auto dump_group = [&](const std::vector<DenseLayer>& group,
                              const std::string& prefix) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      const DenseLayer& l = group[i];
      write_array(out, prefix + '.' + std::to_string(i) + ".w", l.w, l.out,
                  l.in);
      write_array(out, prefix + '.' + std::to_string(i) + ".b", l.bias, 1,
                  l.out);
    }
  };
  dump_group(net.trunk_a_, "trunk_a");
  dump_group(net.trunk_b_, "trunk_b");
  dump_group(net.heads_, "head");
  out << "end\n";

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary);
    if (!file) throw IoError("cannot open checkpoint for writing: " + tmp.string());
    file << out.str();
    if (!file) throw IoError("checkpoint write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("checkpoint rename failed: " + path.string());
}

MtlNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "cplcalib-checkpoint v1") {
    throw IoError("checkpoint: bad magic line");
  }

  MtlNet net;
  auto meta = [&](const std::string& got, std::string_view key) {
    if (!got.starts_with(std::string(key) + "=")) {
      throw IoError("checkpoint: expected " + std::string(key));
    }
    return got.substr(key.size() + 1);
  };
  std::getline(in, line);
  net.feature_width_ = static_cast<int>(parse_double(meta(line, "feature_width")));
  std::getline(in, line);
  net.split_ = static_cast<int>(parse_double(meta(line, "split")));
  std::getline(in, line);
  {
    const std::string t = meta(line, "topology");
    if (t == "single_net") {
      net.cfg_.topology = TrunkTopology::single_net;
    } else if (t == "multi_net") {
      net.cfg_.topology = TrunkTopology::multi_net;
    } else {
      throw IoError("checkpoint: unknown topology '" + t + "'");
    }
  }
  std::getline(in, line);
  {
    const std::string m = meta(line, "mode");
    if (m == "baseline_mae") {
      net.cfg_.mode = LossMode::baseline_mae;
    } else if (m == "cpl_uniform") {
      net.cfg_.mode = LossMode::cpl_uniform;
    } else if (m == "cpl_adaptive") {
      net.cfg_.mode = LossMode::cpl_adaptive;
    } else {
      throw IoError("checkpoint: unknown mode '" + m + "'");
    }
  }
  std::getline(in, line);
  net.cfg_.adaptive_decay = parse_double(meta(line, "adaptive_decay"));
  std::getline(in, line);
  {
    net.cfg_.trunk_layers.clear();
    const std::string layers = meta(line, "trunk_layers");
    if (!layers.empty()) {
      for (std::string_view tok : split(layers, ',')) {
        net.cfg_.trunk_layers.push_back(static_cast<int>(parse_double(tok)));
      }
    }
  }

  struct NamedArray {
    std::string name;
    int rows = 0, cols = 0;
    std::vector<double> values;
  };
  std::vector<NamedArray> arrays;
  while (std::getline(in, line)) {
    if (line == "end") break;
    std::istringstream head(line);
    std::string tag;
    NamedArray a;
    head >> tag >> a.name >> a.rows >> a.cols;
    if (tag != "array" || head.fail() || a.rows < 1 || a.cols < 1) {
      throw IoError("checkpoint: malformed array header '" + line + "'");
    }
    if (!std::getline(in, line)) throw IoError("checkpoint: missing values");
    for (std::string_view tok : split(line, ' ')) {
      a.values.push_back(parse_double(tok));
    }
    if (a.values.size() != static_cast<std::size_t>(a.rows) *
                               static_cast<std::size_t>(a.cols)) {
      throw IoError("checkpoint: array '" + a.name + "' size mismatch");
    }
    arrays.push_back(std::move(a));
  }

  auto take = [&](const std::string& name) -> NamedArray& {
    for (NamedArray& a : arrays) {
      if (a.name == name) return a;
    }
    throw IoError("checkpoint: missing array '" + name + "'");
  };

  net.input_mean_ = take("input_mean").values;
  net.input_std_ = take("input_std").values;
  if (static_cast<int>(net.input_mean_.size()) != net.feature_width_ ||
      static_cast<int>(net.input_std_.size()) != net.feature_width_) {
    throw IoError("checkpoint: input normalization width mismatch");
  }

  auto load_group = [&](std::vector<DenseLayer>& group,
                        const std::string& prefix, int count) {
    for (int i = 0; i < count; ++i) {
      NamedArray& w = take(prefix + '.' + std::to_string(i) + ".w");
      NamedArray& b = take(prefix + '.' + std::to_string(i) + ".b");
      DenseLayer l = make_layer(w.cols, w.rows);
      if (b.values.size() != static_cast<std::size_t>(w.rows)) {
        throw IoError("checkpoint: bias size mismatch in " + prefix);
      }
      l.w = std::move(w.values);
      l.bias = std::move(b.values);
      group.push_back(std::move(l));
    }
  };
  const int n_trunk = static_cast<int>(net.cfg_.trunk_layers.size());
  load_group(net.trunk_a_, "trunk_a", n_trunk);
  if (net.cfg_.topology == TrunkTopology::multi_net) {
    load_group(net.trunk_b_, "trunk_b", n_trunk);
  }
  load_group(net.heads_, "head", kNumParams);
  return net;
}

// ---------------------------------------------------------------------------
// Feature pipeline

std::vector<double> features_from_record(const SyntheticRecord& record,
                                         bool with_stats) {
  std::vector<double> f;
  f.reserve(3 * record.observations.size() + (with_stats ? 6 : 0));
  for (const Observation& o : record.observations) {
    f.push_back(o.u);
    f.push_back(o.v);
    f.push_back(o.disparity);
  }
  if (with_stats) {
    const double n = static_cast<double>(record.observations.size());
    double mu = 0, mv = 0, md = 0;
    for (const Observation& o : record.observations) {
      mu += o.u;
      mv += o.v;
      md += o.disparity;
    }
    mu /= n;
    mv /= n;
    md /= n;
    double su = 0, sv = 0, sd = 0;
    for (const Observation& o : record.observations) {
      su += (o.u - mu) * (o.u - mu);
      sv += (o.v - mv) * (o.v - mv);
      sd += (o.disparity - md) * (o.disparity - md);
    }
    f.push_back(mu);
    f.push_back(mv);
    f.push_back(md);
    f.push_back(std::sqrt(su / n));
    f.push_back(std::sqrt(sv / n));
    f.push_back(std::sqrt(sd / n));
  }
  return f;
}

std::vector<TrainSample> train_samples_from_records(
    const std::vector<SyntheticRecord>& records, bool with_stats) {
  std::vector<TrainSample> samples;
  samples.reserve(records.size());
  for (const SyntheticRecord& r : records) {
    TrainSample s;
    s.features = features_from_record(r, with_stats);
    s.target = r.param_vector();
    s.obs = r.correspondences(/*with_disparity=*/false);
    samples.push_back(std::move(s));
  }
  return samples;
}

ParamVector13 mean_target(std::span<const TrainSample> data) {
  if (data.empty()) throw ShapeMismatchError("mean_target: empty data");
  ParamVector13 mean;
  for (const TrainSample& s : data) {
    for (int k = 0; k < kNumParams; ++k) mean.at(k) += s.target.at(k);
  }
  for (int k = 0; k < kNumParams; ++k) {
    mean.at(k) /= static_cast<double>(data.size());
  }
  return mean;
}

}  // namespace cplcalib
