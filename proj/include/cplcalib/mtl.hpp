#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "cplcalib/datagen.hpp"
#include "cplcalib/loss.hpp"
#include "cplcalib/metrics.hpp"
#include "cplcalib/solver.hpp"

namespace cplcalib {

// SN feeds the whole feature vector through one trunk; MN splits it in half
// and runs each half through its own trunk before the heads see the fused
// output (the two-image analogue at feature level).
enum class TrunkTopology {
  single_net,
  multi_net,
};

constexpr std::string_view topology_name(TrunkTopology t) {
  return t == TrunkTopology::single_net ? "single_net" : "multi_net";
}

struct MtlConfig {
  std::vector<int> trunk_layers = {32, 32};
  TrunkTopology topology = TrunkTopology::single_net;
  LossMode mode = LossMode::cpl_uniform;
  double adaptive_decay = 0.99;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;     // row-major, out x in
  std::vector<double> bias;  // out
};

// Hard-parameter-sharing regressor: a shared fully connected tanh trunk and
// thirteen scalar affine heads, one per parameter-vector component.
class MtlNet {
 public:
  // Trunk weights are Glorot-uniform; heads start with zero weights and the
  // given bias, so an untrained net outputs head_bias for any input.
  static MtlNet create(int feature_width, const MtlConfig& cfg,
                       const ParamVector13& head_bias, std::uint64_t seed);

  // Deterministic forward pass. Throws ShapeMismatchError when the feature
  // length differs from feature_width().
  ParamVector13 forward(std::span<const double> features) const;

  int feature_width() const { return feature_width_; }
  const MtlConfig& config() const { return cfg_; }

  // Trainable parameters as one flat vector (trunk layers in order, weights
  // then biases, then the thirteen heads). Input normalization is not
  // trainable and not included.
  std::size_t parameter_count() const;
  std::vector<double> get_parameters() const;
  void set_parameters(std::span<const double> flat);

  // Per-feature affine input normalization applied before the trunk.
  void set_input_normalization(std::vector<double> mean,
                               std::vector<double> stddev);
  const std::vector<double>& input_mean() const { return input_mean_; }
  const std::vector<double>& input_std() const { return input_std_; }

  const std::vector<DenseLayer>& trunk_a() const { return trunk_a_; }
  const std::vector<DenseLayer>& trunk_b() const { return trunk_b_; }
  const std::vector<DenseLayer>& heads() const { return heads_; }

 private:
  friend struct MtlBackprop;
  friend void save_checkpoint(const std::filesystem::path&, const MtlNet&);
  friend MtlNet load_checkpoint(const std::filesystem::path&);

  MtlNet() = default;

  int feature_width_ = 0;
  int split_ = 0;  // multi_net: width of the first trunk's slice
  MtlConfig cfg_;
  std::vector<double> input_mean_, input_std_;
  std::vector<DenseLayer> trunk_a_;
  std::vector<DenseLayer> trunk_b_;  // multi_net only
  std::vector<DenseLayer> heads_;    // 13 layers with out = 1
};

// One training example. For the CPL modes the observations should carry no
// per-point disparity, so the regressed scalar d drives the projection chain.
struct TrainSample {
  std::vector<double> features;
  ParamVector13 target;
  CorrespondenceSet obs;
};

struct TrainHistory {
  std::vector<LossReport> epochs;
  int epochs_run = 0;
  bool converged = false;
};

// Minibatch Adam training under the configured loss mode. Gradients flow
// through the projection equations analytically (grad_world_point) and then
// through the trunk by backpropagation. Adaptive weights update once per
// epoch from the epoch-mean per-parameter losses; the weights recorded for
// an epoch are the ones its batches used.
TrainHistory mtl_train(MtlNet& net, std::span<const TrainSample> data,
                       const SolverConfig& cfg);

// Training loss and flat parameter gradient for one batch under the current
// weights; exposed so tests can check backprop against finite differences.
double mtl_loss_and_grad(const MtlNet& net, std::span<const TrainSample> batch,
                         const std::array<double, kNumParams>& weights,
                         std::vector<double>& grad_out);

// Runs the net over a test set and scores it with the evaluation metrics.
EvalTable mtl_evaluate(const MtlNet& net, std::span<const TrainSample> data,
                       double width, bool signed_nmae = false);

// Self-describing checkpoint of named arrays with shapes; written atomically.
void save_checkpoint(const std::filesystem::path& path, const MtlNet& net);
MtlNet load_checkpoint(const std::filesystem::path& path);

// Feature vector for a record: flattened (u, v, disparity) triples, plus
// per-channel mean and standard deviation when with_stats is set.
std::vector<double> features_from_record(const SyntheticRecord& record,
                                         bool with_stats = false);

// Training samples from a dataset: features plus the ground-truth 13-vector;
// observations are stripped of per-point disparities (MTL path).
std::vector<TrainSample> train_samples_from_records(
    const std::vector<SyntheticRecord>& records, bool with_stats = false);

// Component-wise mean of the targets; the default head-bias initializer.
ParamVector13 mean_target(std::span<const TrainSample> data);

}  // namespace cplcalib
