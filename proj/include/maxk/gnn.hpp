#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "maxk/cbsr.hpp"
#include "maxk/dense.hpp"
#include "maxk/graph.hpp"
#include "maxk/kernels.hpp"
#include "maxk/partition.hpp"

namespace maxk {

enum class Activation { maxk, relu, identity };
Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// Y = X W + b, with gradient buffers of the same shapes.
template <typename T>
struct LinearLayer {
  Matrix<T> weight;  // in x out
  std::vector<T> bias;
  Matrix<T> grad_weight;
  std::vector<T> grad_bias;

  LinearLayer() = default;
  LinearLayer(std::size_t in, std::size_t out);

  std::size_t in_features() const noexcept { return weight.rows(); }
  std::size_t out_features() const noexcept { return weight.cols(); }

  /// Glorot-uniform weights, zero bias.
  void init(std::mt19937_64& rng);
  void zero_grad();

  Matrix<T> forward(const Matrix<T>& x) const;
  /// Accumulates dW, db from (x, dy) and returns dX.
  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy);
};

/// One GNN layer: linear transform, nonlinearity, neighbor aggregation.
///
/// With Activation::maxk the nonlinearity emits CBSR features, the
/// aggregation is the row-wise SpGEMM kernel and backward goes through the
/// SSpMM kernel over the transposed adjacency, reusing the forward sp_index.
/// ReLU and identity layers aggregate with the dense SpMM.
template <typename T>
class MaxkGnnLayer {
 public:
  MaxkGnnLayer(std::size_t in, std::size_t out, Activation act, std::size_t k, ExecOptions exec = {},
               std::size_t group_size = kDefaultGroupSize);

  LinearLayer<T>& linear() noexcept { return linear_; }
  const LinearLayer<T>& linear() const noexcept { return linear_; }
  Activation activation() const noexcept { return act_; }
  std::size_t k() const noexcept { return k_; }
  void set_exec(ExecOptions exec) noexcept { exec_ = exec; }

  /// `g` must already carry the aggregator's edge weights.
  Matrix<T> forward(const CsrGraph& g, const Matrix<T>& x);
  /// Returns dL/dx and accumulates linear-layer gradients. Throws
  /// StateError if forward has not run.
  Matrix<T> backward(const CsrGraph& g, const Matrix<T>& upstream);

  const std::optional<BasicCbsr<T>>& cached_pattern() const noexcept { return pattern_; }
  const PivotSummary& last_pivots() const noexcept { return pivots_; }

 private:
  const EdgeGroupPlan& plan_for(const CsrGraph& g);

  LinearLayer<T> linear_;
  Activation act_;
  std::size_t k_;
  ExecOptions exec_;
  std::size_t group_size_;

  std::optional<EdgeGroupPlan> plan_;
  const CsrGraph* plan_graph_ = nullptr;

  std::optional<Matrix<T>> input_;
  std::optional<Matrix<T>> pre_activation_;  // ReLU only
  std::optional<BasicCbsr<T>> pattern_;      // MaxK only
  PivotSummary pivots_;
};

struct ModelConfig {
  std::size_t in_features = 16;
  std::size_t hidden = 64;
  std::size_t out_features = 4;
  std::size_t layers = 2;
  Activation activation = Activation::maxk;
  std::size_t k = 8;
  std::size_t group_size = kDefaultGroupSize;
  ExecOptions exec;
};

/// Stack of layers; every layer but the last uses the configured
/// nonlinearity, the last one is linear + aggregation (logits).
template <typename T>
class GnnModel {
 public:
  GnnModel(const ModelConfig& cfg, std::uint64_t seed);

  std::vector<MaxkGnnLayer<T>>& layers() noexcept { return layers_; }
  const std::vector<MaxkGnnLayer<T>>& layers() const noexcept { return layers_; }

  Matrix<T> forward(const CsrGraph& g, const Matrix<T>& x);
  Matrix<T> backward(const CsrGraph& g, const Matrix<T>& dlogits);
  void zero_grad();
  void set_exec(ExecOptions exec);

 private:
  std::vector<MaxkGnnLayer<T>> layers_;
};

// -- losses ------------------------------------------------------------------

enum class LossKind { softmax_ce, bce };
LossKind parse_loss(std::string_view name);
std::string_view to_string(LossKind l);

/// Targets for node classification. Single-label sets use `classes`,
/// multi-label sets use the 0/1 matrix `multi_hot`.
struct LabelSet {
  std::size_t num_classes = 0;
  bool multi_label = false;
  std::vector<std::uint32_t> classes;
  Matrix<float> multi_hot;

  std::size_t size() const noexcept { return multi_label ? multi_hot.rows() : classes.size(); }
};

template <typename T>
struct LossResult {
  double loss = 0.0;
  Matrix<T> grad;  // dL/dlogits, zero on unmasked rows
};

/// Mean loss over the rows where mask != 0.
template <typename T>
LossResult<T> compute_loss(LossKind kind, const Matrix<T>& logits, const LabelSet& labels,
                           std::span<const std::uint8_t> mask);

/// Fraction of masked rows predicted correctly (argmax for single-label,
/// per-entry sign for multi-label).
template <typename T>
double accuracy(const Matrix<T>& logits, const LabelSet& labels, std::span<const std::uint8_t> mask);

// -- optimizer ---------------------------------------------------------------

/// SGD with optional heavy-ball momentum.
template <typename T>
class Sgd {
 public:
  Sgd(double lr, double momentum) : lr_(lr), momentum_(momentum) {}
  void step(GnnModel<T>& model);
  void step(LinearLayer<T>& layer, std::size_t slot);

 private:
  void update(std::span<T> param, std::span<const T> grad, std::size_t slot);

  double lr_;
  double momentum_;
  std::vector<std::vector<T>> velocity_;
};

}  // namespace maxk
