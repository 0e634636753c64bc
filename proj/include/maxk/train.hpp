#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include "maxk/gnn.hpp"

namespace maxk {

struct NodeDataset {
  CsrGraph graph;
  Matrix<float> features;
  LabelSet labels;
  std::vector<std::uint8_t> train_mask;
  std::vector<std::uint8_t> val_mask;
};

/// Stochastic block model with Gaussian node features whose mean is
/// shifted by `signal` along the coordinate of the node's block.
struct SbmConfig {
  std::size_t nodes = 1000;
  std::size_t blocks = 4;
  double p_in = 0.05;
  double p_out = 0.005;
  std::size_t feature_dim = 16;
  double signal = 1.0;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

NodeDataset make_sbm_dataset(const SbmConfig& cfg);

/// Random train/val split of n nodes.
void split_masks(std::size_t n, double train_fraction, double val_fraction, std::uint64_t seed,
                 std::vector<std::uint8_t>& train, std::vector<std::uint8_t>& val);

/// Features: ".csv" (one row per node) or binary "FEAT", u32 version=1,
/// u64 rows, u64 cols, row-major f32.
Matrix<float> load_features(const std::filesystem::path& path);
void save_features(const Matrix<float>& f, const std::filesystem::path& path);

/// Labels: ".csv" or binary "LABL", u32 version=1, u64 rows, u64 cols,
/// row-major u32. One column holds class ids; more columns are a multi-hot
/// matrix.
LabelSet load_labels(const std::filesystem::path& path);
void save_labels(const LabelSet& l, const std::filesystem::path& path);

struct TrainOptions {
  std::size_t epochs = 200;
  double lr = 0.05;
  double momentum = 0.9;
  LossKind loss = LossKind::softmax_ce;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;

  /// Equality of everything but wall-clock time.
  bool same_trajectory(const TrainingLog& other) const;
  const EpochRecord& final() const { return epochs.back(); }
};

/// Full-batch training on an already-normalized graph. Row 0 of the log is
/// the evaluation of the initial parameters; row e follows the e-th update.
/// Throws DivergenceError on a non-finite loss.
TrainingLog train_full_batch(GnnModel<float>& model, const CsrGraph& g, const Matrix<float>& features,
                             const LabelSet& labels, std::span<const std::uint8_t> train_mask,
                             std::span<const std::uint8_t> val_mask, const TrainOptions& opts);

struct TrainConfig {
  ModelConfig model;
  TrainOptions train;
  Normalization normalization = Normalization::symmetric;
  bool self_loops = true;
  std::uint64_t seed = 0;
};

/// Normalizes the dataset graph, builds a model sized to the data and trains.
TrainingLog run_training(const NodeDataset& data, TrainConfig cfg);

/// CSV with columns epoch,loss,train_acc,val_acc,epoch_seconds.
void write_log_csv(const TrainingLog& log, std::ostream& os);

}  // namespace maxk
