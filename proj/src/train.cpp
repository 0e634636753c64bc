#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "maxk/error.hpp"
#include "maxk/train.hpp"

namespace maxk {

bool TrainingLog::same_trajectory(const TrainingLog& other) const {
  if (epochs.size() != other.epochs.size()) return false;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& a = epochs[i];
    const auto& b = other.epochs[i];
    if (a.epoch != b.epoch || a.loss != b.loss || a.train_acc != b.train_acc || a.val_acc != b.val_acc) {
      return false;
    }
  }
  return true;
}

TrainingLog train_full_batch(GnnModel<float>& model, const CsrGraph& g, const Matrix<float>& features,
                             const LabelSet& labels, std::span<const std::uint8_t> train_mask,
                             std::span<const std::uint8_t> val_mask, const TrainOptions& opts) {
  using clock = std::chrono::steady_clock;
  Sgd<float> optimizer(opts.lr, opts.momentum);
  TrainingLog log;

  const auto evaluate = [&](std::size_t epoch, double seconds) {
    const Matrix<float> logits = model.forward(g, features);
    const double loss = compute_loss(opts.loss, logits, labels, train_mask).loss;
    if (!std::isfinite(loss)) {
      throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch));
    }
    log.epochs.push_back({epoch, loss, accuracy(logits, labels, train_mask), accuracy(logits, labels, val_mask),
                          seconds});
  };

  evaluate(0, 0.0);
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto start = clock::now();
    model.zero_grad();
    const Matrix<float> logits = model.forward(g, features);
    const auto loss = compute_loss(opts.loss, logits, labels, train_mask);
    if (!std::isfinite(loss.loss)) {
      throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch));
    }
    model.backward(g, loss.grad);
    optimizer.step(model);
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();
    evaluate(epoch, seconds);
  }
  return log;
}

TrainingLog run_training(const NodeDataset& data, TrainConfig cfg) {
  CsrGraph g = cfg.self_loops ? add_self_loops(data.graph) : data.graph;
  g = normalize(g, cfg.normalization);
  cfg.model.in_features = data.features.cols();
  cfg.model.out_features = data.labels.num_classes;
  GnnModel<float> model(cfg.model, cfg.seed);
  return train_full_batch(model, g, data.features, data.labels, data.train_mask, data.val_mask, cfg.train);
}

void write_log_csv(const TrainingLog& log, std::ostream& os) {
  os << "epoch,loss,train_acc,val_acc,epoch_seconds\n";
  char buf[160];
  for (const auto& e : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.6f,%.6f,%.6f\n", e.epoch, e.loss, e.train_acc, e.val_acc,
                  e.seconds);
    os << buf;
  }
}

}  // namespace maxk
