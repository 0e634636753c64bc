#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "maxk/gnn.hpp"

namespace maxk {

enum class ApproxTarget { square, zero };
ApproxTarget parse_approx_target(std::string_view name);

/// ceil(r / 4): the MaxK width used for an MLP with r hidden units.
constexpr std::size_t approx_k_for(std::size_t hidden) { return (hidden + 3) / 4; }

/// One-hidden-layer network g(x) = act(x W + b) W' + b' on scalar inputs.
class MlpApproxModel {
 public:
  MlpApproxModel(std::size_t hidden, Activation act, std::uint64_t seed);

  std::size_t hidden_units() const noexcept { return first_.out_features(); }
  std::size_t k() const noexcept { return k_; }

  Matrix<double> forward(const Matrix<double>& x);
  /// Backpropagates dL/dg and accumulates parameter gradients.
  void backward(const Matrix<double>& dg);
  void zero_grad();
  void step(Sgd<double>& opt);

 private:
  LinearLayer<double> first_;
  LinearLayer<double> readout_;
  Activation act_;
  std::size_t k_;

  Matrix<double> x_;
  Matrix<double> pre_;
  Matrix<double> hidden_;
  BasicCbsr<double> pattern_;
};

struct ApproxConfig {
  ApproxTarget target = ApproxTarget::square;
  std::vector<std::size_t> hidden_units{4, 16, 64, 256};
  Activation activation = Activation::maxk;
  std::size_t epochs = 8000;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t grid_points = 101;
  std::uint64_t seed = 0;
};

struct ApproxRow {
  std::size_t hidden = 0;
  std::size_t k = 0;
  double mse = 0.0;
};

/// Fits the target on an even grid over [-1, 1] for each hidden width and
/// reports the final mean squared error.
std::vector<ApproxRow> approx_demo(const ApproxConfig& cfg);

}  // namespace maxk
