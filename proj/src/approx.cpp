#include "maxk/approx.hpp"

#include <cmath>
#include <random>
#include <string>

#include "maxk/error.hpp"

namespace maxk {

ApproxTarget parse_approx_target(std::string_view name) {
  if (name == "square") return ApproxTarget::square;
  if (name == "zero") return ApproxTarget::zero;
  throw ParameterError("unknown approximation target '" + std::string(name) + "'");
}

MlpApproxModel::MlpApproxModel(std::size_t hidden, Activation act, std::uint64_t seed)
    : first_(1, hidden), readout_(hidden, 1), act_(act), k_(act == Activation::maxk ? approx_k_for(hidden) : hidden) {
  if (hidden < 1) throw ParameterError("hidden units must be >= 1");
  std::mt19937_64 rng(seed);
  // Slopes and offsets in [-1, 1] spread the kinks across the domain.
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (double& v : first_.weight.flat()) v = unit(rng);
  for (double& v : first_.bias) v = unit(rng);
  readout_.init(rng);
}

Matrix<double> MlpApproxModel::forward(const Matrix<double>& x) {
  x_ = x;
  pre_ = first_.forward(x);
  switch (act_) {
    case Activation::maxk: {
      pattern_ = maxk_forward(pre_, k_).cbsr;
      hidden_ = densify(pattern_);
      break;
    }
    case Activation::relu:
      hidden_ = pre_;
      for (double& v : hidden_.flat()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::identity:
      hidden_ = pre_;
      break;
  }
  return readout_.forward(hidden_);
}

void MlpApproxModel::backward(const Matrix<double>& dg) {
  Matrix<double> dh = readout_.backward(hidden_, dg);
  switch (act_) {
    case Activation::maxk:
      dh = maxk_backward(maxk_gather(dh, pattern_), pattern_);
      break;
    case Activation::relu: {
      const auto pre = pre_.flat();
      auto d = dh.flat();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(pre[i] > 0.0)) d[i] = 0.0;
      }
      break;
    }
    case Activation::identity:
      break;
  }
  first_.backward(x_, dh);
}

void MlpApproxModel::zero_grad() {
  first_.zero_grad();
  readout_.zero_grad();
}

void MlpApproxModel::step(Sgd<double>& opt) {
  opt.step(first_, 0);
  opt.step(readout_, 1);
}

std::vector<ApproxRow> approx_demo(const ApproxConfig& cfg) {
  if (cfg.grid_points < 2) throw ParameterError("approximation grid needs at least 2 points");
  const std::size_t n = cfg.grid_points;
  Matrix<double> x(n, 1), y(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double xv = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    x(i, 0) = xv;
    y(i, 0) = cfg.target == ApproxTarget::square ? xv * xv : 0.0;
  }

  std::vector<ApproxRow> rows;
  for (std::size_t r : cfg.hidden_units) {
    MlpApproxModel model(r, cfg.activation, cfg.seed + r);
    Sgd<double> opt(cfg.lr, cfg.momentum);
    Matrix<double> dg(n, 1);
    double mse = 0.0;
    const auto eval = [&] {
      const Matrix<double> g = model.forward(x);
      mse = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = g(i, 0) - y(i, 0);
        mse += e * e;
        dg(i, 0) = 2.0 * e / static_cast<double>(n);
      }
      mse /= static_cast<double>(n);
    };
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      eval();
      if (!std::isfinite(mse)) throw DivergenceError("approximation diverged for r=" + std::to_string(r));
      model.zero_grad();
      model.backward(dg);
      model.step(opt);
    }
    eval();
    rows.push_back({r, model.k(), mse});
  }
  return rows;
}

}  // namespace maxk
