#include "maxk/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maxk/error.hpp"

namespace maxk {

Activation parse_activation(std::string_view name) {
  if (name == "maxk") return Activation::maxk;
  if (name == "relu") return Activation::relu;
  if (name == "none" || name == "identity") return Activation::identity;
  throw ParameterError("unknown nonlinearity '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::maxk: return "maxk";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

LossKind parse_loss(std::string_view name) {
  if (name == "ce" || name == "softmax-ce" || name == "softmax_ce") return LossKind::softmax_ce;
  if (name == "bce") return LossKind::bce;
  throw ParameterError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind l) { return l == LossKind::bce ? "bce" : "softmax-ce"; }

// -- LinearLayer ---------------------------------------------------------------

template <typename T>
LinearLayer<T>::LinearLayer(std::size_t in, std::size_t out)
    : weight(in, out), bias(out, T{}), grad_weight(in, out), grad_bias(out, T{}) {}

template <typename T>
void LinearLayer<T>::init(std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_features() + out_features()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (T& v : weight.flat()) v = static_cast<T>(dist(rng));
  std::fill(bias.begin(), bias.end(), T{});
}

template <typename T>
void LinearLayer<T>::zero_grad() {
  grad_weight.fill(T{});
  std::fill(grad_bias.begin(), grad_bias.end(), T{});
}

template <typename T>
Matrix<T> LinearLayer<T>::forward(const Matrix<T>& x) const {
  if (x.cols() != in_features()) {
    throw DimensionError("linear layer expects " + std::to_string(in_features()) + " input features, got " +
                         std::to_string(x.cols()));
  }
  const std::size_t n = x.rows(), in = in_features(), out = out_features();
  Matrix<T> y(n, out);
  for (std::size_t r = 0; r < n; ++r) {
    auto yr = y.row(r);
    std::copy(bias.begin(), bias.end(), yr.begin());
    const auto xr = x.row(r);
    for (std::size_t i = 0; i < in; ++i) {
      const T xv = xr[i];
      const auto wr = weight.row(i);
      for (std::size_t o = 0; o < out; ++o) yr[o] += xv * wr[o];
    }
  }
  return y;
}

template <typename T>
Matrix<T> LinearLayer<T>::backward(const Matrix<T>& x, const Matrix<T>& dy) {
  const std::size_t n = x.rows(), in = in_features(), out = out_features();
  if (dy.rows() != n || dy.cols() != out) throw DimensionError("linear backward: gradient shape mismatch");
  Matrix<T> dx(n, in);
  for (std::size_t r = 0; r < n; ++r) {
    const auto xr = x.row(r);
    const auto dyr = dy.row(r);
    auto dxr = dx.row(r);
    for (std::size_t o = 0; o < out; ++o) grad_bias[o] += dyr[o];
    for (std::size_t i = 0; i < in; ++i) {
      const auto wr = weight.row(i);
      auto gwr = grad_weight.row(i);
      T acc{};
      for (std::size_t o = 0; o < out; ++o) {
        gwr[o] += xr[i] * dyr[o];
        acc += dyr[o] * wr[o];
      }
      dxr[i] = acc;
    }
  }
  return dx;
}

// -- MaxkGnnLayer --------------------------------------------------------------

template <typename T>
MaxkGnnLayer<T>::MaxkGnnLayer(std::size_t in, std::size_t out, Activation act, std::size_t k, ExecOptions exec,
                              std::size_t group_size)
    : linear_(in, out), act_(act), k_(act == Activation::maxk ? k : out), exec_(exec), group_size_(group_size) {
  if (act_ == Activation::maxk && (k_ < 1 || k_ > out)) {
    throw DimensionError("MaxK layer needs 1 <= k <= out features (k=" + std::to_string(k) + ", out=" +
                         std::to_string(out) + ")");
  }
}

template <typename T>
const EdgeGroupPlan& MaxkGnnLayer<T>::plan_for(const CsrGraph& g) {
  if (!plan_ || plan_graph_ != &g) {
    plan_ = build_plan(g, k_, group_size_);
    plan_graph_ = &g;
  }
  return *plan_;
}

template <typename T>
Matrix<T> MaxkGnnLayer<T>::forward(const CsrGraph& g, const Matrix<T>& x) {
  if (x.rows() != g.num_nodes()) throw DimensionError("feature rows != graph nodes");
  Matrix<T> y = linear_.forward(x);
  input_ = x;
  pattern_.reset();
  pre_activation_.reset();

  switch (act_) {
    case Activation::maxk: {
      auto sel = maxk_forward(y, k_);
      pivots_ = sel.pivots;
      Matrix<T> out = spgemm_forward(g, sel.cbsr, plan_for(g), exec_);
      pattern_ = std::move(sel.cbsr);
      return out;
    }
    case Activation::relu: {
      Matrix<T> h = y;
      for (T& v : h.flat()) v = v > T{} ? v : T{};
      pre_activation_ = std::move(y);
      return dense_spmm(g, h);
    }
    case Activation::identity:
      return dense_spmm(g, y);
  }
  throw StateError("unreachable activation");
}

template <typename T>
Matrix<T> MaxkGnnLayer<T>::backward(const CsrGraph& g, const Matrix<T>& upstream) {
  if (!input_) throw StateError("layer backward called before forward");
  Matrix<T> dy;
  switch (act_) {
    case Activation::maxk: {
      if (!pattern_) throw StateError("MaxK layer has no cached sparsity pattern");
      const BasicCbsr<T> dxs = sspmm_backward(transpose_view(g), upstream, *pattern_, plan_for(g), exec_);
      dy = maxk_backward(dxs, *pattern_);
      break;
    }
    case Activation::relu: {
      if (!pre_activation_) throw StateError("ReLU layer has no cached pre-activation");
      dy = dense_spmm_transpose(g, upstream);
      const auto pre = pre_activation_->flat();
      auto d = dy.flat();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(pre[i] > T{})) d[i] = T{};
      }
      break;
    }
    case Activation::identity:
      dy = dense_spmm_transpose(g, upstream);
      break;
  }
  return linear_.backward(*input_, dy);
}

// -- GnnModel ------------------------------------------------------------------

template <typename T>
GnnModel<T>::GnnModel(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.layers < 1) throw ParameterError("model needs at least one layer");
  std::mt19937_64 rng(seed);
  std::size_t in = cfg.in_features;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const bool last = l + 1 == cfg.layers;
    const std::size_t out = last ? cfg.out_features : cfg.hidden;
    const Activation act = last ? Activation::identity : cfg.activation;
    layers_.emplace_back(in, out, act, cfg.k, cfg.exec, cfg.group_size);
    layers_.back().linear().init(rng);
    in = out;
  }
}

template <typename T>
Matrix<T> GnnModel<T>::forward(const CsrGraph& g, const Matrix<T>& x) {
  Matrix<T> h = layers_.front().forward(g, x);
  for (std::size_t l = 1; l < layers_.size(); ++l) h = layers_[l].forward(g, h);
  return h;
}

template <typename T>
Matrix<T> GnnModel<T>::backward(const CsrGraph& g, const Matrix<T>& dlogits) {
  Matrix<T> d = dlogits;
  for (std::size_t l = layers_.size(); l-- > 0;) d = layers_[l].backward(g, d);
  return d;
}

template <typename T>
void GnnModel<T>::zero_grad() {
  for (auto& layer : layers_) layer.linear().zero_grad();
}

template <typename T>
void GnnModel<T>::set_exec(ExecOptions exec) {
  for (auto& layer : layers_) layer.set_exec(exec);
}

// -- losses --------------------------------------------------------------------

template <typename T>
LossResult<T> compute_loss(LossKind kind, const Matrix<T>& logits, const LabelSet& labels,
                           std::span<const std::uint8_t> mask) {
  const std::size_t n = logits.rows(), c = logits.cols();
  if (labels.size() != n || mask.size() != n) throw DimensionError("labels/mask length != node count");
  if (c != labels.num_classes) throw DimensionError("logit width != class count");
  if (kind == LossKind::softmax_ce && labels.multi_label) throw ParameterError("softmax-ce needs single labels");
  if (kind == LossKind::bce && !labels.multi_label) throw ParameterError("bce needs multi-hot labels");

  std::size_t count = 0;
  for (auto m : mask) count += m != 0;
  LossResult<T> res{0.0, Matrix<T>(n, c)};
  if (count == 0) return res;
  const double inv = 1.0 / static_cast<double>(count);

  for (std::size_t r = 0; r < n; ++r) {
    if (!mask[r]) continue;
    const auto z = logits.row(r);
    auto g = res.grad.row(r);
    if (kind == LossKind::softmax_ce) {
      const double zmax = static_cast<double>(*std::max_element(z.begin(), z.end()));
      double denom = 0.0;
      for (T v : z) denom += std::exp(static_cast<double>(v) - zmax);
      const double log_denom = std::log(denom) + zmax;
      const std::uint32_t y = labels.classes[r];
      res.loss += (log_denom - static_cast<double>(z[y])) * inv;
      for (std::size_t j = 0; j < c; ++j) {
        const double p = std::exp(static_cast<double>(z[j]) - log_denom);
        g[j] = static_cast<T>((p - (j == y ? 1.0 : 0.0)) * inv);
      }
    } else {
      const double inv_c = inv / static_cast<double>(c);
      for (std::size_t j = 0; j < c; ++j) {
        const double zv = z[j];
        const double t = labels.multi_hot(r, j);
        // log(1 + e^z) - t z, written to stay finite for large |z|.
        res.loss += (std::max(zv, 0.0) - t * zv + std::log1p(std::exp(-std::abs(zv)))) * inv_c;
        const double p = 1.0 / (1.0 + std::exp(-zv));
        g[j] = static_cast<T>((p - t) * inv_c);
      }
    }
  }
  return res;
}

template <typename T>
double accuracy(const Matrix<T>& logits, const LabelSet& labels, std::span<const std::uint8_t> mask) {
  std::size_t total = 0, correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (!mask[r]) continue;
    const auto z = logits.row(r);
    if (labels.multi_label) {
      for (std::size_t j = 0; j < z.size(); ++j) {
        correct += (z[j] > T{}) == (labels.multi_hot(r, j) > 0.5f);
        ++total;
      }
    } else {
      const auto pred = static_cast<std::uint32_t>(std::max_element(z.begin(), z.end()) - z.begin());
      correct += pred == labels.classes[r];
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

// -- Sgd -----------------------------------------------------------------------

template <typename T>
void Sgd<T>::update(std::span<T> param, std::span<const T> grad, std::size_t slot) {
  if (velocity_.size() <= slot) velocity_.resize(slot + 1);
  auto& vel = velocity_[slot];
  if (vel.size() != param.size()) vel.assign(param.size(), T{});
  const T lr = static_cast<T>(lr_), mu = static_cast<T>(momentum_);
  for (std::size_t i = 0; i < param.size(); ++i) {
    vel[i] = mu * vel[i] + grad[i];
    param[i] -= lr * vel[i];
  }
}

template <typename T>
void Sgd<T>::step(LinearLayer<T>& layer, std::size_t slot) {
  update(layer.weight.flat(), layer.grad_weight.flat(), 2 * slot);
  update(layer.bias, layer.grad_bias, 2 * slot + 1);
}

template <typename T>
void Sgd<T>::step(GnnModel<T>& model) {
  for (std::size_t l = 0; l < model.layers().size(); ++l) step(model.layers()[l].linear(), l);
}

template struct LinearLayer<float>;
template struct LinearLayer<double>;
template class MaxkGnnLayer<float>;
template class MaxkGnnLayer<double>;
template class GnnModel<float>;
template class GnnModel<double>;
template class Sgd<float>;
template class Sgd<double>;
template LossResult<float> compute_loss(LossKind, const Matrix<float>&, const LabelSet&, std::span<const std::uint8_t>);
template LossResult<double> compute_loss(LossKind, const Matrix<double>&, const LabelSet&,
                                         std::span<const std::uint8_t>);
template double accuracy(const Matrix<float>&, const LabelSet&, std::span<const std::uint8_t>);
template double accuracy(const Matrix<double>&, const LabelSet&, std::span<const std::uint8_t>);

}  // namespace maxk
