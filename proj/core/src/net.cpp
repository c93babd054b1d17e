#include "policylab/followers/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace policylab {

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes.size()); ++l) {
    n += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  }
  return n;
}

Mlp Mlp::init(MlpSpec spec, Rng& rng, double final_layer_scale) {
  if (spec.sizes.size() < 2) throw std::invalid_argument("MLP needs at least one layer");
  Mlp net;
  net.spec = std::move(spec);
  net.params.resize(net.spec.param_count());
  std::size_t off = 0;
  const int layers = net.spec.n_layers();
  for (int l = 0; l < layers; ++l) {
    const int in = net.spec.sizes[l], out = net.spec.sizes[l + 1];
    const double scale = std::sqrt(1.0 / in) * (l == layers - 1 ? final_layer_scale : 1.0);
    for (int i = 0; i < out * in; ++i) net.params[off++] = uniform_real(rng, -scale, scale);
    for (int i = 0; i < out; ++i) net.params[off++] = 0.0;
  }
  return net;
}

bool Mlp::finite() const {
  return std::all_of(params.begin(), params.end(), [](double p) { return std::isfinite(p); });
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  j["sizes"] = spec.sizes;
  j["tanh_output"] = spec.tanh_output;
  j["params"] = params;
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net;
  net.spec.sizes = j.at("sizes").get<std::vector<int>>();
  net.spec.tanh_output = j.at("tanh_output").get<bool>();
  net.params = j.at("params").get<std::vector<double>>();
  if (net.params.size() != net.spec.param_count()) {
    throw std::runtime_error("MLP parameter payload does not match its shape");
  }
  return net;
}

namespace {

inline void layer_forward(std::span<const double> params, std::size_t& off, int in, int out,
                          std::span<const double> x, std::span<double> y, bool tanh_act) {
  const double* w = params.data() + off;
  const double* b = params.data() + off + static_cast<std::size_t>(out) * in;
  for (int o = 0; o < out; ++o) {
    double acc = b[o];
    const double* row = w + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = tanh_act ? std::tanh(acc) : acc;
  }
  off += static_cast<std::size_t>(out) * in + out;
}

}  // namespace

void mlp_forward(const Mlp& net, std::span<const double> x, std::vector<double>& out,
                 std::vector<double>& scratch) {
  const auto& sizes = net.spec.sizes;
  if (static_cast<int>(x.size()) != sizes.front()) throw std::invalid_argument("MLP input size");
  const int layers = net.spec.n_layers();
  scratch.resize(2 * static_cast<std::size_t>(
                         *std::max_element(sizes.begin(), sizes.end())));
  std::span<double> a(scratch.data(), scratch.size() / 2);
  std::span<double> b(scratch.data() + scratch.size() / 2, scratch.size() / 2);
  std::copy(x.begin(), x.end(), a.begin());
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    const bool tanh_act = l + 1 < layers || net.spec.tanh_output;
    layer_forward(net.params, off, sizes[l], sizes[l + 1],
                  a.subspan(0, sizes[l]), b.subspan(0, sizes[l + 1]), tanh_act);
    std::swap(a, b);
  }
  out.assign(a.begin(), a.begin() + sizes.back());
}

void MlpTape::forward(const Mlp& net, std::span<const double> x) {
  const auto& sizes = net.spec.sizes;
  if (static_cast<int>(x.size()) != sizes.front()) throw std::invalid_argument("MLP input size");
  const int layers = net.spec.n_layers();
  acts_.resize(layers + 1);
  acts_[0].assign(x.begin(), x.end());
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    acts_[l + 1].resize(sizes[l + 1]);
    const bool tanh_act = l + 1 < layers || net.spec.tanh_output;
    layer_forward(net.params, off, sizes[l], sizes[l + 1], acts_[l], acts_[l + 1], tanh_act);
  }
}

void MlpTape::backward(const Mlp& net, std::span<const double> dl_dy, std::span<double> grad,
                       std::span<double> dl_dx) {
  const auto& sizes = net.spec.sizes;
  const int layers = net.spec.n_layers();
  if (grad.size() != net.params.size()) throw std::invalid_argument("grad buffer size");

  delta_.assign(dl_dy.begin(), dl_dy.end());

  // Parameter offsets of the last layer first.
  std::vector<std::size_t> offsets(layers);
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  }

  for (int l = layers - 1; l >= 0; --l) {
    const int in = sizes[l], out = sizes[l + 1];
    const bool tanh_act = l + 1 < layers || net.spec.tanh_output;
    if (tanh_act) {
      for (int o = 0; o < out; ++o) {
        const double a = acts_[l + 1][o];
        delta_[o] *= (1.0 - a * a);
      }
    }
    const double* w = net.params.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + static_cast<std::size_t>(out) * in;
    const auto& x = acts_[l];
    delta_next_.assign(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta_[o];
      if (d == 0.0) continue;
      double* grow = gw + static_cast<std::size_t>(o) * in;
      const double* wrow = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        grow[i] += d * x[i];
        delta_next_[i] += d * wrow[i];
      }
      gb[o] += d;
    }
    delta_ = delta_next_;
  }
  if (!dl_dx.empty()) {
    if (static_cast<int>(dl_dx.size()) != sizes.front()) {
      throw std::invalid_argument("dl_dx buffer size");
    }
    for (int i = 0; i < sizes.front(); ++i) dl_dx[i] += delta_[i];
  }
}

void Adam::reset(std::size_t n) {
  m_.assign(n, 0.0);
  v_.assign(n, 0.0);
  t_ = 0;
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (m_.size() != params.size()) reset(params.size());
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, t_);
  const double bc2 = 1.0 - std::pow(beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps);
  }
}

void softmax(std::span<const double> logits, std::span<double> probs) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] /= sum;
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
  double u = uniform_real(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

double categorical_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

void clip_grad_norm(std::span<double> grad, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
}

}  // namespace policylab
