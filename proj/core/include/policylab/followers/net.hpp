#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "policylab/rng.hpp"

namespace policylab {

// Dense MLP with tanh hidden activations and a linear (optionally tanh)
// output. Parameters live in one flat vector, layer by layer (W then b), so
// optimizers and finite-difference checks can treat the net as a single
// parameter array.
struct MlpSpec {
  std::vector<int> sizes;  // {in, hidden..., out}
  bool tanh_output = false;

  int n_layers() const { return static_cast<int>(sizes.size()) - 1; }
  int in_dim() const { return sizes.front(); }
  int out_dim() const { return sizes.back(); }
  std::size_t param_count() const;
};

struct Mlp {
  MlpSpec spec;
  std::vector<double> params;

  static Mlp init(MlpSpec spec, Rng& rng, double final_layer_scale = 1.0);
  bool finite() const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);
};

// Forward/backward workspace; reusable across calls, one per thread of use.
class MlpTape {
 public:
  void forward(const Mlp& net, std::span<const double> x);
  std::span<const double> output() const { return acts_.back(); }

  // Accumulates dL/dparams into grad (same layout as params). When dl_dx is
  // nonempty, also accumulates dL/dinput.
  void backward(const Mlp& net, std::span<const double> dl_dy, std::span<double> grad,
                std::span<double> dl_dx = {});

 private:
  std::vector<std::vector<double>> acts_;  // acts_[0] = input, acts_[l] = layer l output
  std::vector<double> delta_, delta_next_;
};

// Forward without gradient bookkeeping (sampling path).
void mlp_forward(const Mlp& net, std::span<const double> x, std::vector<double>& out,
                 std::vector<double>& scratch);

struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-5;

  Adam() = default;
  explicit Adam(double learning_rate, double epsilon = 1e-5) : lr(learning_rate), eps(epsilon) {}

  void reset(std::size_t n);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  std::vector<double> m_, v_;
  long t_ = 0;
};

// Softmax utilities (numerically stable).
void softmax(std::span<const double> logits, std::span<double> probs);
int sample_categorical(std::span<const double> probs, Rng& rng);
double categorical_entropy(std::span<const double> probs);

// Scales grads in place if their joint L2 norm exceeds max_norm (<=0 disables).
void clip_grad_norm(std::span<double> grad, double max_norm);

}  // namespace policylab
