#pragma once

// Capsule network with routing-by-agreement: conv front-end, convolutional
// primary capsules, one class capsule per ship class, margin loss and a
// masked fully-connected reconstruction decoder.

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "sarcaps/model.hpp"
#include "sarcaps/tensor.hpp"

namespace sarcaps::caps {

/// How gradients traverse the routing iterations.
///   full:       through every iteration, couplings included.
///   final_only: couplings are computed off-graph and act as constants in
///               the last weighted sum.
enum class RoutingGradient { full, final_only };

struct CapsNetConfig {
  struct Conv {
    std::size_t kernels = 256;
    std::size_t size = 9;
    std::size_t stride = 1;
  };
  struct Primary {
    std::size_t channels = 32;
    std::size_t caps_dim = 8;
    std::size_t size = 9;
    std::size_t stride = 2;
  };
  struct ClassCaps {
    std::size_t count = 3;
    std::size_t dim = 16;
  };

  std::size_t input_size = 128;
  Conv conv1;
  Primary primary;
  ClassCaps class_caps;
  int routing_iterations = 3;
  double recon_scale = 0.0005;
  double m_plus = 0.9;
  double m_minus = 0.1;
  double lambda = 0.5;
  std::vector<std::size_t> decoder_hidden = {512, 1024};
  double routing_init_std = 0.05;
  RoutingGradient routing_gradient = RoutingGradient::full;

  /// 128x128 input, conv1 stride 1: 100352 primary capsules.
  static CapsNetConfig paper();
  /// 64x64 input, conv1 stride 2: 3200 primary capsules.
  static CapsNetConfig desk();

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
  std::size_t conv1_grid() const;
  std::size_t primary_grid() const;
  std::size_t num_primary() const;
};

void to_json(nlohmann::json& j, const CapsNetConfig& c);
void from_json(const nlohmann::json& j, CapsNetConfig& c);

/// v = (|s|^2 / (1 + |s|^2)) * s / |s| along `axis`; zero stays zero.
template <typename T>
Tensor<T> squash(const Tensor<T>& s, std::size_t axis);

/// Euclidean norm along the last axis, with a zero subgradient at the origin.
template <typename T>
Tensor<T> capsule_norm(const Tensor<T>& v);

/// u[N, P, in] x W[P, J, in, out] -> u_hat[N, P, J, out].
template <typename T>
Tensor<T> capsule_predictions(const Tensor<T>& u, const Tensor<T>& weights);

/// s[n, j, :] = sum_p c[n, p, j] * u_hat[n, p, j, :].
template <typename T>
Tensor<T> weighted_capsule_sum(const Tensor<T>& couplings, const Tensor<T>& u_hat);

/// a[n, p, j] = <u_hat[n, p, j, :], v[n, j, :]>.
template <typename T>
Tensor<T> capsule_agreement(const Tensor<T>& u_hat, const Tensor<T>& v);

template <typename T>
struct RoutingResult {
  Tensor<T> v;                               // [N, J, D]
  std::vector<std::vector<T>> couplings;     // per iteration, [N, P, J] values
};

/// Routing-by-agreement on u_hat[N, P, J, D] (or [P, J, D]). Logits start at
/// zero; the agreement update is skipped after the last iteration.
template <typename T>
RoutingResult<T> dynamic_routing(const Tensor<T>& u_hat, int iterations,
                                 RoutingGradient mode = RoutingGradient::full);

/// Mean over samples of sum_k T_k max(0, m+ - |v_k|)^2 + lambda (1 - T_k) max(0, |v_k| - m-)^2.
/// `targets` is a one-hot matrix matching `norms` ([N, J] or [J]).
template <typename T>
Tensor<T> margin_loss(const Tensor<T>& norms, const std::vector<T>& targets, T m_plus = T(0.9),
                      T m_minus = T(0.1), T lambda = T(0.5));

/// scale * sum((recon - target)^2), averaged over the leading batch axis.
template <typename T>
Tensor<T> reconstruction_loss(const Tensor<T>& recon, const Tensor<T>& target,
                              T scale = T(0.0005));

template <typename T>
struct CapsOutput {
  Tensor<T> norms;   // [N, J]
  Tensor<T> v;       // [N, J, D]
  Tensor<T> recon;   // [N, S, S, 1]
  std::vector<std::vector<T>> couplings;
  std::vector<int> predictions;
};

template <typename T>
class CapsNet final : public Classifier<T> {
 public:
  CapsNet(CapsNetConfig config, std::uint64_t seed);

  const CapsNetConfig& config() const { return config_; }

  std::string kind() const override { return "capsnet"; }
  std::string architecture() const override { return "CapsNet"; }
  std::size_t input_size() const override { return config_.input_size; }
  std::size_t num_classes() const override { return config_.class_caps.count; }
  nlohmann::json config_json() const override;
  std::vector<NamedParameter<T>> parameters() const override;

  /// conv1 + relu.
  Tensor<T> conv_features(const Tensor<T>& images) const;
  /// Primary capsule poses u[N, P, caps_dim], squashed per capsule.
  Tensor<T> primary_capsules(const Tensor<T>& features) const;
  /// Masked class capsules -> dense stack -> sigmoid tile [N, S, S, 1].
  Tensor<T> decode(const Tensor<T>& v, const std::vector<int>& mask_labels) const;

  /// Full forward. The decoder is masked with `mask_labels` when given and
  /// with the predicted class otherwise.
  CapsOutput<T> forward(const Tensor<T>& images, const std::vector<int>* mask_labels = nullptr) const;

  /// margin + reconstruction loss of a forward pass against `labels`.
  Tensor<T> total_loss(const CapsOutput<T>& out, const Tensor<T>& images,
                       const std::vector<int>& labels) const;

  BatchResult<T> run_batch(const Tensor<T>& images, const std::vector<int>& labels) override;
  std::vector<int> predict(const Tensor<T>& images) override;

 private:
  CapsNetConfig config_;
  Tensor<T> conv1_kernels_, conv1_bias_;
  Tensor<T> primary_kernels_, primary_bias_;
  Tensor<T> routing_weights_;
  std::vector<Tensor<T>> decoder_weights_, decoder_biases_;
};

}  // namespace sarcaps::caps
