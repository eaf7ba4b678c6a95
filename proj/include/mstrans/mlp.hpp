#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mstrans/error.hpp"
#include "mstrans/rng.hpp"

namespace mstrans {

// Feed-forward network with a single linear output unit. Forward/backward
// passes are written out explicitly for this fixed architecture family;
// gradients carry the L2 term on weight matrices (not biases).

enum class Activation { relu, gelu };

struct MlpConfig {
  std::vector<int> layer_widths;  // (input, hidden..., 1)
  Activation activation = Activation::relu;
  double dropout_rate = 0.0;
  double l2_penalty = 0.0;

  int n_layers() const { return static_cast<int>(layer_widths.size()) - 1; }
  void validate() const {
    require(layer_widths.size() >= 3, errc::bad_config,
            "network needs at least one hidden layer");
    require(layer_widths.back() == 1, errc::bad_config,
            "final layer must be a single linear unit");
    for (int w : layer_widths)
      require(w >= 1, errc::bad_config, "layer width must be >= 1");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, errc::bad_config,
            "dropout_rate must be in [0,1)");
    require(l2_penalty >= 0.0, errc::bad_config, "l2_penalty must be >= 0");
  }
};

// Stepwise exponential decay: alpha(t) = alpha0 * decay_rate^floor(t/s),
// t counting completed parameter updates.
struct LrSchedule {
  double alpha0 = 1e-3;
  double decay_rate = 1.0;
  std::int64_t decay_step = 10000;

  void validate() const {
    require(alpha0 > 0.0, errc::bad_config, "alpha0 must be > 0");
    require(decay_rate > 0.0 && decay_rate <= 1.0, errc::bad_config,
            "decay_rate must be in (0,1]");
    require(decay_step >= 1, errc::bad_config, "decay_step must be >= 1");
  }
  double at(std::int64_t step) const {
    return alpha0 * std::pow(decay_rate, static_cast<double>(step / decay_step));
  }
};

// Elementwise Adam update with bias correction; shared by the network
// optimiser and the joint trainer. `step` is the number of completed
// updates before this one.
template <class ArrayLike>
void adam_apply(ArrayLike& theta, const ArrayLike& grad, ArrayLike& m,
                ArrayLike& v, std::int64_t step, const LrSchedule& schedule,
                double beta1, double beta2, double eps) {
  double lr = schedule.at(step);
  double t = static_cast<double>(step + 1);
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  double c1 = 1.0 - std::pow(beta1, t);
  double c2 = 1.0 - std::pow(beta2, t);
  theta.array() -=
      lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;  // fan_in x fan_out, input->output
  std::vector<Eigen::VectorXd> biases;
  // Adam state.
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  std::int64_t step = 0;

  std::size_t n_parameters() const;
  // Glorot-uniform weights, zero biases.
  static MlpParams init(const MlpConfig& config, Rng rng);
};

enum class MlpMode { train, eval };

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;   // a_0 .. a_{L-1}
  std::vector<Eigen::MatrixXd> preacts;  // z_1 .. z_L
  std::vector<Eigen::MatrixXd> masks;    // inverted-dropout masks per hidden layer
};

// Eval mode is deterministic; train mode consumes `rng` for dropout masks
// and fills `cache` for the paired backward call.
Eigen::VectorXd mlp_forward(const MlpConfig& config, const MlpParams& params,
                            const Eigen::MatrixXd& inputs, MlpMode mode,
                            Rng* rng = nullptr, ForwardCache* cache = nullptr);

struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// upstream(i) = dLoss/d(output_i); masks must come from the paired forward.
MlpGrads mlp_backward(const MlpConfig& config, const MlpParams& params,
                      const ForwardCache& cache,
                      const Eigen::VectorXd& upstream);

// Standard Adam update over all weights/biases using the schedule at the
// stored step counter.
void adam_step(MlpParams& params, const MlpGrads& grads,
               const LrSchedule& schedule, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// tanh-approximation GELU and derivatives, exposed for tests.
double gelu(double x);
double gelu_grad(double x);

}  // namespace mstrans
