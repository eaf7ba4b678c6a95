#include "mstrans/mlp.hpp"

namespace mstrans {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  double u = kGeluC * (x + kGeluA * x * x * x);
  double th = std::tanh(u);
  double sech2 = 1.0 - th * th;
  return 0.5 * (1.0 + th) +
         0.5 * x * sech2 * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

std::size_t MlpParams::n_parameters() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

MlpParams MlpParams::init(const MlpConfig& config, Rng rng) {
  config.validate();
  MlpParams p;
  int L = config.n_layers();
  for (int l = 0; l < L; ++l) {
    int fan_in = config.layer_widths[static_cast<std::size_t>(l)];
    int fan_out = config.layer_widths[static_cast<std::size_t>(l) + 1];
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Rng layer_rng = rng.split("init").split(static_cast<std::uint64_t>(l));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i)
      for (int j = 0; j < fan_out; ++j) w(i, j) = layer_rng.uniform(-bound, bound);
    p.weights.push_back(w);
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    p.m_w.push_back(Eigen::MatrixXd::Zero(fan_in, fan_out));
    p.v_w.push_back(Eigen::MatrixXd::Zero(fan_in, fan_out));
    p.m_b.push_back(Eigen::VectorXd::Zero(fan_out));
    p.v_b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

Eigen::VectorXd mlp_forward(const MlpConfig& config, const MlpParams& params,
                            const Eigen::MatrixXd& inputs, MlpMode mode,
                            Rng* rng, ForwardCache* cache) {
  int L = config.n_layers();
  require(static_cast<int>(params.weights.size()) == L, errc::shape_mismatch,
          "parameter/config layer count mismatch");
  require(inputs.cols() == config.layer_widths.front(), errc::shape_mismatch,
          "input width " + std::to_string(inputs.cols()) + " != " +
              std::to_string(config.layer_widths.front()));
  bool dropout = mode == MlpMode::train && config.dropout_rate > 0.0;
  require(!dropout || rng != nullptr, errc::bad_config,
          "train-mode dropout needs an rng");

  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
    cache->masks.clear();
  }

  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < L; ++l) {
    if (cache) cache->inputs.push_back(a);
    Eigen::MatrixXd z =
        (a * params.weights[static_cast<std::size_t>(l)]).rowwise() +
        params.biases[static_cast<std::size_t>(l)].transpose();
    if (cache) cache->preacts.push_back(z);
    if (l + 1 == L) {
      a = std::move(z);  // linear output unit
      break;
    }
    if (config.activation == Activation::relu)
      a = z.cwiseMax(0.0);
    else
      a = z.unaryExpr([](double x) { return gelu(x); });
    if (dropout) {
      double keep = 1.0 - config.dropout_rate;
      Eigen::MatrixXd mask(a.rows(), a.cols());
      for (Eigen::Index i = 0; i < mask.rows(); ++i)
        for (Eigen::Index j = 0; j < mask.cols(); ++j)
          mask(i, j) = rng->uniform() < config.dropout_rate ? 0.0 : 1.0 / keep;
      a = a.cwiseProduct(mask);
      if (cache) cache->masks.push_back(std::move(mask));
    } else if (cache) {
      cache->masks.push_back(Eigen::MatrixXd());
    }
  }
  Eigen::VectorXd out = a.col(0);
  require(out.allFinite(), errc::non_finite_activation,
          "network produced a non-finite output");
  return out;
}

MlpGrads mlp_backward(const MlpConfig& config, const MlpParams& params,
                      const ForwardCache& cache,
                      const Eigen::VectorXd& upstream) {
  int L = config.n_layers();
  require(static_cast<int>(cache.inputs.size()) == L, errc::shape_mismatch,
          "forward cache does not match config");
  require(upstream.size() == cache.inputs.front().rows(), errc::shape_mismatch,
          "upstream gradient length mismatch");

  MlpGrads grads;
  grads.weights.resize(static_cast<std::size_t>(L));
  grads.biases.resize(static_cast<std::size_t>(L));

  Eigen::MatrixXd delta = upstream;  // batch x 1
  for (int l = L - 1; l >= 0; --l) {
    std::size_t li = static_cast<std::size_t>(l);
    grads.weights[li] = cache.inputs[li].transpose() * delta;
    if (config.l2_penalty > 0.0)
      grads.weights[li] += 2.0 * config.l2_penalty * params.weights[li];
    grads.biases[li] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd back = delta * params.weights[li].transpose();
    const Eigen::MatrixXd& z = cache.preacts[li - 1];
    Eigen::MatrixXd act_grad;
    if (config.activation == Activation::relu)
      act_grad = (z.array() > 0.0).cast<double>();
    else
      act_grad = z.unaryExpr([](double x) { return gelu_grad(x); });
    delta = back.cwiseProduct(act_grad);
    const Eigen::MatrixXd& mask = cache.masks[li - 1];
    if (mask.size() > 0) delta = delta.cwiseProduct(mask);
  }
  return grads;
}

void adam_step(MlpParams& params, const MlpGrads& grads,
               const LrSchedule& schedule, double beta1, double beta2,
               double eps) {
  schedule.validate();
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
          errc::bad_config, "Adam betas must be in (0,1)");
  require(eps > 0.0, errc::bad_config, "Adam eps must be > 0");
  require(grads.weights.size() == params.weights.size(), errc::shape_mismatch,
          "gradient/parameter layer mismatch");
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    adam_apply(params.weights[l], grads.weights[l], params.m_w[l],
               params.v_w[l], params.step, schedule, beta1, beta2, eps);
    adam_apply(params.biases[l], grads.biases[l], params.m_b[l], params.v_b[l],
               params.step, schedule, beta1, beta2, eps);
  }
  params.step += 1;
}

}  // namespace mstrans
