#include "mstrans/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace mstrans {

void Evaluation::validate() const {
  std::size_t n = size();
  require(static_cast<std::size_t>(predictions.rows()) == n &&
              start_states.size() == n,
          errc::shape_mismatch, "evaluation field lengths differ");
  int K = n_classes();
  for (std::size_t i = 0; i < n; ++i) {
    require(end_states[i] >= 0 && end_states[i] < K, errc::invalid_range,
            "end state out of range");
    require(start_states[i] >= 0 && start_states[i] < K, errc::invalid_range,
            "start state out of range");
    double s = predictions.row(static_cast<Eigen::Index>(i)).sum();
    require(std::abs(s - 1.0) < 1e-9, errc::invalid_range,
            "prediction row does not sum to 1 (sum=" + std::to_string(s) + ")");
  }
}

double binary_auc(const std::vector<double>& scores,
                  const std::vector<std::uint8_t>& labels) {
  require(scores.size() == labels.size(), errc::shape_mismatch,
          "scores/labels length mismatch");
  std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (std::uint8_t y : labels) n_pos += y ? 1 : 0;
  std::size_t n_neg = n - n_pos;
  require(n_pos > 0 && n_neg > 0, errc::one_class_only,
          "binary AUC needs both classes");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midrank sum of positives.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]]) rank_sum += midrank;
    i = j;
  }
  double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

// AUC(r|s): subset with end state in {r,s}, positives r, score = p_r.
double pairwise_auc(const Evaluation& eval, int r, int s) {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    int z = eval.end_states[i];
    if (z != r && z != s) continue;
    scores.push_back(eval.predictions(static_cast<Eigen::Index>(i), r));
    labels.push_back(z == r ? 1 : 0);
  }
  return binary_auc(scores, labels);
}

}  // namespace

double multiclass_auc(const Evaluation& eval) {
  std::set<int> present(eval.end_states.begin(), eval.end_states.end());
  require(present.size() >= 2, errc::degenerate_labels,
          "multiclass AUC needs >= 2 classes present");
  std::vector<int> classes(present.begin(), present.end());
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      sum += 0.5 * (pairwise_auc(eval, classes[a], classes[b]) +
                    pairwise_auc(eval, classes[b], classes[a]));
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double one_vs_all_auc(const Evaluation& eval) {
  std::size_t n = eval.size();
  require(n > 0, errc::shape_mismatch, "empty evaluation");
  int K = eval.n_classes();
  double total_weight = 0.0;
  double weighted = 0.0;
  for (int j = 0; j < K; ++j) {
    std::size_t n_pos = 0;
    for (int z : eval.end_states) n_pos += z == j ? 1 : 0;
    if (n_pos == 0 || n_pos == n) continue;  // degenerate class excluded
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = eval.predictions(static_cast<Eigen::Index>(i), j);
      labels[i] = eval.end_states[i] == j ? 1 : 0;
    }
    double w = static_cast<double>(n_pos) / static_cast<double>(n);
    weighted += w * binary_auc(scores, labels);
    total_weight += w;
  }
  require(total_weight > 0.0, errc::degenerate_labels,
          "no class with both positives and negatives");
  return weighted / total_weight;
}

double brier_multiclass(const Evaluation& eval) {
  std::size_t n = eval.size();
  require(n > 0, errc::shape_mismatch, "empty evaluation");
  int K = eval.n_classes();
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < K; ++j) {
      double y = eval.end_states[i] == j ? 1.0 : 0.0;
      double d = eval.predictions(static_cast<Eigen::Index>(i), j) - y;
      ss += d * d;
    }
  }
  return ss / (static_cast<double>(n) * static_cast<double>(K));
}

double ece(const Evaluation& eval, int bins) {
  require(bins >= 1, errc::bad_config, "ece needs >= 1 bin");
  std::size_t n = eval.size();
  require(n > 0, errc::shape_mismatch, "empty evaluation");
  int K = eval.n_classes();
  double total = 0.0;
  std::vector<double> sum_p(static_cast<std::size_t>(bins));
  std::vector<double> sum_y(static_cast<std::size_t>(bins));
  std::vector<std::size_t> count(static_cast<std::size_t>(bins));
  for (int j = 0; j < K; ++j) {
    std::fill(sum_p.begin(), sum_p.end(), 0.0);
    std::fill(sum_y.begin(), sum_y.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double p = eval.predictions(static_cast<Eigen::Index>(i), j);
      int b = std::min(static_cast<int>(p * bins), bins - 1);
      b = std::max(b, 0);
      sum_p[static_cast<std::size_t>(b)] += p;
      sum_y[static_cast<std::size_t>(b)] += eval.end_states[i] == j ? 1.0 : 0.0;
      count[static_cast<std::size_t>(b)] += 1;
    }
    double ece_j = 0.0;
    for (int b = 0; b < bins; ++b) {
      std::size_t c = count[static_cast<std::size_t>(b)];
      if (c == 0) continue;
      double mu = sum_p[static_cast<std::size_t>(b)] / static_cast<double>(c);
      double acc = sum_y[static_cast<std::size_t>(b)] / static_cast<double>(c);
      ece_j += static_cast<double>(c) / static_cast<double>(n) * std::abs(mu - acc);
    }
    total += ece_j;
  }
  return total / static_cast<double>(K);
}

int cutpoint_classify(const Eigen::VectorXd& p, const std::vector<double>& c) {
  require(static_cast<std::size_t>(p.size()) == c.size(), errc::shape_mismatch,
          "cut-point length mismatch");
  int best = 0;
  double best_s = (p(0) - c[0]) / c[0];
  for (int j = 1; j < p.size(); ++j) {
    double s = (p(j) - c[static_cast<std::size_t>(j)]) / c[static_cast<std::size_t>(j)];
    if (s > best_s) {
      best_s = s;
      best = j;
    }
  }
  return best;
}

namespace {

double rule_accuracy_on(const Evaluation& eval,
                        const std::vector<std::size_t>& idx,
                        const std::vector<double>& c) {
  std::size_t correct = 0;
  for (std::size_t i : idx) {
    int z = cutpoint_classify(
        eval.predictions.row(static_cast<Eigen::Index>(i)).transpose(), c);
    if (z == eval.end_states[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace

CutpointRule calibrate_cutpoints(const Evaluation& calib) {
  calib.validate();
  require(calib.size() > 0, errc::empty_start_state, "empty calibration set");
  int K = calib.n_classes();

  // 25-point log-spaced grid on [eps, 1-eps].
  constexpr int kGrid = 25;
  std::vector<double> grid(kGrid);
  double lo = std::log(kCutpointEps), hi = std::log(1.0 - kCutpointEps);
  for (int g = 0; g < kGrid; ++g)
    grid[static_cast<std::size_t>(g)] =
        std::exp(lo + (hi - lo) * static_cast<double>(g) / (kGrid - 1));

  std::map<int, std::vector<std::size_t>> by_start;
  for (std::size_t i = 0; i < calib.size(); ++i)
    by_start[calib.start_states[i]].push_back(i);

  CutpointRule rule;
  for (const auto& [k, idx] : by_start) {
    // Initialise at end-state prevalences within the start-state group.
    std::vector<double> c(static_cast<std::size_t>(K), 0.0);
    for (std::size_t i : idx) c[static_cast<std::size_t>(calib.end_states[i])] += 1.0;
    for (double& v : c) {
      v /= static_cast<double>(idx.size());
      v = std::min(std::max(v, kCutpointEps), 1.0 - kCutpointEps);
    }
    double best = rule_accuracy_on(calib, idx, c);
    for (int sweep = 0; sweep < 3; ++sweep) {
      for (int j = 0; j < K; ++j) {
        double keep = c[static_cast<std::size_t>(j)];
        double best_val = keep;
        for (double g : grid) {
          c[static_cast<std::size_t>(j)] = g;
          double acc = rule_accuracy_on(calib, idx, c);
          if (acc > best) {
            best = acc;
            best_val = g;
          }
        }
        c[static_cast<std::size_t>(j)] = best_val;
      }
    }
    // The plain argmax rule (uniform cut-points) is the fallback floor.
    std::vector<double> uniform(static_cast<std::size_t>(K), 1.0 / K);
    if (rule_accuracy_on(calib, idx, uniform) > best) c = uniform;
    rule.cutpoints[k] = c;
  }
  return rule;
}

double cutpoint_accuracy(const Evaluation& eval, const CutpointRule& rule) {
  eval.validate();
  require(eval.size() > 0, errc::shape_mismatch, "empty evaluation");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    auto it = rule.cutpoints.find(eval.start_states[i]);
    require(it != rule.cutpoints.end(), errc::missing_start_state,
            "no cut-points for start state " +
                std::to_string(eval.start_states[i]));
    int z = cutpoint_classify(
        eval.predictions.row(static_cast<Eigen::Index>(i)).transpose(),
        it->second);
    if (z == eval.end_states[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval.size());
}

TransformErrorReport transform_error_report(
    const Eigen::MatrixXd& true_cum, const Eigen::MatrixXd& est_cum,
    const std::vector<int>* replicate_group) {
  require(true_cum.rows() == est_cum.rows() && true_cum.cols() == est_cum.cols(),
          errc::shape_mismatch, "true/estimated shapes differ");
  require(true_cum.rows() > 0, errc::shape_mismatch, "empty error report input");
  int K = static_cast<int>(true_cum.cols());
  TransformErrorReport rep;
  rep.mse.resize(static_cast<std::size_t>(K));
  rep.mae.resize(static_cast<std::size_t>(K));

  if (!replicate_group) {
    for (int j = 0; j < K; ++j) {
      Eigen::ArrayXd d = (est_cum.col(j) - true_cum.col(j)).array();
      rep.mse[static_cast<std::size_t>(j)] = d.square().mean();
      rep.mae[static_cast<std::size_t>(j)] = d.abs().mean();
    }
    return rep;
  }

  require(replicate_group->size() == static_cast<std::size_t>(true_cum.rows()),
          errc::shape_mismatch, "replicate group length mismatch");
  std::set<int> groups(replicate_group->begin(), replicate_group->end());
  rep.mse_sd.resize(static_cast<std::size_t>(K));
  rep.mae_sd.resize(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    std::vector<double> g_mse, g_mae;
    for (int g : groups) {
      double se = 0.0, ae = 0.0;
      std::size_t n = 0;
      for (Eigen::Index i = 0; i < true_cum.rows(); ++i) {
        if ((*replicate_group)[static_cast<std::size_t>(i)] != g) continue;
        double d = est_cum(i, j) - true_cum(i, j);
        se += d * d;
        ae += std::abs(d);
        ++n;
      }
      g_mse.push_back(se / static_cast<double>(n));
      g_mae.push_back(ae / static_cast<double>(n));
    }
    auto mean_sd = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      return std::pair<double, double>(mean, sd);
    };
    auto [m1, s1] = mean_sd(g_mse);
    auto [m2, s2] = mean_sd(g_mae);
    rep.mse[static_cast<std::size_t>(j)] = m1;
    rep.mse_sd[static_cast<std::size_t>(j)] = s1;
    rep.mae[static_cast<std::size_t>(j)] = m2;
    rep.mae_sd[static_cast<std::size_t>(j)] = s2;
  }
  return rep;
}

}  // namespace mstrans
