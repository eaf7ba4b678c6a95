#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "mstrans/error.hpp"

namespace mstrans {

// Evaluation window data: per-subject predicted end-state distribution,
// observed end state, and the conditioning start state.
struct Evaluation {
  Eigen::MatrixXd predictions;  // N x K, rows sum to 1
  std::vector<int> end_states;
  std::vector<int> start_states;

  std::size_t size() const { return end_states.size(); }
  int n_classes() const { return static_cast<int>(predictions.cols()); }
  void validate() const;
};

// Mann-Whitney AUC; ties count one half.
double binary_auc(const std::vector<double>& scores,
                  const std::vector<std::uint8_t>& labels);

// Average of pairwise AUCs over the classes present in the window
// (absent classes are excluded from the pair set).
double multiclass_auc(const Evaluation& eval);

// Prevalence-weighted one-vs-all AUC; one-class-degenerate classes are
// excluded and the weights renormalised.
double one_vs_all_auc(const Evaluation& eval);

// (1/NK) sum_i sum_j (p_ij - Y_ij)^2.
double brier_multiclass(const Evaluation& eval);

// Equal-width-bin expected calibration error, averaged over classes.
double ece(const Evaluation& eval, int bins = 10);

inline constexpr double kCutpointEps = 1e-4;

// Start-state-conditional class cut-points; decisions use the discrepancy
// score S_ij = (p_ij - c_j) / c_j with ties resolved toward the lowest
// class index.
struct CutpointRule {
  std::map<int, std::vector<double>> cutpoints;  // start state -> c_k
};

// Coordinate ascent over a log-spaced grid per coordinate (25 points,
// 3 sweeps, initialised at class prevalences); never returns a rule worse
// on the calibration set than the plain argmax rule.
CutpointRule calibrate_cutpoints(const Evaluation& calib);

double cutpoint_accuracy(const Evaluation& eval, const CutpointRule& rule);

// Classify one predicted distribution given cut-points.
int cutpoint_classify(const Eigen::VectorXd& p, const std::vector<double>& c);

// Per-target-state MSE/MAE between estimated and true cumulative
// probabilities; with a replicate grouping, within-replicate errors are
// averaged and their across-replicate SD reported.
struct TransformErrorReport {
  std::vector<double> mse, mae;        // per target state
  std::vector<double> mse_sd, mae_sd;  // empty without replicate groups
};
TransformErrorReport transform_error_report(
    const Eigen::MatrixXd& true_cum, const Eigen::MatrixXd& est_cum,
    const std::vector<int>* replicate_group = nullptr);

}  // namespace mstrans
