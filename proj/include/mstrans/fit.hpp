#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mstrans/design.hpp"
#include "mstrans/mlp.hpp"
#include "mstrans/panel.hpp"

namespace mstrans {

/*
 * Per-transition binary-logit trainer. The predictor is
 *
 *     eta = X beta + d(u)                (semi_structured)
 *     eta = X beta                       (structured_only)
 *
 * with X the structured design and d a small feed-forward network over the
 * raw (encoded, standardised) covariates. Structured coefficients and
 * network weights are updated jointly by one Adam instance minimising
 *
 *     mean BCE + sum_blocks lambda_j beta' S_j beta / n + l2 * ||W||^2.
 *
 * Identifiability of the decomposition is enforced at the end of training:
 * the network output over the training rows is regressed on X and the
 * fitted part is moved into beta (beta_reported = beta_raw + c with
 * c = R^-1 Q' u), leaving eta_unstr = d(u) - X c orthogonal to the
 * structured column space. Predictions are unchanged by this
 * re-attribution; both raw and re-attributed coefficients are stored.
 */

enum class FitMode { semi_structured, structured_only };

struct FitConfig {
  int batch_size = 256;
  int max_epochs = 200;
  int patience = 10;
  double validation_fraction = 0.1;
  LrSchedule schedule{1e-2, 0.9, 10000};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double l2_penalty = 0.0;       // network weight decay (loss term)
  double spline_lambda = 1.0;    // smoothing parameter, all blocks
  std::vector<double> spline_lambda_per_block;  // optional, per spline term
  FitMode mode = FitMode::semi_structured;
  std::vector<int> hidden = {64, 32};
  Activation activation = Activation::relu;
  double dropout_rate = 0.0;
  double woe_smoothing = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct FitMeta {
  int epochs_run = 0;
  double best_val_loss = 0.0;
  double final_train_loss = 0.0;
  double orthogonality = 0.0;  // normalised max |X' eta_unstr| on training rows
  std::uint64_t seed = 0;
  std::vector<std::string> validation_subjects;
};

struct TransitionModel {
  Edge edge{0, 1};
  FitMode mode = FitMode::semi_structured;
  DesignSpec spec;
  PreprocessParams params;
  Eigen::VectorXd beta;       // re-attributed (reported) coefficients
  Eigen::VectorXd beta_raw;   // raw trained coefficients
  Eigen::VectorXd proj_coef;  // structured-space component of the net output
  // Network (semi_structured only).
  MlpConfig net_config;
  MlpParams net;
  std::vector<std::string> net_inputs;           // column names, design order
  std::map<std::string, NumericStats> net_source_stats;  // spline sources
  FitMeta meta;
};

// Predicted binary probabilities q = sigmoid(eta) for rows of `data`
// (stored preprocessing applied, eval-mode network, deterministic).
Eigen::VectorXd predict_q(const TransitionModel& model, const DataView& data);
Eigen::VectorXd predict_q(const TransitionModel& model, const Panel& panel,
                          const std::vector<RowRef>& rows);

// Decomposition of the predictor for reporting: eta_str = X beta,
// eta_unstr = d(u) - X c (zero in structured_only mode).
struct PredictorParts {
  Eigen::VectorXd eta_str;
  Eigen::VectorXd eta_unstr;
};
PredictorParts predict_eta_parts(const TransitionModel& model,
                                 const DataView& data);

TransitionModel fit_transition(
    const TransitionDataset& ds, const DesignSpec& spec, const FitConfig& cfg,
    const std::map<std::string, std::map<std::string, double>>* woe_override =
        nullptr);

struct BootstrapSummary {
  std::vector<std::string> coefficients;
  Eigen::VectorXd mean;
  Eigen::VectorXd p2_5;
  Eigen::VectorXd p97_5;
  int n_success = 0;
  int n_failed = 0;
};

// Nonparametric bootstrap by subject: B refits on resampled datasets with
// seeds seed+b; percentile intervals over the successful replicates
// (requires >= 0.9 B successes).
BootstrapSummary bootstrap_intervals(const TransitionDataset& ds,
                                     const DesignSpec& spec,
                                     const FitConfig& cfg, int B,
                                     unsigned threads = 1);

struct GridSearchResult {
  std::size_t best_index = 0;
  std::vector<double> mean_val_loss;               // per config
  std::vector<std::vector<double>> replicate_loss; // per config x replicate
};

// Picks the config minimising mean validation loss across `replicates`
// independent initialisations (seeds g.seed + r). Numerical failures score
// as +inf; validation errors propagate.
GridSearchResult grid_search(const TransitionDataset& ds, const DesignSpec& spec,
                             const std::vector<FitConfig>& grid, int replicates,
                             unsigned threads = 1);

// Deterministic subject-level validation split, stratified by whether the
// subject contributes any positive row. Returns subject indices (into the
// distinct-subject list of `ds`) chosen for validation.
std::vector<std::uint32_t> validation_split(const TransitionDataset& ds,
                                            double fraction, std::uint64_t seed);

// Fitted smooth contribution f(x) on a grid of raw covariate values
// (centred over the training data by the block's sum-to-zero constraint).
Eigen::VectorXd spline_curve(const TransitionModel& model,
                             const std::string& column,
                             const std::vector<double>& grid);

}  // namespace mstrans
