#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mstrans/fit.hpp"
#include "mstrans/metrics.hpp"
#include "mstrans/model_io.hpp"
#include "mstrans/sim.hpp"

namespace mstrans {

enum class TransformMethod { exact, continuous };

// Fit one model per permissible transition. WOE encodings are fitted once
// on the first edge's dataset target and shared across edges unless
// woe_per_edge is set.
ModelBundle fit_all_edges(const Panel& panel, const DesignSpec& spec,
                          const std::vector<FitConfig>& per_edge_cfg,
                          bool keep_competing_as_zero = false,
                          bool woe_per_edge = false, unsigned threads = 1);
ModelBundle fit_all_edges(const Panel& panel, const DesignSpec& spec,
                          const FitConfig& cfg,
                          bool keep_competing_as_zero = false,
                          bool woe_per_edge = false, unsigned threads = 1);

// Predicted q for every (subject, month) pair needed to span months
// t1+1..t2; covariates are carried forward past a subject's last
// observation. Result: one column per edge, rows in subject-major order
// over the months grid.
struct QGrid {
  std::vector<std::uint32_t> subjects;
  int t1 = 0, t2 = 0;
  Eigen::MatrixXd q;  // (n_subjects * (t2-t1)) x n_edges
};
QGrid predict_q_grid(const ModelBundle& bundle, const Panel& panel,
                     const std::vector<std::uint32_t>& subjects, int t1, int t2);

// Per-subject distribution over states at t2 given the observed state at
// t1 (Markov compounding of the per-month one-step matrices).
Eigen::MatrixXd predict_distributions(const ModelBundle& bundle,
                                      const Panel& panel,
                                      const std::vector<std::uint32_t>& subjects,
                                      int t1, int t2,
                                      TransformMethod method = TransformMethod::exact);

// Subjects usable for a (t1,t2) evaluation window: observed at t1 and with
// a known end state at t2 (observed, or absorbed before t2).
std::vector<std::uint32_t> span_subjects(const Panel& panel, int t1, int t2);
int end_state_at(const Panel& panel, std::uint32_t subject, int t);

// Build an Evaluation for a window from bundle predictions.
Evaluation evaluate_window(const ModelBundle& bundle, const Panel& panel,
                           int t1, int t2);

struct SpanMetrics {
  int t1 = 0, t2 = 0;
  std::size_t n_subjects = 0;
  double multi_auc = 0.0;
  double one_vs_all = 0.0;
  double brier = 0.0;
  double ece = 0.0;
  double accuracy = 0.0;
};

// Metric table over spans. Cut-points are calibrated per span on the
// calibration panel (when given) or on a seeded subject split of the
// evaluation panel; metrics are reported on the remaining subjects in the
// latter case.
struct EvaluateOptions {
  const Panel* calibration_panel = nullptr;
  double calibration_fraction = 0.3;
  std::uint64_t seed = 1;
  int ece_bins = 10;
};
std::vector<SpanMetrics> evaluate_spans(const ModelBundle& bundle,
                                        const Panel& panel,
                                        const std::vector<std::pair<int, int>>& spans,
                                        const EvaluateOptions& opts = {});

// Exact vs continuous transform comparison against simulation truth.
// Estimated cumulative probabilities use either the true q implied by the
// DGP or fitted q from a model bundle.
struct TransformComparison {
  TransformErrorReport exact;
  TransformErrorReport continuous;
  int start_state = 0;
  int t2 = 0;
  std::size_t n_subjects = 0;
};
TransformComparison compare_transforms(const GroundTruth& truth,
                                       const Panel& panel,
                                       const ModelBundle* bundle,  // null: true q
                                       std::size_t sample_size, int t2,
                                       std::uint64_t seed);

// Multi-replicate comparison: per replicate r, simulate a fresh panel from
// `spec` with seed spec.seed + r, optionally fit, and pool the per-subject
// errors with replicate groups (Table-style mean and SD).
struct ReplicatedComparison {
  TransformErrorReport exact;
  TransformErrorReport continuous;
  int n_replicates = 0;
};
ReplicatedComparison replicated_transform_comparison(
    const DgpSpec& spec, int n_replicates, std::size_t sample_size,
    const DesignSpec* fit_spec, const FitConfig* fit_cfg, unsigned threads = 1);

// Synthetic loan panel mimicking a delinquency study schema: numeric
// origination covariates, DTI buckets, high-cardinality categoricals for
// WOE encoding, and a pandemic-window dummy varying over calendar time.
Panel make_demo_panel(int n_loans = 200, int n_months = 48,
                      std::uint64_t seed = 7);

}  // namespace mstrans
