#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mstrans/panel.hpp"
#include "mstrans/rng.hpp"
#include "mstrans/transitions.hpp"

namespace mstrans {

/*
 * Simulation engine: multinomial-logit transition paths over the
 * four-state graph with per-edge predictors
 *
 *     eta_kl(t) = b0 + b1 x1 + b2 x2 + f_kl1(t) + f_kl2(z) + x1 x2,
 *
 * where f_kl1 is a centred second-order random walk over months and f_kl2
 * comes from a fixed catalogue of centred nonlinear functions on [-1,1].
 * Covariates x1, x2, z are drawn once per subject from U(-1,1). Subjects
 * start in state 0 and run to absorption or month T. Per-subject RNG
 * streams derive from (seed, subject index), so results are independent
 * of evaluation order.
 */

struct EdgeDgp {
  Edge edge{0, 1};
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  int nonlinear_id = 1;           // 1..10
  std::vector<double> baseline;   // realised f(0..T); filled by realise_baselines
};

struct DgpSpec {
  int n_subjects = 10000;
  int n_months = 36;
  double rw_sigma = 0.05;
  bool include_interaction = true;
  std::uint64_t seed = 1;
  StateSpace space;
  std::vector<EdgeDgp> edges;

  // The default six-edge configuration used throughout the simulation
  // studies; transition frequencies are in the ballpark of a delinquency
  // portfolio (rare 0->1 entry, frequent cures, likely 2->3 exit).
  static DgpSpec defaults(int n_subjects = 10000, std::uint64_t seed = 1,
                          int n_months = 36);
  void validate() const;
};

// Second-order random walk f_t = 2 f_{t-1} - f_{t-2} + eps_t with
// f_0 = f_1 = 0, centred to mean zero over 0..T.
std::vector<double> gen_baseline(int n_months, double sigma, Rng rng);

// Fixed catalogue of ten smooth, bounded, mean-centred functions on
// [-1,1]. Ids are stable across releases.
double nonlinear_eval(int id, double x);

// Draw baselines for every edge from (seed, edge index) streams.
void realise_baselines(DgpSpec& spec);

// The realised data-generating process: evaluates true predictors,
// one-step matrices and cumulative probabilities for given covariates.
struct GroundTruth {
  DgpSpec spec;  // baselines realised

  double eta(std::size_t edge_index, int t, double x1, double x2, double z) const;
  // Implied binary probability q_kl(t) = sigmoid(eta_kl(t)).
  double q(std::size_t edge_index, int t, double x1, double x2, double z) const;
  // True one-step matrix at month t via the multinomial logits.
  Eigen::MatrixXd one_step(int t, double x1, double x2, double z) const;
  // Compounded distribution over states at t2 starting from `start` at 0.
  Eigen::VectorXd cumulative(int start, int t2, double x1, double x2,
                             double z) const;
};

struct SimResult {
  Panel panel;
  GroundTruth truth;
};

SimResult simulate_panel(const DgpSpec& spec);

// True p_Z(0, t2) for each subject of a simulated panel (covariates are
// read from the panel's x1/x2/z columns).
Eigen::MatrixXd true_cumulative(const GroundTruth& truth, const Panel& panel,
                                const std::vector<std::uint32_t>& subjects,
                                int t2);

// Discrete-time product-limit estimator of cumulative transition
// probabilities: one-step empirical matrices N_kl(t)/R_k(t) compounded
// over months. Subjects contribute to risk sets while observed.
struct AjEstimate {
  int max_time = 0;
  std::vector<Eigen::MatrixXd> one_step;    // index t-1 holds E(t)
  std::vector<Eigen::MatrixXd> cumulative;  // index t-1 holds prod_{s<=t} E(s)
  std::vector<std::vector<std::int64_t>> at_risk;  // per t, per state
};

AjEstimate aalen_johansen(const Panel& panel);

}  // namespace mstrans
