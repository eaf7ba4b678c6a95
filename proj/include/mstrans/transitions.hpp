#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mstrans/state_space.hpp"

namespace mstrans {

/*
 * Conversion between per-transition binary probabilities q and coherent
 * competing transition probabilities pi.
 *
 * Each permissible transition k->l carries a binary probability
 * q_kl = P(Z(t)=l | Z(t-1)=k, Z(t) in {k,l}), i.e. the two-state logit
 * probability. A state with several exits needs a rescaling so that the
 * full row (stay + all exits) is a probability vector while every exit
 * keeps its conditional log-odds:
 *
 *     pi_kl / pi_kk = q_kl / (1 - q_kl).
 *
 * Writing o_l = q_kl/(1-q_kl), the unique solution is the odds
 * normalisation
 *
 *     pi_kk = 1 / (1 + sum_l o_l),     pi_kl = o_l * pi_kk,
 *
 * which the closed forms for states 1 and 2 below are algebraically equal
 * to. The continuous-time approximation (approx_*) is the actuarial
 * first-order correction; it does not preserve the log-odds and may
 * produce a negative stay probability for large q.
 */

inline constexpr double kQClamp = 1e-12;

inline double clamp_q(double q) {
  if (q < kQClamp) return kQClamp;
  if (q > 1.0 - kQClamp) return 1.0 - kQClamp;
  return q;
}

// One row of a one-step transition matrix: probabilities over all K
// states from `from_state`; zero on non-edges.
struct PiRow {
  int from_state = 0;
  std::vector<double> p;
  // Set when a negative stay probability from the continuous
  // approximation was clamped to zero and the exits renormalised.
  bool renormalised = false;

  double sum() const {
    double s = 0;
    for (double v : p) s += v;
    return s;
  }
};

// Generic exact transform for any state: odds normalisation over the
// state's exits. `edge_q` holds (target state, q) pairs.
PiRow exact_competing(int from_state, const std::vector<std::pair<int, double>>& edge_q,
                      int n_states);

// Four-state closed forms (tested against exact_competing).
PiRow exact_state0(double q01);
PiRow exact_state1(double q10, double q12);
PiRow exact_state2(double q20, double q21, double q23);

// Continuous-time approximation for the four-state graph.
PiRow approx_state1(double q10, double q12);
PiRow approx_state2(double q20, double q21, double q23);

// Assemble the K x K one-step matrix from per-state rows. Rows may be
// given for non-absorbing states only; absorbing states get unit rows.
Eigen::MatrixXd one_step_matrix(const std::vector<PiRow>& rows,
                                const StateSpace& space);

// Left-to-right product; an empty range is the identity.
Eigen::MatrixXd compound(const std::vector<Eigen::MatrixXd>& series);
Eigen::MatrixXd compound(const std::vector<Eigen::MatrixXd>& series,
                         std::size_t first, std::size_t last);

// Row z of the compounded matrix, i.e. one_hot(z) * P.
Eigen::VectorXd state_distribution(int z, const Eigen::MatrixXd& compounded);

}  // namespace mstrans
