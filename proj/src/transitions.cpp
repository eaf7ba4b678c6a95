#include "mstrans/transitions.hpp"

#include "mstrans/error.hpp"

namespace mstrans {

PiRow exact_competing(int from_state,
                      const std::vector<std::pair<int, double>>& edge_q,
                      int n_states) {
  PiRow row;
  row.from_state = from_state;
  row.p.assign(static_cast<std::size_t>(n_states), 0.0);
  double denom = 1.0;
  for (const auto& [to, q] : edge_q) {
    require(to >= 0 && to < n_states && to != from_state, errc::invalid_range,
            "bad target state in exact_competing");
    double qc = clamp_q(q);
    denom += qc / (1.0 - qc);
  }
  double stay = 1.0 / denom;
  row.p[static_cast<std::size_t>(from_state)] = stay;
  for (const auto& [to, q] : edge_q) {
    double qc = clamp_q(q);
    row.p[static_cast<std::size_t>(to)] = stay * qc / (1.0 - qc);
  }
  return row;
}

PiRow exact_state0(double q01) {
  double q = clamp_q(q01);
  PiRow row;
  row.from_state = 0;
  row.p = {1.0 - q, q, 0.0, 0.0};
  return row;
}

PiRow exact_state1(double q10, double q12) {
  double a = clamp_q(q10), b = clamp_q(q12);
  double d = 1.0 - a * b;
  PiRow row;
  row.from_state = 1;
  row.p = {a * (1.0 - b) / d, (1.0 - a) * (1.0 - b) / d, b * (1.0 - a) / d, 0.0};
  return row;
}

PiRow exact_state2(double q20, double q21, double q23) {
  double a = clamp_q(q20), b = clamp_q(q21), c = clamp_q(q23);
  double d = 1.0 - a * c - a * b - b * c + 2.0 * a * b * c;
  PiRow row;
  row.from_state = 2;
  row.p = {a * (1.0 - b) * (1.0 - c) / d, b * (1.0 - a) * (1.0 - c) / d,
           (1.0 - a) * (1.0 - b) * (1.0 - c) / d, c * (1.0 - a) * (1.0 - b) / d};
  return row;
}

namespace {

// Clamp a negative stay probability to zero and renormalise the exits.
void fix_negative_stay(PiRow& row) {
  std::size_t from = static_cast<std::size_t>(row.from_state);
  if (row.p[from] >= 0.0) return;
  double exits = row.sum() - row.p[from];
  row.p[from] = 0.0;
  if (exits > 0.0)
    for (std::size_t j = 0; j < row.p.size(); ++j)
      if (j != from) row.p[j] /= exits;
  row.renormalised = true;
}

}  // namespace

PiRow approx_state1(double q10, double q12) {
  double a = clamp_q(q10), b = clamp_q(q12);
  PiRow row;
  row.from_state = 1;
  double p10 = a * (1.0 - 0.5 * b);
  double p12 = b * (1.0 - 0.5 * a);
  row.p = {p10, 1.0 - p10 - p12, p12, 0.0};
  fix_negative_stay(row);
  return row;
}

PiRow approx_state2(double q20, double q21, double q23) {
  double a = clamp_q(q20), b = clamp_q(q21), c = clamp_q(q23);
  PiRow row;
  row.from_state = 2;
  double p20 = a * (1.0 - 0.5 * (b + c) + b * c / 3.0);
  double p21 = b * (1.0 - 0.5 * (a + c) + a * c / 3.0);
  double p23 = c * (1.0 - 0.5 * (a + b) + a * b / 3.0);
  row.p = {p20, p21, 1.0 - p20 - p21 - p23, p23};
  fix_negative_stay(row);
  return row;
}

Eigen::MatrixXd one_step_matrix(const std::vector<PiRow>& rows,
                                const StateSpace& space) {
  int K = space.n_states;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(K, K);
  std::vector<bool> filled(static_cast<std::size_t>(K), false);
  for (const PiRow& row : rows) {
    require(row.from_state >= 0 && row.from_state < K, errc::invalid_range,
            "PiRow from_state out of range");
    require(static_cast<int>(row.p.size()) == K, errc::shape_mismatch,
            "PiRow length != n_states");
    require(!space.is_absorbing(row.from_state), errc::invalid_range,
            "PiRow supplied for absorbing state");
    for (int l = 0; l < K; ++l) P(row.from_state, l) = row.p[static_cast<std::size_t>(l)];
    filled[static_cast<std::size_t>(row.from_state)] = true;
  }
  for (int k = 0; k < K; ++k) {
    if (space.is_absorbing(k)) {
      P(k, k) = 1.0;
    } else {
      require(filled[static_cast<std::size_t>(k)], errc::shape_mismatch,
              "missing PiRow for state " + std::to_string(k));
    }
  }
  return P;
}

Eigen::MatrixXd compound(const std::vector<Eigen::MatrixXd>& series,
                         std::size_t first, std::size_t last) {
  require(first <= last && last <= series.size(), errc::invalid_range,
          "bad compound range");
  if (first == last) {
    int K = series.empty() ? 4 : static_cast<int>(series.front().rows());
    return Eigen::MatrixXd::Identity(K, K);
  }
  Eigen::MatrixXd P = series[first];
  for (std::size_t i = first + 1; i < last; ++i) P = P * series[i];
  return P;
}

Eigen::MatrixXd compound(const std::vector<Eigen::MatrixXd>& series) {
  return compound(series, 0, series.size());
}

Eigen::VectorXd state_distribution(int z, const Eigen::MatrixXd& compounded) {
  require(z >= 0 && z < compounded.rows(), errc::invalid_range,
          "state out of range in state_distribution");
  return compounded.row(z).transpose();
}

}  // namespace mstrans
