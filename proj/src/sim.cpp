#include "mstrans/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mstrans {

DgpSpec DgpSpec::defaults(int n_subjects, std::uint64_t seed, int n_months) {
  DgpSpec spec;
  spec.n_subjects = n_subjects;
  spec.n_months = n_months;
  spec.seed = seed;
  spec.edges = {
      {{0, 1}, -4.0, 0.8, -0.5, 1, {}},
      {{1, 0}, 0.0, -0.6, 0.4, 2, {}},
      {{1, 2}, -0.4, 0.5, 0.7, 3, {}},
      {{2, 0}, -1.0, -0.4, -0.3, 4, {}},
      {{2, 1}, -1.6, 0.3, -0.6, 5, {}},
      {{2, 3}, 0.6, 0.7, 0.5, 6, {}},
  };
  return spec;
}

void DgpSpec::validate() const {
  space.validate();
  require(n_subjects >= 1, errc::bad_config, "n_subjects must be >= 1");
  require(n_months >= 2, errc::bad_config, "n_months must be >= 2");
  require(rw_sigma >= 0.0, errc::bad_config, "rw_sigma must be >= 0");
  require(!edges.empty(), errc::bad_config, "DGP needs at least one edge");
  for (const EdgeDgp& e : edges)
    require(space.is_edge(e.edge.first, e.edge.second), errc::bad_config,
            "DGP edge not in transition graph");
}

std::vector<double> gen_baseline(int n_months, double sigma, Rng rng) {
  std::vector<double> f(static_cast<std::size_t>(n_months) + 1, 0.0);
  for (int t = 2; t <= n_months; ++t)
    f[static_cast<std::size_t>(t)] = 2.0 * f[static_cast<std::size_t>(t) - 1] -
                                     f[static_cast<std::size_t>(t) - 2] +
                                     rng.normal(0.0, sigma);
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  for (double& v : f) v -= mean;
  return f;
}

namespace {

double nonlinear_base(int id, double x) {
  switch (id) {
    case 1: return 1.5 * std::sin(M_PI * x);
    case 2: return 1.2 * std::cos(M_PI * x);
    case 3: return 2.0 * x * x * x;
    case 4: return 2.0 * std::exp(-4.0 * x * x);
    case 5: return 1.5 * std::tanh(2.0 * x);
    case 6: return 2.0 / (1.0 + std::exp(-6.0 * x));
    case 7: return 1.8 * std::sin(2.0 * M_PI * x) * std::exp(-x * x);
    case 8: return 2.0 * x * x;
    case 9: return 2.0 * std::sqrt(x * x + 0.01);
    case 10: return 1.5 * std::exp(-2.0 * (x + 1.0));
    default:
      fail(errc::unknown_id, "nonlinear function id must be in 1..10, got " +
                                 std::to_string(id));
  }
}

// Centring constants: grid mean over 1001 equispaced points on [-1,1].
const std::array<double, 10>& nonlinear_centres() {
  static const std::array<double, 10> centres = [] {
    std::array<double, 10> c{};
    for (int id = 1; id <= 10; ++id) {
      double mean = 0.0;
      for (int i = 0; i <= 1000; ++i)
        mean += nonlinear_base(id, -1.0 + 2.0 * i / 1000.0);
      c[static_cast<std::size_t>(id - 1)] = mean / 1001.0;
    }
    return c;
  }();
  return centres;
}

}  // namespace

double nonlinear_eval(int id, double x) {
  double base = nonlinear_base(id, x);
  return base - nonlinear_centres()[static_cast<std::size_t>(id - 1)];
}

void realise_baselines(DgpSpec& spec) {
  spec.validate();
  Rng root(spec.seed);
  for (std::size_t e = 0; e < spec.edges.size(); ++e)
    spec.edges[e].baseline =
        gen_baseline(spec.n_months, spec.rw_sigma, root.split("baseline").split(e));
}

double GroundTruth::eta(std::size_t edge_index, int t, double x1, double x2,
                        double z) const {
  const EdgeDgp& e = spec.edges[edge_index];
  double v = e.beta0 + e.beta1 * x1 + e.beta2 * x2 +
             e.baseline[static_cast<std::size_t>(t)] +
             nonlinear_eval(e.nonlinear_id, z);
  if (spec.include_interaction) v += x1 * x2;
  return v;
}

double GroundTruth::q(std::size_t edge_index, int t, double x1, double x2,
                      double z) const {
  return 1.0 / (1.0 + std::exp(-eta(edge_index, t, x1, x2, z)));
}

Eigen::MatrixXd GroundTruth::one_step(int t, double x1, double x2,
                                      double z) const {
  int K = spec.space.n_states;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    if (spec.space.is_absorbing(k)) {
      P(k, k) = 1.0;
      continue;
    }
    double denom = 1.0;  // exp(eta_kk) = 1
    for (std::size_t e = 0; e < spec.edges.size(); ++e)
      if (spec.edges[e].edge.first == k)
        denom += std::exp(eta(e, t, x1, x2, z));
    P(k, k) = 1.0 / denom;
    for (std::size_t e = 0; e < spec.edges.size(); ++e)
      if (spec.edges[e].edge.first == k)
        P(k, spec.edges[e].edge.second) = std::exp(eta(e, t, x1, x2, z)) / denom;
  }
  return P;
}

Eigen::VectorXd GroundTruth::cumulative(int start, int t2, double x1, double x2,
                                        double z) const {
  int K = spec.space.n_states;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(K);
  p(start) = 1.0;
  for (int t = 1; t <= t2; ++t)
    p = (p.transpose() * one_step(t, x1, x2, z)).transpose();
  return p;
}

SimResult simulate_panel(const DgpSpec& spec_in) {
  DgpSpec spec = spec_in;
  if (spec.edges.empty() || spec.edges.front().baseline.empty())
    realise_baselines(spec);
  spec.validate();

  GroundTruth truth{spec};
  Rng root(spec.seed);

  Panel panel;
  panel.space = spec.space;
  panel.schema.names = {"x1", "x2", "z"};
  panel.schema.kinds = {ColumnKind::numeric, ColumnKind::numeric,
                        ColumnKind::numeric};
  panel.subjects.reserve(static_cast<std::size_t>(spec.n_subjects));

  int id_width = 1;
  for (int n = spec.n_subjects - 1; n >= 10; n /= 10) ++id_width;

  for (int i = 0; i < spec.n_subjects; ++i) {
    Rng rng = root.split("subject").split(static_cast<std::uint64_t>(i));
    double x1 = rng.uniform(-1.0, 1.0);
    double x2 = rng.uniform(-1.0, 1.0);
    double z = rng.uniform(-1.0, 1.0);

    SubjectPath path;
    std::string num = std::to_string(i);
    path.id = "s" + std::string(static_cast<std::size_t>(id_width) - num.size(), '0') + num;
    int state = 0;
    path.states.push_back(state);
    path.numeric.insert(path.numeric.end(), {x1, x2, z});

    std::vector<double> exit_p(spec.edges.size());
    std::vector<int> targets(spec.edges.size());
    for (int t = 1; t <= spec.n_months; ++t) {
      if (spec.space.is_absorbing(state)) break;
      double denom = 1.0;
      std::size_t n_exits = 0;
      for (std::size_t e = 0; e < spec.edges.size(); ++e) {
        if (spec.edges[e].edge.first != state) continue;
        exit_p[n_exits] = std::exp(truth.eta(e, t, x1, x2, z));
        targets[n_exits] = spec.edges[e].edge.second;
        denom += exit_p[n_exits];
        ++n_exits;
      }
      double u = rng.uniform();
      double acc = 1.0 / denom;  // stay probability
      int next = state;
      for (std::size_t e = 0; e < n_exits && u >= acc; ++e) {
        acc += exit_p[e] / denom;
        if (u < acc) next = targets[e];
      }
      state = next;
      path.states.push_back(state);
      path.numeric.insert(path.numeric.end(), {x1, x2, z});
    }
    panel.subjects.push_back(std::move(path));
  }
  return {std::move(panel), std::move(truth)};
}

Eigen::MatrixXd true_cumulative(const GroundTruth& truth, const Panel& panel,
                                const std::vector<std::uint32_t>& subjects,
                                int t2) {
  require(t2 >= 0 && t2 <= truth.spec.n_months, errc::invalid_range,
          "t2 outside the simulated horizon");
  auto x1c = panel.schema.find("x1");
  auto x2c = panel.schema.find("x2");
  auto zc = panel.schema.find("z");
  require(x1c && x2c && zc, errc::unknown_column,
          "panel lacks x1/x2/z covariates");
  int K = truth.spec.space.n_states;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(subjects.size()), K);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    std::uint32_t s = subjects[i];
    double x1 = panel.numeric_at(s, 0, x1c->within_kind);
    double x2 = panel.numeric_at(s, 0, x2c->within_kind);
    double z = panel.numeric_at(s, 0, zc->within_kind);
    int start = panel.subjects[s].states.front();
    out.row(static_cast<Eigen::Index>(i)) =
        truth.cumulative(start, t2, x1, x2, z).transpose();
  }
  return out;
}

AjEstimate aalen_johansen(const Panel& panel) {
  require(!panel.subjects.empty(), errc::empty_panel, "empty panel");
  int K = panel.space.n_states;
  int max_t = 0;
  for (const SubjectPath& s : panel.subjects)
    max_t = std::max(max_t, s.last_time());

  AjEstimate est;
  est.max_time = max_t;
  Eigen::MatrixXd cum = Eigen::MatrixXd::Identity(K, K);
  for (int t = 1; t <= max_t; ++t) {
    std::vector<std::int64_t> risk(static_cast<std::size_t>(K), 0);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(K, K);
    for (const SubjectPath& s : panel.subjects) {
      if (t > s.last_time()) continue;
      int from = s.states[static_cast<std::size_t>(t) - 1];
      risk[static_cast<std::size_t>(from)] += 1;
      counts(from, s.states[static_cast<std::size_t>(t)]) += 1.0;
    }
    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(K, K);
    for (int k = 0; k < K; ++k) {
      if (risk[static_cast<std::size_t>(k)] == 0) continue;  // carry identity row
      double r = static_cast<double>(risk[static_cast<std::size_t>(k)]);
      double off = 0.0;
      for (int l = 0; l < K; ++l) {
        if (l == k) continue;
        E(k, l) = counts(k, l) / r;
        off += E(k, l);
      }
      E(k, k) = 1.0 - off;
    }
    cum = cum * E;
    est.one_step.push_back(std::move(E));
    est.cumulative.push_back(cum);
    est.at_risk.push_back(std::move(risk));
  }
  return est;
}

}  // namespace mstrans
