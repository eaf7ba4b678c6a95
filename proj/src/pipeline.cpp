#include "mstrans/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "mstrans/parallel.hpp"

namespace mstrans {

namespace {

std::vector<std::string> woe_columns(const DesignSpec& spec) {
  std::vector<std::string> cols;
  for (const std::string& term : spec.linear_terms) {
    auto it = spec.categorical_encodings.find(term);
    if (it != spec.categorical_encodings.end() && it->second == CatEncoding::woe)
      cols.push_back(term);
  }
  return cols;
}

}  // namespace

ModelBundle fit_all_edges(const Panel& panel, const DesignSpec& spec,
                          const std::vector<FitConfig>& per_edge_cfg,
                          bool keep_competing_as_zero, bool woe_per_edge,
                          unsigned threads) {
  const StateSpace& space = panel.space;
  require(per_edge_cfg.size() == space.edges.size(), errc::bad_config,
          "need one FitConfig per permissible transition");

  ExtractOptions opts;
  opts.keep_competing_as_zero = keep_competing_as_zero;
  std::vector<TransitionDataset> datasets;
  datasets.reserve(space.edges.size());
  for (const Edge& e : space.edges)
    datasets.push_back(extract_transition_dataset(panel, e, opts));

  // One WOE encoding per column, fitted on the first edge's target and
  // shared across edges (per-edge refits behind the flag).
  std::map<std::string, std::map<std::string, double>> shared_woe;
  std::vector<std::string> woe_cols = woe_columns(spec);
  if (!woe_cols.empty() && !woe_per_edge) {
    const TransitionDataset& ds0 = datasets.front();
    PanelRowsView view(panel, ds0.rows);
    for (const std::string& col : woe_cols) {
      WoeEncoding enc = woe_encode(view.categorical_column(col), ds0.labels,
                                   per_edge_cfg.front().woe_smoothing);
      shared_woe[col] = std::move(enc.map);
    }
  }

  ModelBundle bundle;
  bundle.space = space;
  bundle.models.resize(space.edges.size());
  bundle.seed = per_edge_cfg.front().seed;
  parallel_for(space.edges.size(), threads, [&](std::size_t e) {
    bundle.models[e] = fit_transition(datasets[e], spec, per_edge_cfg[e],
                                      shared_woe.empty() ? nullptr : &shared_woe);
  });
  return bundle;
}

ModelBundle fit_all_edges(const Panel& panel, const DesignSpec& spec,
                          const FitConfig& cfg, bool keep_competing_as_zero,
                          bool woe_per_edge, unsigned threads) {
  std::vector<FitConfig> cfgs(panel.space.edges.size(), cfg);
  return fit_all_edges(panel, spec, cfgs, keep_competing_as_zero, woe_per_edge,
                       threads);
}

QGrid predict_q_grid(const ModelBundle& bundle, const Panel& panel,
                     const std::vector<std::uint32_t>& subjects, int t1,
                     int t2) {
  require(t1 < t2, errc::invalid_range, "need t1 < t2");
  QGrid grid;
  grid.subjects = subjects;
  grid.t1 = t1;
  grid.t2 = t2;
  int horizon = t2 - t1;

  std::vector<RowRef> rows;
  std::vector<double> months;
  rows.reserve(subjects.size() * static_cast<std::size_t>(horizon));
  months.reserve(rows.capacity());
  for (std::uint32_t s : subjects) {
    int last = panel.subjects[s].last_time();
    for (int m = t1 + 1; m <= t2; ++m) {
      // Covariates at m-1, carried forward past the last observation; the
      // duration column "t" is the transition month itself.
      int tc = std::min(m - 1, last);
      rows.push_back({s, static_cast<std::uint32_t>(tc)});
      months.push_back(m);
    }
  }
  grid.q.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(bundle.space.edges.size()));
  PanelRowsView base(panel, rows);
  AugmentedView view(base);
  view.add_numeric("t", months);
  for (std::size_t e = 0; e < bundle.space.edges.size(); ++e) {
    const TransitionModel& model = bundle.for_edge(bundle.space.edges[e]);
    grid.q.col(static_cast<Eigen::Index>(e)) = predict_q(model, view);
  }
  return grid;
}

namespace {

PiRow continuous_row(int from, const std::vector<std::pair<int, double>>& eq,
                     int n_states) {
  PiRow row;
  row.from_state = from;
  row.p.assign(static_cast<std::size_t>(n_states), 0.0);
  std::vector<double> q(eq.size());
  for (std::size_t i = 0; i < eq.size(); ++i) q[i] = clamp_q(eq[i].second);
  double total = 0.0;
  for (std::size_t i = 0; i < eq.size(); ++i) {
    double p;
    if (eq.size() == 1) {
      p = q[i];
    } else if (eq.size() == 2) {
      p = q[i] * (1.0 - 0.5 * q[1 - i]);
    } else if (eq.size() == 3) {
      double a = q[(i + 1) % 3], b = q[(i + 2) % 3];
      p = q[i] * (1.0 - 0.5 * (a + b) + a * b / 3.0);
    } else {
      fail(errc::bad_config,
           "continuous approximation supports at most 3 exits per state");
    }
    row.p[static_cast<std::size_t>(eq[i].first)] = p;
    total += p;
  }
  row.p[static_cast<std::size_t>(from)] = 1.0 - total;
  if (row.p[static_cast<std::size_t>(from)] < 0.0) {
    row.p[static_cast<std::size_t>(from)] = 0.0;
    for (std::size_t j = 0; j < row.p.size(); ++j)
      if (static_cast<int>(j) != from) row.p[j] /= total;
    row.renormalised = true;
  }
  return row;
}

// Distribution rows for all subjects of a q grid.
Eigen::MatrixXd distributions_from_grid(const QGrid& grid, const Panel& panel,
                                        const StateSpace& space,
                                        TransformMethod method) {
  int K = space.n_states;
  int horizon = grid.t2 - grid.t1;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.subjects.size()), K);
  std::vector<std::pair<int, double>> eq;
  for (std::size_t si = 0; si < grid.subjects.size(); ++si) {
    std::uint32_t s = grid.subjects[si];
    require(panel.subjects[s].observed_at(grid.t1), errc::subject_not_observed,
            "subject '" + panel.subjects[s].id + "' not observed at t1");
    Eigen::RowVectorXd p = Eigen::RowVectorXd::Zero(K);
    p(panel.subjects[s].states[static_cast<std::size_t>(grid.t1)]) = 1.0;
    for (int m = 0; m < horizon; ++m) {
      Eigen::Index row = static_cast<Eigen::Index>(si * static_cast<std::size_t>(horizon)) + m;
      std::vector<PiRow> rows;
      for (int k = 0; k < K; ++k) {
        if (space.is_absorbing(k)) continue;
        eq.clear();
        for (std::size_t e = 0; e < space.edges.size(); ++e)
          if (space.edges[e].first == k)
            eq.push_back({space.edges[e].second,
                          grid.q(row, static_cast<Eigen::Index>(e))});
        rows.push_back(method == TransformMethod::exact
                           ? exact_competing(k, eq, K)
                           : continuous_row(k, eq, K));
      }
      p = p * one_step_matrix(rows, space);
    }
    out.row(static_cast<Eigen::Index>(si)) = p;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd predict_distributions(const ModelBundle& bundle,
                                      const Panel& panel,
                                      const std::vector<std::uint32_t>& subjects,
                                      int t1, int t2, TransformMethod method) {
  QGrid grid = predict_q_grid(bundle, panel, subjects, t1, t2);
  return distributions_from_grid(grid, panel, bundle.space, method);
}

int end_state_at(const Panel& panel, std::uint32_t subject, int t) {
  const SubjectPath& s = panel.subjects[subject];
  if (s.observed_at(t)) return s.states[static_cast<std::size_t>(t)];
  int last = s.states.back();
  require(panel.space.is_absorbing(last), errc::subject_not_observed,
          "subject '" + s.id + "' has no known state at t=" + std::to_string(t));
  return last;
}

std::vector<std::uint32_t> span_subjects(const Panel& panel, int t1, int t2) {
  require(t1 < t2, errc::empty_span, "need t1 < t2");
  std::vector<std::uint32_t> out;
  for (std::uint32_t s = 0; s < panel.subjects.size(); ++s) {
    const SubjectPath& path = panel.subjects[s];
    if (!path.observed_at(t1)) continue;
    if (!path.observed_at(t2) && !panel.space.is_absorbing(path.states.back()))
      continue;
    out.push_back(s);
  }
  return out;
}

Evaluation evaluate_window(const ModelBundle& bundle, const Panel& panel,
                           int t1, int t2) {
  std::vector<std::uint32_t> subjects = span_subjects(panel, t1, t2);
  require(!subjects.empty(), errc::empty_span,
          "no subjects evaluable on span " + std::to_string(t1) + "-" +
              std::to_string(t2));
  Evaluation eval;
  eval.predictions = predict_distributions(bundle, panel, subjects, t1, t2);
  eval.end_states.reserve(subjects.size());
  eval.start_states.reserve(subjects.size());
  for (std::uint32_t s : subjects) {
    eval.end_states.push_back(end_state_at(panel, s, t2));
    eval.start_states.push_back(
        panel.subjects[s].states[static_cast<std::size_t>(t1)]);
  }
  return eval;
}

namespace {

Evaluation subset_eval(const Evaluation& eval, const std::vector<std::size_t>& idx) {
  Evaluation out;
  out.predictions.resize(static_cast<Eigen::Index>(idx.size()),
                         eval.predictions.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.predictions.row(static_cast<Eigen::Index>(i)) =
        eval.predictions.row(static_cast<Eigen::Index>(idx[i]));
    out.end_states.push_back(eval.end_states[idx[i]]);
    out.start_states.push_back(eval.start_states[idx[i]]);
  }
  return out;
}

// Any evaluation start state missing from the calibration set falls back
// to the plain argmax rule.
void complete_rule(CutpointRule& rule, const Evaluation& eval) {
  int K = eval.n_classes();
  for (int z : eval.start_states)
    if (!rule.cutpoints.count(z))
      rule.cutpoints[z] = std::vector<double>(static_cast<std::size_t>(K), 1.0 / K);
}

}  // namespace

std::vector<SpanMetrics> evaluate_spans(const ModelBundle& bundle,
                                        const Panel& panel,
                                        const std::vector<std::pair<int, int>>& spans,
                                        const EvaluateOptions& opts) {
  std::vector<SpanMetrics> out;
  for (const auto& [t1, t2] : spans) {
    Evaluation eval = evaluate_window(bundle, panel, t1, t2);
    CutpointRule rule;
    Evaluation report = eval;
    if (opts.calibration_panel) {
      Evaluation calib =
          evaluate_window(bundle, *opts.calibration_panel, t1, t2);
      rule = calibrate_cutpoints(calib);
    } else {
      // Seeded subject split: calibrate on a fraction, report on the rest.
      std::vector<std::size_t> idx(eval.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      Rng rng = Rng(opts.seed).split("cutpoints");
      rng.shuffle(idx);
      std::size_t n_cal = static_cast<std::size_t>(
          std::llround(opts.calibration_fraction * static_cast<double>(idx.size())));
      n_cal = std::min(std::max<std::size_t>(n_cal, 1), idx.size() - 1);
      std::vector<std::size_t> cal_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_cal));
      std::vector<std::size_t> rep_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_cal), idx.end());
      std::sort(cal_idx.begin(), cal_idx.end());
      std::sort(rep_idx.begin(), rep_idx.end());
      rule = calibrate_cutpoints(subset_eval(eval, cal_idx));
      report = subset_eval(eval, rep_idx);
    }
    complete_rule(rule, report);

    SpanMetrics m;
    m.t1 = t1;
    m.t2 = t2;
    m.n_subjects = report.size();
    m.multi_auc = multiclass_auc(report);
    m.one_vs_all = one_vs_all_auc(report);
    m.brier = brier_multiclass(report);
    m.ece = ece(report, opts.ece_bins);
    m.accuracy = cutpoint_accuracy(report, rule);
    out.push_back(m);
  }
  return out;
}

namespace {

// Estimated cumulative 0->. probabilities for sampled subjects under one
// transform, from a (n_subjects*horizon) x n_edges q grid starting at 0.
struct ComparisonInputs {
  std::vector<std::uint32_t> subjects;
  Eigen::MatrixXd q;  // grid rows
};

Eigen::MatrixXd truth_q_grid(const GroundTruth& truth, const Panel& panel,
                             const std::vector<std::uint32_t>& subjects, int t2) {
  auto x1c = panel.schema.find("x1");
  auto x2c = panel.schema.find("x2");
  auto zc = panel.schema.find("z");
  require(x1c && x2c && zc, errc::unknown_column, "panel lacks x1/x2/z");
  Eigen::MatrixXd q(static_cast<Eigen::Index>(subjects.size()) * t2,
                    static_cast<Eigen::Index>(truth.spec.edges.size()));
  for (std::size_t si = 0; si < subjects.size(); ++si) {
    std::uint32_t s = subjects[si];
    double x1 = panel.numeric_at(s, 0, x1c->within_kind);
    double x2 = panel.numeric_at(s, 0, x2c->within_kind);
    double z = panel.numeric_at(s, 0, zc->within_kind);
    for (int m = 1; m <= t2; ++m) {
      Eigen::Index row = static_cast<Eigen::Index>(si) * t2 + (m - 1);
      for (std::size_t e = 0; e < truth.spec.edges.size(); ++e)
        q(row, static_cast<Eigen::Index>(e)) = truth.q(e, m, x1, x2, z);
    }
  }
  return q;
}

}  // namespace

TransformComparison compare_transforms(const GroundTruth& truth,
                                       const Panel& panel,
                                       const ModelBundle* bundle,
                                       std::size_t sample_size, int t2,
                                       std::uint64_t seed) {
  require(t2 >= 1 && t2 <= truth.spec.n_months, errc::invalid_range,
          "t2 outside simulated horizon");
  std::vector<std::uint32_t> all(panel.subjects.size());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  Rng rng = Rng(seed).split("sample");
  rng.shuffle(all);
  std::vector<std::uint32_t> subjects(
      all.begin(),
      all.begin() + static_cast<std::ptrdiff_t>(
                        std::min<std::size_t>(sample_size, all.size())));
  std::sort(subjects.begin(), subjects.end());

  QGrid grid;
  grid.subjects = subjects;
  grid.t1 = 0;
  grid.t2 = t2;
  if (bundle) {
    grid = predict_q_grid(*bundle, panel, subjects, 0, t2);
  } else {
    grid.q = truth_q_grid(truth, panel, subjects, t2);
  }

  Eigen::MatrixXd est_exact =
      distributions_from_grid(grid, panel, truth.spec.space, TransformMethod::exact);
  Eigen::MatrixXd est_cont = distributions_from_grid(grid, panel, truth.spec.space,
                                                     TransformMethod::continuous);
  Eigen::MatrixXd truth_cum = true_cumulative(truth, panel, subjects, t2);

  TransformComparison cmp;
  cmp.exact = transform_error_report(truth_cum, est_exact);
  cmp.continuous = transform_error_report(truth_cum, est_cont);
  cmp.t2 = t2;
  cmp.n_subjects = subjects.size();
  return cmp;
}

ReplicatedComparison replicated_transform_comparison(
    const DgpSpec& spec, int n_replicates, std::size_t sample_size,
    const DesignSpec* fit_spec, const FitConfig* fit_cfg, unsigned threads) {
  require(n_replicates >= 1, errc::bad_config, "need >= 1 replicate");
  int t2 = spec.n_months;
  int K = spec.space.n_states;

  std::vector<Eigen::MatrixXd> truths(static_cast<std::size_t>(n_replicates));
  std::vector<Eigen::MatrixXd> exacts(static_cast<std::size_t>(n_replicates));
  std::vector<Eigen::MatrixXd> conts(static_cast<std::size_t>(n_replicates));

  parallel_for(static_cast<std::size_t>(n_replicates), threads, [&](std::size_t r) {
    DgpSpec rep_spec = spec;
    rep_spec.seed = spec.seed + r;
    for (EdgeDgp& e : rep_spec.edges) e.baseline.clear();  // fresh draw
    SimResult sim = simulate_panel(rep_spec);

    std::optional<ModelBundle> bundle;
    if (fit_spec && fit_cfg) {
      FitConfig cfg = *fit_cfg;
      cfg.seed = fit_cfg->seed + r;
      bundle = fit_all_edges(sim.panel, *fit_spec, cfg);
    }

    std::vector<std::uint32_t> all(sim.panel.subjects.size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    Rng rng = Rng(rep_spec.seed).split("sample");
    rng.shuffle(all);
    std::vector<std::uint32_t> subjects(
        all.begin(), all.begin() + static_cast<std::ptrdiff_t>(
                                       std::min<std::size_t>(sample_size, all.size())));
    std::sort(subjects.begin(), subjects.end());
    QGrid grid;
    if (bundle) {
      grid = predict_q_grid(*bundle, sim.panel, subjects, 0, t2);
    } else {
      grid.subjects = subjects;
      grid.t1 = 0;
      grid.t2 = t2;
      grid.q = truth_q_grid(sim.truth, sim.panel, subjects, t2);
    }
    truths[r] = true_cumulative(sim.truth, sim.panel, subjects, t2);
    exacts[r] = distributions_from_grid(grid, sim.panel, rep_spec.space,
                                        TransformMethod::exact);
    conts[r] = distributions_from_grid(grid, sim.panel, rep_spec.space,
                                       TransformMethod::continuous);
  });

  std::size_t total = 0;
  for (const auto& m : truths) total += static_cast<std::size_t>(m.rows());
  Eigen::MatrixXd truth_all(static_cast<Eigen::Index>(total), K);
  Eigen::MatrixXd exact_all(static_cast<Eigen::Index>(total), K);
  Eigen::MatrixXd cont_all(static_cast<Eigen::Index>(total), K);
  std::vector<int> groups;
  groups.reserve(total);
  Eigen::Index at = 0;
  for (int r = 0; r < n_replicates; ++r) {
    Eigen::Index n = truths[static_cast<std::size_t>(r)].rows();
    truth_all.middleRows(at, n) = truths[static_cast<std::size_t>(r)];
    exact_all.middleRows(at, n) = exacts[static_cast<std::size_t>(r)];
    cont_all.middleRows(at, n) = conts[static_cast<std::size_t>(r)];
    for (Eigen::Index i = 0; i < n; ++i) groups.push_back(r);
    at += n;
  }

  ReplicatedComparison out;
  out.exact = transform_error_report(truth_all, exact_all, &groups);
  out.continuous = transform_error_report(truth_all, cont_all, &groups);
  out.n_replicates = n_replicates;
  return out;
}

Panel make_demo_panel(int n_loans, int n_months, std::uint64_t seed) {
  static const char* kStates[] = {"CA", "TX", "FL", "NY", "IL", "PA", "OH",
                                  "GA", "NC", "MI", "NJ", "VA", "WA", "AZ",
                                  "MA", "TN", "IN", "MO", "MD", "WI"};
  static const char* kSellers[] = {"ALPHA BANK", "BRAVO MTG", "CASCADE HOME",
                                   "DELTA FED", "EVERGREEN", "FIRST UNION",
                                   "GRANITE", "HARBOR LOANS"};
  static const char* kOccupancy[] = {"I", "P", "S"};
  static const char* kDti[] = {"dti1", "dti2", "dti3", "dti4", "dti5"};

  StateSpace space = StateSpace::default_space();
  Rng root(seed);

  // Pandemic window in calendar months.
  const int cov_start = 30, cov_end = 40;

  std::vector<RawRecord> records;
  CovariateSchema schema;
  schema.names = {"fico", "int_rt", "ltv",      "orig_upb", "dti_bucket",
                  "us_state", "seller_name", "occpy_sts", "cov_dummy"};
  schema.kinds = {ColumnKind::numeric,     ColumnKind::numeric,
                  ColumnKind::numeric,     ColumnKind::numeric,
                  ColumnKind::categorical, ColumnKind::categorical,
                  ColumnKind::categorical, ColumnKind::categorical,
                  ColumnKind::numeric};

  auto level_shift = [](const std::string& label) {
    // Stable per-label risk shift in roughly [-0.3, 0.3].
    std::uint64_t h = fnv1a64(label);
    return (static_cast<double>(h % 1000) / 1000.0 - 0.5) * 0.6;
  };

  int id_width = 1;
  for (int n = n_loans - 1; n >= 10; n /= 10) ++id_width;

  for (int i = 0; i < n_loans; ++i) {
    Rng rng = root.split("loan").split(static_cast<std::uint64_t>(i));
    double fico = std::min(std::max(rng.normal(748.0, 47.0), 386.0), 832.0);
    double int_rt = std::min(std::max(rng.normal(3.96, 0.5), 2.25), 6.12);
    double ltv = std::min(std::max(rng.normal(73.9, 17.3), 6.0), 135.0);
    double upb = std::exp(rng.normal(12.2, 0.5));
    std::string dti = kDti[rng.below(5)];
    std::string us_state = kStates[rng.below(20)];
    std::string seller = kSellers[rng.below(8)];
    std::string occ = kOccupancy[rng.below(3)];
    int origin = static_cast<int>(rng.below(24));

    double fico_std = (fico - 748.0) / 47.0;
    double ltv_std = (ltv - 73.9) / 17.3;
    double geo = level_shift(us_state) + 0.5 * level_shift(seller);

    std::string num = std::to_string(i);
    std::string id =
        "L" + std::string(static_cast<std::size_t>(id_width) - num.size(), '0') + num;

    int state = 0;
    for (int t = 0; t <= n_months; ++t) {
      double cov = (origin + t >= cov_start && origin + t < cov_end) ? 1.0 : 0.0;
      RawRecord rec;
      rec.id = id;
      rec.t = t;
      rec.state = state;
      rec.origin_offset = origin;
      rec.covariates = {format_double(fico),  format_double(int_rt),
                        format_double(ltv),   format_double(upb),
                        dti,                  us_state,
                        seller,               occ,
                        format_double(cov)};
      records.push_back(std::move(rec));
      if (space.is_absorbing(state)) break;
      if (t == n_months) break;

      // Next state via multinomial logits on simple risk drivers.
      double eta01 = -4.2 - 1.2 * fico_std + 0.5 * ltv_std + 1.0 * cov + geo;
      double eta10 = 0.2 + 0.5 * fico_std - 0.3 * cov;
      double eta12 = -0.5 - 0.3 * fico_std + 0.8 * cov + geo;
      double eta20 = -1.0 + 0.4 * fico_std;
      double eta21 = -1.5;
      double eta23 = 0.4 - 0.4 * fico_std + 0.6 * cov + geo;
      double u = rng.uniform();
      auto pick = [&](std::initializer_list<std::pair<int, double>> exits) {
        double denom = 1.0;
        for (const auto& ex : exits) denom += std::exp(ex.second);
        double acc = 1.0 / denom;
        if (u < acc) return state;
        for (const auto& ex : exits) {
          acc += std::exp(ex.second) / denom;
          if (u < acc) return ex.first;
        }
        return state;
      };
      if (state == 0)
        state = pick({{1, eta01}});
      else if (state == 1)
        state = pick({{0, eta10}, {2, eta12}});
      else
        state = pick({{0, eta20}, {1, eta21}, {3, eta23}});
    }
  }
  return build_panel(std::move(records), space, schema);
}

}  // namespace mstrans
