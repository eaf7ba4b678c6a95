#include "mstrans/fit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mstrans/parallel.hpp"

namespace mstrans {

void FitConfig::validate() const {
  require(batch_size >= 1, errc::bad_config, "batch_size must be >= 1");
  require(max_epochs >= 1, errc::bad_config, "max_epochs must be >= 1");
  require(patience >= 1, errc::bad_config, "patience must be >= 1");
  require(validation_fraction > 0.0 && validation_fraction < 1.0,
          errc::bad_config, "validation_fraction must be in (0,1)");
  schedule.validate();
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
          errc::bad_config, "Adam betas must be in (0,1)");
  require(adam_eps > 0.0, errc::bad_config, "adam_eps must be > 0");
  require(l2_penalty >= 0.0, errc::bad_config, "l2_penalty must be >= 0");
  require(spline_lambda >= 0.0, errc::bad_config, "spline_lambda must be >= 0");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, errc::bad_config,
          "dropout_rate must be in [0,1)");
  if (mode == FitMode::semi_structured)
    require(!hidden.empty(), errc::bad_config, "semi_structured needs hidden layers");
}

namespace {

inline double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

inline double bce(double p, double y) {
  double pc = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

// Distinct subjects of a dataset in first-appearance order, plus the
// subject index of each row.
struct SubjectIndex {
  std::vector<std::uint32_t> subjects;          // panel subject ids
  std::vector<std::uint32_t> row_subject;       // row -> position in subjects
  std::vector<std::uint8_t> any_positive;       // per position
};

SubjectIndex index_subjects(const TransitionDataset& ds) {
  SubjectIndex idx;
  std::map<std::uint32_t, std::uint32_t> seen;
  idx.row_subject.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::uint32_t s = ds.rows[i].subject;
    auto [it, inserted] = seen.emplace(
        s, static_cast<std::uint32_t>(idx.subjects.size()));
    if (inserted) {
      idx.subjects.push_back(s);
      idx.any_positive.push_back(0);
    }
    idx.row_subject[i] = it->second;
    if (ds.labels[i]) idx.any_positive[it->second] = 1;
  }
  return idx;
}

// Network input: the design's linear-block columns plus standardised
// spline-source columns.
struct NetInputPlan {
  std::vector<std::string> names;
  std::map<std::string, NumericStats> source_stats;
};

NetInputPlan plan_net_inputs(const DesignSpec& spec, const DataView& data) {
  NetInputPlan plan;
  PreprocessParams dummy;  // names only resolved per design layout below
  (void)dummy;
  for (const std::string& term : spec.linear_terms) plan.names.push_back(term);
  for (const SplineTerm& s : spec.spline_terms) {
    plan.names.push_back("z(" + s.column + ")");
    std::vector<double> v = data.numeric_column(s.column);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / static_cast<double>(v.size()));
    plan.source_stats[s.column] = {mean, sd > 0.0 ? sd : 1.0};
  }
  return plan;
}

Eigen::MatrixXd assemble_net_inputs(
    const DesignSpec& spec, const DataView& data, const DesignMatrix& dm,
    const std::map<std::string, NumericStats>& source_stats) {
  // Linear blocks from the design matrix verbatim.
  std::size_t width = 0;
  for (const ColumnBlock& b : dm.blocks)
    if (!b.penalised && b.name != "(Intercept)") width += b.size;
  width += spec.spline_terms.size();

  Eigen::MatrixXd U(dm.X.rows(), static_cast<Eigen::Index>(width));
  Eigen::Index col = 0;
  for (const ColumnBlock& b : dm.blocks) {
    if (b.penalised || b.name == "(Intercept)") continue;
    U.middleCols(col, static_cast<Eigen::Index>(b.size)) =
        dm.X.middleCols(static_cast<Eigen::Index>(b.start),
                        static_cast<Eigen::Index>(b.size));
    col += static_cast<Eigen::Index>(b.size);
  }
  for (const SplineTerm& s : spec.spline_terms) {
    const NumericStats& st = source_stats.at(s.column);
    std::vector<double> v = data.numeric_column(s.column);
    for (std::size_t i = 0; i < v.size(); ++i)
      U(static_cast<Eigen::Index>(i), col) = (v[i] - st.mean) / st.sd;
    ++col;
  }
  return U;
}

struct PenaltyTerm {
  Eigen::MatrixXd scaled;  // sum_j (lambda_j / n) S_j, embedded m x m
  bool any = false;
};

PenaltyTerm scaled_penalty(const DesignMatrix& dm, const FitConfig& cfg,
                           std::size_t n_train) {
  PenaltyTerm pen;
  pen.scaled = Eigen::MatrixXd::Zero(dm.X.cols(), dm.X.cols());
  for (const ColumnBlock& b : dm.blocks) {
    if (!b.penalised) continue;
    double lambda = cfg.spline_lambda;
    if (!cfg.spline_lambda_per_block.empty()) {
      require(b.spline_index >= 0 &&
                  static_cast<std::size_t>(b.spline_index) <
                      cfg.spline_lambda_per_block.size(),
              errc::bad_config, "spline_lambda_per_block size mismatch");
      lambda = cfg.spline_lambda_per_block[static_cast<std::size_t>(b.spline_index)];
    }
    if (lambda == 0.0) continue;
    auto block = pen.scaled.block(
        static_cast<Eigen::Index>(b.start), static_cast<Eigen::Index>(b.start),
        static_cast<Eigen::Index>(b.size), static_cast<Eigen::Index>(b.size));
    block += (lambda / static_cast<double>(n_train)) *
             dm.penalty.block(static_cast<Eigen::Index>(b.start),
                              static_cast<Eigen::Index>(b.start),
                              static_cast<Eigen::Index>(b.size),
                              static_cast<Eigen::Index>(b.size));
    pen.any = true;
  }
  return pen;
}

double net_l2_value(const MlpConfig& cfg, const MlpParams& net) {
  if (cfg.l2_penalty == 0.0) return 0.0;
  double ss = 0.0;
  for (const auto& w : net.weights) ss += w.squaredNorm();
  return cfg.l2_penalty * ss;
}

}  // namespace

std::vector<std::uint32_t> validation_split(const TransitionDataset& ds,
                                            double fraction,
                                            std::uint64_t seed) {
  SubjectIndex idx = index_subjects(ds);
  std::vector<std::uint32_t> strata[2];
  for (std::uint32_t s = 0; s < idx.subjects.size(); ++s)
    strata[idx.any_positive[s] ? 1 : 0].push_back(s);
  Rng rng = Rng(seed).split("valsplit");
  std::vector<std::uint32_t> val;
  for (auto& stratum : strata) {
    rng.shuffle(stratum);
    std::size_t take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(stratum.size())));
    for (std::size_t i = 0; i < take; ++i) val.push_back(stratum[i]);
  }
  std::sort(val.begin(), val.end());
  return val;
}

TransitionModel fit_transition(
    const TransitionDataset& ds, const DesignSpec& spec, const FitConfig& cfg,
    const std::map<std::string, std::map<std::string, double>>* woe_override) {
  cfg.validate();
  spec.validate();
  require(ds.panel != nullptr && ds.size() > 0, errc::degenerate_labels,
          "empty transition dataset");
  {
    bool first = ds.labels.front();
    bool all_same = std::all_of(ds.labels.begin(), ds.labels.end(),
                                [&](std::uint8_t y) { return bool(y) == first; });
    require(!all_same, errc::degenerate_labels,
            "all labels identical; refusing to fit");
  }

  // Subject-level validation split.
  SubjectIndex sidx = index_subjects(ds);
  std::vector<std::uint32_t> val_subjects =
      validation_split(ds, cfg.validation_fraction, cfg.seed);
  std::vector<std::uint8_t> is_val(sidx.subjects.size(), 0);
  for (std::uint32_t s : val_subjects) is_val[s] = 1;

  std::vector<RowRef> train_rows, val_rows;
  std::vector<double> y_train, y_val, t_train, t_val;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (is_val[sidx.row_subject[i]]) {
      val_rows.push_back(ds.rows[i]);
      y_val.push_back(ds.labels[i]);
      t_val.push_back(ds.times[i]);
    } else {
      train_rows.push_back(ds.rows[i]);
      y_train.push_back(ds.labels[i]);
      t_train.push_back(ds.times[i]);
    }
  }
  // Degenerate split (tiny data): validate on the training rows.
  bool val_is_train = val_rows.empty();

  // Preprocessing statistics are computed on the full dataset; the
  // validation split only guards early stopping. Column "t" is the
  // transition month.
  std::vector<double> t_all(ds.times.begin(), ds.times.end());
  PanelRowsView all_base(*ds.panel, ds.rows);
  AugmentedView all_view(all_base);
  all_view.add_numeric("t", t_all);
  PreprocessParams params =
      fit_preprocess(spec, all_view, &ds.labels, cfg.woe_smoothing);
  if (woe_override)
    for (const auto& [col, map] : *woe_override) params.woe[col] = map;

  PanelRowsView train_base(*ds.panel, train_rows);
  AugmentedView train_view(train_base);
  train_view.add_numeric("t", t_train);
  PanelRowsView val_base(*ds.panel, val_is_train ? train_rows : val_rows);
  AugmentedView val_view(val_base);
  val_view.add_numeric("t", val_is_train ? t_train : t_val);
  if (val_is_train) y_val = y_train;

  DesignMatrix dm = apply_design(spec, train_view, params, /*with_q=*/false);
  Eigen::MatrixXd X_val =
      apply_design(spec, val_view, params, /*with_q=*/false).X;
  const std::size_t n_train = train_rows.size();
  const Eigen::Index m = dm.X.cols();

  // Rank check + factors for the final re-attribution.
  Eigen::MatrixXd Q_tr, R_tr;
  thin_qr(dm.X, Q_tr, R_tr, &dm.blocks);

  bool semi = cfg.mode == FitMode::semi_structured;
  NetInputPlan net_plan;
  Eigen::MatrixXd U_train, U_val;
  MlpConfig net_config;
  MlpParams net;
  Rng root(cfg.seed);
  if (semi) {
    net_plan = plan_net_inputs(spec, all_view);
    U_train = assemble_net_inputs(spec, train_view, dm, net_plan.source_stats);
    {
      DesignMatrix dm_val;
      dm_val.X = X_val;
      dm_val.blocks = dm.blocks;
      U_val = assemble_net_inputs(spec, val_view, dm_val, net_plan.source_stats);
    }
    net_config.layer_widths.push_back(static_cast<int>(U_train.cols()));
    for (int h : cfg.hidden) net_config.layer_widths.push_back(h);
    net_config.layer_widths.push_back(1);
    net_config.activation = cfg.activation;
    net_config.dropout_rate = cfg.dropout_rate;
    net_config.l2_penalty = cfg.l2_penalty;
    net = MlpParams::init(net_config, root.split("netinit"));
  }

  PenaltyTerm pen = scaled_penalty(dm, cfg, n_train);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd beta_m = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd beta_v = Eigen::VectorXd::Zero(m);
  std::int64_t step = 0;

  Eigen::Map<const Eigen::VectorXd> y_vl(y_val.data(),
                                         static_cast<Eigen::Index>(y_val.size()));

  auto val_loss = [&]() {
    Eigen::VectorXd eta = X_val * beta;
    if (semi) eta += mlp_forward(net_config, net, U_val, MlpMode::eval);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
      loss += bce(sigmoid(eta(i)), y_vl(i));
    return loss / static_cast<double>(eta.size());
  };

  const bool full_batch = static_cast<std::size_t>(cfg.batch_size) >= n_train;
  std::vector<std::uint32_t> order(n_train);
  for (std::uint32_t i = 0; i < n_train; ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_beta = beta;
  MlpParams best_net = net;
  int best_epoch = -1;
  int patience_left = cfg.patience;
  double initial_loss = 0.0;
  int over_streak = 0;
  int epochs_run = 0;
  double last_train_loss = 0.0;

  Eigen::MatrixXd X_b, U_b;
  Eigen::VectorXd y_b;
  Rng dropout_rng = root.split("dropout");
  ForwardCache cache;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (!full_batch) {
      Rng shuffle_rng = root.split("shuffle").split(static_cast<std::uint64_t>(epoch));
      shuffle_rng.shuffle(order);
    }
    double epoch_bce = 0.0;
    std::size_t done = 0;
    while (done < n_train) {
      std::size_t bsz = std::min<std::size_t>(
          static_cast<std::size_t>(cfg.batch_size), n_train - done);
      const Eigen::MatrixXd* Xb = nullptr;
      const Eigen::MatrixXd* Ub = nullptr;
      Eigen::Map<const Eigen::VectorXd> yb(y_train.data(), 0);
      if (full_batch) {
        Xb = &dm.X;
        if (semi) Ub = &U_train;
        new (&yb) Eigen::Map<const Eigen::VectorXd>(y_train.data(),
                                                    static_cast<Eigen::Index>(bsz));
      } else {
        X_b.resize(static_cast<Eigen::Index>(bsz), m);
        y_b.resize(static_cast<Eigen::Index>(bsz));
        if (semi) U_b.resize(static_cast<Eigen::Index>(bsz), U_train.cols());
        for (std::size_t r = 0; r < bsz; ++r) {
          std::uint32_t src = order[done + r];
          X_b.row(static_cast<Eigen::Index>(r)) = dm.X.row(src);
          if (semi) U_b.row(static_cast<Eigen::Index>(r)) = U_train.row(src);
          y_b(static_cast<Eigen::Index>(r)) = y_train[src];
        }
        Xb = &X_b;
        if (semi) Ub = &U_b;
        new (&yb) Eigen::Map<const Eigen::VectorXd>(y_b.data(),
                                                    static_cast<Eigen::Index>(bsz));
      }

      Eigen::VectorXd eta = (*Xb) * beta;
      if (semi)
        eta += mlp_forward(net_config, net, *Ub, MlpMode::train, &dropout_rng,
                           &cache);

      Eigen::VectorXd grad_eta(static_cast<Eigen::Index>(bsz));
      for (Eigen::Index i = 0; i < grad_eta.size(); ++i) {
        double p = sigmoid(eta(i));
        epoch_bce += bce(p, yb(i));
        grad_eta(i) = (p - yb(i)) / static_cast<double>(bsz);
      }

      Eigen::VectorXd g_beta = Xb->transpose() * grad_eta;
      if (pen.any) g_beta += 2.0 * (pen.scaled * beta);

      adam_apply(beta, g_beta, beta_m, beta_v, step, cfg.schedule, cfg.beta1,
                 cfg.beta2, cfg.adam_eps);
      if (semi) {
        MlpGrads grads = mlp_backward(net_config, net, cache, grad_eta);
        net.step = step;
        adam_step(net, grads, cfg.schedule, cfg.beta1, cfg.beta2, cfg.adam_eps);
      }
      step += 1;
      done += bsz;
    }
    epochs_run = epoch + 1;

    double train_loss = epoch_bce / static_cast<double>(n_train);
    if (pen.any) train_loss += beta.dot(pen.scaled * beta);
    if (semi) train_loss += net_l2_value(net_config, net);
    last_train_loss = train_loss;
    require(std::isfinite(train_loss), errc::diverged,
            "training loss became non-finite at epoch " + std::to_string(epoch));
    if (epoch == 0) initial_loss = train_loss;
    if (train_loss > 10.0 * initial_loss) {
      if (++over_streak >= 3)
        fail(errc::diverged, "training loss exceeded 10x the initial loss for 3 epochs");
    } else {
      over_streak = 0;
    }

    double vloss = val_loss();
    require(std::isfinite(vloss), errc::diverged, "validation loss non-finite");
    if (vloss < best_val) {
      best_val = vloss;
      best_beta = beta;
      if (semi) best_net = net;
      best_epoch = epoch;
      patience_left = cfg.patience;
    } else if (--patience_left == 0) {
      break;
    }
  }

  beta = best_beta;
  if (semi) net = best_net;

  TransitionModel model;
  model.edge = ds.edge;
  model.mode = cfg.mode;
  model.spec = spec;
  model.params = params;
  model.beta_raw = beta;
  model.proj_coef = Eigen::VectorXd::Zero(m);
  if (semi) {
    Eigen::VectorXd u = mlp_forward(net_config, net, U_train, MlpMode::eval);
    Eigen::VectorXd c = R_tr.triangularView<Eigen::Upper>().solve(
        Q_tr.transpose() * u);
    model.proj_coef = c;
    Eigen::VectorXd unstr = u - dm.X * c;
    double scale = std::max(1.0, dm.X.cwiseAbs().maxCoeff()) *
                   std::max(1.0, unstr.cwiseAbs().maxCoeff());
    model.meta.orthogonality =
        (dm.X.transpose() * unstr).cwiseAbs().maxCoeff() /
        (static_cast<double>(n_train) * scale);
    model.net_config = net_config;
    model.net = net;
    model.net_inputs = net_plan.names;
    model.net_source_stats = net_plan.source_stats;
  }
  model.beta = model.beta_raw + model.proj_coef;
  model.meta.epochs_run = epochs_run;
  model.meta.best_val_loss = best_val;
  model.meta.final_train_loss = last_train_loss;
  model.meta.seed = cfg.seed;
  for (std::uint32_t s : val_subjects)
    model.meta.validation_subjects.push_back(
        ds.panel->subjects[sidx.subjects[s]].id);
  (void)best_epoch;
  return model;
}

namespace {

Eigen::VectorXd model_eta(const TransitionModel& model, const DataView& data,
                          Eigen::VectorXd* eta_unstr_out) {
  DesignMatrix dm = apply_design(model.spec, data, model.params, /*with_q=*/false);
  Eigen::VectorXd eta = dm.X * model.beta_raw;
  if (model.mode == FitMode::semi_structured) {
    Eigen::MatrixXd U =
        assemble_net_inputs(model.spec, data, dm, model.net_source_stats);
    Eigen::VectorXd u = mlp_forward(model.net_config, model.net, U, MlpMode::eval);
    eta += u;
    if (eta_unstr_out) *eta_unstr_out = u - dm.X * model.proj_coef;
  } else if (eta_unstr_out) {
    *eta_unstr_out = Eigen::VectorXd::Zero(dm.X.rows());
  }
  return eta;
}

}  // namespace

Eigen::VectorXd predict_q(const TransitionModel& model, const DataView& data) {
  Eigen::VectorXd eta = model_eta(model, data, nullptr);
  Eigen::VectorXd q(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) q(i) = sigmoid(eta(i));
  return q;
}

Eigen::VectorXd predict_q(const TransitionModel& model, const Panel& panel,
                          const std::vector<RowRef>& rows) {
  PanelRowsView view(panel, rows);
  return predict_q(model, view);
}

PredictorParts predict_eta_parts(const TransitionModel& model,
                                 const DataView& data) {
  PredictorParts parts;
  Eigen::VectorXd eta = model_eta(model, data, &parts.eta_unstr);
  parts.eta_str = eta - parts.eta_unstr;
  return parts;
}

BootstrapSummary bootstrap_intervals(const TransitionDataset& ds,
                                     const DesignSpec& spec,
                                     const FitConfig& cfg, int B,
                                     unsigned threads) {
  require(B >= 2, errc::bad_config, "bootstrap needs B >= 2");
  SubjectIndex sidx = index_subjects(ds);
  std::size_t n_subjects = sidx.subjects.size();
  // Rows per distinct subject, in dataset order.
  std::vector<std::vector<std::uint32_t>> subject_rows(n_subjects);
  for (std::size_t i = 0; i < ds.size(); ++i)
    subject_rows[sidx.row_subject[i]].push_back(static_cast<std::uint32_t>(i));

  std::vector<std::optional<Eigen::VectorXd>> betas(static_cast<std::size_t>(B));
  std::vector<std::string> first_error(1);
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    Rng rng = Rng(cfg.seed).split("bootstrap").split(b + 1);
    TransitionDataset res;
    res.edge = ds.edge;
    res.panel = ds.panel;
    for (std::size_t draw = 0; draw < n_subjects; ++draw) {
      std::size_t pick = static_cast<std::size_t>(rng.below(n_subjects));
      for (std::uint32_t r : subject_rows[pick]) {
        res.rows.push_back(ds.rows[r]);
        res.times.push_back(ds.times[r]);
        res.labels.push_back(ds.labels[r]);
      }
    }
    FitConfig rep_cfg = cfg;
    rep_cfg.seed = cfg.seed + b + 1;
    try {
      TransitionModel m = fit_transition(res, spec, rep_cfg);
      betas[b] = m.beta;
    } catch (const Error& e) {
      betas[b] = std::nullopt;
      if (first_error[0].empty()) first_error[0] = e.what();
    }
  });

  std::vector<Eigen::VectorXd> ok;
  for (auto& b : betas)
    if (b.has_value()) ok.push_back(*b);
  require(static_cast<double>(ok.size()) >= 0.9 * static_cast<double>(B),
          errc::diverged,
          "too many bootstrap replicates failed (" +
              std::to_string(B - static_cast<int>(ok.size())) + "/" +
              std::to_string(B) + "): " + first_error[0]);

  // Coefficient names come from a reference fit's params; use stored
  // column order from the dataset preprocess (names are deterministic).
  PanelRowsView all_base(*ds.panel, ds.rows);
  AugmentedView all_view(all_base);
  all_view.add_numeric("t", std::vector<double>(ds.times.begin(), ds.times.end()));
  PreprocessParams ref =
      fit_preprocess(spec, all_view, &ds.labels, cfg.woe_smoothing);

  Eigen::Index m = ok.front().size();
  BootstrapSummary out;
  out.coefficients = ref.column_names;
  out.mean = Eigen::VectorXd::Zero(m);
  out.p2_5 = Eigen::VectorXd::Zero(m);
  out.p97_5 = Eigen::VectorXd::Zero(m);
  out.n_success = static_cast<int>(ok.size());
  out.n_failed = B - out.n_success;

  auto percentile = [](std::vector<double>& v, double p) {
    std::sort(v.begin(), v.end());
    double h = p * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double w = h - static_cast<double>(lo);
    return (1.0 - w) * v[lo] + w * v[hi];
  };

  for (Eigen::Index j = 0; j < m; ++j) {
    std::vector<double> col;
    col.reserve(ok.size());
    double mean = 0.0;
    for (const auto& b : ok) {
      col.push_back(b(j));
      mean += b(j);
    }
    out.mean(j) = mean / static_cast<double>(ok.size());
    out.p2_5(j) = percentile(col, 0.025);
    out.p97_5(j) = percentile(col, 0.975);
  }
  return out;
}

Eigen::VectorXd spline_curve(const TransitionModel& model,
                             const std::string& column,
                             const std::vector<double>& grid) {
  auto it = model.params.splines.find(column);
  require(it != model.params.splines.end(), errc::unknown_column,
          "no spline term for '" + column + "'");
  const SplineKnots& knots = it->second;
  int dim = static_cast<int>(knots.constraint.size());
  std::string prefix = "s(" + column + ").";
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < model.params.column_names.size(); ++j)
    if (model.params.column_names[j].rfind(prefix, 0) == 0)
      cols.push_back(static_cast<Eigen::Index>(j));
  require(static_cast<int>(cols.size()) == dim - 1, errc::shape_mismatch,
          "spline block width mismatch for '" + column + "'");
  Eigen::VectorXd beta_block(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) beta_block(static_cast<Eigen::Index>(j)) = model.beta(cols[j]);
  Eigen::MatrixXd Z = constraint_null_basis(knots.constraint);
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  Eigen::RowVectorXd raw(dim);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    eval_spline_row(grid[i], knots, raw.data(), dim);
    out(static_cast<Eigen::Index>(i)) = raw * Z * beta_block;
  }
  return out;
}

GridSearchResult grid_search(const TransitionDataset& ds, const DesignSpec& spec,
                             const std::vector<FitConfig>& grid, int replicates,
                             unsigned threads) {
  require(!grid.empty(), errc::bad_config, "empty hyperparameter grid");
  require(replicates >= 1, errc::bad_config, "replicates must be >= 1");
  GridSearchResult res;
  res.replicate_loss.assign(grid.size(),
                            std::vector<double>(static_cast<std::size_t>(replicates), 0.0));
  std::size_t total = grid.size() * static_cast<std::size_t>(replicates);
  parallel_for(total, threads, [&](std::size_t task) {
    std::size_t g = task / static_cast<std::size_t>(replicates);
    std::size_t r = task % static_cast<std::size_t>(replicates);
    FitConfig cfg = grid[g];
    cfg.seed = grid[g].seed + r;
    double loss;
    try {
      loss = fit_transition(ds, spec, cfg).meta.best_val_loss;
    } catch (const Error& e) {
      if (!is_numerical(e.code())) throw;
      loss = std::numeric_limits<double>::infinity();
    }
    res.replicate_loss[g][r] = loss;
  });
  res.mean_val_loss.resize(grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double mean = 0.0;
    for (double l : res.replicate_loss[g]) mean += l;
    mean /= static_cast<double>(replicates);
    res.mean_val_loss[g] = mean;
    if (mean < best) {
      best = mean;
      res.best_index = g;
    }
  }
  return res;
}

}  // namespace mstrans
