#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mstrans/model_io.hpp"
#include "mstrans/pipeline.hpp"

using nlohmann::json;
using namespace mstrans;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed = 0;  // 0: take from config / defaults
  unsigned threads = 1;
  json config = json::object();

  void load() {
    if (!config_path.empty()) config = read_json_file(config_path);
    if (seed == 0) seed = config.value("seed", std::uint64_t{1});
    if (threads == 1) threads = config.value("threads", 1u);
  }
};

DesignSpec design_from_config(const json& config) {
  require(config.contains("design"), errc::bad_config,
          "config file must provide a \"design\" section for fitting");
  return design_spec_from_json(config.at("design"));
}

FitConfig base_fit_config(const GlobalOpts& g) {
  json merged = g.config.value("fit", json::object());
  FitConfig cfg = fit_config_from_json(merged);
  if (g.seed != 0 && !merged.contains("seed")) cfg.seed = g.seed;
  return cfg;
}

std::vector<FitConfig> per_edge_fit_configs(const GlobalOpts& g,
                                            const StateSpace& space) {
  json base = g.config.value("fit", json::object());
  if (g.seed != 0 && !base.contains("seed")) base["seed"] = g.seed;
  json per_edge = g.config.value("fit_per_edge", json::object());
  std::vector<FitConfig> cfgs;
  for (const Edge& e : space.edges) {
    std::string key = std::to_string(e.first) + "->" + std::to_string(e.second);
    json merged = base;
    if (per_edge.contains(key)) merged.update(per_edge.at(key));
    cfgs.push_back(fit_config_from_json(merged));
  }
  return cfgs;
}

void stamp(json& artifact, const GlobalOpts& g) {
  artifact["format_version"] = kFormatVersion;
  artifact["seed"] = g.seed;
  artifact["config_hash"] = config_hash(g.config);
}

Edge parse_edge(const std::string& s) {
  auto pos = s.find("->");
  std::size_t skip = 2;
  if (pos == std::string::npos) {
    pos = s.find(',');
    skip = 1;
  }
  require(pos != std::string::npos, errc::bad_config,
          "edge must look like '0->1' or '0,1'");
  return {std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + skip))};
}

std::vector<std::pair<int, int>> parse_spans(const std::vector<std::string>& specs) {
  std::vector<std::pair<int, int>> spans;
  for (const std::string& s : specs) {
    auto pos = s.find('-');
    require(pos != std::string::npos, errc::bad_config,
            "span must look like 't1-t2'");
    spans.push_back({std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + 1))});
  }
  return spans;
}

json error_report_json(const TransformErrorReport& rep) {
  json j;
  j["mse"] = rep.mse;
  j["mae"] = rep.mae;
  if (!rep.mse_sd.empty()) {
    j["mse_sd"] = rep.mse_sd;
    j["mae_sd"] = rep.mae_sd;
  }
  return j;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

void print_comparison_table(const TransformErrorReport& cont,
                            const TransformErrorReport& exact) {
  auto cell = [&](const std::vector<double>& mean,
                  const std::vector<double>& sd, std::size_t j) {
    std::string s = fmt(mean[j]);
    if (!sd.empty()) s += " (" + fmt(sd[j]) + ")";
    return s;
  };
  std::printf("%-12s %-22s %-22s %-22s %-22s\n", "Transition",
              "MSE (continuous)", "MSE (discrete)", "MAE (continuous)",
              "MAE (discrete)");
  for (std::size_t j = 0; j < exact.mse.size(); ++j) {
    std::string name = "0 -> " + std::to_string(j);
    std::printf("%-12s %-22s %-22s %-22s %-22s\n", name.c_str(),
                cell(cont.mse, cont.mse_sd, j).c_str(),
                cell(exact.mse, exact.mse_sd, j).c_str(),
                cell(cont.mae, cont.mae_sd, j).c_str(),
                cell(exact.mae, exact.mae_sd, j).c_str());
  }
}

int cmd_simulate(const GlobalOpts& g, int n, int t, double sigma,
                 bool interaction, const std::string& out,
                 const std::string& truth_out) {
  DgpSpec spec = DgpSpec::defaults(n, g.seed, t);
  spec.rw_sigma = sigma;
  spec.include_interaction = interaction;
  SimResult sim = simulate_panel(spec);
  write_panel_csv_file(out, sim.panel);
  if (!truth_out.empty()) save_truth(truth_out, sim.truth);
  std::fprintf(stderr, "simulate: wrote %zu subjects (%zu rows) to %s\n",
               sim.panel.subjects.size(), sim.panel.total_rows(), out.c_str());
  return 0;
}

int cmd_fit(const GlobalOpts& g, const std::string& panel_path,
            const std::string& out, const std::string& report_path,
            const std::string& mode_override, bool keep_competing,
            bool woe_per_edge) {
  Panel panel = read_panel_csv_file(panel_path, StateSpace::default_space());
  DesignSpec spec = design_from_config(g.config);
  std::vector<FitConfig> cfgs = per_edge_fit_configs(g, panel.space);
  if (!mode_override.empty()) {
    require(mode_override == "semi_structured" || mode_override == "structured_only",
            errc::bad_config, "unknown mode '" + mode_override + "'");
    for (FitConfig& c : cfgs)
      c.mode = mode_override == "semi_structured" ? FitMode::semi_structured
                                                  : FitMode::structured_only;
  }
  ModelBundle bundle =
      fit_all_edges(panel, spec, cfgs, keep_competing, woe_per_edge, g.threads);
  bundle.seed = g.seed;
  bundle.config_hash = config_hash(g.config);
  save_bundle(out, bundle);

  json report;
  stamp(report, g);
  report["kind"] = "fit_report";
  json edges = json::array();
  for (const TransitionModel& m : bundle.models) {
    edges.push_back({{"edge", std::to_string(m.edge.first) + "->" +
                                  std::to_string(m.edge.second)},
                     {"mode", m.mode == FitMode::semi_structured
                                  ? "semi_structured"
                                  : "structured_only"},
                     {"epochs_run", m.meta.epochs_run},
                     {"best_val_loss", m.meta.best_val_loss},
                     {"final_train_loss", m.meta.final_train_loss},
                     {"orthogonality", m.meta.orthogonality}});
    std::fprintf(stderr,
                 "fit %d->%d: epochs=%d val_loss=%.6f orthogonality=%.3g\n",
                 m.edge.first, m.edge.second, m.meta.epochs_run,
                 m.meta.best_val_loss, m.meta.orthogonality);
  }
  report["edges"] = std::move(edges);
  if (!report_path.empty()) write_json_file(report_path, report);
  return 0;
}

int cmd_predict(const GlobalOpts& g, const std::string& panel_path,
                const std::string& models_path, int t1, int t2,
                const std::string& method, const std::string& out) {
  require(t1 < t2, errc::bad_config, "need t1 < t2");
  ModelBundle bundle = load_bundle(models_path);
  Panel panel = read_panel_csv_file(panel_path, bundle.space);
  std::vector<std::uint32_t> subjects;
  std::size_t skipped = 0;
  for (std::uint32_t s = 0; s < panel.subjects.size(); ++s) {
    if (panel.subjects[s].observed_at(t1))
      subjects.push_back(s);
    else
      ++skipped;
  }
  if (skipped > 0)
    std::fprintf(stderr, "predict: skipped %zu subjects not observed at t1=%d\n",
                 skipped, t1);
  TransformMethod tm = method == "continuous" ? TransformMethod::continuous
                                              : TransformMethod::exact;
  Eigen::MatrixXd p = predict_distributions(bundle, panel, subjects, t1, t2, tm);
  std::ofstream os(out);
  require(os.good(), errc::bad_format, "cannot open '" + out + "'");
  os << "id";
  for (int k = 0; k < bundle.space.n_states; ++k) os << ",p" << k;
  os << '\n';
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    os << panel.subjects[subjects[i]].id;
    for (int k = 0; k < bundle.space.n_states; ++k)
      os << ',' << format_double(p(static_cast<Eigen::Index>(i), k));
    os << '\n';
  }
  std::fprintf(stderr, "predict: wrote %zu rows to %s\n", subjects.size(),
               out.c_str());
  return 0;
}

int cmd_transform(const std::string& in, const std::string& out,
                  const std::string& method) {
  std::ifstream is(in);
  require(is.good(), errc::bad_format, "cannot open '" + in + "'");
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), errc::bad_format,
          "empty q CSV");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
    line.pop_back();
  require(line == "id,t,q01,q10,q12,q20,q21,q23", errc::bad_format,
          "q CSV header must be id,t,q01,q10,q12,q20,q21,q23");
  bool exact = method != "continuous";

  std::ofstream os(out);
  require(os.good(), errc::bad_format, "cannot open '" + out + "'");
  os << "id,t,pi00,pi01,pi10,pi11,pi12,pi20,pi21,pi22,pi23,renormalised\n";
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, cell;
    std::getline(ss, id, ',');
    std::getline(ss, cell, ',');
    int t = std::stoi(cell);
    double q[6];
    for (double& v : q) {
      require(static_cast<bool>(std::getline(ss, cell, ',')), errc::bad_format,
              "expected 6 q values per row");
      v = std::stod(cell);
    }
    PiRow r0 = exact_state0(q[0]);
    PiRow r1 = exact ? exact_state1(q[1], q[2]) : approx_state1(q[1], q[2]);
    PiRow r2 = exact ? exact_state2(q[3], q[4], q[5])
                     : approx_state2(q[3], q[4], q[5]);
    os << id << ',' << t << ',' << format_double(r0.p[0]) << ','
       << format_double(r0.p[1]) << ',' << format_double(r1.p[0]) << ','
       << format_double(r1.p[1]) << ',' << format_double(r1.p[2]) << ','
       << format_double(r2.p[0]) << ',' << format_double(r2.p[1]) << ','
       << format_double(r2.p[2]) << ',' << format_double(r2.p[3]) << ','
       << (r1.renormalised || r2.renormalised ? 1 : 0) << '\n';
  }
  return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& panel_path,
                 const std::string& models_path,
                 const std::vector<std::string>& span_specs,
                 const std::string& calib_panel_path, double calib_fraction,
                 int ece_bins, const std::string& out,
                 const std::string& csv_out) {
  ModelBundle bundle = load_bundle(models_path);
  Panel panel = read_panel_csv_file(panel_path, bundle.space);
  std::optional<Panel> calib_panel;
  EvaluateOptions opts;
  opts.calibration_fraction = calib_fraction;
  opts.seed = g.seed;
  opts.ece_bins = ece_bins;
  if (!calib_panel_path.empty()) {
    calib_panel = read_panel_csv_file(calib_panel_path, bundle.space);
    opts.calibration_panel = &*calib_panel;
  }
  std::vector<SpanMetrics> table =
      evaluate_spans(bundle, panel, parse_spans(span_specs), opts);

  std::printf("%-8s %-9s %-9s %-8s %-8s %-8s\n", "Span", "MultiAUC", "AUC1vsA",
              "Brier", "ECE", "ACC");
  for (const SpanMetrics& m : table)
    std::printf("%-8s %-9.3f %-9.3f %-8.3f %-8.3f %-8.3f\n",
                (std::to_string(m.t1) + "-" + std::to_string(m.t2)).c_str(),
                m.multi_auc, m.one_vs_all, m.brier, m.ece, m.accuracy);

  json report;
  stamp(report, g);
  report["kind"] = "metric_report";
  json rows = json::array();
  for (const SpanMetrics& m : table) {
    rows.push_back({{"span", std::to_string(m.t1) + "-" + std::to_string(m.t2)},
                    {"t1", m.t1},
                    {"t2", m.t2},
                    {"horizon", m.t2 - m.t1},
                    {"n_subjects", m.n_subjects},
                    {"MultiAUC", m.multi_auc},
                    {"AUC1vsA", m.one_vs_all},
                    {"Brier", m.brier},
                    {"ECE", m.ece},
                    {"ACC", m.accuracy}});
  }
  report["spans"] = std::move(rows);
  if (!out.empty()) write_json_file(out, report);
  if (!csv_out.empty()) {
    std::ofstream os(csv_out);
    os << "span,horizon,n,MultiAUC,AUC1vsA,Brier,ECE,ACC\n";
    for (const SpanMetrics& m : table)
      os << m.t1 << '-' << m.t2 << ',' << m.t2 - m.t1 << ',' << m.n_subjects
         << ',' << format_double(m.multi_auc) << ','
         << format_double(m.one_vs_all) << ',' << format_double(m.brier) << ','
         << format_double(m.ece) << ',' << format_double(m.accuracy) << '\n';
  }
  return 0;
}

int cmd_compare_transforms(const GlobalOpts& g, const std::string& truth_path,
                           const std::string& panel_path,
                           const std::string& models_path, int replicates,
                           bool refit, std::size_t sample, int t2,
                           const std::string& out) {
  GroundTruth truth = load_truth(truth_path);
  if (t2 <= 0) t2 = truth.spec.n_months;

  json report;
  stamp(report, g);
  report["kind"] = "transform_comparison";
  report["t2"] = t2;
  report["sample"] = sample;

  if (replicates <= 1) {
    require(!panel_path.empty(), errc::bad_config,
            "single-replicate comparison needs --panel");
    Panel panel = read_panel_csv_file(panel_path, truth.spec.space);
    std::optional<ModelBundle> bundle;
    if (!models_path.empty()) bundle = load_bundle(models_path);
    TransformComparison cmp = compare_transforms(
        truth, panel, bundle ? &*bundle : nullptr, sample, t2, g.seed);
    print_comparison_table(cmp.continuous, cmp.exact);
    report["replicates"] = 1;
    report["q_source"] = bundle ? "fitted" : "true";
    report["exact"] = error_report_json(cmp.exact);
    report["continuous"] = error_report_json(cmp.continuous);
  } else {
    std::optional<DesignSpec> spec;
    std::optional<FitConfig> cfg;
    if (refit) {
      spec = design_from_config(g.config);
      cfg = base_fit_config(g);
    }
    ReplicatedComparison cmp = replicated_transform_comparison(
        truth.spec, replicates, sample, spec ? &*spec : nullptr,
        cfg ? &*cfg : nullptr, g.threads);
    print_comparison_table(cmp.continuous, cmp.exact);
    report["replicates"] = replicates;
    report["q_source"] = refit ? "fitted" : "true";
    report["exact"] = error_report_json(cmp.exact);
    report["continuous"] = error_report_json(cmp.continuous);
  }
  if (!out.empty()) write_json_file(out, report);
  return 0;
}

int cmd_aj(const GlobalOpts& g, const std::string& panel_path,
           const std::string& out) {
  Panel panel = read_panel_csv_file(panel_path, StateSpace::default_space());
  AjEstimate est = aalen_johansen(panel);
  std::ofstream os(out);
  require(os.good(), errc::bad_format, "cannot open '" + out + "'");
  os << "t,from,to,cumulative,at_risk\n";
  int K = panel.space.n_states;
  for (int t = 1; t <= est.max_time; ++t) {
    const Eigen::MatrixXd& A = est.cumulative[static_cast<std::size_t>(t) - 1];
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l)
        os << t << ',' << k << ',' << l << ',' << format_double(A(k, l)) << ','
           << est.at_risk[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(k)]
           << '\n';
  }
  (void)g;
  return 0;
}

int cmd_grid_search(const GlobalOpts& g, const std::string& panel_path,
                    const std::string& edge_spec, const std::string& grid_path,
                    int replicates, const std::string& out) {
  Panel panel = read_panel_csv_file(panel_path, StateSpace::default_space());
  DesignSpec spec = design_from_config(g.config);
  Edge edge = parse_edge(edge_spec);
  TransitionDataset ds = extract_transition_dataset(panel, edge);

  json grid_json = read_json_file(grid_path);
  require(grid_json.is_array() && !grid_json.empty(), errc::bad_config,
          "grid file must be a non-empty JSON array of fit configs");
  json base = g.config.value("fit", json::object());
  if (g.seed != 0 && !base.contains("seed")) base["seed"] = g.seed;
  std::vector<FitConfig> grid;
  for (const json& entry : grid_json) {
    json merged = base;
    merged.update(entry);
    grid.push_back(fit_config_from_json(merged));
  }

  GridSearchResult res = grid_search(ds, spec, grid, replicates, g.threads);
  json report;
  stamp(report, g);
  report["kind"] = "grid_search";
  report["edge"] = edge_spec;
  report["replicates"] = replicates;
  report["best_index"] = res.best_index;
  report["best_config"] = fit_config_to_json(grid[res.best_index]);
  report["mean_val_loss"] = res.mean_val_loss;
  report["replicate_loss"] = res.replicate_loss;
  if (!out.empty()) write_json_file(out, report);
  std::fprintf(stderr, "grid-search: best config #%zu (mean val loss %.6f)\n",
               res.best_index, res.mean_val_loss[res.best_index]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-structured discrete-time multi-state transition models"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--seed", g.seed, "Seed (overrides config)");
  app.add_option("--threads", g.threads, "Worker threads");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a multi-state panel");
  int sim_n = 10000, sim_t = 36;
  double sim_sigma = 0.05;
  bool sim_no_interaction = false;
  std::string sim_out, sim_truth;
  sim->add_option("--n", sim_n, "Subjects");
  sim->add_option("--t", sim_t, "Months");
  sim->add_option("--sigma", sim_sigma, "Random-walk sd of the baselines");
  sim->add_flag("--no-interaction", sim_no_interaction, "Drop the x1*x2 term");
  sim->add_option("--out", sim_out, "Panel CSV path")->required();
  sim->add_option("--truth", sim_truth, "Truth JSON path");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit one model per transition");
  std::string fit_panel, fit_out, fit_report, fit_mode;
  bool fit_keep_competing = false, fit_woe_per_edge = false;
  fit->add_option("--panel", fit_panel, "Panel CSV")->required();
  fit->add_option("--out", fit_out, "Model bundle JSON path")->required();
  fit->add_option("--report", fit_report, "Fit report JSON path");
  fit->add_option("--mode", fit_mode,
                  "Override mode: semi_structured | structured_only");
  fit->add_flag("--keep-competing-as-zero", fit_keep_competing,
                "Keep competing exits as zero-labelled rows");
  fit->add_flag("--woe-per-edge", fit_woe_per_edge,
                "Refit WOE encodings per transition");

  // predict
  auto* pred = app.add_subcommand("predict", "Predict state distributions");
  std::string pred_panel, pred_models, pred_out, pred_method = "exact";
  int pred_t1 = 0, pred_t2 = 0;
  pred->add_option("--panel", pred_panel, "Panel CSV")->required();
  pred->add_option("--models", pred_models, "Model bundle")->required();
  pred->add_option("--t1", pred_t1, "Window start")->required();
  pred->add_option("--t2", pred_t2, "Window end")->required();
  pred->add_option("--method", pred_method, "exact | continuous");
  pred->add_option("--out", pred_out, "Output CSV")->required();

  // transform
  auto* trans = app.add_subcommand("transform", "Convert q CSV to pi CSV");
  std::string tr_in, tr_out, tr_method = "exact";
  trans->add_option("--in", tr_in, "q CSV (id,t,q01,q10,q12,q20,q21,q23)")->required();
  trans->add_option("--out", tr_out, "pi CSV")->required();
  trans->add_option("--method", tr_method, "exact | continuous");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Metric table over spans");
  std::string ev_panel, ev_models, ev_calib, ev_out, ev_csv;
  std::vector<std::string> ev_spans;
  double ev_calib_fraction = 0.3;
  int ev_bins = 10;
  ev->add_option("--panel", ev_panel, "Evaluation panel CSV")->required();
  ev->add_option("--models", ev_models, "Model bundle")->required();
  ev->add_option("--spans", ev_spans, "Spans t1-t2 (repeatable)")->required();
  ev->add_option("--calib-panel", ev_calib,
                 "Panel providing the cut-point calibration set");
  ev->add_option("--calib-fraction", ev_calib_fraction,
                 "Calibration fraction when no --calib-panel");
  ev->add_option("--ece-bins", ev_bins, "ECE bin count");
  ev->add_option("--out", ev_out, "Report JSON");
  ev->add_option("--csv", ev_csv, "Report CSV");

  // compare-transforms
  auto* cmp = app.add_subcommand("compare-transforms",
                                 "Exact vs continuous transform errors");
  std::string cmp_truth, cmp_panel, cmp_models, cmp_out;
  int cmp_replicates = 1, cmp_t2 = 0;
  std::size_t cmp_sample = 1000;
  bool cmp_fit = false;
  cmp->add_option("--truth", cmp_truth, "Simulation truth JSON")->required();
  cmp->add_option("--panel", cmp_panel, "Simulated panel CSV (replicates=1)");
  cmp->add_option("--models", cmp_models, "Model bundle (fitted q)");
  cmp->add_option("--replicates", cmp_replicates, "Fresh simulation replicates");
  cmp->add_flag("--fit", cmp_fit, "Refit models per replicate (needs --config)");
  cmp->add_option("--sample", cmp_sample, "Subjects sampled per replicate");
  cmp->add_option("--t2", cmp_t2, "Horizon (default: simulated T)");
  cmp->add_option("--out", cmp_out, "Report JSON");

  // aj
  auto* aj = app.add_subcommand("aj", "Aalen-Johansen cumulative estimates");
  std::string aj_panel, aj_out;
  aj->add_option("--panel", aj_panel, "Panel CSV")->required();
  aj->add_option("--out", aj_out, "Output CSV")->required();

  // grid-search
  auto* gs = app.add_subcommand("grid-search", "Pick a fit config by validation loss");
  std::string gs_panel, gs_edge, gs_grid, gs_out;
  int gs_replicates = 2;
  gs->add_option("--panel", gs_panel, "Panel CSV")->required();
  gs->add_option("--edge", gs_edge, "Transition, e.g. 0->1")->required();
  gs->add_option("--grid", gs_grid, "JSON array of fit-config overrides")->required();
  gs->add_option("--replicates", gs_replicates, "Runs per config");
  gs->add_option("--out", gs_out, "Report JSON");

  // Global flags may appear after the subcommand name.
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
    g.load();
    if (sim->parsed())
      return cmd_simulate(g, sim_n, sim_t, sim_sigma, !sim_no_interaction,
                          sim_out, sim_truth);
    if (fit->parsed())
      return cmd_fit(g, fit_panel, fit_out, fit_report, fit_mode,
                     fit_keep_competing, fit_woe_per_edge);
    if (pred->parsed())
      return cmd_predict(g, pred_panel, pred_models, pred_t1, pred_t2,
                         pred_method, pred_out);
    if (trans->parsed()) return cmd_transform(tr_in, tr_out, tr_method);
    if (ev->parsed())
      return cmd_evaluate(g, ev_panel, ev_models, ev_spans, ev_calib,
                          ev_calib_fraction, ev_bins, ev_out, ev_csv);
    if (cmp->parsed())
      return cmd_compare_transforms(g, cmp_truth, cmp_panel, cmp_models,
                                    cmp_replicates, cmp_fit, cmp_sample,
                                    cmp_t2, cmp_out);
    if (aj->parsed()) return cmd_aj(g, aj_panel, aj_out);
    if (gs->parsed())
      return cmd_grid_search(g, gs_panel, gs_edge, gs_grid, gs_replicates,
                             gs_out);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_numerical(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
