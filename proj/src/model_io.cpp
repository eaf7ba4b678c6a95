#include "mstrans/model_io.hpp"

#include <fstream>

namespace mstrans {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return std::string(buf);
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& a) {
  std::size_t rows = a.size();
  std::size_t cols = rows == 0 ? 0 : a[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          a[i][j].get<double>();
  return m;
}

std::string edge_key(Edge e) {
  return std::to_string(e.first) + "->" + std::to_string(e.second);
}

Edge edge_from_key(const std::string& s) {
  auto pos = s.find("->");
  require(pos != std::string::npos, errc::bad_format, "bad edge key '" + s + "'");
  return {std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + 2))};
}

}  // namespace

json design_spec_to_json(const DesignSpec& spec) {
  json j;
  j["linear_terms"] = spec.linear_terms;
  json splines = json::array();
  for (const SplineTerm& s : spec.spline_terms)
    splines.push_back({{"column", s.column},
                       {"basis_dim", s.basis_dim},
                       {"penalty_order", s.penalty_order}});
  j["spline_terms"] = std::move(splines);
  json enc = json::object();
  for (const auto& [col, e] : spec.categorical_encodings)
    enc[col] = e == CatEncoding::woe ? "woe" : "one_hot";
  j["categorical_encodings"] = std::move(enc);
  j["standardise"] = spec.standardise;
  j["include_intercept"] = spec.include_intercept;
  return j;
}

DesignSpec design_spec_from_json(const json& j) {
  DesignSpec spec;
  spec.linear_terms = j.value("linear_terms", std::vector<std::string>{});
  if (j.contains("spline_terms")) {
    for (const json& s : j.at("spline_terms")) {
      SplineTerm term;
      term.column = s.at("column").get<std::string>();
      term.basis_dim = s.value("basis_dim", 10);
      term.penalty_order = s.value("penalty_order", 2);
      spec.spline_terms.push_back(std::move(term));
    }
  }
  if (j.contains("categorical_encodings")) {
    for (const auto& [col, e] : j.at("categorical_encodings").items()) {
      std::string name = e.get<std::string>();
      require(name == "woe" || name == "one_hot", errc::bad_config,
              "unknown encoding '" + name + "'");
      spec.categorical_encodings[col] =
          name == "woe" ? CatEncoding::woe : CatEncoding::one_hot;
    }
  }
  spec.standardise = j.value("standardise", true);
  spec.include_intercept = j.value("include_intercept", true);
  spec.validate();
  return spec;
}

json fit_config_to_json(const FitConfig& cfg) {
  json j;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["validation_fraction"] = cfg.validation_fraction;
  j["learning_rate"] = cfg.schedule.alpha0;
  j["decay_rate"] = cfg.schedule.decay_rate;
  j["decay_step"] = cfg.schedule.decay_step;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["l2_penalty"] = cfg.l2_penalty;
  j["spline_lambda"] = cfg.spline_lambda;
  if (!cfg.spline_lambda_per_block.empty())
    j["spline_lambda_per_block"] = cfg.spline_lambda_per_block;
  j["mode"] = cfg.mode == FitMode::semi_structured ? "semi_structured"
                                                   : "structured_only";
  j["hidden"] = cfg.hidden;
  j["activation"] = cfg.activation == Activation::relu ? "relu" : "gelu";
  j["dropout_rate"] = cfg.dropout_rate;
  j["woe_smoothing"] = cfg.woe_smoothing;
  j["seed"] = cfg.seed;
  return j;
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig cfg;
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.validation_fraction = j.value("validation_fraction", cfg.validation_fraction);
  cfg.schedule.alpha0 = j.value("learning_rate", cfg.schedule.alpha0);
  cfg.schedule.decay_rate = j.value("decay_rate", cfg.schedule.decay_rate);
  cfg.schedule.decay_step = j.value("decay_step", cfg.schedule.decay_step);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.l2_penalty = j.value("l2_penalty", cfg.l2_penalty);
  cfg.spline_lambda = j.value("spline_lambda", cfg.spline_lambda);
  cfg.spline_lambda_per_block =
      j.value("spline_lambda_per_block", std::vector<double>{});
  std::string mode = j.value("mode", "semi_structured");
  require(mode == "semi_structured" || mode == "structured_only",
          errc::bad_config, "unknown fit mode '" + mode + "'");
  cfg.mode = mode == "semi_structured" ? FitMode::semi_structured
                                       : FitMode::structured_only;
  cfg.hidden = j.value("hidden", cfg.hidden);
  std::string act = j.value("activation", "relu");
  require(act == "relu" || act == "gelu", errc::bad_config,
          "unknown activation '" + act + "'");
  cfg.activation = act == "relu" ? Activation::relu : Activation::gelu;
  cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
  cfg.woe_smoothing = j.value("woe_smoothing", cfg.woe_smoothing);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

namespace {

json preprocess_to_json(const PreprocessParams& p) {
  json j;
  json numeric = json::object();
  for (const auto& [col, st] : p.numeric)
    numeric[col] = {{"mean", st.mean}, {"sd", st.sd}};
  j["numeric"] = std::move(numeric);
  json woe = json::object();
  for (const auto& [col, map] : p.woe) {
    json m = json::object();
    for (const auto& [cat, v] : map) m[cat] = v;
    woe[col] = std::move(m);
  }
  j["woe"] = std::move(woe);
  json onehot = json::object();
  for (const auto& [col, levels] : p.onehot_levels) onehot[col] = levels;
  j["onehot_levels"] = std::move(onehot);
  json splines = json::object();
  for (const auto& [col, k] : p.splines)
    splines[col] = {{"lo", k.lo},
                    {"hi", k.hi},
                    {"knots", k.knots},
                    {"constraint", k.constraint}};
  j["splines"] = std::move(splines);
  j["column_names"] = p.column_names;
  return j;
}

PreprocessParams preprocess_from_json(const json& j) {
  PreprocessParams p;
  for (const auto& [col, st] : j.at("numeric").items())
    p.numeric[col] = {st.at("mean").get<double>(), st.at("sd").get<double>()};
  for (const auto& [col, map] : j.at("woe").items())
    for (const auto& [cat, v] : map.items()) p.woe[col][cat] = v.get<double>();
  for (const auto& [col, levels] : j.at("onehot_levels").items())
    p.onehot_levels[col] = levels.get<std::vector<std::string>>();
  for (const auto& [col, k] : j.at("splines").items()) {
    SplineKnots knots;
    knots.lo = k.at("lo").get<double>();
    knots.hi = k.at("hi").get<double>();
    knots.knots = k.at("knots").get<std::vector<double>>();
    knots.constraint = k.at("constraint").get<std::vector<double>>();
    p.splines[col] = std::move(knots);
  }
  p.column_names = j.at("column_names").get<std::vector<std::string>>();
  return p;
}

json net_to_json(const MlpConfig& cfg, const MlpParams& net) {
  json j;
  j["layer_widths"] = cfg.layer_widths;
  j["activation"] = cfg.activation == Activation::relu ? "relu" : "gelu";
  j["dropout_rate"] = cfg.dropout_rate;
  j["l2_penalty"] = cfg.l2_penalty;
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    weights.push_back(mat_to_json(net.weights[l]));
    biases.push_back(vec_to_json(net.biases[l]));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

void net_from_json(const json& j, MlpConfig& cfg, MlpParams& net) {
  cfg.layer_widths = j.at("layer_widths").get<std::vector<int>>();
  std::string act = j.value("activation", "relu");
  cfg.activation = act == "relu" ? Activation::relu : Activation::gelu;
  cfg.dropout_rate = j.value("dropout_rate", 0.0);
  cfg.l2_penalty = j.value("l2_penalty", 0.0);
  const json& ws = j.at("weights");
  const json& bs = j.at("biases");
  for (std::size_t l = 0; l < ws.size(); ++l) {
    net.weights.push_back(mat_from_json(ws[l]));
    net.biases.push_back(vec_from_json(bs[l]));
    net.m_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                            net.weights[l].cols()));
    net.v_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                            net.weights[l].cols()));
    net.m_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    net.v_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
}

}  // namespace

json model_to_json(const TransitionModel& model) {
  json j;
  j["format_version"] = kFormatVersion;
  j["edge"] = edge_key(model.edge);
  j["mode"] = model.mode == FitMode::semi_structured ? "semi_structured"
                                                     : "structured_only";
  j["design_spec"] = design_spec_to_json(model.spec);
  j["preprocess"] = preprocess_to_json(model.params);
  j["beta"] = vec_to_json(model.beta);
  j["beta_raw"] = vec_to_json(model.beta_raw);
  j["proj_coef"] = vec_to_json(model.proj_coef);
  if (model.mode == FitMode::semi_structured) {
    j["network"] = net_to_json(model.net_config, model.net);
    j["net_inputs"] = model.net_inputs;
    json stats = json::object();
    for (const auto& [col, st] : model.net_source_stats)
      stats[col] = {{"mean", st.mean}, {"sd", st.sd}};
    j["net_source_stats"] = std::move(stats);
  }
  j["meta"] = {{"epochs_run", model.meta.epochs_run},
               {"best_val_loss", model.meta.best_val_loss},
               {"final_train_loss", model.meta.final_train_loss},
               {"orthogonality", model.meta.orthogonality},
               {"seed", model.meta.seed},
               {"validation_subjects", model.meta.validation_subjects}};
  return j;
}

TransitionModel model_from_json(const json& j) {
  require(j.value("format_version", 0) == kFormatVersion, errc::bad_format,
          "unsupported model format version");
  TransitionModel model;
  model.edge = edge_from_key(j.at("edge").get<std::string>());
  model.mode = j.at("mode").get<std::string>() == "semi_structured"
                   ? FitMode::semi_structured
                   : FitMode::structured_only;
  model.spec = design_spec_from_json(j.at("design_spec"));
  model.params = preprocess_from_json(j.at("preprocess"));
  model.beta = vec_from_json(j.at("beta"));
  model.beta_raw = vec_from_json(j.at("beta_raw"));
  model.proj_coef = vec_from_json(j.at("proj_coef"));
  if (model.mode == FitMode::semi_structured) {
    net_from_json(j.at("network"), model.net_config, model.net);
    model.net_inputs = j.at("net_inputs").get<std::vector<std::string>>();
    for (const auto& [col, st] : j.at("net_source_stats").items())
      model.net_source_stats[col] = {st.at("mean").get<double>(),
                                     st.at("sd").get<double>()};
  }
  const json& meta = j.at("meta");
  model.meta.epochs_run = meta.value("epochs_run", 0);
  model.meta.best_val_loss = meta.value("best_val_loss", 0.0);
  model.meta.final_train_loss = meta.value("final_train_loss", 0.0);
  model.meta.orthogonality = meta.value("orthogonality", 0.0);
  model.meta.seed = meta.value("seed", std::uint64_t{0});
  model.meta.validation_subjects =
      meta.value("validation_subjects", std::vector<std::string>{});
  return model;
}

const TransitionModel& ModelBundle::for_edge(Edge e) const {
  for (const TransitionModel& m : models)
    if (m.edge == e) return m;
  fail(errc::unknown_id, "no model for edge " + edge_key(e));
}

void save_bundle(const std::string& path, const ModelBundle& bundle) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "model_bundle";
  j["seed"] = bundle.seed;
  j["config_hash"] = bundle.config_hash;
  j["n_states"] = bundle.space.n_states;
  j["absorbing"] = bundle.space.absorbing;
  json edges = json::array();
  for (const Edge& e : bundle.space.edges) edges.push_back(edge_key(e));
  j["edges"] = std::move(edges);
  json models = json::array();
  for (const TransitionModel& m : bundle.models) models.push_back(model_to_json(m));
  j["models"] = std::move(models);
  write_json_file(path, j);
}

ModelBundle load_bundle(const std::string& path) {
  json j = read_json_file(path);
  require(j.value("kind", "") == "model_bundle", errc::bad_format,
          "'" + path + "' is not a model bundle");
  require(j.value("format_version", 0) == kFormatVersion, errc::bad_format,
          "unsupported bundle format version");
  ModelBundle bundle;
  bundle.seed = j.value("seed", std::uint64_t{0});
  bundle.config_hash = j.value("config_hash", "");
  bundle.space.n_states = j.at("n_states").get<int>();
  bundle.space.absorbing = j.at("absorbing").get<std::vector<int>>();
  bundle.space.edges.clear();
  for (const json& e : j.at("edges"))
    bundle.space.edges.push_back(edge_from_key(e.get<std::string>()));
  for (const json& m : j.at("models")) bundle.models.push_back(model_from_json(m));
  return bundle;
}

json truth_to_json(const GroundTruth& truth) {
  const DgpSpec& s = truth.spec;
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "simulation_truth";
  j["n_subjects"] = s.n_subjects;
  j["n_months"] = s.n_months;
  j["rw_sigma"] = s.rw_sigma;
  j["include_interaction"] = s.include_interaction;
  j["seed"] = s.seed;
  j["n_states"] = s.space.n_states;
  j["absorbing"] = s.space.absorbing;
  json space_edges = json::array();
  for (const Edge& e : s.space.edges) space_edges.push_back(edge_key(e));
  j["space_edges"] = std::move(space_edges);
  json edges = json::array();
  for (const EdgeDgp& e : s.edges) {
    edges.push_back({{"edge", edge_key(e.edge)},
                     {"beta0", e.beta0},
                     {"beta1", e.beta1},
                     {"beta2", e.beta2},
                     {"nonlinear_id", e.nonlinear_id},
                     {"baseline", e.baseline}});
  }
  j["edges"] = std::move(edges);
  return j;
}

GroundTruth truth_from_json(const json& j) {
  require(j.value("kind", "") == "simulation_truth", errc::missing_truth,
          "not a simulation truth file");
  DgpSpec s;
  s.n_subjects = j.at("n_subjects").get<int>();
  s.n_months = j.at("n_months").get<int>();
  s.rw_sigma = j.at("rw_sigma").get<double>();
  s.include_interaction = j.at("include_interaction").get<bool>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.space.n_states = j.at("n_states").get<int>();
  s.space.absorbing = j.at("absorbing").get<std::vector<int>>();
  s.space.edges.clear();
  for (const json& e : j.at("space_edges"))
    s.space.edges.push_back(edge_from_key(e.get<std::string>()));
  s.edges.clear();
  for (const json& e : j.at("edges")) {
    EdgeDgp edge;
    edge.edge = edge_from_key(e.at("edge").get<std::string>());
    edge.beta0 = e.at("beta0").get<double>();
    edge.beta1 = e.at("beta1").get<double>();
    edge.beta2 = e.at("beta2").get<double>();
    edge.nonlinear_id = e.at("nonlinear_id").get<int>();
    edge.baseline = e.at("baseline").get<std::vector<double>>();
    s.edges.push_back(std::move(edge));
  }
  return GroundTruth{std::move(s)};
}

void save_truth(const std::string& path, const GroundTruth& truth) {
  write_json_file(path, truth_to_json(truth));
}

GroundTruth load_truth(const std::string& path) {
  return truth_from_json(read_json_file(path));
}

json bootstrap_to_json(const BootstrapSummary& s) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "bootstrap_summary";
  j["n_success"] = s.n_success;
  j["n_failed"] = s.n_failed;
  json coef = json::array();
  for (std::size_t i = 0; i < s.coefficients.size(); ++i) {
    coef.push_back({{"name", s.coefficients[i]},
                    {"mean", s.mean(static_cast<Eigen::Index>(i))},
                    {"p2.5", s.p2_5(static_cast<Eigen::Index>(i))},
                    {"p97.5", s.p97_5(static_cast<Eigen::Index>(i))}});
  }
  j["coefficients"] = std::move(coef);
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  require(out.good(), errc::bad_format, "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::bad_format, "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(errc::bad_format, "cannot parse '" + path + "': " + e.what());
  }
  return j;
}

}  // namespace mstrans
