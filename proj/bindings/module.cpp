#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mstrans/metrics.hpp"
#include "mstrans/model_io.hpp"
#include "mstrans/pipeline.hpp"

namespace py = pybind11;
using namespace mstrans;

namespace {

std::vector<std::uint8_t> to_labels(const std::vector<int>& v) {
  std::vector<std::uint8_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] ? 1 : 0;
  return out;
}

Evaluation make_eval(const Eigen::MatrixXd& predictions,
                     const std::vector<int>& end_states,
                     const std::vector<int>& start_states) {
  Evaluation e;
  e.predictions = predictions;
  e.end_states = end_states;
  e.start_states = start_states;
  e.validate();
  return e;
}

std::vector<double> pirow_list(const PiRow& r) { return r.p; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semi-structured discrete-time multi-state transition models";
  m.attr("__version__") = "0.1.0";
  m.attr("FORMAT_VERSION") = kFormatVersion;

  py::register_exception<Error>(m, "MstransError");

  // Competing transition transforms.
  m.def("exact_state0", [](double q01) { return pirow_list(exact_state0(q01)); },
        py::arg("q01"));
  m.def("exact_state1",
        [](double q10, double q12) { return pirow_list(exact_state1(q10, q12)); },
        py::arg("q10"), py::arg("q12"));
  m.def("exact_state2",
        [](double q20, double q21, double q23) {
          return pirow_list(exact_state2(q20, q21, q23));
        },
        py::arg("q20"), py::arg("q21"), py::arg("q23"));
  m.def("approx_state1",
        [](double q10, double q12) { return pirow_list(approx_state1(q10, q12)); },
        py::arg("q10"), py::arg("q12"));
  m.def("approx_state2",
        [](double q20, double q21, double q23) {
          return pirow_list(approx_state2(q20, q21, q23));
        },
        py::arg("q20"), py::arg("q21"), py::arg("q23"));
  m.def("compound",
        [](const std::vector<Eigen::MatrixXd>& series) { return compound(series); },
        py::arg("series"), "Left-to-right product; empty list gives identity");

  // Design primitives.
  m.def("spline_basis",
        [](const std::vector<double>& x, int dim, double lo, double hi,
           int penalty_order) {
          SplineBasis b = spline_basis(x, dim, lo, hi, penalty_order);
          return py::make_tuple(b.basis, b.penalty, b.knots.knots);
        },
        py::arg("x"), py::arg("dim"), py::arg("lo"), py::arg("hi"),
        py::arg("penalty_order") = 2);
  m.def("woe_encode",
        [](const std::vector<std::string>& column, const std::vector<int>& target,
           double smoothing) {
          WoeEncoding enc = woe_encode(column, to_labels(target), smoothing);
          return py::make_tuple(enc.map, enc.encoded);
        },
        py::arg("column"), py::arg("target"), py::arg("smoothing") = 0.5);
  m.def("project_out", &project_out, py::arg("Q"), py::arg("U"));
  m.def("gelu", &gelu, py::arg("x"));

  // Metrics.
  m.def("binary_auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
          return binary_auc(scores, to_labels(labels));
        },
        py::arg("scores"), py::arg("labels"));
  m.def("multiclass_auc",
        [](const Eigen::MatrixXd& p, const std::vector<int>& end,
           const std::vector<int>& start) {
          return multiclass_auc(make_eval(p, end, start));
        },
        py::arg("predictions"), py::arg("end_states"), py::arg("start_states"));
  m.def("one_vs_all_auc",
        [](const Eigen::MatrixXd& p, const std::vector<int>& end,
           const std::vector<int>& start) {
          return one_vs_all_auc(make_eval(p, end, start));
        },
        py::arg("predictions"), py::arg("end_states"), py::arg("start_states"));
  m.def("brier_multiclass",
        [](const Eigen::MatrixXd& p, const std::vector<int>& end,
           const std::vector<int>& start) {
          return brier_multiclass(make_eval(p, end, start));
        },
        py::arg("predictions"), py::arg("end_states"), py::arg("start_states"));
  m.def("ece",
        [](const Eigen::MatrixXd& p, const std::vector<int>& end,
           const std::vector<int>& start, int bins) {
          return ece(make_eval(p, end, start), bins);
        },
        py::arg("predictions"), py::arg("end_states"), py::arg("start_states"),
        py::arg("bins") = 10);

  // Panel and pipeline.
  py::class_<Panel>(m, "Panel")
      .def_static("from_csv",
                  [](const std::string& path) {
                    return read_panel_csv_file(path, StateSpace::default_space());
                  },
                  py::arg("path"))
      .def("to_csv",
           [](const Panel& p, const std::string& path) {
             write_panel_csv_file(path, p);
           },
           py::arg("path"))
      .def_property_readonly("n_subjects",
                             [](const Panel& p) { return p.subjects.size(); })
      .def_property_readonly("n_rows",
                             [](const Panel& p) { return p.total_rows(); })
      .def("transition_counts",
           [](const Panel& p, bool distinct_loans) {
             auto c = transition_counts(p, distinct_loans);
             int K = p.space.n_states;
             Eigen::MatrixXd out(K, K);
             for (int a = 0; a < K; ++a)
               for (int b = 0; b < K; ++b)
                 out(a, b) = static_cast<double>(c[static_cast<std::size_t>(a)]
                                                  [static_cast<std::size_t>(b)]);
             return out;
           },
           py::arg("distinct_loans") = false);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_static("load", &load_truth, py::arg("path"))
      .def("save",
           [](const GroundTruth& t, const std::string& path) { save_truth(path, t); },
           py::arg("path"))
      .def("cumulative", &GroundTruth::cumulative, py::arg("start"),
           py::arg("t2"), py::arg("x1"), py::arg("x2"), py::arg("z"));

  m.def("simulate",
        [](int n, int t, std::uint64_t seed, double sigma, bool interaction) {
          DgpSpec spec = DgpSpec::defaults(n, seed, t);
          spec.rw_sigma = sigma;
          spec.include_interaction = interaction;
          SimResult r = simulate_panel(spec);
          return py::make_tuple(std::move(r.panel), std::move(r.truth));
        },
        py::arg("n"), py::arg("t") = 36, py::arg("seed") = 1,
        py::arg("sigma") = 0.05, py::arg("interaction") = true);

  m.def("aalen_johansen",
        [](const Panel& panel) {
          AjEstimate est = aalen_johansen(panel);
          return py::make_tuple(est.cumulative, est.at_risk);
        },
        py::arg("panel"), "Returns (cumulative matrices for t=1.., at-risk counts)");

  py::class_<ModelBundle>(m, "ModelBundle")
      .def_static("load", &load_bundle, py::arg("path"))
      .def("save",
           [](const ModelBundle& b, const std::string& path) { save_bundle(path, b); },
           py::arg("path"))
      .def_property_readonly("n_models",
                             [](const ModelBundle& b) { return b.models.size(); })
      .def("orthogonality", [](const ModelBundle& b) {
        std::vector<double> out;
        for (const TransitionModel& m_ : b.models)
          out.push_back(m_.meta.orthogonality);
        return out;
      });

  m.def("fit",
        [](const Panel& panel, const std::string& design_json,
           const std::string& fit_json, unsigned threads) {
          DesignSpec spec = design_spec_from_json(nlohmann::json::parse(design_json));
          FitConfig cfg = fit_config_from_json(nlohmann::json::parse(fit_json));
          return fit_all_edges(panel, spec, cfg, false, false, threads);
        },
        py::arg("panel"), py::arg("design_json"), py::arg("fit_json"),
        py::arg("threads") = 1,
        "Fit one model per permissible transition; specs given as JSON strings");

  m.def("predict_distributions",
        [](const ModelBundle& bundle, const Panel& panel, int t1, int t2,
           const std::string& method) {
          std::vector<std::uint32_t> subjects;
          for (std::uint32_t s = 0; s < panel.subjects.size(); ++s)
            if (panel.subjects[s].observed_at(t1)) subjects.push_back(s);
          return predict_distributions(bundle, panel, subjects, t1, t2,
                                       method == "continuous"
                                           ? TransformMethod::continuous
                                           : TransformMethod::exact);
        },
        py::arg("bundle"), py::arg("panel"), py::arg("t1"), py::arg("t2"),
        py::arg("method") = "exact");

  m.def("evaluate_spans",
        [](const ModelBundle& bundle, const Panel& panel,
           const std::vector<std::pair<int, int>>& spans, std::uint64_t seed) {
          EvaluateOptions opts;
          opts.seed = seed;
          std::vector<SpanMetrics> rows = evaluate_spans(bundle, panel, spans, opts);
          py::list out;
          for (const SpanMetrics& r : rows) {
            py::dict d;
            d["t1"] = r.t1;
            d["t2"] = r.t2;
            d["n"] = r.n_subjects;
            d["MultiAUC"] = r.multi_auc;
            d["AUC1vsA"] = r.one_vs_all;
            d["Brier"] = r.brier;
            d["ECE"] = r.ece;
            d["ACC"] = r.accuracy;
            out.append(std::move(d));
          }
          return out;
        },
        py::arg("bundle"), py::arg("panel"), py::arg("spans"), py::arg("seed") = 1);

  m.def("make_demo_panel", &make_demo_panel, py::arg("n_loans") = 200,
        py::arg("n_months") = 48, py::arg("seed") = 7);
}
