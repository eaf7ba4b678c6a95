#include "mstrans/panel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace mstrans {

const char* errc_name(errc c) {
  switch (c) {
    case errc::illegal_transition: return "IllegalTransition";
    case errc::non_contiguous_time: return "NonContiguousTime";
    case errc::post_absorbing_activity: return "PostAbsorbingActivity";
    case errc::degenerate_labels: return "DegenerateLabels";
    case errc::unknown_column: return "UnknownColumn";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::invalid_range: return "InvalidRange";
    case errc::dim_too_small: return "DimTooSmall";
    case errc::all_same_target: return "AllSameTarget";
    case errc::unknown_id: return "UnknownId";
    case errc::empty_panel: return "EmptyPanel";
    case errc::missing_truth: return "MissingTruth";
    case errc::empty_span: return "EmptySpan";
    case errc::one_class_only: return "OneClassOnly";
    case errc::missing_start_state: return "MissingStartState";
    case errc::empty_start_state: return "EmptyStartState";
    case errc::subject_not_observed: return "SubjectNotObservedAtT1";
    case errc::bad_config: return "BadConfig";
    case errc::bad_format: return "BadFormat";
    case errc::rank_deficient: return "RankDeficient";
    case errc::diverged: return "Diverged";
    case errc::non_finite_activation: return "NonFiniteActivation";
  }
  return "Error";
}

std::optional<CovariateSchema::Ref> CovariateSchema::find(
    const std::string& name) const {
  std::size_t n_num = 0, n_cat = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      if (kinds[i] == ColumnKind::numeric) return Ref{ColumnKind::numeric, n_num};
      return Ref{ColumnKind::categorical, n_cat};
    }
    (kinds[i] == ColumnKind::numeric ? n_num : n_cat)++;
  }
  return std::nullopt;
}

std::size_t Panel::n_numeric_cols() const {
  std::size_t n = 0;
  for (ColumnKind k : schema.kinds)
    if (k == ColumnKind::numeric) ++n;
  return n;
}

std::size_t Panel::n_categorical_cols() const {
  return schema.size() - n_numeric_cols();
}

std::size_t Panel::total_rows() const {
  std::size_t n = 0;
  for (const SubjectPath& s : subjects) n += s.states.size();
  return n;
}

bool Panel::operator==(const Panel& o) const {
  if (!(schema == o.schema) || category_labels != o.category_labels ||
      subjects.size() != o.subjects.size())
    return false;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const SubjectPath& a = subjects[i];
    const SubjectPath& b = o.subjects[i];
    if (a.id != b.id || a.origin_offset != b.origin_offset ||
        a.states != b.states || a.numeric != b.numeric ||
        a.categorical != b.categorical)
      return false;
  }
  return true;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double_cell(const std::string& cell, const std::string& ctx) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  require(res.ec == std::errc() && res.ptr == last, errc::bad_format,
          "cannot parse numeric value '" + cell + "' " + ctx);
  return v;
}

bool looks_numeric(const std::string& cell) {
  if (cell.empty()) return false;
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

}  // namespace

Panel build_panel(std::vector<RawRecord> records, const StateSpace& space,
                  const CovariateSchema& schema) {
  space.validate();
  std::stable_sort(records.begin(), records.end(),
                   [](const RawRecord& a, const RawRecord& b) {
                     if (a.id != b.id) return a.id < b.id;
                     return a.t < b.t;
                   });

  Panel panel;
  panel.space = space;
  panel.schema = schema;
  std::size_t n_num = 0, n_cat = 0;
  for (ColumnKind k : schema.kinds) (k == ColumnKind::numeric ? n_num : n_cat)++;
  panel.category_labels.resize(n_cat);
  std::vector<std::unordered_map<std::string, std::uint32_t>> interned(n_cat);

  auto intern = [&](std::size_t col, const std::string& label) {
    auto [it, inserted] = interned[col].emplace(
        label, static_cast<std::uint32_t>(panel.category_labels[col].size()));
    if (inserted) panel.category_labels[col].push_back(label);
    return it->second;
  };

  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].id == records[i].id) ++j;

    SubjectPath path;
    path.id = records[i].id;
    path.origin_offset = records[i].origin_offset;
    path.numeric.reserve((j - i) * n_num);
    path.categorical.reserve((j - i) * n_cat);

    for (std::size_t r = i; r < j; ++r) {
      const RawRecord& rec = records[r];
      const std::string ctx = "subject '" + rec.id + "' t=" + std::to_string(rec.t);
      require(rec.t == static_cast<int>(r - i), errc::non_contiguous_time,
              "expected t=" + std::to_string(r - i) + " for " + ctx);
      require(rec.state >= 0 && rec.state < space.n_states, errc::bad_format,
              "state out of range for " + ctx);
      require(rec.origin_offset == path.origin_offset, errc::bad_format,
              "origin_offset varies within " + ctx);
      require(rec.covariates.size() == schema.size(), errc::bad_format,
              "covariate cell count mismatch for " + ctx);
      if (r > i) {
        int prev = path.states.back();
        if (space.is_absorbing(prev)) {
          require(rec.state == prev, errc::post_absorbing_activity,
                  "activity after absorbing state for " + ctx);
        } else {
          require(rec.state == prev || space.is_edge(prev, rec.state),
                  errc::illegal_transition,
                  std::to_string(prev) + "->" + std::to_string(rec.state) +
                      " is not a permissible transition for " + ctx);
        }
      }
      path.states.push_back(rec.state);
      std::size_t num_idx = 0, cat_idx = 0;
      for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema.kinds[c] == ColumnKind::numeric) {
          path.numeric.push_back(parse_double_cell(rec.covariates[c],
                                                   "in column '" + schema.names[c] +
                                                       "' for " + ctx));
          ++num_idx;
        } else {
          path.categorical.push_back(intern(cat_idx, rec.covariates[c]));
          ++cat_idx;
        }
      }
      (void)num_idx;
    }
    panel.subjects.push_back(std::move(path));
    i = j;
  }
  return panel;
}

TransitionDataset extract_transition_dataset(const Panel& panel, Edge edge,
                                             const ExtractOptions& opts) {
  require(panel.space.is_edge(edge.first, edge.second), errc::invalid_range,
          "edge (" + std::to_string(edge.first) + "," +
              std::to_string(edge.second) + ") not in the transition graph");
  TransitionDataset ds;
  ds.edge = edge;
  ds.panel = &panel;
  for (std::size_t s = 0; s < panel.subjects.size(); ++s) {
    const SubjectPath& path = panel.subjects[s];
    for (int t = 1; t <= path.last_time(); ++t) {
      if (path.states[t - 1] != edge.first) continue;
      int to = path.states[t];
      bool in_pair = (to == edge.first || to == edge.second);
      if (!in_pair && !opts.keep_competing_as_zero) continue;
      ds.rows.push_back({static_cast<std::uint32_t>(s),
                         static_cast<std::uint32_t>(t - 1)});
      ds.times.push_back(t);
      ds.labels.push_back(to == edge.second ? 1 : 0);
    }
  }
  if (!ds.labels.empty() && !opts.allow_degenerate) {
    bool first = ds.labels.front();
    bool all_same = std::all_of(ds.labels.begin(), ds.labels.end(),
                                [&](std::uint8_t y) { return bool(y) == first; });
    require(!all_same, errc::degenerate_labels,
            "all labels identical for edge (" + std::to_string(edge.first) +
                "," + std::to_string(edge.second) + ")");
  }
  return ds;
}

std::vector<std::vector<std::int64_t>> transition_counts(const Panel& panel,
                                                         bool distinct_loans) {
  int K = panel.space.n_states;
  std::vector<std::vector<std::int64_t>> counts(
      K, std::vector<std::int64_t>(K, 0));
  std::vector<std::uint8_t> seen;
  for (const SubjectPath& path : panel.subjects) {
    if (distinct_loans) seen.assign(static_cast<std::size_t>(K) * K, 0);
    for (int t = 1; t <= path.last_time(); ++t) {
      int from = path.states[t - 1];
      int to = path.states[t];
      if (distinct_loans) {
        std::uint8_t& flag = seen[static_cast<std::size_t>(from) * K + to];
        if (flag) continue;
        flag = 1;
      }
      counts[from][to]++;
    }
  }
  return counts;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

int parse_int_cell(const std::string& cell, const std::string& ctx) {
  int v = 0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  require(res.ec == std::errc() && res.ptr == cell.data() + cell.size(),
          errc::bad_format, "cannot parse integer '" + cell + "' " + ctx);
  return v;
}

}  // namespace

Panel read_panel_csv(std::istream& in, const StateSpace& space,
                     const std::map<std::string, ColumnKind>& forced_kinds) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), errc::bad_format,
          "empty panel CSV");
  std::vector<std::string> header = split_csv_line(line);
  int id_col = -1, t_col = -1, state_col = -1, origin_col = -1;
  std::vector<int> cov_cols;
  std::vector<std::string> cov_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "id") id_col = static_cast<int>(c);
    else if (header[c] == "t") t_col = static_cast<int>(c);
    else if (header[c] == "state") state_col = static_cast<int>(c);
    else if (header[c] == "origin_offset") origin_col = static_cast<int>(c);
    else {
      cov_cols.push_back(static_cast<int>(c));
      cov_names.push_back(header[c]);
    }
  }
  require(id_col >= 0 && t_col >= 0 && state_col >= 0, errc::bad_format,
          "panel CSV must have id,t,state columns");

  std::vector<std::vector<std::string>> raw_rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    require(cells.size() == header.size(), errc::bad_format,
            "line " + std::to_string(lineno) + ": expected " +
                std::to_string(header.size()) + " cells");
    raw_rows.push_back(std::move(cells));
  }

  CovariateSchema schema;
  schema.names = cov_names;
  schema.kinds.resize(cov_names.size(), ColumnKind::numeric);
  for (std::size_t j = 0; j < cov_cols.size(); ++j) {
    auto forced = forced_kinds.find(cov_names[j]);
    if (forced != forced_kinds.end()) {
      schema.kinds[j] = forced->second;
      continue;
    }
    for (const auto& cells : raw_rows) {
      if (!looks_numeric(cells[cov_cols[j]])) {
        schema.kinds[j] = ColumnKind::categorical;
        break;
      }
    }
  }

  std::vector<RawRecord> records;
  records.reserve(raw_rows.size());
  for (const auto& cells : raw_rows) {
    RawRecord rec;
    rec.id = cells[id_col];
    rec.t = parse_int_cell(cells[t_col], "in column 't'");
    rec.state = parse_int_cell(cells[state_col], "in column 'state'");
    if (origin_col >= 0)
      rec.origin_offset = parse_int_cell(cells[origin_col],
                                         "in column 'origin_offset'");
    rec.covariates.reserve(cov_cols.size());
    for (int c : cov_cols) rec.covariates.push_back(cells[c]);
    records.push_back(std::move(rec));
  }
  return build_panel(std::move(records), space, schema);
}

Panel read_panel_csv_file(const std::string& path, const StateSpace& space,
                          const std::map<std::string, ColumnKind>& forced_kinds) {
  std::ifstream in(path);
  require(in.good(), errc::bad_format, "cannot open panel CSV '" + path + "'");
  return read_panel_csv(in, space, forced_kinds);
}

void write_panel_csv(std::ostream& out, const Panel& panel) {
  bool any_offset = false;
  for (const SubjectPath& s : panel.subjects)
    if (s.origin_offset != 0) any_offset = true;

  out << "id,t,state";
  if (any_offset) out << ",origin_offset";
  for (const std::string& name : panel.schema.names) out << ',' << name;
  out << '\n';

  std::size_t n_num = panel.n_numeric_cols();
  std::size_t n_cat = panel.n_categorical_cols();
  for (const SubjectPath& s : panel.subjects) {
    for (int t = 0; t <= s.last_time(); ++t) {
      out << s.id << ',' << t << ',' << s.states[t];
      if (any_offset) out << ',' << s.origin_offset;
      std::size_t num_idx = 0, cat_idx = 0;
      for (std::size_t c = 0; c < panel.schema.size(); ++c) {
        out << ',';
        if (panel.schema.kinds[c] == ColumnKind::numeric) {
          out << format_double(
              s.numeric[static_cast<std::size_t>(t) * n_num + num_idx++]);
        } else {
          out << panel.category_labels[cat_idx][s.categorical[
              static_cast<std::size_t>(t) * n_cat + cat_idx]];
          ++cat_idx;
        }
      }
      out << '\n';
    }
  }
}

void write_panel_csv_file(const std::string& path, const Panel& panel) {
  std::ofstream out(path);
  require(out.good(), errc::bad_format, "cannot open '" + path + "' for writing");
  write_panel_csv(out, panel);
}

}  // namespace mstrans
