#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mstrans/state_space.hpp"

namespace mstrans {

enum class ColumnKind { numeric, categorical };

struct CovariateSchema {
  std::vector<std::string> names;   // CSV order
  std::vector<ColumnKind> kinds;

  std::size_t size() const { return names.size(); }
  // Index within the column's kind (numeric columns and categorical
  // columns are stored separately).
  struct Ref {
    ColumnKind kind;
    std::size_t within_kind;
  };
  std::optional<Ref> find(const std::string& name) const;
  bool operator==(const CovariateSchema& o) const = default;
};

// One subject's observed path. `states` and the covariate rows are aligned
// on t = 0..T; numeric/categorical values are row-major with one row per
// month.
struct SubjectPath {
  std::string id;
  int origin_offset = 0;  // calendar month of t = 0
  std::vector<int> states;
  std::vector<double> numeric;          // T+1 rows x n_numeric
  std::vector<std::uint32_t> categorical;  // T+1 rows x n_categorical

  int last_time() const { return static_cast<int>(states.size()) - 1; }
  bool observed_at(int t) const { return t >= 0 && t <= last_time(); }
};

// Immutable after construction; safe to share across threads.
struct Panel {
  StateSpace space;
  CovariateSchema schema;
  // Interned category labels, one dictionary per categorical column.
  std::vector<std::vector<std::string>> category_labels;
  std::vector<SubjectPath> subjects;

  std::size_t n_numeric_cols() const;
  std::size_t n_categorical_cols() const;

  double numeric_at(std::size_t subject, int t, std::size_t col) const {
    const SubjectPath& s = subjects[subject];
    return s.numeric[static_cast<std::size_t>(t) * n_numeric_cols() + col];
  }
  const std::string& categorical_at(std::size_t subject, int t,
                                    std::size_t col) const {
    const SubjectPath& s = subjects[subject];
    std::uint32_t label =
        s.categorical[static_cast<std::size_t>(t) * n_categorical_cols() + col];
    return category_labels[col][label];
  }

  std::size_t total_rows() const;
  bool operator==(const Panel& o) const;
};

// A (subject, time) reference into a panel; covariates are read at `time`.
struct RowRef {
  std::uint32_t subject;
  std::uint32_t time;
};

// Raw ingestion record, before validation.
struct RawRecord {
  std::string id;
  int t = 0;
  int state = 0;
  int origin_offset = 0;
  std::vector<std::string> covariates;  // one cell per schema column
};

// Binary training set for one permissible transition k->l: rows with
// Z(t-1)=k whose exit, if any, is restricted to l. Covariates are read at
// t-1 (RowRef.time holds t-1); `times` holds the transition month t.
struct TransitionDataset {
  Edge edge;
  const Panel* panel = nullptr;
  std::vector<RowRef> rows;      // covariate row at t-1
  std::vector<int> times;        // transition time t (>= 1)
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return rows.size(); }
};

struct ExtractOptions {
  // Keep rows whose exit went to a competing state, labelled 0, instead of
  // conditioning on {stay, target}.
  bool keep_competing_as_zero = false;
  // Permit single-class label vectors (diagnostics only).
  bool allow_degenerate = false;
};

Panel build_panel(std::vector<RawRecord> records, const StateSpace& space,
                  const CovariateSchema& schema);

TransitionDataset extract_transition_dataset(const Panel& panel, Edge edge,
                                             const ExtractOptions& opts = {});

// Month-to-month move counts (self-loops included). With
// distinct_loans=true each (subject, from->to) pair is counted once.
std::vector<std::vector<std::int64_t>> transition_counts(
    const Panel& panel, bool distinct_loans = false);

// CSV schema: header `id,t,state,<covariate columns...>`, one row per
// subject-month, states 0..K-1. An optional `origin_offset` column is
// treated as the per-subject calendar offset, not a covariate. Column
// kinds are inferred (numeric iff every cell parses as a double) unless
// `forced_kinds` pins them.
Panel read_panel_csv(std::istream& in, const StateSpace& space,
                     const std::map<std::string, ColumnKind>& forced_kinds = {});
Panel read_panel_csv_file(const std::string& path, const StateSpace& space,
                          const std::map<std::string, ColumnKind>& forced_kinds = {});
void write_panel_csv(std::ostream& out, const Panel& panel);
void write_panel_csv_file(const std::string& path, const Panel& panel);

// Shortest round-trip decimal formatting (std::to_chars).
std::string format_double(double v);

}  // namespace mstrans
