#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mstrans/panel.hpp"

namespace mstrans {

/*
 * Structured design assembly: X = [ 1 | linear terms | spline bases ] with
 * named column blocks, a block-diagonal difference penalty, and the thin
 * orthonormal factor Q used to identify the semi-structured decomposition.
 *
 * Splines are degree-3 B-splines on evenly spaced knots spanning the
 * training range of the covariate (knots extend three spacings past each
 * end, so the basis partitions unity on [lo, hi]); the penalty is D'D with
 * D the order-1 or order-2 difference operator on coefficients.
 */

enum class CatEncoding { one_hot, woe };

struct SplineTerm {
  std::string column;
  int basis_dim = 10;
  int penalty_order = 2;
};

struct DesignSpec {
  std::vector<std::string> linear_terms;
  std::vector<SplineTerm> spline_terms;
  std::map<std::string, CatEncoding> categorical_encodings;
  bool standardise = true;
  bool include_intercept = true;

  void validate() const;
  CatEncoding encoding_for(const std::string& col) const {
    auto it = categorical_encodings.find(col);
    return it == categorical_encodings.end() ? CatEncoding::one_hot : it->second;
  }
};

struct NumericStats {
  double mean = 0.0;
  double sd = 1.0;
};

struct SplineKnots {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> knots;  // strictly increasing, size basis_dim + 4
  // Training-data column means of the raw basis; a partition-of-unity
  // basis is exactly collinear with the intercept, so design blocks are
  // reparameterised through the null space of this sum-to-zero constraint
  // (basis_dim - 1 identified columns per smooth).
  std::vector<double> constraint;
};

// Fitted preprocessing state; applying it to new data must reproduce the
// training design exactly, so the final column order is stored too.
struct PreprocessParams {
  std::map<std::string, NumericStats> numeric;
  std::map<std::string, std::map<std::string, double>> woe;  // has "__unseen__"
  std::map<std::string, std::vector<std::string>> onehot_levels;  // sorted; [0] is the reference
  std::map<std::string, SplineKnots> splines;
  std::vector<std::string> column_names;
};

inline constexpr const char* kWoeUnseen = "__unseen__";

struct ColumnBlock {
  std::string name;
  std::size_t start = 0;
  std::size_t size = 0;
  bool penalised = false;
  int spline_index = -1;  // index into DesignSpec.spline_terms, or -1
};

struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<ColumnBlock> blocks;
  Eigen::MatrixXd penalty;  // m x m, zeros outside spline blocks
  Eigen::MatrixXd Q;        // thin orthonormal factor (empty if not computed)
  Eigen::MatrixXd R;

  std::size_t n_cols() const { return static_cast<std::size_t>(X.cols()); }
};

// Column-oriented read access used by the design builder; implementations
// exist for panel rows and for in-memory tables.
class DataView {
 public:
  virtual ~DataView() = default;
  virtual std::size_t n_rows() const = 0;
  virtual ColumnKind kind(const std::string& column) const = 0;
  virtual std::vector<double> numeric_column(const std::string& column) const = 0;
  virtual std::vector<std::string> categorical_column(const std::string& column) const = 0;
};

// Rows of a Panel (covariates read at RowRef.time).
class PanelRowsView final : public DataView {
 public:
  PanelRowsView(const Panel& panel, const std::vector<RowRef>& rows)
      : panel_(&panel), rows_(&rows) {}
  std::size_t n_rows() const override { return rows_->size(); }
  ColumnKind kind(const std::string& column) const override;
  std::vector<double> numeric_column(const std::string& column) const override;
  std::vector<std::string> categorical_column(const std::string& column) const override;

 private:
  const Panel* panel_;
  const std::vector<RowRef>* rows_;
};

// Wraps another view and overlays extra numeric columns (used to expose
// the transition month as column "t", which is reserved in the panel CSV
// and therefore never collides with a covariate).
class AugmentedView final : public DataView {
 public:
  explicit AugmentedView(const DataView& base) : base_(&base) {}
  void add_numeric(const std::string& name, std::vector<double> values);

  std::size_t n_rows() const override { return base_->n_rows(); }
  ColumnKind kind(const std::string& column) const override;
  std::vector<double> numeric_column(const std::string& column) const override;
  std::vector<std::string> categorical_column(const std::string& column) const override;

 private:
  const DataView* base_;
  std::map<std::string, std::vector<double>> extra_;
};

// In-memory table keyed by column name.
class TableView final : public DataView {
 public:
  std::size_t n_rows() const override { return n_rows_; }
  ColumnKind kind(const std::string& column) const override;
  std::vector<double> numeric_column(const std::string& column) const override;
  std::vector<std::string> categorical_column(const std::string& column) const override;

  void add_numeric(const std::string& name, std::vector<double> values);
  void add_categorical(const std::string& name, std::vector<std::string> values);

 private:
  std::size_t n_rows_ = 0;
  bool empty_ = true;
  std::map<std::string, std::vector<double>> numeric_;
  std::map<std::string, std::vector<std::string>> categorical_;
};

// B-spline basis over evenly spaced knots spanning [lo, hi]; values
// outside the range are clamped before evaluation. Returns the n x dim
// basis and the dim x dim difference penalty.
struct SplineBasis {
  Eigen::MatrixXd basis;
  Eigen::MatrixXd penalty;
  SplineKnots knots;
};
SplineBasis spline_basis(const std::vector<double>& x, int dim, double lo,
                         double hi, int penalty_order = 2);

// Knot construction and single-row evaluation (used by apply paths).
SplineKnots make_spline_knots(double lo, double hi, int dim);
void eval_spline_row(double x, const SplineKnots& knots, double* out, int dim);
Eigen::MatrixXd difference_penalty(int dim, int order);

// Orthonormal basis of {b : colmeans' b = 0}, dim x (dim-1); deterministic
// (Householder reflector of the constraint vector).
Eigen::MatrixXd constraint_null_basis(const std::vector<double>& colmeans);

struct WoeEncoding {
  std::map<std::string, double> map;  // includes kWoeUnseen
  std::vector<double> encoded;
};
WoeEncoding woe_encode(const std::vector<std::string>& column,
                       const std::vector<std::uint8_t>& target,
                       double smoothing = 0.5);

// Fit preprocessing state on `data`. `target` is required when the spec
// uses WOE encodings and ignored otherwise.
PreprocessParams fit_preprocess(const DesignSpec& spec, const DataView& data,
                                const std::vector<std::uint8_t>* target = nullptr,
                                double woe_smoothing = 0.5);

// Assemble the design matrix by applying stored preprocessing parameters
// (never refits). Computes Q/R via thin QR unless with_q is false.
DesignMatrix apply_design(const DesignSpec& spec, const DataView& data,
                          const PreprocessParams& params, bool with_q = true);

struct DesignBuild {
  DesignMatrix matrix;
  PreprocessParams params;
};
// fit_preprocess + apply_design in one step (training path).
DesignBuild build_design(const DesignSpec& spec, const DataView& data,
                         const std::vector<std::uint8_t>* target = nullptr,
                         bool with_q = true, double woe_smoothing = 0.5);

// Thin QR with deterministic signs (R diagonal >= 0). Throws RankDeficient
// naming the offending block when an |R_jj| collapses.
void thin_qr(const Eigen::MatrixXd& X, Eigen::MatrixXd& Q, Eigen::MatrixXd& R,
             const std::vector<ColumnBlock>* blocks = nullptr);

// U - Q (Q^T U): projection onto the orthogonal complement of span(Q).
Eigen::MatrixXd project_out(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& U);

}  // namespace mstrans
