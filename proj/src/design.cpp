#include "mstrans/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mstrans {

void DesignSpec::validate() const {
  std::set<std::string> linear(linear_terms.begin(), linear_terms.end());
  require(linear.size() == linear_terms.size(), errc::bad_config,
          "duplicate linear term");
  std::set<std::string> spline_cols;
  for (const SplineTerm& s : spline_terms) {
    require(s.basis_dim >= 4, errc::dim_too_small,
            "spline basis_dim must be >= 4 for '" + s.column + "'");
    require(s.penalty_order == 1 || s.penalty_order == 2, errc::bad_config,
            "penalty_order must be 1 or 2 for '" + s.column + "'");
    require(spline_cols.insert(s.column).second, errc::bad_config,
            "duplicate spline term '" + s.column + "'");
    require(!linear.count(s.column), errc::bad_config,
            "'" + s.column + "' appears in both linear and spline lists");
  }
}

ColumnKind PanelRowsView::kind(const std::string& column) const {
  auto ref = panel_->schema.find(column);
  require(ref.has_value(), errc::unknown_column, "'" + column + "'");
  return ref->kind;
}

std::vector<double> PanelRowsView::numeric_column(const std::string& column) const {
  auto ref = panel_->schema.find(column);
  require(ref.has_value() && ref->kind == ColumnKind::numeric,
          errc::unknown_column, "numeric column '" + column + "'");
  std::vector<double> out(rows_->size());
  std::size_t stride = panel_->n_numeric_cols();
  for (std::size_t i = 0; i < rows_->size(); ++i) {
    const RowRef& r = (*rows_)[i];
    out[i] = panel_->subjects[r.subject]
                 .numeric[static_cast<std::size_t>(r.time) * stride + ref->within_kind];
  }
  return out;
}

std::vector<std::string> PanelRowsView::categorical_column(
    const std::string& column) const {
  auto ref = panel_->schema.find(column);
  require(ref.has_value() && ref->kind == ColumnKind::categorical,
          errc::unknown_column, "categorical column '" + column + "'");
  std::vector<std::string> out(rows_->size());
  std::size_t stride = panel_->n_categorical_cols();
  const auto& labels = panel_->category_labels[ref->within_kind];
  for (std::size_t i = 0; i < rows_->size(); ++i) {
    const RowRef& r = (*rows_)[i];
    out[i] = labels[panel_->subjects[r.subject].categorical[
        static_cast<std::size_t>(r.time) * stride + ref->within_kind]];
  }
  return out;
}

void AugmentedView::add_numeric(const std::string& name,
                                std::vector<double> values) {
  require(values.size() == base_->n_rows(), errc::shape_mismatch,
          "augmented column '" + name + "' length mismatch");
  extra_[name] = std::move(values);
}

ColumnKind AugmentedView::kind(const std::string& column) const {
  if (extra_.count(column)) return ColumnKind::numeric;
  return base_->kind(column);
}

std::vector<double> AugmentedView::numeric_column(const std::string& column) const {
  auto it = extra_.find(column);
  if (it != extra_.end()) return it->second;
  return base_->numeric_column(column);
}

std::vector<std::string> AugmentedView::categorical_column(
    const std::string& column) const {
  require(!extra_.count(column), errc::unknown_column,
          "'" + column + "' is numeric");
  return base_->categorical_column(column);
}

void TableView::add_numeric(const std::string& name, std::vector<double> values) {
  require(empty_ || values.size() == n_rows_, errc::shape_mismatch,
          "column length mismatch for '" + name + "'");
  n_rows_ = values.size();
  empty_ = false;
  numeric_[name] = std::move(values);
}

void TableView::add_categorical(const std::string& name,
                                std::vector<std::string> values) {
  require(empty_ || values.size() == n_rows_, errc::shape_mismatch,
          "column length mismatch for '" + name + "'");
  n_rows_ = values.size();
  empty_ = false;
  categorical_[name] = std::move(values);
}

ColumnKind TableView::kind(const std::string& column) const {
  if (numeric_.count(column)) return ColumnKind::numeric;
  if (categorical_.count(column)) return ColumnKind::categorical;
  fail(errc::unknown_column, "'" + column + "'");
}

std::vector<double> TableView::numeric_column(const std::string& column) const {
  auto it = numeric_.find(column);
  require(it != numeric_.end(), errc::unknown_column, "numeric column '" + column + "'");
  return it->second;
}

std::vector<std::string> TableView::categorical_column(const std::string& column) const {
  auto it = categorical_.find(column);
  require(it != categorical_.end(), errc::unknown_column,
          "categorical column '" + column + "'");
  return it->second;
}

SplineKnots make_spline_knots(double lo, double hi, int dim) {
  require(lo < hi, errc::invalid_range,
          "spline range must satisfy lo < hi (got [" + format_double(lo) + "," +
              format_double(hi) + "])");
  require(dim >= 4, errc::dim_too_small, "spline basis_dim must be >= 4");
  SplineKnots k;
  k.lo = lo;
  k.hi = hi;
  double h = (hi - lo) / (dim - 3);
  k.knots.resize(static_cast<std::size_t>(dim) + 4);
  for (int i = 0; i < dim + 4; ++i) k.knots[static_cast<std::size_t>(i)] = lo + (i - 3) * h;
  return k;
}

// De Boor's algorithm for the four non-zero cubic basis values at x.
void eval_spline_row(double x, const SplineKnots& kn, double* out, int dim) {
  const std::vector<double>& t = kn.knots;
  double xv = std::min(std::max(x, kn.lo), kn.hi);
  // span index k with t[k] <= xv < t[k+1]; the last span is closed.
  double h = t[4] - t[3];
  int span = 3 + static_cast<int>((xv - kn.lo) / h);
  span = std::min(span, dim - 1);
  span = std::max(span, 3);

  double n[4] = {1.0, 0.0, 0.0, 0.0};
  double left[4], right[4];
  for (int j = 1; j <= 3; ++j) {
    left[j] = xv - t[static_cast<std::size_t>(span + 1 - j)];
    right[j] = t[static_cast<std::size_t>(span + j)] - xv;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  for (int i = 0; i < dim; ++i) out[i] = 0.0;
  for (int r = 0; r <= 3; ++r) out[span - 3 + r] = n[r];
}

Eigen::MatrixXd difference_penalty(int dim, int order) {
  require(order == 1 || order == 2, errc::bad_config, "penalty order must be 1 or 2");
  require(dim > order, errc::dim_too_small, "basis_dim too small for penalty order");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim - order, dim);
  for (int i = 0; i < dim - order; ++i) {
    if (order == 1) {
      D(i, i) = -1.0;
      D(i, i + 1) = 1.0;
    } else {
      D(i, i) = 1.0;
      D(i, i + 1) = -2.0;
      D(i, i + 2) = 1.0;
    }
  }
  return D.transpose() * D;
}

Eigen::MatrixXd constraint_null_basis(const std::vector<double>& colmeans) {
  Eigen::Index dim = static_cast<Eigen::Index>(colmeans.size());
  Eigen::VectorXd c(dim);
  for (Eigen::Index i = 0; i < dim; ++i) c(i) = colmeans[static_cast<std::size_t>(i)];
  double norm = c.norm();
  require(norm > 0.0, errc::invalid_range, "zero constraint vector");
  Eigen::VectorXd v = c;
  v(0) += (c(0) >= 0.0 ? norm : -norm);
  double vs = v.squaredNorm();
  // H = I - 2 v v' / v'v; column 0 is +-c/|c|, the rest span its complement.
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim) - (2.0 / vs) * (v * v.transpose());
  return H.rightCols(dim - 1);
}

SplineBasis spline_basis(const std::vector<double>& x, int dim, double lo,
                         double hi, int penalty_order) {
  SplineBasis out;
  out.knots = make_spline_knots(lo, hi, dim);
  out.penalty = difference_penalty(dim, penalty_order);
  out.basis.resize(static_cast<Eigen::Index>(x.size()), dim);
  std::vector<double> row(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < x.size(); ++i) {
    eval_spline_row(x[i], out.knots, row.data(), dim);
    for (int j = 0; j < dim; ++j) out.basis(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
  }
  return out;
}

WoeEncoding woe_encode(const std::vector<std::string>& column,
                       const std::vector<std::uint8_t>& target,
                       double smoothing) {
  require(column.size() == target.size(), errc::shape_mismatch,
          "WOE column/target length mismatch");
  require(smoothing > 0.0, errc::bad_config, "WOE smoothing must be > 0");
  std::size_t pos = 0, neg = 0;
  for (std::uint8_t y : target) (y ? pos : neg)++;
  require(pos > 0 && neg > 0, errc::all_same_target,
          "WOE target has a single class");

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < column.size(); ++i) {
    auto& c = counts[column[i]];
    (target[i] ? c.first : c.second)++;
  }
  double C = static_cast<double>(counts.size());
  double s = smoothing;

  WoeEncoding enc;
  for (const auto& [cat, c] : counts) {
    double rate_pos = (static_cast<double>(c.first) + s) /
                      (static_cast<double>(pos) + s * C);
    double rate_neg = (static_cast<double>(c.second) + s) /
                      (static_cast<double>(neg) + s * C);
    enc.map[cat] = std::log(rate_pos / rate_neg);
  }
  enc.map[kWoeUnseen] = 0.0;
  enc.encoded.resize(column.size());
  for (std::size_t i = 0; i < column.size(); ++i)
    enc.encoded[i] = enc.map.at(column[i]);
  return enc;
}

namespace {

NumericStats column_stats(const std::vector<double>& v, const std::string& name) {
  require(!v.empty(), errc::shape_mismatch, "empty column '" + name + "'");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(v.size()));
  require(sd > 0.0, errc::rank_deficient,
          "column '" + name + "' is constant");
  return {mean, sd};
}

// The design columns a linear term expands into, in final order.
std::vector<std::string> linear_term_columns(const DesignSpec& spec,
                                             const std::string& term,
                                             const PreprocessParams& params,
                                             ColumnKind kind) {
  if (kind == ColumnKind::numeric) return {term};
  if (spec.encoding_for(term) == CatEncoding::woe) return {term + "_woe"};
  std::vector<std::string> cols;
  const auto& levels = params.onehot_levels.at(term);
  for (std::size_t l = 1; l < levels.size(); ++l)
    cols.push_back(term + "=" + levels[l]);
  return cols;
}

}  // namespace

PreprocessParams fit_preprocess(const DesignSpec& spec, const DataView& data,
                                const std::vector<std::uint8_t>* target,
                                double woe_smoothing) {
  spec.validate();
  PreprocessParams params;
  if (spec.include_intercept) params.column_names.push_back("(Intercept)");

  for (const std::string& term : spec.linear_terms) {
    ColumnKind k = data.kind(term);
    if (k == ColumnKind::numeric) {
      std::vector<double> v = data.numeric_column(term);
      if (spec.standardise) params.numeric[term] = column_stats(v, term);
      params.column_names.push_back(term);
    } else if (spec.encoding_for(term) == CatEncoding::woe) {
      require(target != nullptr, errc::bad_config,
              "WOE encoding for '" + term + "' needs a target");
      WoeEncoding enc = woe_encode(data.categorical_column(term), *target,
                                   woe_smoothing);
      params.woe[term] = std::move(enc.map);
      params.column_names.push_back(term + "_woe");
    } else {
      std::vector<std::string> v = data.categorical_column(term);
      std::set<std::string> uniq(v.begin(), v.end());
      require(uniq.size() >= 2, errc::rank_deficient,
              "categorical column '" + term + "' has a single level");
      params.onehot_levels[term] =
          std::vector<std::string>(uniq.begin(), uniq.end());
      for (const std::string& col :
           linear_term_columns(spec, term, params, ColumnKind::categorical))
        params.column_names.push_back(col);
    }
  }

  for (const SplineTerm& s : spec.spline_terms) {
    require(data.kind(s.column) == ColumnKind::numeric, errc::bad_config,
            "spline term '" + s.column + "' must be numeric");
    std::vector<double> v = data.numeric_column(s.column);
    auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    SplineKnots knots = make_spline_knots(*lo_it, *hi_it, s.basis_dim);
    // Sum-to-zero constraint: column means of the raw basis on this data.
    std::vector<double> means(static_cast<std::size_t>(s.basis_dim), 0.0);
    std::vector<double> row(static_cast<std::size_t>(s.basis_dim));
    for (double xv : v) {
      eval_spline_row(xv, knots, row.data(), s.basis_dim);
      for (int j = 0; j < s.basis_dim; ++j)
        means[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
    }
    for (double& mval : means) mval /= static_cast<double>(v.size());
    knots.constraint = std::move(means);
    params.splines[s.column] = std::move(knots);
    for (int j = 1; j <= s.basis_dim - 1; ++j)
      params.column_names.push_back("s(" + s.column + ")." + std::to_string(j));
  }
  return params;
}

DesignMatrix apply_design(const DesignSpec& spec, const DataView& data,
                          const PreprocessParams& params, bool with_q) {
  spec.validate();
  std::size_t n = data.n_rows();
  require(n > 0, errc::shape_mismatch, "design over zero rows");

  DesignMatrix dm;
  std::size_t m = params.column_names.size();
  dm.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  dm.penalty = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                     static_cast<Eigen::Index>(m));
  std::size_t col = 0;

  if (spec.include_intercept) {
    dm.X.col(static_cast<Eigen::Index>(col)).setOnes();
    dm.blocks.push_back({"(Intercept)", col, 1, false, -1});
    col += 1;
  }

  for (const std::string& term : spec.linear_terms) {
    ColumnKind k = data.kind(term);
    if (k == ColumnKind::numeric) {
      std::vector<double> v = data.numeric_column(term);
      double mean = 0.0, sd = 1.0;
      if (spec.standardise) {
        auto it = params.numeric.find(term);
        require(it != params.numeric.end(), errc::unknown_column,
                "no preprocessing stats for '" + term + "'");
        mean = it->second.mean;
        sd = it->second.sd;
      }
      for (std::size_t i = 0; i < n; ++i)
        dm.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) =
            (v[i] - mean) / sd;
      dm.blocks.push_back({term, col, 1, false, -1});
      col += 1;
    } else if (spec.encoding_for(term) == CatEncoding::woe) {
      auto it = params.woe.find(term);
      require(it != params.woe.end(), errc::unknown_column,
              "no WOE map for '" + term + "'");
      std::vector<std::string> v = data.categorical_column(term);
      double unseen = it->second.at(kWoeUnseen);
      for (std::size_t i = 0; i < n; ++i) {
        auto hit = it->second.find(v[i]);
        dm.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) =
            hit == it->second.end() ? unseen : hit->second;
      }
      dm.blocks.push_back({term + "_woe", col, 1, false, -1});
      col += 1;
    } else {
      auto it = params.onehot_levels.find(term);
      require(it != params.onehot_levels.end(), errc::unknown_column,
              "no one-hot levels for '" + term + "'");
      const std::vector<std::string>& levels = it->second;
      std::vector<std::string> v = data.categorical_column(term);
      std::size_t width = levels.size() - 1;
      for (std::size_t l = 1; l < levels.size(); ++l) {
        for (std::size_t i = 0; i < n; ++i)
          dm.X(static_cast<Eigen::Index>(i),
               static_cast<Eigen::Index>(col + l - 1)) =
              v[i] == levels[l] ? 1.0 : 0.0;
      }
      dm.blocks.push_back({term, col, width, false, -1});
      col += width;
    }
  }

  for (std::size_t si = 0; si < spec.spline_terms.size(); ++si) {
    const SplineTerm& s = spec.spline_terms[si];
    auto it = params.splines.find(s.column);
    require(it != params.splines.end(), errc::unknown_column,
            "no spline knots for '" + s.column + "'");
    require(static_cast<int>(it->second.constraint.size()) == s.basis_dim,
            errc::bad_format, "stored spline constraint dim mismatch");
    std::vector<double> v = data.numeric_column(s.column);
    Eigen::MatrixXd Z = constraint_null_basis(it->second.constraint);
    int width = s.basis_dim - 1;
    Eigen::RowVectorXd raw(s.basis_dim);
    for (std::size_t i = 0; i < n; ++i) {
      eval_spline_row(v[i], it->second, raw.data(), s.basis_dim);
      dm.X.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col),
                 1, width) = raw * Z;
    }
    Eigen::MatrixXd S = difference_penalty(s.basis_dim, s.penalty_order);
    dm.penalty.block(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(col),
                     width, width) = Z.transpose() * S * Z;
    dm.blocks.push_back({"s(" + s.column + ")", col,
                         static_cast<std::size_t>(width), true,
                         static_cast<int>(si)});
    col += static_cast<std::size_t>(width);
  }

  require(col == m, errc::shape_mismatch,
          "design produced " + std::to_string(col) + " columns, expected " +
              std::to_string(m));
  if (with_q) thin_qr(dm.X, dm.Q, dm.R, &dm.blocks);
  return dm;
}

DesignBuild build_design(const DesignSpec& spec, const DataView& data,
                         const std::vector<std::uint8_t>* target, bool with_q,
                         double woe_smoothing) {
  DesignBuild out;
  out.params = fit_preprocess(spec, data, target, woe_smoothing);
  out.matrix = apply_design(spec, data, out.params, with_q);
  return out;
}

void thin_qr(const Eigen::MatrixXd& X, Eigen::MatrixXd& Q, Eigen::MatrixXd& R,
             const std::vector<ColumnBlock>* blocks) {
  Eigen::Index n = X.rows(), m = X.cols();
  require(n >= m, errc::rank_deficient,
          "fewer rows than design columns (" + std::to_string(n) + " x " +
              std::to_string(m) + ")");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);

  // Canonical signs: R diagonal non-negative.
  for (Eigen::Index j = 0; j < m; ++j) {
    if (R(j, j) < 0) {
      R.row(j) = -R.row(j);
      Q.col(j) = -Q.col(j);
    }
  }

  double max_diag = R.diagonal().cwiseAbs().maxCoeff();
  double tol = static_cast<double>(n) *
               std::numeric_limits<double>::epsilon() * max_diag * 16.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (std::abs(R(j, j)) <= tol) {
      std::string where = "column " + std::to_string(j);
      if (blocks) {
        for (const ColumnBlock& b : *blocks) {
          if (static_cast<std::size_t>(j) >= b.start &&
              static_cast<std::size_t>(j) < b.start + b.size)
            where = "block '" + b.name + "' (column " + std::to_string(j) + ")";
        }
      }
      fail(errc::rank_deficient, "collinear design at " + where);
    }
  }
}

Eigen::MatrixXd project_out(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& U) {
  require(Q.rows() == U.rows(), errc::shape_mismatch,
          "project_out: row mismatch " + std::to_string(Q.rows()) + " vs " +
              std::to_string(U.rows()));
  return U - Q * (Q.transpose() * U);
}

}  // namespace mstrans
