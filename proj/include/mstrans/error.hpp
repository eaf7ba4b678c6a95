#pragma once

#include <stdexcept>
#include <string>

namespace mstrans {

// Error taxonomy shared by the whole library. Codes are split into two
// classes so the CLI can map them to exit codes: validation problems
// (bad inputs, schema violations) and numerical failures.
enum class errc {
  // validation
  illegal_transition,
  non_contiguous_time,
  post_absorbing_activity,
  degenerate_labels,
  unknown_column,
  shape_mismatch,
  invalid_range,
  dim_too_small,
  all_same_target,
  unknown_id,
  empty_panel,
  missing_truth,
  empty_span,
  one_class_only,
  missing_start_state,
  empty_start_state,
  subject_not_observed,
  bad_config,
  bad_format,
  // numerical
  rank_deficient,
  diverged,
  non_finite_activation,
};

inline bool is_numerical(errc c) {
  return c == errc::rank_deficient || c == errc::diverged ||
         c == errc::non_finite_activation;
}

const char* errc_name(errc c);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace mstrans
