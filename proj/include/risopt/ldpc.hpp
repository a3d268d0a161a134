#pragma once

#include <string>
#include <vector>

#include "risopt/common.hpp"

namespace ris {

/// Sparse binary parity-check matrix in the standard ALIST interchange layout.
struct Alist {
  int n = 0;  // columns (variable nodes)
  int m = 0;  // rows (check nodes)
  std::vector<std::vector<int>> col_checks;  // per variable: check indices
  std::vector<std::vector<int>> row_vars;    // per check: variable indices
};

Alist load_alist(const std::string& path);
void save_alist(const Alist& a, const std::string& path);

/// Binary LDPC code with a systematic encoder derived by GF(2) row reduction.
/// Dependent rows are dropped; the reduced matrix has full row rank.
class LdpcCode {
 public:
  explicit LdpcCode(const Alist& a);

  int n() const { return n_; }
  int rank() const { return rank_; }
  int info_length() const { return n_ - rank_; }
  double rate() const { return static_cast<double>(info_length()) / n_; }
  const std::vector<int>& info_cols() const { return info_cols_; }

  /// message (info_length bits) -> codeword (n bits), H c = 0 over GF(2).
  std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& message) const;

  bool is_codeword(const std::vector<std::uint8_t>& c) const;

  /// Belief propagation (flooding sum-product). Takes channel LLRs in
  /// codeword order, returns a-posteriori LLRs.
  std::vector<double> decode_app(const std::vector<double>& llr_in, int iterations) const;

  const std::vector<std::vector<int>>& checks() const { return row_vars_; }

 private:
  int n_ = 0;
  int m_ = 0;
  int rank_ = 0;
  std::vector<std::vector<int>> row_vars_;   // original check adjacency
  std::vector<int> info_cols_;               // non-pivot columns
  std::vector<int> pivot_cols_;              // pivot column per reduced row
  // Reduced rows: for each pivot row, the info columns appearing in it.
  std::vector<std::vector<int>> parity_deps_;
};

}  // namespace ris
