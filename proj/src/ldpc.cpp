#include "risopt/ldpc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ris {

Alist load_alist(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_alist: cannot open " + path);
  Alist a;
  int max_col = 0, max_row = 0;
  is >> a.n >> a.m >> max_col >> max_row;
  if (!is || a.n <= 0 || a.m <= 0) throw Error("load_alist: bad header");
  std::vector<int> col_deg(a.n), row_deg(a.m);
  for (int i = 0; i < a.n; ++i) is >> col_deg[i];
  for (int i = 0; i < a.m; ++i) is >> row_deg[i];
  a.col_checks.resize(a.n);
  for (int i = 0; i < a.n; ++i) {
    for (int d = 0; d < max_col; ++d) {
      int v;
      is >> v;
      if (v > 0) a.col_checks[i].push_back(v - 1);
    }
    if (static_cast<int>(a.col_checks[i].size()) != col_deg[i])
      throw Error("load_alist: column degree mismatch");
  }
  a.row_vars.resize(a.m);
  for (int i = 0; i < a.m; ++i) {
    for (int d = 0; d < max_row; ++d) {
      int v;
      is >> v;
      if (v > 0) a.row_vars[i].push_back(v - 1);
    }
    if (static_cast<int>(a.row_vars[i].size()) != row_deg[i])
      throw Error("load_alist: row degree mismatch");
  }
  return a;
}

void save_alist(const Alist& a, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("save_alist: cannot open " + path);
  int max_col = 0, max_row = 0;
  for (const auto& c : a.col_checks) max_col = std::max<int>(max_col, c.size());
  for (const auto& r : a.row_vars) max_row = std::max<int>(max_row, r.size());
  os << a.n << ' ' << a.m << '\n' << max_col << ' ' << max_row << '\n';
  for (int i = 0; i < a.n; ++i) os << a.col_checks[i].size() << (i + 1 < a.n ? ' ' : '\n');
  for (int i = 0; i < a.m; ++i) os << a.row_vars[i].size() << (i + 1 < a.m ? ' ' : '\n');
  for (const auto& c : a.col_checks) {
    for (int d = 0; d < max_col; ++d)
      os << (d < static_cast<int>(c.size()) ? c[d] + 1 : 0) << (d + 1 < max_col ? ' ' : '\n');
  }
  for (const auto& r : a.row_vars) {
    for (int d = 0; d < max_row; ++d)
      os << (d < static_cast<int>(r.size()) ? r[d] + 1 : 0) << (d + 1 < max_row ? ' ' : '\n');
  }
}

namespace {

// Dense GF(2) rows packed into 64-bit words.
struct BitRows {
  int n_cols;
  int words;
  std::vector<std::vector<std::uint64_t>> rows;

  BitRows(int m, int n) : n_cols(n), words((n + 63) / 64), rows(m) {
    for (auto& r : rows) r.assign(words, 0);
  }
  void set(int r, int c) { rows[r][c >> 6] ^= (1ull << (c & 63)); }
  bool get(int r, int c) const { return (rows[r][c >> 6] >> (c & 63)) & 1ull; }
  void xor_rows(int dst, int src) {
    for (int w = 0; w < words; ++w) rows[dst][w] ^= rows[src][w];
  }
  bool row_empty(int r) const {
    for (auto w : rows[r])
      if (w) return false;
    return true;
  }
};

}  // namespace

LdpcCode::LdpcCode(const Alist& a) : n_(a.n), m_(a.m), row_vars_(a.row_vars) {
  // Full row reduction (RREF) to obtain a systematic encoder.
  BitRows H(m_, n_);
  for (int r = 0; r < m_; ++r)
    for (int v : a.row_vars[r]) H.set(r, v);

  std::vector<int> pivot_of_row;
  std::vector<bool> col_is_pivot(n_, false);
  int row = 0;
  for (int c = 0; c < n_ && row < m_; ++c) {
    int sel = -1;
    for (int r = row; r < m_; ++r) {
      if (H.get(r, c)) {
        sel = r;
        break;
      }
    }
    if (sel < 0) continue;
    std::swap(H.rows[row], H.rows[sel]);
    for (int r = 0; r < m_; ++r)
      if (r != row && H.get(r, c)) H.xor_rows(r, row);
    pivot_of_row.push_back(c);
    col_is_pivot[c] = true;
    ++row;
  }
  rank_ = row;
  pivot_cols_ = pivot_of_row;
  for (int c = 0; c < n_; ++c)
    if (!col_is_pivot[c]) info_cols_.push_back(c);

  std::vector<int> info_index(n_, -1);
  for (size_t i = 0; i < info_cols_.size(); ++i) info_index[info_cols_[i]] = static_cast<int>(i);
  parity_deps_.resize(rank_);
  for (int r = 0; r < rank_; ++r) {
    for (int c = 0; c < n_; ++c) {
      if (c != pivot_cols_[r] && H.get(r, c)) {
        if (info_index[c] < 0) throw Error("ldpc: RREF left a pivot dependency");
        parity_deps_[r].push_back(info_index[c]);
      }
    }
  }
}

std::vector<std::uint8_t> LdpcCode::encode(const std::vector<std::uint8_t>& message) const {
  if (static_cast<int>(message.size()) != info_length())
    throw DimensionError("ldpc encode: message length mismatch");
  std::vector<std::uint8_t> c(n_, 0);
  for (size_t i = 0; i < info_cols_.size(); ++i) c[info_cols_[i]] = message[i] & 1;
  for (int r = 0; r < rank_; ++r) {
    std::uint8_t p = 0;
    for (int idx : parity_deps_[r]) p ^= message[idx] & 1;
    c[pivot_cols_[r]] = p;
  }
  return c;
}

bool LdpcCode::is_codeword(const std::vector<std::uint8_t>& c) const {
  if (static_cast<int>(c.size()) != n_) return false;
  for (const auto& vars : row_vars_) {
    std::uint8_t s = 0;
    for (int v : vars) s ^= c[v] & 1;
    if (s) return false;
  }
  return true;
}

std::vector<double> LdpcCode::decode_app(const std::vector<double>& llr_in,
                                         int iterations) const {
  if (static_cast<int>(llr_in.size()) != n_) throw DimensionError("ldpc decode: LLR length");
  constexpr double kMsgClamp = 40.0;

  // Edge layout: per check, contiguous edges.
  std::vector<int> edge_var;
  std::vector<int> check_begin(m_ + 1, 0);
  for (int r = 0; r < m_; ++r) {
    check_begin[r + 1] = check_begin[r] + static_cast<int>(row_vars_[r].size());
    for (int v : row_vars_[r]) edge_var.push_back(v);
  }
  const int n_edges = static_cast<int>(edge_var.size());
  std::vector<double> c2v(n_edges, 0.0);
  std::vector<double> v2c(n_edges);
  std::vector<double> post(llr_in);

  for (int it = 0; it < iterations; ++it) {
    // Variable pass: v2c = posterior minus own check message.
    for (int e = 0; e < n_edges; ++e) v2c[e] = post[edge_var[e]] - c2v[e];
    // Check pass with forward/backward tanh products.
    for (int r = 0; r < m_; ++r) {
      const int b = check_begin[r];
      const int deg = check_begin[r + 1] - b;
      if (deg == 0) continue;
      static thread_local std::vector<double> fwd, bwd, t;
      fwd.resize(deg);
      bwd.resize(deg);
      t.resize(deg);
      for (int d = 0; d < deg; ++d) t[d] = std::tanh(0.5 * v2c[b + d]);
      fwd[0] = t[0];
      for (int d = 1; d < deg; ++d) fwd[d] = fwd[d - 1] * t[d];
      bwd[deg - 1] = t[deg - 1];
      for (int d = deg - 2; d >= 0; --d) bwd[d] = bwd[d + 1] * t[d];
      for (int d = 0; d < deg; ++d) {
        double prod = 1.0;
        if (d > 0) prod *= fwd[d - 1];
        if (d + 1 < deg) prod *= bwd[d + 1];
        prod = std::clamp(prod, -1.0 + 1e-15, 1.0 - 1e-15);
        c2v[b + d] = std::clamp(2.0 * std::atanh(prod), -kMsgClamp, kMsgClamp);
      }
    }
    // Posterior update.
    post = llr_in;
    for (int e = 0; e < n_edges; ++e) post[edge_var[e]] += c2v[e];
  }
  return post;
}

}  // namespace ris
