// Generates a regular (dv,dc) LDPC parity-check matrix via the configuration
// model with parallel-edge repair and greedy 4-cycle reduction, then searches
// seeds until the matrix has the full designed rank. Output is an ALIST file.
#include <algorithm>
#include <iostream>
#include <set>
#include <vector>

#include <CLI11.hpp>

#include "risopt/common.hpp"
#include "risopt/ldpc.hpp"

using namespace ris;

namespace {

Alist sample_regular(int n, int dv, int dc, std::uint64_t seed) {
  if ((n * dv) % dc != 0) throw Error("n*dv must be divisible by dc");
  const int m = n * dv / dc;
  Rng rng(seed);
  std::vector<int> stubs;
  stubs.reserve(n * dv);
  for (int v = 0; v < n; ++v)
    for (int d = 0; d < dv; ++d) stubs.push_back(v);
  for (int i = static_cast<int>(stubs.size()) - 1; i > 0; --i)
    std::swap(stubs[i], stubs[rng.index(i + 1)]);

  std::vector<std::set<int>> rows(m);
  std::vector<int> stub_row(stubs.size());
  for (size_t e = 0; e < stubs.size(); ++e) stub_row[e] = static_cast<int>(e / dc);

  // Repair parallel edges by swapping stubs.
  for (int pass = 0; pass < 200; ++pass) {
    bool clean = true;
    for (size_t e = 0; e < stubs.size(); ++e) {
      const int r = stub_row[e];
      int count = 0;
      for (size_t e2 = static_cast<size_t>(r) * dc; e2 < static_cast<size_t>(r + 1) * dc; ++e2)
        if (stubs[e2] == stubs[e]) ++count;
      if (count > 1) {
        clean = false;
        std::swap(stubs[e], stubs[rng.index(stubs.size())]);
      }
    }
    if (clean) break;
  }

  for (int r = 0; r < m; ++r)
    for (int d = 0; d < dc; ++d) rows[r].insert(stubs[static_cast<size_t>(r) * dc + d]);
  for (int r = 0; r < m; ++r)
    if (static_cast<int>(rows[r].size()) != dc) throw Error("parallel edge repair failed");

  // Greedy 4-cycle reduction: swap one endpoint of a pair sharing two checks.
  auto count_shared = [&](int r1, int r2) {
    int shared = 0;
    for (int v : rows[r1])
      if (rows[r2].count(v)) ++shared;
    return shared;
  };
  for (int pass = 0; pass < 30; ++pass) {
    bool any = false;
    for (int r1 = 0; r1 < m; ++r1) {
      for (int r2 = r1 + 1; r2 < m; ++r2) {
        if (count_shared(r1, r2) < 2) continue;
        // Move one shared variable of r2 somewhere else.
        int victim = -1;
        for (int v : rows[r1])
          if (rows[r2].count(v)) {
            victim = v;
            break;
          }
        for (int tries = 0; tries < 50; ++tries) {
          const int r3 = static_cast<int>(rng.index(m));
          if (r3 == r2 || rows[r3].count(victim)) continue;
          // Swap: take a non-conflicting variable from r3.
          int other = -1;
          for (int v : rows[r3])
            if (!rows[r2].count(v)) {
              other = v;
              break;
            }
          if (other < 0) continue;
          rows[r2].erase(victim);
          rows[r2].insert(other);
          rows[r3].erase(other);
          rows[r3].insert(victim);
          any = true;
          break;
        }
      }
    }
    if (!any) break;
  }

  Alist a;
  a.n = n;
  a.m = m;
  a.col_checks.resize(n);
  a.row_vars.resize(m);
  for (int r = 0; r < m; ++r)
    for (int v : rows[r]) {
      a.row_vars[r].push_back(v);
      a.col_checks[v].push_back(r);
    }
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regular LDPC ALIST generator"};
  int n = 1024, dv = 3, dc = 6;
  std::uint64_t seed = 1;
  std::string out = "ldpc.alist";
  app.add_option("-n", n, "codeword length");
  app.add_option("--dv", dv, "variable degree");
  app.add_option("--dc", dc, "check degree");
  app.add_option("--seed", seed, "starting seed for the rank search");
  app.add_option("-o,--out", out, "output path")->required();
  CLI11_PARSE(app, argc, argv);

  const int m = n * dv / dc;
  for (std::uint64_t s = seed; s < seed + 200; ++s) {
    Alist a = sample_regular(n, dv, dc, s);
    LdpcCode code(a);
    std::cout << "seed " << s << ": rank " << code.rank() << " / " << m << "\n";
    if (code.rank() == m) {
      save_alist(a, out);
      std::cout << "wrote " << out << " (rate " << code.rate() << ")\n";
      return 0;
    }
  }
  std::cerr << "no full-rank sample found\n";
  return 1;
}
