#pragma once

#include <vector>

#include "risopt/common.hpp"

namespace ris {

/// Ordered partition of users into decode groups; group 0 decodes first.
struct Grouping {
  std::vector<int> group_of;                // per user
  std::vector<std::vector<int>> members;    // per group

  int groups() const { return static_cast<int>(members.size()); }
  int users() const { return static_cast<int>(group_of.size()); }

  static Grouping single_group(int K) {
    Grouping g;
    g.group_of.assign(K, 0);
    g.members.resize(1);
    for (int k = 0; k < K; ++k) g.members[0].push_back(k);
    return g;
  }

  void validate() const {
    std::vector<int> seen(group_of.size(), 0);
    for (int t = 0; t < groups(); ++t)
      for (int k : members[t]) {
        if (group_of[k] != t) throw Error("grouping: inconsistent membership");
        ++seen[k];
      }
    for (int s : seen)
      if (s != 1) throw Error("grouping: not a disjoint cover");
  }
};

}  // namespace ris
