#pragma once

#include <cstdint>
#include <vector>

#include "edgewbc/types.hpp"

namespace edgewbc {

// Ordered working set of constraint rows, identified by their index in the
// problem's canonical row layout (equalities first, then inequalities). The
// order matters: the stacked-system factorization and the locally rebuilt
// right-hand side must agree row for row. Equality rows are always members.
struct ActiveSet {
  std::vector<int> rows;
  std::uint32_t mode_id = 0;

  int size() const { return static_cast<int>(rows.size()); }
  bool contains(int row) const;
  bool operator==(const ActiveSet&) const = default;
};

// Cardinality of the symmetric difference between two working sets. Sets
// from different contact modes live in disjoint row universes, so every row
// of both counts.
int active_set_discrepancy(const ActiveSet& a, const ActiveSet& b);

}  // namespace edgewbc
