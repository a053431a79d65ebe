#include "edgewbc/active_set.hpp"

#include <algorithm>

namespace edgewbc {

bool ActiveSet::contains(int row) const {
  return std::find(rows.begin(), rows.end(), row) != rows.end();
}

int active_set_discrepancy(const ActiveSet& a, const ActiveSet& b) {
  if (a.mode_id != b.mode_id) return a.size() + b.size();
  std::vector<int> sa = a.rows, sb = b.rows;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<int> sym;
  std::set_symmetric_difference(sa.begin(), sa.end(), sb.begin(), sb.end(),
                                std::back_inserter(sym));
  return static_cast<int>(sym.size());
}

}  // namespace edgewbc
