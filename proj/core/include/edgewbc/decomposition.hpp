#pragma once

#include <cstdint>
#include <vector>

#include "edgewbc/active_set.hpp"
#include "edgewbc/types.hpp"

namespace edgewbc {

// Frozen factorization of one stacked system [A_bar; C]. Building it costs
// O(n^3) (two rank-revealing QRs); re-solving for a new right-hand side via
// apply() costs O(n^2) (permutations, triangular solves, thin products).
// The factors are plain matrices so the object serializes losslessly and a
// peer can reproduce apply() bit-for-bit.
//
// Math: with A_bar^T P = Q R (rank r, Q = [Q1 Z]), a particular solution of
// A_bar y = b_bar is y_p = Q1 R11^{-T} (P^T b_bar)_{1:r}; the task rows are
// then minimized over the nullspace, z = (C Z)^+ (d - C y_p) through the
// second QR, giving y = y_p + Z z. Everything is linear in [b_bar; d].
struct Decomposition {
  int n = 0;          // decision dimension
  int m_bar = 0;      // active constraint rows
  int rank_a = 0;     // rank of A_bar
  int null_dim = 0;   // n - rank_a
  int task_rows = 0;  // rows of C
  int rank_g = 0;     // rank of C Z
  ActiveSet active;
  double build_time = 0.0;  // sim time of the state it was built from

  VecXi perm_a;  // column permutation of the A_bar^T QR
  Mat R11;       // rank_a x rank_a, upper triangular
  Mat Q1;        // n x rank_a
  Mat Z;         // n x null_dim
  Mat C;         // task_rows x n
  VecXi perm_g;  // column permutation of the (C Z) QR
  Mat Qg;        // task_rows x rank_g
  Mat Rg;        // rank_g x rank_g, upper triangular

  int rhs_size() const { return m_bar + task_rows; }

  // Minimum-residual solution for a fresh right-hand side [b_bar; d].
  // Linear in b; O(n^2). Throws DimensionMismatch on wrong-size input,
  // which is how a stale-mode right-hand side announces itself.
  Vec apply(const Vec& b) const;

  // Binary blob, schema "decomp/1": versioned header followed by dense
  // little-endian float64 factor payloads.
  std::vector<std::uint8_t> serialize() const;
  static Decomposition deserialize(const std::vector<std::uint8_t>& bytes);
  std::size_t byte_size() const { return serialize().size(); }
};

}  // namespace edgewbc
