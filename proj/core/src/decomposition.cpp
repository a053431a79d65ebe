#include "edgewbc/decomposition.hpp"

#include <bit>
#include <cstring>

namespace edgewbc {

static_assert(std::endian::native == std::endian::little,
              "decomp/1 serialization assumes a little-endian host");

Vec Decomposition::apply(const Vec& b) const {
  if (b.size() != rhs_size())
    throw DimensionMismatch("decomposition apply: right-hand side has wrong size");

  // Particular solution of the active rows.
  Vec y = Vec::Zero(n);
  if (rank_a > 0) {
    Vec c1(rank_a);
    for (int i = 0; i < rank_a; ++i) c1[i] = b[perm_a[i]];
    const Vec u1 = R11.triangularView<Eigen::Upper>().transpose().solve(c1);
    y.noalias() = Q1 * u1;
  }

  // Task least squares over the remaining freedom.
  if (null_dim > 0 && rank_g > 0) {
    Vec rhs = b.tail(task_rows);
    rhs.noalias() -= C * y;
    const Vec w = Rg.triangularView<Eigen::Upper>().solve((Qg.transpose() * rhs).eval());
    Vec z = Vec::Zero(null_dim);
    for (int i = 0; i < rank_g; ++i) z[perm_g[i]] = w[i];
    y.noalias() += Z * z;
  }
  return y;
}

namespace {

constexpr char kMagic[8] = {'d', 'e', 'c', 'o', 'm', 'p', '/', '1'};

struct Writer {
  std::vector<std::uint8_t> out;
  void raw(const void* p, std::size_t len) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + len);
  }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void ints(const VecXi& v) {
    for (int i = 0; i < v.size(); ++i) u32(static_cast<std::uint32_t>(v[i]));
  }
  void mat(const Mat& m) { raw(m.data(), sizeof(double) * m.size()); }
};

struct Reader {
  const std::vector<std::uint8_t>& in;
  std::size_t pos = 0;
  void raw(void* p, std::size_t len) {
    if (pos + len > in.size()) throw SerializationError("decomposition blob truncated");
    std::memcpy(p, in.data() + pos, len);
    pos += len;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  VecXi ints(int count) {
    VecXi v(count);
    for (int i = 0; i < count; ++i) v[i] = static_cast<int>(u32());
    return v;
  }
  Mat mat(int rows, int cols) {
    Mat m(rows, cols);
    raw(m.data(), sizeof(double) * m.size());
    return m;
  }
};

}  // namespace

std::vector<std::uint8_t> Decomposition::serialize() const {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(m_bar));
  w.u32(static_cast<std::uint32_t>(rank_a));
  w.u32(static_cast<std::uint32_t>(null_dim));
  w.u32(static_cast<std::uint32_t>(task_rows));
  w.u32(static_cast<std::uint32_t>(rank_g));
  w.u32(active.mode_id);
  w.u32(static_cast<std::uint32_t>(active.rows.size()));
  w.f64(build_time);
  for (int id : active.rows) w.u32(static_cast<std::uint32_t>(id));
  w.ints(perm_a);
  w.ints(perm_g);
  w.mat(R11);
  w.mat(Q1);
  w.mat(Z);
  w.mat(C);
  w.mat(Qg);
  w.mat(Rg);
  return std::move(w.out);
}

Decomposition Decomposition::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw SerializationError("not a decomp/1 blob (bad magic)");

  Decomposition d;
  d.n = static_cast<int>(r.u32());
  d.m_bar = static_cast<int>(r.u32());
  d.rank_a = static_cast<int>(r.u32());
  d.null_dim = static_cast<int>(r.u32());
  d.task_rows = static_cast<int>(r.u32());
  d.rank_g = static_cast<int>(r.u32());
  d.active.mode_id = r.u32();
  const int n_active = static_cast<int>(r.u32());
  d.build_time = r.f64();
  if (d.n < 0 || d.m_bar < 0 || d.rank_a < 0 || d.rank_a > d.n || d.null_dim != d.n - d.rank_a ||
      d.task_rows < 0 || d.rank_g < 0 || d.rank_g > d.null_dim || n_active != d.m_bar)
    throw SerializationError("decomposition blob has inconsistent header");
  d.active.rows.resize(n_active);
  for (int i = 0; i < n_active; ++i) d.active.rows[i] = static_cast<int>(r.u32());
  d.perm_a = r.ints(d.m_bar);
  d.perm_g = r.ints(d.null_dim);
  d.R11 = r.mat(d.rank_a, d.rank_a);
  d.Q1 = r.mat(d.n, d.rank_a);
  d.Z = r.mat(d.n, d.null_dim);
  d.C = r.mat(d.task_rows, d.n);
  d.Qg = r.mat(d.task_rows, d.rank_g);
  d.Rg = r.mat(d.rank_g, d.rank_g);
  if (r.pos != bytes.size()) throw SerializationError("decomposition blob has trailing bytes");
  return d;
}

}  // namespace edgewbc
