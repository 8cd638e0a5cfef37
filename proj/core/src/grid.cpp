#include "ibc/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "ibc/error.hpp"
#include "ibc/model.hpp"

namespace ibc {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();
constexpr std::uint64_t kIndexLimit = std::uint64_t(1) << 62;

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kIndexLimit / a)
    throw IndexOverflow("index count exceeds the supported range");
  return a * b;
}

std::uint64_t ipow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i)
    r = checked_mul(r, base);
  return r;
}

} // namespace

MomentumGrid::MomentumGrid(const GridSpec &spec) : spec_(spec) {
  if (spec.d < 1 || spec.d > 3)
    throw ConfigError("grid dimension must be 1, 2 or 3");
  if (spec.points < 2 || spec.points % 2 != 0)
    throw ConfigError("points per axis must be an even integer >= 2");
  if (!(spec.k_max > 0.0) || !std::isfinite(spec.k_max))
    throw ConfigError("k_max must be positive and finite");
  const int P = spec.points, d = spec.d;
  h_ = 2.0 * spec.k_max / P;
  cell_ = std::pow(h_, d);
  class_size_[0] = ipow(P, d);
  class_size_[1] = ipow(P - 1, d);
  coords_.reserve(class_size_[0] + class_size_[1]);
  for (int cls = 0; cls < 2; ++cls) {
    const int per_axis = cls == 0 ? P : P - 1;
    const int lo = cls == 0 ? -(P - 1) : -(P - 2);
    for (std::size_t id = 0; id < class_size_[cls]; ++id) {
      Coord c{0, 0, 0};
      std::size_t rest = id;
      for (int a = d - 1; a >= 0; --a) {
        c[a] = lo + 2 * int(rest % per_axis);
        rest /= per_axis;
      }
      coords_.push_back(c);
    }
  }
  norm2_.resize(coords_.size());
  sup_.resize(coords_.size());
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    double s = 0.0, m = 0.0;
    for (int a = 0; a < d; ++a) {
      const double x = momentum(coords_[i][a]);
      s += x * x;
      m = std::max(m, std::abs(x));
    }
    norm2_[i] = s;
    sup_[i] = m;
  }
}

double MomentumGrid::node_norm(std::size_t id) const { return std::sqrt(norm2_[id]); }

std::ptrdiff_t MomentumGrid::locate(int cls, const Coord &c) const {
  const int P = spec_.points;
  const int per_axis = cls == 0 ? P : P - 1;
  const int lo = cls == 0 ? -(P - 1) : -(P - 2);
  std::size_t id = 0;
  for (int a = 0; a < spec_.d; ++a) {
    const int off = c[a] - lo;
    if (off < 0 || (off & 1) || off / 2 >= per_axis)
      return -1;
    id = id * per_axis + std::size_t(off / 2);
  }
  return std::ptrdiff_t(cls == 0 ? id : class_size_[0] + id);
}

std::optional<std::size_t> MomentumGrid::node_id(const Coord &c) const {
  const std::ptrdiff_t id = locate(0, c);
  if (id < 0)
    return std::nullopt;
  return std::size_t(id);
}

std::optional<std::size_t> MomentumGrid::source_id(const Coord &c) const {
  const int cls = (c[0] & 1) ? 0 : 1;
  const std::ptrdiff_t id = locate(cls, c);
  if (id < 0)
    return std::nullopt;
  return std::size_t(id);
}

std::ptrdiff_t MomentumGrid::shift(std::size_t sid, std::size_t node, int sign) const {
  const Coord &s = coords_[sid];
  const Coord &k = coords_[node];
  Coord t{s[0] + sign * k[0], s[1] + sign * k[1], s[2] + sign * k[2]};
  return locate(1 - source_class(sid), t);
}

MomentumGrid::NodeTables MomentumGrid::tables(const ModelSpec &spec) const {
  NodeTables t;
  t.vhat.resize(node_count());
  t.omega.resize(node_count());
  for (std::size_t i = 0; i < node_count(); ++i) {
    const double k = node_norm(i);
    t.vhat[i] = spec.v()(k);
    t.omega[i] = spec.omega()(k);
  }
  return t;
}

MomentumGrid build_grid(const GridSpec &spec) { return MomentumGrid(spec); }

std::uint64_t multiset_multiplicity(const std::vector<std::size_t> &sorted) {
  // n! / prod(m_v!) computed as a product of binomials to stay in range.
  std::uint64_t mult = 1;
  std::size_t placed = 0, i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i])
      ++j;
    const std::size_t m = j - i;
    // multiply by C(placed + m, m)
    std::uint64_t c = 1;
    for (std::size_t t = 1; t <= m; ++t)
      c = c * (placed + t) / t;
    mult = checked_mul(mult, c);
    placed += m;
    i = j;
  }
  return mult;
}

void SectorIndex::canonicalize() {
  std::sort(bosons.begin(), bosons.end());
  multiplicity = multiset_multiplicity(bosons);
}

std::pair<SectorIndex, std::size_t> delete_boson(const SectorIndex &idx, int j) {
  if (j < 0 || j >= idx.n())
    throw ConfigError("delete_boson: position out of range");
  SectorIndex out = idx;
  const std::size_t node = out.bosons[j];
  out.bosons.erase(out.bosons.begin() + j);
  out.canonicalize();
  return {out, node};
}

SectorIndex insert_boson(const SectorIndex &idx, std::size_t node) {
  SectorIndex out = idx;
  out.bosons.insert(std::upper_bound(out.bosons.begin(), out.bosons.end(), node), node);
  out.canonicalize();
  return out;
}

std::optional<SectorIndex> shift_source(const MomentumGrid &grid, const SectorIndex &idx, int i,
                                        const Coord &delta) {
  if (i < 0 || i >= int(idx.sources.size()))
    throw ConfigError("shift_source: source position out of range");
  const Coord &c = grid.source_coord(idx.sources[i]);
  const auto target = grid.source_id({c[0] + delta[0], c[1] + delta[1], c[2] + delta[2]});
  if (!target)
    return std::nullopt;
  SectorIndex out = idx;
  out.sources[i] = *target;
  return out;
}

BinomialTable::BinomialTable(std::size_t mmax, int jmax)
    : mmax_(mmax), jmax_(jmax), table_(mmax * (jmax + 1), 0) {
  for (std::size_t m = 0; m < mmax; ++m) {
    table_[m * (jmax + 1)] = 1;
    for (int j = 1; j <= jmax; ++j) {
      if (m == 0)
        continue;
      const std::uint64_t a = table_[(m - 1) * (jmax + 1) + j - 1];
      const std::uint64_t b = table_[(m - 1) * (jmax + 1) + j];
      table_[m * (jmax + 1) + j] = (a == kSaturated || b == kSaturated || a > kSaturated - b) ? kSaturated : a + b;
    }
  }
}

SectorBasis::SectorBasis(const MomentumGrid &grid, int M, int n, const std::optional<Coord> &total)
    : grid_(&grid), M_(M), n_(n), nodes_(grid.node_count()) {
  if (M < 1 || M > 16)
    throw ConfigError("source count must be between 1 and 16");
  if (n < 0)
    throw ConfigError("sector number must be >= 0");
  binom_ = BinomialTable(nodes_ + n + 1, n);
  ms_count_ = binom_(nodes_ + n - 1, n);
  if (ms_count_ == kSaturated || ms_count_ > kIndexLimit)
    throw IndexOverflow("multiset count exceeds the supported range");
  std::uint64_t offset = 0;
  for (unsigned mask = 0; mask < (1u << M); ++mask) {
    if (std::popcount(mask) % 2 != n % 2)
      continue;
    std::uint64_t block = 1;
    for (int i = 0; i < M; ++i)
      block = checked_mul(block, grid.class_size((mask >> (M - 1 - i)) & 1u));
    masks_.push_back(mask);
    mask_offset_.push_back(offset);
    offset += block;
    if (offset > kIndexLimit)
      throw IndexOverflow("source tuple count exceeds the supported range");
  }
  src_count_ = offset;
  const std::uint64_t full_size = checked_mul(src_count_, ms_count_);

  std::vector<std::size_t> src(M);
  std::vector<std::uint32_t> ks(n);
  if (total) {
    restricted_ = true;
    // Enumerate the first M-1 sources and the bosons; momentum conservation fixes the last source.
    const std::size_t S = grid.source_count();
    const std::uint64_t prefixes = ipow(S, M - 1);
    if (M == 1)
      ms_to_compact_.assign(ms_count_, -1);
    for (std::uint64_t pre = 0; pre < prefixes; ++pre) {
      std::uint64_t rest = pre;
      Coord q = *total;
      for (int i = M - 2; i >= 0; --i) {
        src[i] = std::size_t(rest % S);
        rest /= S;
        const Coord &c = grid.source_coord(src[i]);
        for (int a = 0; a < 3; ++a)
          q[a] -= c[a];
      }
      for (std::uint64_t r = 0; r < ms_count_; ++r) {
        multiset_unrank(r, ks.data());
        Coord p = q;
        for (int j = 0; j < n; ++j) {
          const Coord &c = grid.node_coord(ks[j]);
          for (int a = 0; a < 3; ++a)
            p[a] -= c[a];
        }
        bool zero_tail = true;
        for (int a = grid.dim(); a < 3; ++a)
          zero_tail = zero_tail && p[a] == 0;
        if (!zero_tail)
          continue;
        const auto last = grid.source_id(p);
        if (!last)
          continue;
        src[M - 1] = *last;
        const std::int64_t sr = source_rank(src.data());
        if (sr < 0)
          continue;
        full_.push_back(std::uint64_t(sr) * ms_count_ + r);
      }
    }
    std::sort(full_.begin(), full_.end());
    if (full_.size() > std::size_t(std::numeric_limits<std::int32_t>::max()))
      throw IndexOverflow("restricted sector too large");
    if (M == 1)
      for (std::size_t c = 0; c < full_.size(); ++c)
        ms_to_compact_[full_[c] % ms_count_] = std::int32_t(c);
    size_ = full_.size();
  } else {
    if (full_size > std::uint64_t(std::numeric_limits<std::ptrdiff_t>::max()))
      throw IndexOverflow("sector dimension exceeds the platform index range");
    size_ = std::size_t(full_size);
  }

  // Weights: multiplicity(K) * h^(dn); the source factor is applied by FockSpace.
  const double hn = std::pow(grid.cell_volume(), n);
  weight_.resize(Eigen::Index(size_));
  std::vector<std::size_t> kv(n);
  for (std::size_t i = 0; i < size_; ++i) {
    const std::uint64_t full = full_index(i);
    multiset_unrank(full % ms_count_, ks.data());
    for (int j = 0; j < n; ++j)
      kv[j] = ks[j];
    weight_[Eigen::Index(i)] = hn * double(multiset_multiplicity(kv));
  }
}

std::int64_t SectorBasis::source_rank(const std::size_t *sources) const {
  unsigned mask = 0;
  for (int i = 0; i < M_; ++i)
    mask = (mask << 1) | unsigned(grid_->source_class(sources[i]));
  const auto it = std::lower_bound(masks_.begin(), masks_.end(), mask);
  if (it == masks_.end() || *it != mask)
    return -1;
  std::uint64_t r = 0;
  for (int i = 0; i < M_; ++i) {
    const int cls = (mask >> (M_ - 1 - i)) & 1u;
    const std::size_t local = cls == 0 ? sources[i] : sources[i] - grid_->class_size(0);
    r = r * grid_->class_size(cls) + local;
  }
  return std::int64_t(mask_offset_[std::size_t(it - masks_.begin())] + r);
}

void SectorBasis::source_unrank(std::uint64_t rank, std::size_t *sources) const {
  const auto it = std::upper_bound(mask_offset_.begin(), mask_offset_.end(), rank) - 1;
  const std::size_t b = std::size_t(it - mask_offset_.begin());
  const unsigned mask = masks_[b];
  std::uint64_t r = rank - *it;
  for (int i = M_ - 1; i >= 0; --i) {
    const int cls = (mask >> (M_ - 1 - i)) & 1u;
    const std::size_t sz = grid_->class_size(cls);
    const std::size_t local = std::size_t(r % sz);
    r /= sz;
    sources[i] = cls == 0 ? local : grid_->class_size(0) + local;
  }
}

std::uint64_t SectorBasis::multiset_rank(const std::uint32_t *k) const {
  std::uint64_t r = 0;
  for (int j = 0; j < n_; ++j)
    r += binom_(std::size_t(k[j]) + j, j + 1);
  return r;
}

void SectorBasis::multiset_unrank(std::uint64_t rank, std::uint32_t *k) const {
  // Colex: c_j = k_j + j strictly increasing, rank = sum C(c_j, j+1).
  std::size_t hi = nodes_ + n_ - 1;
  for (int j = n_; j >= 1; --j) {
    std::size_t lo = std::size_t(j - 1), top = hi;
    while (lo + 1 < top) {
      const std::size_t mid = (lo + top) / 2;
      if (binom_(mid, j) <= rank)
        lo = mid;
      else
        top = mid;
    }
    rank -= binom_(lo, j);
    k[j - 1] = std::uint32_t(lo - std::size_t(j - 1));
    hi = lo;
  }
}

std::int64_t SectorBasis::locate_restricted(std::uint64_t src_rank, std::uint64_t ms_rank) const {
  const std::uint64_t full = src_rank * ms_count_ + ms_rank;
  if (M_ == 1) {
    const std::int32_t c = ms_to_compact_[ms_rank];
    return (c >= 0 && full_[std::size_t(c)] == full) ? c : -1;
  }
  const auto it = std::lower_bound(full_.begin(), full_.end(), full);
  if (it == full_.end() || *it != full)
    return -1;
  return std::int64_t(it - full_.begin());
}

void SectorBasis::decode(std::size_t idx, std::size_t *sources, std::uint32_t *bosons) const {
  const std::uint64_t full = full_index(idx);
  source_unrank(full / ms_count_, sources);
  multiset_unrank(full % ms_count_, bosons);
}

SectorIndex SectorBasis::index(std::size_t idx) const {
  SectorIndex s;
  s.sources.resize(M_);
  std::vector<std::uint32_t> ks(n_);
  decode(idx, s.sources.data(), ks.data());
  s.bosons.assign(ks.begin(), ks.end());
  s.multiplicity = multiset_multiplicity(s.bosons);
  return s;
}

std::optional<std::size_t> SectorBasis::find(const SectorIndex &s) const {
  if (int(s.sources.size()) != M_ || s.n() != n_)
    return std::nullopt;
  for (std::size_t src : s.sources)
    if (src >= grid_->source_count())
      return std::nullopt;
  std::vector<std::uint32_t> ks(n_);
  for (int j = 0; j < n_; ++j) {
    if (s.bosons[j] >= nodes_ || (j > 0 && s.bosons[j] < s.bosons[j - 1]))
      return std::nullopt;
    ks[j] = std::uint32_t(s.bosons[j]);
  }
  const std::int64_t sr = source_rank(s.sources.data());
  if (sr < 0)
    return std::nullopt;
  const std::int64_t c = locate(std::uint64_t(sr), multiset_rank(ks.data()));
  if (c < 0)
    return std::nullopt;
  return std::size_t(c);
}

std::uint64_t sector_dimension(const MomentumGrid &grid, int M, int n) {
  if (M < 1 || n < 0)
    throw ConfigError("sector_dimension needs M >= 1 and n >= 0");
  std::uint64_t src = 0;
  for (unsigned mask = 0; mask < (1u << M); ++mask) {
    if (std::popcount(mask) % 2 != n % 2)
      continue;
    src += checked_mul(ipow(grid.class_size(1), std::popcount(mask)),
                       ipow(grid.class_size(0), M - std::popcount(mask)));
  }
  BinomialTable b(grid.node_count() + n + 1, n);
  const std::uint64_t ms = b(grid.node_count() + n - 1, n);
  if (ms == kSaturated)
    throw IndexOverflow("multiset count exceeds the supported range");
  return checked_mul(src, ms);
}

FockSpace::FockSpace(std::shared_ptr<const MomentumGrid> grid, int M, int n_max, std::optional<Coord> total)
    : grid_(std::move(grid)), M_(M), n_max_(n_max), total_(total) {
  if (!grid_)
    throw ConfigError("FockSpace needs a grid");
  if (n_max < 0)
    throw ConfigError("n_max must be >= 0");
  src_weight_ = std::pow(grid_->cell_volume(), M) * std::ldexp(1.0, 1 - M);
  sectors_.reserve(std::size_t(n_max) + 1);
  for (int n = 0; n <= n_max; ++n)
    sectors_.emplace_back(*grid_, M, n, total_);
}

std::shared_ptr<const FockSpace> FockSpace::create(const GridSpec &spec, int M, int n_max,
                                                   std::optional<Coord> total) {
  return std::make_shared<const FockSpace>(std::make_shared<const MomentumGrid>(spec), M, n_max, total);
}

std::size_t FockSpace::dimension() const {
  std::size_t s = 0;
  for (const auto &b : sectors_)
    s += b.size();
  return s;
}

std::size_t FockSpace::offset(int n) const {
  std::size_t s = 0;
  for (int m = 0; m < n; ++m)
    s += sectors_[m].size();
  return s;
}

FockVector::FockVector(FockSpacePtr space) : space_(std::move(space)) {
  if (!space_)
    throw ConfigError("FockVector needs a space");
  sectors_.resize(std::size_t(space_->n_max()) + 1);
  for (int n = 0; n <= space_->n_max(); ++n)
    sectors_[n] = Sector::Zero(Eigen::Index(space_->sector(n).size()));
}

void FockVector::check_same(const FockVector &o) const {
  if (space_ != o.space_)
    throw ConfigError("FockVectors live on different spaces");
}

FockVector::Scalar FockVector::coefficient(const SectorIndex &s) const {
  if (s.n() > n_max())
    return 0.0;
  const auto i = space_->sector(s.n()).find(s);
  return i ? sectors_[s.n()][Eigen::Index(*i)] : Scalar(0.0);
}

void FockVector::set(const SectorIndex &s, Scalar value) {
  if (s.n() > n_max())
    throw ConfigError("sector above n_max");
  const auto i = space_->sector(s.n()).find(s);
  if (!i)
    throw ConfigError("index is not part of this Fock space");
  sectors_[s.n()][Eigen::Index(*i)] = value;
}

void FockVector::set_zero() {
  for (auto &s : sectors_)
    s.setZero();
}

FockVector &FockVector::operator+=(const FockVector &o) {
  check_same(o);
  for (std::size_t n = 0; n < sectors_.size(); ++n)
    sectors_[n] += o.sectors_[n];
  return *this;
}

FockVector &FockVector::operator-=(const FockVector &o) {
  check_same(o);
  for (std::size_t n = 0; n < sectors_.size(); ++n)
    sectors_[n] -= o.sectors_[n];
  return *this;
}

FockVector &FockVector::operator*=(Scalar a) {
  for (auto &s : sectors_)
    s *= a;
  return *this;
}

FockVector &FockVector::axpy(Scalar a, const FockVector &x) {
  check_same(x);
  for (std::size_t n = 0; n < sectors_.size(); ++n)
    sectors_[n] += a * x.sectors_[n];
  return *this;
}

Eigen::VectorXcd FockVector::flatten() const {
  Eigen::VectorXcd out(Eigen::Index(space_->dimension()));
  Eigen::Index pos = 0;
  for (const auto &s : sectors_) {
    out.segment(pos, s.size()) = s;
    pos += s.size();
  }
  return out;
}

FockVector FockVector::from_flat(FockSpacePtr space, const Eigen::VectorXcd &flat) {
  FockVector v(std::move(space));
  if (std::size_t(flat.size()) != v.space().dimension())
    throw ConfigError("flat vector has the wrong length");
  Eigen::Index pos = 0;
  for (auto &s : v.sectors_) {
    s = flat.segment(pos, s.size());
    pos += s.size();
  }
  return v;
}

FockVector operator+(FockVector a, const FockVector &b) { return a += b; }
FockVector operator-(FockVector a, const FockVector &b) { return a -= b; }
FockVector operator*(FockVector::Scalar s, FockVector a) { return a *= s; }

std::complex<double> inner(const FockVector &a, const FockVector &b) {
  if (a.space_ptr() != b.space_ptr())
    throw ConfigError("inner product of vectors on different spaces");
  std::complex<double> s = 0.0;
  for (int n = 0; n <= a.n_max(); ++n) {
    const auto &w = a.space().sector(n).weights();
    s += (a.sector(n).conjugate().cwiseProduct(w.cast<std::complex<double>>()).cwiseProduct(b.sector(n))).sum();
  }
  return a.space().source_weight() * s;
}

double sector_norm(const FockVector &v, int n) {
  const auto &w = v.space().sector(n).weights();
  return std::sqrt(v.space().source_weight() * (w.array() * v.sector(n).array().abs2()).sum());
}

double norm(const FockVector &v) {
  double s = 0.0;
  for (int n = 0; n <= v.n_max(); ++n) {
    const double x = sector_norm(v, n);
    s += x * x;
  }
  return std::sqrt(s);
}

} // namespace ibc
