#pragma once
#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ibc {

class ModelSpec;

struct GridSpec {
  int d = 1;
  int points = 2; //!< nodes per axis, even
  double k_max = 1.0;
};

//! Lattice coordinates in units of h/2; unused axes are zero.
using Coord = std::array<int, 3>;

//! Momentum cutoff χ_Λ. Nodes with |k|_∞ < lambda are kept.
struct Cutoff {
  double lambda = std::numeric_limits<double>::infinity();
  static Cutoff full() { return {}; }
  bool full_grid() const { return lambda == std::numeric_limits<double>::infinity(); }
};

//! Boson nodes sit on the half-offset lattice h(Z + 1/2)^d inside [-k_max, k_max]^d.
//! Source momenta live on two classes: class 0 is the boson lattice itself,
//! class 1 the integer lattice hZ^d strictly inside the box. Adding or removing
//! one boson flips the class of the source it couples to.
class MomentumGrid {
public:
  explicit MomentumGrid(const GridSpec &spec);

  const GridSpec &spec() const { return spec_; }
  int dim() const { return spec_.d; }
  int points() const { return spec_.points; }
  double k_max() const { return spec_.k_max; }
  double spacing() const { return h_; }
  double cell_volume() const { return cell_; }
  double momentum(int half_units) const { return 0.5 * h_ * half_units; }

  std::size_t node_count() const { return class_size_[0]; }
  const Coord &node_coord(std::size_t id) const { return coords_[id]; }
  double node_norm2(std::size_t id) const { return norm2_[id]; }
  double node_norm(std::size_t id) const;
  //! Largest |k_a| over axes, the quantity compared against the cutoff.
  double node_sup(std::size_t id) const { return sup_[id]; }
  bool in_cutoff(std::size_t id, const Cutoff &c) const { return sup_[id] < c.lambda; }
  std::optional<std::size_t> node_id(const Coord &c) const;

  std::size_t source_count() const { return class_size_[0] + class_size_[1]; }
  std::size_t class_size(int cls) const { return class_size_[cls]; }
  int source_class(std::size_t sid) const { return sid < class_size_[0] ? 0 : 1; }
  const Coord &source_coord(std::size_t sid) const { return coords_[sid]; }
  double source_norm2(std::size_t sid) const { return norm2_[sid]; }
  std::optional<std::size_t> source_id(const Coord &c) const;
  //! Source node s + sign*k for boson node k, or -1 off the grid.
  std::ptrdiff_t shift(std::size_t sid, std::size_t node, int sign) const;

  //! v̂ and ω at every boson node.
  struct NodeTables {
    std::vector<double> vhat;
    std::vector<double> omega;
  };
  NodeTables tables(const ModelSpec &spec) const;

private:
  std::ptrdiff_t locate(int cls, const Coord &c) const;

  GridSpec spec_;
  double h_;
  double cell_;
  std::array<std::size_t, 2> class_size_{};
  // Boson nodes first (they double as class 0 sources), then class 1 sources.
  std::vector<Coord> coords_;
  std::vector<double> norm2_;
  std::vector<double> sup_;
};

MomentumGrid build_grid(const GridSpec &spec);

//! Canonical label of a basis state: M source nodes and a sorted boson multiset.
struct SectorIndex {
  std::vector<std::size_t> sources;
  std::vector<std::size_t> bosons;
  std::uint64_t multiplicity = 1;

  int n() const { return int(bosons.size()); }
  //! Sorts bosons and recomputes the multiplicity.
  void canonicalize();
  bool operator==(const SectorIndex &o) const { return sources == o.sources && bosons == o.bosons; }
};

std::uint64_t multiset_multiplicity(const std::vector<std::size_t> &sorted);

//! Removes the boson at position j; returns the shorter index and the removed node.
std::pair<SectorIndex, std::size_t> delete_boson(const SectorIndex &idx, int j);
SectorIndex insert_boson(const SectorIndex &idx, std::size_t node);
//! Moves source i by delta (units of h/2); nullopt is the OffGrid marker.
std::optional<SectorIndex> shift_source(const MomentumGrid &grid, const SectorIndex &idx, int i,
                                        const Coord &delta);

//! Binomial coefficients C(m, j) for j <= jmax, m < mmax; throws IndexOverflow past 2^63.
class BinomialTable {
public:
  BinomialTable() = default;
  BinomialTable(std::size_t mmax, int jmax);
  std::uint64_t operator()(std::size_t m, int j) const {
    return m < mmax_ ? table_[m * (jmax_ + 1) + j] : 0;
  }

private:
  std::size_t mmax_ = 0;
  int jmax_ = 0;
  std::vector<std::uint64_t> table_;
};

//! Basis of the n-boson sector. Full index = source_rank * multiset_count + multiset_rank;
//! a total-momentum restriction keeps a sorted subset and renumbers it compactly.
class SectorBasis {
public:
  SectorBasis(const MomentumGrid &grid, int M, int n, const std::optional<Coord> &total);

  int n() const { return n_; }
  int M() const { return M_; }
  std::size_t size() const { return size_; }
  std::uint64_t source_tuple_count() const { return src_count_; }
  std::uint64_t multiset_count() const { return ms_count_; }
  bool restricted() const { return restricted_; }

  //! Rank of a source tuple, or -1 if its class vector has the wrong parity.
  std::int64_t source_rank(const std::size_t *sources) const;
  void source_unrank(std::uint64_t rank, std::size_t *sources) const;
  std::uint64_t multiset_rank(const std::uint32_t *sorted) const;
  void multiset_unrank(std::uint64_t rank, std::uint32_t *sorted) const;

  //! Compact index of (source_rank, multiset_rank) or -1 if not in this basis.
  std::int64_t locate(std::uint64_t src_rank, std::uint64_t ms_rank) const {
    if (!restricted_)
      return std::int64_t(src_rank * ms_count_ + ms_rank);
    return locate_restricted(src_rank, ms_rank);
  }
  void decode(std::size_t idx, std::size_t *sources, std::uint32_t *bosons) const;
  std::uint64_t full_index(std::size_t idx) const { return restricted_ ? full_[idx] : idx; }
  const BinomialTable &binomials() const { return binom_; }

  double weight(std::size_t idx) const { return weight_[idx]; }
  const Eigen::VectorXd &weights() const { return weight_; }

  SectorIndex index(std::size_t idx) const;
  std::optional<std::size_t> find(const SectorIndex &s) const;

private:
  std::int64_t locate_restricted(std::uint64_t src_rank, std::uint64_t ms_rank) const;

  const MomentumGrid *grid_;
  int M_;
  int n_;
  std::size_t nodes_;
  BinomialTable binom_;
  std::vector<unsigned> masks_;           // allowed class vectors, ascending
  std::vector<std::uint64_t> mask_offset_; // rank offset of each mask block
  std::uint64_t src_count_ = 0;
  std::uint64_t ms_count_ = 0;
  bool restricted_ = false;
  std::vector<std::uint64_t> full_;        // restricted: sorted full indices
  std::vector<std::int32_t> ms_to_compact_; // restricted, M = 1: multiset rank -> compact
  std::size_t size_ = 0;
  Eigen::VectorXd weight_;
};

//! (#source tuples of the sector) * C(#nodes + n - 1, n).
std::uint64_t sector_dimension(const MomentumGrid &grid, int M, int n);

class FockSpace {
public:
  FockSpace(std::shared_ptr<const MomentumGrid> grid, int M, int n_max,
            std::optional<Coord> total_momentum = std::nullopt);
  static std::shared_ptr<const FockSpace> create(const GridSpec &spec, int M, int n_max,
                                                 std::optional<Coord> total_momentum = std::nullopt);

  const MomentumGrid &grid() const { return *grid_; }
  std::shared_ptr<const MomentumGrid> grid_ptr() const { return grid_; }
  int M() const { return M_; }
  int n_max() const { return n_max_; }
  const std::optional<Coord> &total_momentum() const { return total_; }
  const SectorBasis &sector(int n) const { return sectors_[n]; }
  std::size_t dimension() const;
  std::size_t offset(int n) const;
  //! h^(dM) 2^(1-M): the source-configuration weight, identical in every sector.
  double source_weight() const { return src_weight_; }

private:
  std::shared_ptr<const MomentumGrid> grid_;
  int M_;
  int n_max_;
  std::optional<Coord> total_;
  double src_weight_;
  std::vector<SectorBasis> sectors_;
};

using FockSpacePtr = std::shared_ptr<const FockSpace>;

class FockVector {
public:
  using Scalar = std::complex<double>;
  using Sector = Eigen::VectorXcd;

  explicit FockVector(FockSpacePtr space);

  const FockSpace &space() const { return *space_; }
  const FockSpacePtr &space_ptr() const { return space_; }
  int n_max() const { return space_->n_max(); }

  Sector &sector(int n) { return sectors_[n]; }
  const Sector &sector(int n) const { return sectors_[n]; }
  Scalar coefficient(const SectorIndex &s) const;
  void set(const SectorIndex &s, Scalar value);

  void set_zero();
  FockVector zeros_like() const { return FockVector(space_); }
  FockVector &operator+=(const FockVector &o);
  FockVector &operator-=(const FockVector &o);
  FockVector &operator*=(Scalar a);
  //! this += a * x
  FockVector &axpy(Scalar a, const FockVector &x);

  Eigen::VectorXcd flatten() const;
  static FockVector from_flat(FockSpacePtr space, const Eigen::VectorXcd &flat);

private:
  void check_same(const FockVector &o) const;
  FockSpacePtr space_;
  std::vector<Sector> sectors_;
};

FockVector operator+(FockVector a, const FockVector &b);
FockVector operator-(FockVector a, const FockVector &b);
FockVector operator*(FockVector::Scalar s, FockVector a);

//! Weighted inner product, conjugate-linear in the first argument.
std::complex<double> inner(const FockVector &a, const FockVector &b);
double norm(const FockVector &v);
double sector_norm(const FockVector &v, int n);

} // namespace ibc
