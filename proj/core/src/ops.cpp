#include "ibc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "ibc/error.hpp"
#include "ibc/parallel.hpp"
#include "ibc/quad.hpp"

namespace ibc {

std::string to_string(Connectivity c) {
  switch (c) {
  case Connectivity::Diagonal: return "Diagonal";
  case Connectivity::Lower: return "Lower";
  case Connectivity::Raise: return "Raise";
  case Connectivity::Tridiagonal: return "Tridiagonal";
  }
  return "?";
}

std::string to_string(DiagonalMode m) {
  return m == DiagonalMode::GridConsistent ? "GridConsistent" : "Continuum";
}

FockVector OperatorHandle::apply_adjoint(const FockVector &v) const {
  if (adjoint)
    return adjoint(v);
  if (selfadjoint_claim)
    return apply(v);
  throw ConfigError("operator '" + name + "' has no adjoint");
}

OperatorHandle identity_operator(FockSpacePtr space) {
  OperatorHandle op;
  op.apply = [](const FockVector &v) { return v; };
  op.adjoint = op.apply;
  op.selfadjoint_claim = true;
  op.space = std::move(space);
  op.name = "Id";
  return op;
}

namespace {

Connectivity combine(Connectivity a, Connectivity b) {
  if (a == b)
    return a;
  if (a == Connectivity::Diagonal)
    return b;
  if (b == Connectivity::Diagonal)
    return a;
  return Connectivity::Tridiagonal;
}

} // namespace

OperatorHandle compose(const OperatorHandle &a, const OperatorHandle &b) {
  OperatorHandle op;
  op.apply = [fa = a.apply, fb = b.apply](const FockVector &v) { return fa(fb(v)); };
  if (a.has_adjoint() && b.has_adjoint())
    op.adjoint = [a, b](const FockVector &v) { return b.apply_adjoint(a.apply_adjoint(v)); };
  if ((a.connectivity == Connectivity::Raise && b.connectivity == Connectivity::Lower) ||
      (a.connectivity == Connectivity::Lower && b.connectivity == Connectivity::Raise))
    op.connectivity = Connectivity::Tridiagonal;
  else
    op.connectivity = combine(a.connectivity, b.connectivity);
  op.model = a.model ? a.model : b.model;
  op.space = a.space;
  op.cutoff = a.cutoff;
  op.name = a.name + "*" + b.name;
  return op;
}

OperatorHandle linear_combination(std::complex<double> ca, const OperatorHandle &a, std::complex<double> cb,
                                  const OperatorHandle &b) {
  OperatorHandle op;
  op.apply = [ca, cb, fa = a.apply, fb = b.apply](const FockVector &v) {
    FockVector out = fa(v);
    out *= ca;
    out.axpy(cb, fb(v));
    return out;
  };
  if (a.has_adjoint() && b.has_adjoint())
    op.adjoint = [ca, cb, a, b](const FockVector &v) {
      FockVector out = a.apply_adjoint(v);
      out *= std::conj(ca);
      out.axpy(std::conj(cb), b.apply_adjoint(v));
      return out;
    };
  op.selfadjoint_claim = a.selfadjoint_claim && b.selfadjoint_claim && ca.imag() == 0.0 && cb.imag() == 0.0;
  op.connectivity = combine(a.connectivity, b.connectivity);
  op.model = a.model ? a.model : b.model;
  op.space = a.space;
  op.cutoff = a.cutoff;
  op.name = "(" + a.name + "+" + b.name + ")";
  return op;
}

OperatorHandle shifted(const OperatorHandle &op, double shift) {
  OperatorHandle out = op;
  out.apply = [f = op.apply, shift](const FockVector &v) {
    FockVector r = f(v);
    r.axpy(shift, v);
    return r;
  };
  if (op.adjoint)
    out.adjoint = [f = op.adjoint, shift](const FockVector &v) {
      FockVector r = f(v);
      r.axpy(shift, v);
      return r;
    };
  out.name = op.name + "+shift";
  return out;
}

// ---------------------------------------------------------------------------
// TdCache

TdCache::TdCache(ModelSpec model, double tol, double bucket_width)
    : model_(std::move(model)), tol_(tol), width_(bucket_width) {
  if (!model_.renormalisable())
    throw ConfigError("continuum diagonal needs a renormalisable model");
  if (!(tol > 0.0))
    throw ConfigError("TdCache tolerance must be positive");
  if (bucket_width < 0.0)
    throw ConfigError("bucket width must be >= 0");
}

double TdCache::direct(double p_norm, double env) const { return regularized_I(model_, p_norm, env, tol_); }

std::size_t TdCache::size() const {
  std::shared_lock lock(mutex_);
  return exact_.size() + buckets_.size();
}

double TdCache::node_value(long ip, long ie) {
  const auto key = std::make_pair(ip, ie);
  {
    std::shared_lock lock(mutex_);
    const auto it = buckets_.find(key);
    if (it != buckets_.end())
      return it->second;
  }
  const double v = direct(double(ip) * width_, double(ie) * width_);
  std::unique_lock lock(mutex_);
  buckets_[key] = v;
  return v;
}

double TdCache::value(double p_norm, double env) {
  if (width_ > 0.0) {
    const double xp = p_norm / width_, xe = env / width_;
    const long ip = long(std::floor(xp)), ie = long(std::floor(xe));
    const double tp = xp - double(ip), te = xe - double(ie);
    return (1 - tp) * (1 - te) * node_value(ip, ie) + tp * (1 - te) * node_value(ip + 1, ie) +
           (1 - tp) * te * node_value(ip, ie + 1) + tp * te * node_value(ip + 1, ie + 1);
  }
  const auto key = std::make_pair(p_norm, env);
  {
    std::shared_lock lock(mutex_);
    const auto it = exact_.find(key);
    if (it != exact_.end())
      return it->second;
  }
  const double v = direct(p_norm, env);
  std::unique_lock lock(mutex_);
  exact_[key] = v;
  return v;
}

// ---------------------------------------------------------------------------
// shared kernel context

namespace {

using Vec = Eigen::VectorXcd;

struct Context {
  Context(const ModelSpec &m, FockSpacePtr s, const Cutoff &c) : model(m), space(std::move(s)), cutoff(c) {
    if (!space)
      throw ConfigError("operator needs a Fock space");
    if (model.d() != space->grid().dim())
      throw ConfigError("model dimension does not match the grid dimension");
    if (model.M() != space->M())
      throw ConfigError("model source count does not match the Fock space");
    const MomentumGrid &grid = space->grid();
    auto tab = grid.tables(model);
    vhat = std::move(tab.vhat);
    omega = std::move(tab.omega);
    for (std::size_t k = 0; k < grid.node_count(); ++k)
      if (grid.in_cutoff(k, cutoff))
        active.push_back(k);
    chi.assign(grid.node_count(), 0);
    for (std::size_t k : active)
      chi[k] = 1;
    hd = grid.cell_volume();
    for (int n = 0; n <= space->n_max(); ++n)
      L.push_back(free_energies(model, *space, n));
  }

  const MomentumGrid &grid() const { return space->grid(); }
  int M() const { return space->M(); }
  int n_max() const { return space->n_max(); }

  ModelSpec model;
  FockSpacePtr space;
  Cutoff cutoff;
  std::vector<double> vhat, omega;
  std::vector<std::size_t> active;
  std::vector<char> chi;
  double hd = 1.0;
  std::vector<Eigen::VectorXd> L;
};

using CtxPtr = std::shared_ptr<const Context>;

// out(sector n) = scale * sqrt(n+1) h^d Σ_i Σ_k v̂(k) χ(k) in(P - e_i k, K ∪ k), in from sector n+1
void kernel_annihilate(const Context &cx, int n, const Vec &in, Vec &out, double scale) {
  const SectorBasis &bo = cx.space->sector(n);
  const SectorBasis &bi = cx.space->sector(n + 1);
  const BinomialTable &C = bi.binomials();
  const MomentumGrid &grid = cx.grid();
  const int M = cx.M();
  const double factor = scale * std::sqrt(double(n + 1)) * cx.hd;
  out.setZero(Eigen::Index(bo.size()));
  parallel_for(bo.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> src(M), tmp(M);
    std::vector<std::uint32_t> K(n);
    std::vector<std::uint64_t> pre(n + 1), suf(n + 1);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      bo.decode(idx, src.data(), K.data());
      pre[0] = 0;
      for (int t = 0; t < n; ++t)
        pre[t + 1] = pre[t] + C(std::size_t(K[t]) + t, t + 1);
      suf[n] = 0;
      for (int t = n - 1; t >= 0; --t)
        suf[t] = suf[t + 1] + C(std::size_t(K[t]) + t + 1, t + 2);
      std::complex<double> acc = 0.0;
      for (int i = 0; i < M; ++i) {
        tmp = src;
        int pos = 0;
        for (std::size_t k : cx.active) {
          while (pos < n && K[pos] <= k)
            ++pos;
          const std::ptrdiff_t s2 = grid.shift(src[i], k, -1);
          if (s2 < 0)
            continue;
          tmp[i] = std::size_t(s2);
          const std::int64_t sr = bi.source_rank(tmp.data());
          if (sr < 0)
            continue;
          const std::uint64_t msr = pre[pos] + C(k + pos, pos + 1) + suf[pos];
          const std::int64_t loc = bi.locate(std::uint64_t(sr), msr);
          if (loc >= 0)
            acc += cx.vhat[k] * in[loc];
        }
      }
      out[Eigen::Index(idx)] = factor * acc;
    }
  });
}

// out(sector n+1) = scale / sqrt(n+1) Σ_i Σ_{distinct k in K} m_k v̂(k) χ(k) in(P + e_i k, K \ k) [/ L]
void kernel_create(const Context &cx, int n, const Vec &in, Vec &out, double scale, bool divide_by_L) {
  const SectorBasis &bo = cx.space->sector(n + 1);
  const SectorBasis &bi = cx.space->sector(n);
  const BinomialTable &C = bi.binomials();
  const MomentumGrid &grid = cx.grid();
  const int M = cx.M();
  const int n1 = n + 1;
  const double factor = scale / std::sqrt(double(n1));
  const Eigen::VectorXd &Lout = cx.L[n1];
  out.setZero(Eigen::Index(bo.size()));
  parallel_for(bo.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> src(M), tmp(M);
    std::vector<std::uint32_t> K(n1);
    std::vector<std::uint64_t> pre(n1 + 1), sufdel(n1 + 1);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      bo.decode(idx, src.data(), K.data());
      pre[0] = 0;
      for (int t = 0; t < n1; ++t)
        pre[t + 1] = pre[t] + (t < n ? C(std::size_t(K[t]) + t, t + 1) : 0);
      sufdel[n1] = 0;
      for (int t = n1 - 1; t >= 1; --t)
        sufdel[t] = sufdel[t + 1] + C(std::size_t(K[t]) + t - 1, t);
      sufdel[0] = sufdel[1];
      std::complex<double> acc = 0.0;
      int j = 0;
      while (j < n1) {
        int e = j;
        while (e < n1 && K[e] == K[j])
          ++e;
        const std::size_t k = K[j];
        const int m = e - j;
        if (cx.chi[k]) {
          const std::uint64_t msr = pre[e - 1] + sufdel[e];
          for (int i = 0; i < M; ++i) {
            const std::ptrdiff_t s2 = grid.shift(src[i], k, +1);
            if (s2 < 0)
              continue;
            tmp = src;
            tmp[i] = std::size_t(s2);
            const std::int64_t sr = bi.source_rank(tmp.data());
            if (sr < 0)
              continue;
            const std::int64_t loc = bi.locate(std::uint64_t(sr), msr);
            if (loc >= 0)
              acc += double(m) * cx.vhat[k] * in[loc];
          }
        }
        j = e;
      }
      double f = factor;
      if (divide_by_L)
        f /= Lout[Eigen::Index(idx)];
      out[Eigen::Index(idx)] = f * acc;
    }
  });
}

std::uint64_t rank_sorted(const BinomialTable &C, const std::vector<std::uint32_t> &K) {
  std::uint64_t r = 0;
  for (std::size_t t = 0; t < K.size(); ++t)
    r += C(std::size_t(K[t]) + t, int(t) + 1);
  return r;
}

// Grid diagonal Σ_l Σ_k h^d v̂(k)² χ(k) / L(P - e_l k, K ∪ k) for each state of sector n < N_max.
Eigen::VectorXd grid_diagonal(const Context &cx, int n) {
  const SectorBasis &b = cx.space->sector(n);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(b.size()));
  if (n >= cx.n_max())
    return out;
  const MomentumGrid &grid = cx.grid();
  const int M = cx.M();
  parallel_for(b.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> src(M);
    std::vector<std::uint32_t> K(n);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      b.decode(idx, src.data(), K.data());
      const double L0 = cx.L[n][Eigen::Index(idx)];
      double s = 0.0;
      for (int l = 0; l < M; ++l) {
        const double pl2 = grid.source_norm2(src[l]);
        for (std::size_t k : cx.active) {
          const std::ptrdiff_t mid = grid.shift(src[l], k, -1);
          if (mid < 0)
            continue;
          const double Lmid = L0 - pl2 + grid.source_norm2(std::size_t(mid)) + cx.omega[k];
          s += cx.vhat[k] * cx.vhat[k] / Lmid;
        }
      }
      out[Eigen::Index(idx)] = cx.hd * s;
    }
  });
  return out;
}

// out(sector n) = -g² h^d Σ_l Σ_k v̂(k)/L(P - e_l k, K ∪ k) [θ + τ terms], n < N_max.
void kernel_offdiag(const Context &cx, int n, const Vec &in, Vec &out) {
  const SectorBasis &b = cx.space->sector(n);
  out.setZero(Eigen::Index(b.size()));
  if (n >= cx.n_max())
    return;
  const BinomialTable &C = b.binomials();
  const MomentumGrid &grid = cx.grid();
  const int M = cx.M();
  const double g = cx.model.g();
  const double factor = -g * g * cx.hd;
  parallel_for(b.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> src(M), tmp(M);
    std::vector<std::uint32_t> K(n), K2(n);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      b.decode(idx, src.data(), K.data());
      const double L0 = cx.L[n][Eigen::Index(idx)];
      const std::uint64_t own_rank = rank_sorted(C, K);
      std::complex<double> acc = 0.0;
      for (int l = 0; l < M; ++l) {
        const double pl2 = grid.source_norm2(src[l]);
        for (std::size_t k : cx.active) {
          const std::ptrdiff_t mid = grid.shift(src[l], k, -1);
          if (mid < 0)
            continue;
          const double w = cx.vhat[k] / (L0 - pl2 + grid.source_norm2(std::size_t(mid)) + cx.omega[k]);
          // θ: the boson k returns to a different source
          for (int i = 0; i < M; ++i) {
            if (i == l)
              continue;
            const std::ptrdiff_t si = grid.shift(src[i], k, +1);
            if (si < 0)
              continue;
            tmp = src;
            tmp[l] = std::size_t(mid);
            tmp[i] = std::size_t(si);
            const std::int64_t sr = b.source_rank(tmp.data());
            if (sr < 0)
              continue;
            const std::int64_t loc = b.locate(std::uint64_t(sr), own_rank);
            if (loc >= 0)
              acc += w * cx.vhat[k] * in[loc];
          }
          // τ: an existing boson k_j is absorbed instead, k takes its slot
          int j = 0;
          while (j < n) {
            int e = j;
            while (e < n && K[e] == K[j])
              ++e;
            const std::size_t kj = K[j];
            const int m = e - j;
            if (cx.chi[kj]) {
              K2 = K;
              K2.erase(K2.begin() + j);
              K2.insert(std::upper_bound(K2.begin(), K2.end(), std::uint32_t(k)), std::uint32_t(k));
              const std::uint64_t msr = rank_sorted(C, K2);
              for (int i = 0; i < M; ++i) {
                const std::size_t base = i == l ? std::size_t(mid) : src[i];
                const std::ptrdiff_t si = grid.shift(base, kj, +1);
                if (si < 0)
                  continue;
                tmp = src;
                tmp[l] = std::size_t(mid);
                tmp[i] = std::size_t(si);
                const std::int64_t sr = b.source_rank(tmp.data());
                if (sr < 0)
                  continue;
                const std::int64_t loc = b.locate(std::uint64_t(sr), msr);
                if (loc >= 0)
                  acc += w * double(m) * cx.vhat[kj] * in[loc];
              }
            }
            j = e;
          }
        }
      }
      out[Eigen::Index(idx)] = factor * acc;
    }
  });
}

Eigen::VectorXd continuum_diagonal(const Context &cx, int n, TdCache &cache) {
  const SectorBasis &b = cx.space->sector(n);
  const MomentumGrid &grid = cx.grid();
  const int M = cx.M();
  Eigen::VectorXd out(Eigen::Index(b.size()));
  parallel_for(
      b.size(),
      [&](std::size_t lo, std::size_t hi) {
        std::vector<std::size_t> src(M);
        std::vector<std::uint32_t> K(n);
        for (std::size_t idx = lo; idx < hi; ++idx) {
          b.decode(idx, src.data(), K.data());
          const double L0 = cx.L[n][Eigen::Index(idx)];
          double s = 0.0;
          for (int l = 0; l < M; ++l) {
            const double pl2 = grid.source_norm2(src[l]);
            s += cache.value(std::sqrt(pl2), std::max(0.0, L0 - pl2));
          }
          out[Eigen::Index(idx)] = -cx.model.g() * cx.model.g() * s;
        }
      },
      8);
  return out;
}

OperatorHandle make_handle(const CtxPtr &cx, std::string name, Connectivity conn, bool selfadjoint) {
  OperatorHandle op;
  op.model = std::make_shared<const ModelSpec>(cx->model);
  op.space = cx->space;
  op.cutoff = cx->cutoff;
  op.name = std::move(name);
  op.connectivity = conn;
  op.selfadjoint_claim = selfadjoint;
  return op;
}

void check_space(const Context &cx, const FockVector &v) {
  if (v.space_ptr() != cx.space)
    throw ConfigError("vector does not belong to the operator's Fock space");
}

FockVector do_annihilate(const Context &cx, const FockVector &v, double scale) {
  check_space(cx, v);
  FockVector out(cx.space);
  for (int n = 0; n < cx.n_max(); ++n)
    kernel_annihilate(cx, n, v.sector(n + 1), out.sector(n), scale);
  return out;
}

FockVector do_create(const Context &cx, const FockVector &v, double scale, bool divide) {
  check_space(cx, v);
  FockVector out(cx.space);
  for (int n = 0; n < cx.n_max(); ++n)
    kernel_create(cx, n, v.sector(n), out.sector(n + 1), scale, divide);
  return out;
}

// -g a L⁻¹; the n = 0 input sector is never divided.
FockVector do_G_adjoint(const Context &cx, const FockVector &v) {
  check_space(cx, v);
  FockVector out(cx.space);
  Vec tmp;
  for (int n = 0; n < cx.n_max(); ++n) {
    tmp = v.sector(n + 1).cwiseQuotient(cx.L[n + 1].cast<std::complex<double>>());
    kernel_annihilate(cx, n, tmp, out.sector(n), -cx.model.g());
  }
  return out;
}

FockVector do_multiply(const Context &cx, const FockVector &v, double eta) {
  check_space(cx, v);
  FockVector out(cx.space);
  for (int n = 0; n <= cx.n_max(); ++n) {
    const Eigen::VectorXd &L = cx.L[n];
    const Vec &in = v.sector(n);
    Vec &o = out.sector(n);
    for (Eigen::Index i = 0; i < in.size(); ++i) {
      if (eta < 0.0 && L[i] == 0.0) {
        if (in[i] != 0.0)
          throw SingularInverse("negative power of L on a state with L = 0 (sector " + std::to_string(n) + ")");
        o[i] = 0.0;
        continue;
      }
      o[i] = (eta == 0.0 ? 1.0 : eta == 1.0 ? L[i] : eta == -1.0 ? 1.0 / L[i] : std::pow(L[i], eta)) * in[i];
    }
  }
  return out;
}

FockVector do_diagonal(const Context &cx, const std::vector<Eigen::VectorXd> &diag, const FockVector &v) {
  check_space(cx, v);
  FockVector out(cx.space);
  for (int n = 0; n <= cx.n_max(); ++n)
    out.sector(n) = diag[n].cast<std::complex<double>>().cwiseProduct(v.sector(n));
  return out;
}

FockVector do_offdiag(const Context &cx, const FockVector &v) {
  check_space(cx, v);
  FockVector out(cx.space);
  for (int n = 0; n <= cx.n_max(); ++n)
    kernel_offdiag(cx, n, v.sector(n), out.sector(n));
  return out;
}

std::vector<Eigen::VectorXd> kernel_diagonal_table(const Context &cx) {
  std::vector<Eigen::VectorXd> d;
  const double g2 = cx.model.g() * cx.model.g();
  for (int n = 0; n <= cx.n_max(); ++n)
    d.push_back(-g2 * grid_diagonal(cx, n));
  return d;
}

std::vector<Eigen::VectorXd> td_table(const Context &cx, DiagonalMode mode, std::shared_ptr<TdCache> cache) {
  if (mode == DiagonalMode::Continuum) {
    if (!cx.model.renormalisable())
      throw ConfigError("Continuum diagonal mode requires a renormalisable model");
    if (!cache)
      cache = std::make_shared<TdCache>(cx.model);
    std::vector<Eigen::VectorXd> d;
    for (int n = 0; n <= cx.n_max(); ++n)
      d.push_back(continuum_diagonal(cx, n, *cache));
    return d;
  }
  auto d = kernel_diagonal_table(cx);
  const double E = grid_self_energy(cx.model, cx.grid(), cx.cutoff);
  for (auto &v : d)
    v.array() += E;
  return d;
}

} // namespace

double grid_self_energy(const ModelSpec &model, const MomentumGrid &grid, const Cutoff &cutoff) {
  if (model.d() != grid.dim())
    throw ConfigError("model dimension does not match the grid dimension");
  const auto tab = grid.tables(model);
  double s = 0.0;
  for (std::size_t k = 0; k < grid.node_count(); ++k)
    if (grid.in_cutoff(k, cutoff))
      s += tab.vhat[k] * tab.vhat[k] / (grid.node_norm2(k) + tab.omega[k]);
  return model.g() * model.g() * model.M() * grid.cell_volume() * s;
}

Eigen::VectorXd free_energies(const ModelSpec &model, const FockSpace &space, int n) {
  const SectorBasis &b = space.sector(n);
  const MomentumGrid &grid = space.grid();
  const auto tab = grid.tables(model);
  Eigen::VectorXd L(Eigen::Index(b.size()));
  const int M = space.M();
  parallel_for(b.size(), [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> src(M);
    std::vector<std::uint32_t> K(n);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      b.decode(idx, src.data(), K.data());
      double s = 0.0;
      for (int i = 0; i < M; ++i)
        s += grid.source_norm2(src[i]);
      for (int j = 0; j < n; ++j)
        s += tab.omega[K[j]];
      L[Eigen::Index(idx)] = s;
    }
  });
  return L;
}

OperatorHandle free_multiplier(const ModelSpec &model, FockSpacePtr space, double eta) {
  auto cx = std::make_shared<const Context>(model, std::move(space), Cutoff{});
  OperatorHandle op = make_handle(cx, "L^" + std::to_string(eta), Connectivity::Diagonal, true);
  op.apply = [cx, eta](const FockVector &v) { return do_multiply(*cx, v, eta); };
  return op;
}

OperatorHandle number_multiplier(FockSpacePtr space, double power) {
  OperatorHandle op;
  op.space = space;
  op.name = "N^" + std::to_string(power);
  op.selfadjoint_claim = true;
  op.apply = [space, power](const FockVector &v) {
    if (v.space_ptr() != space)
      throw ConfigError("vector does not belong to the operator's Fock space");
    FockVector out(space);
    for (int n = 0; n <= space->n_max(); ++n) {
      if (n == 0 && power < 0.0) {
        if (!v.sector(0).isZero(0.0))
          throw SingularInverse("negative power of N on the n = 0 sector");
        continue;
      }
      const double f = (n == 0 && power == 0.0) ? 1.0 : std::pow(double(n), power);
      out.sector(n) = f * v.sector(n);
    }
    return out;
  };
  return op;
}

OperatorHandle annihilation(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  OperatorHandle op = make_handle(cx, "a", Connectivity::Lower, false);
  op.apply = [cx](const FockVector &v) { return do_annihilate(*cx, v, 1.0); };
  op.adjoint = [cx](const FockVector &v) { return do_create(*cx, v, 1.0, false); };
  return op;
}

OperatorHandle creation(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  OperatorHandle op = make_handle(cx, "a*", Connectivity::Raise, false);
  op.apply = [cx](const FockVector &v) { return do_create(*cx, v, 1.0, false); };
  op.adjoint = [cx](const FockVector &v) { return do_annihilate(*cx, v, 1.0); };
  return op;
}

OperatorHandle G_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  OperatorHandle op = make_handle(cx, "G", Connectivity::Raise, false);
  op.apply = [cx](const FockVector &v) { return do_create(*cx, v, -cx->model.g(), true); };
  op.adjoint = [cx](const FockVector &v) { return do_G_adjoint(*cx, v); };
  return op;
}

OperatorHandle G_adjoint_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  OperatorHandle op = make_handle(cx, "G*", Connectivity::Lower, false);
  op.apply = [cx](const FockVector &v) { return do_G_adjoint(*cx, v); };
  op.adjoint = [cx](const FockVector &v) { return do_create(*cx, v, -cx->model.g(), true); };
  return op;
}

OperatorHandle Td_operator(const ModelSpec &model, FockSpacePtr space, DiagonalMode mode, const Cutoff &cutoff,
                           std::shared_ptr<TdCache> cache) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  auto diag = std::make_shared<const std::vector<Eigen::VectorXd>>(td_table(*cx, mode, std::move(cache)));
  OperatorHandle op = make_handle(cx, "Td[" + to_string(mode) + "]", Connectivity::Diagonal, true);
  op.apply = [cx, diag](const FockVector &v) { return do_diagonal(*cx, *diag, v); };
  return op;
}

OperatorHandle Tod_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  OperatorHandle op = make_handle(cx, "Tod", Connectivity::Diagonal, true);
  op.apply = [cx](const FockVector &v) { return do_offdiag(*cx, v); };
  return op;
}

OperatorHandle T_kernel_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  auto diag = std::make_shared<const std::vector<Eigen::VectorXd>>(kernel_diagonal_table(*cx));
  OperatorHandle op = make_handle(cx, "gaG", Connectivity::Diagonal, true);
  op.apply = [cx, diag](const FockVector &v) {
    FockVector out = do_diagonal(*cx, *diag, v);
    out += do_offdiag(*cx, v);
    return out;
  };
  return op;
}

namespace {

std::shared_ptr<const std::vector<Eigen::VectorXd>> t_diagonal(const Context &cx, DiagonalMode mode,
                                                               std::shared_ptr<TdCache> cache) {
  if (cx.model.renormalisable())
    return std::make_shared<const std::vector<Eigen::VectorXd>>(td_table(cx, mode, std::move(cache)));
  if (mode == DiagonalMode::Continuum)
    throw ConfigError("Continuum diagonal mode requires a renormalisable model");
  return std::make_shared<const std::vector<Eigen::VectorXd>>(kernel_diagonal_table(cx));
}

} // namespace

OperatorHandle T_operator(const ModelSpec &model, FockSpacePtr space, DiagonalMode mode, const Cutoff &cutoff,
                          std::shared_ptr<TdCache> cache) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  auto diag = t_diagonal(*cx, mode, std::move(cache));
  OperatorHandle op = make_handle(cx, "T", Connectivity::Diagonal, true);
  op.apply = [cx, diag](const FockVector &v) {
    FockVector out = do_diagonal(*cx, *diag, v);
    out += do_offdiag(*cx, v);
    return out;
  };
  return op;
}

OperatorHandle H_Lambda_operator(const ModelSpec &model, FockSpacePtr space, const Cutoff &cutoff) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  OperatorHandle op = make_handle(cx, "H_Lambda", Connectivity::Tridiagonal, true);
  op.apply = [cx](const FockVector &v) {
    FockVector out = do_multiply(*cx, v, 1.0);
    const double g = cx->model.g();
    if (g != 0.0) {
      out += do_annihilate(*cx, v, g);
      out += do_create(*cx, v, g, false);
    }
    return out;
  };
  return op;
}

OperatorHandle H_operator(const ModelSpec &model, FockSpacePtr space, DiagonalMode mode, const Cutoff &cutoff,
                          std::shared_ptr<TdCache> cache) {
  auto cx = std::make_shared<const Context>(model, std::move(space), cutoff);
  auto diag = t_diagonal(*cx, mode, std::move(cache));
  OperatorHandle op = make_handle(cx, "H[" + to_string(mode) + "]", Connectivity::Tridiagonal, true);
  op.apply = [cx, diag](const FockVector &v) {
    const double g = cx->model.g();
    FockVector x = v;
    x -= do_create(*cx, v, -g, true);
    FockVector y = do_multiply(*cx, x, 1.0);
    FockVector out = y;
    out -= do_G_adjoint(*cx, y);
    out += do_diagonal(*cx, *diag, v);
    out += do_offdiag(*cx, v);
    return out;
  };
  return op;
}

FockVector apply_annihilation(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi) {
  return annihilation(model, psi.space_ptr(), cutoff)(psi);
}
FockVector apply_creation(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi) {
  return creation(model, psi.space_ptr(), cutoff)(psi);
}
FockVector apply_G(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi) {
  return G_operator(model, psi.space_ptr(), cutoff)(psi);
}
FockVector apply_Td(const ModelSpec &model, DiagonalMode mode, const Cutoff &cutoff, const FockVector &psi) {
  return Td_operator(model, psi.space_ptr(), mode, cutoff)(psi);
}
FockVector apply_Tod(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi) {
  return Tod_operator(model, psi.space_ptr(), cutoff)(psi);
}
FockVector apply_H_Lambda(const ModelSpec &model, const Cutoff &cutoff, const FockVector &psi) {
  return H_Lambda_operator(model, psi.space_ptr(), cutoff)(psi);
}
FockVector apply_H(const ModelSpec &model, DiagonalMode mode, const Cutoff &cutoff, const FockVector &psi) {
  return H_operator(model, psi.space_ptr(), mode, cutoff)(psi);
}

NeumannResult neumann_inverse(const OperatorHandle &G, const FockVector &psi, int terms) {
  if (terms < 0)
    terms = psi.n_max() + 1;
  NeumannResult r{psi, 0, 0.0};
  FockVector term = psi;
  for (int j = 1; j <= terms; ++j) {
    term = G(term);
    r.x += term;
    r.terms = j;
  }
  FockVector check = r.x;
  check -= G(r.x);
  check -= psi;
  r.residual = norm(check);
  return r;
}

} // namespace ibc
