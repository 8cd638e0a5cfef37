#include "ibc/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "ibc/error.hpp"

#ifndef IBC_VERSION
#define IBC_VERSION "0.0.0"
#endif

namespace ibc {

using json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::string library_version() { return IBC_VERSION; }

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", x);
  return buf;
}

namespace {

template <class T> void put(std::ostream &os, T v) { os.write(reinterpret_cast<const char *>(&v), sizeof v); }

template <class T> T get(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof v);
  if (!is)
    throw ConfigError("truncated binary input");
  return v;
}

void expect_magic(std::istream &is, const char *magic) {
  char buf[8];
  is.read(buf, 8);
  if (!is || std::memcmp(buf, magic, 8) != 0)
    throw ConfigError(std::string("not an ") + magic + " file");
}

json grid_json(const GridSpec &g) { return {{"d", g.d}, {"points", g.points}, {"k_max", g.k_max}}; }

json model_json(const ModelSpec &m) {
  json j;
  j["name"] = m.name();
  j["d"] = m.d();
  j["M"] = m.M();
  j["g"] = m.g();
  j["form_factor"] = {{"kind", to_string(m.v().kind)}, {"alpha", m.alpha()}};
  j["dispersion"] = {{"kind", to_string(m.omega().kind)}, {"beta", m.beta()}};
  j["D"] = m.D();
  j["case"] = to_string(m.condition());
  return j;
}

json provenance_json(const Provenance &p) {
  json t = json::object();
  for (const auto &[k, v] : p.tolerances)
    t[k] = v;
  return {{"version", library_version()}, {"config", p.config_text}, {"tolerances", t}};
}

json coord_json(const Coord &c, int d) {
  json a = json::array();
  for (int i = 0; i < d; ++i)
    a.push_back(c[i]);
  return a;
}

Coord coord_from(const json &a, int d) {
  if (!a.is_array() || int(a.size()) != d)
    throw ConfigError("coordinate has the wrong length");
  Coord c{0, 0, 0};
  for (int i = 0; i < d; ++i)
    c[i] = a[i].get<int>();
  return c;
}

} // namespace

void write_csv_preamble(std::ostream &os, const Provenance &prov) {
  os << "# ibc " << library_version() << "\n";
  std::size_t start = 0;
  const std::string &t = prov.config_text;
  while (start < t.size()) {
    std::size_t end = t.find('\n', start);
    if (end == std::string::npos)
      end = t.size();
    os << "# " << t.substr(start, end - start) << "\n";
    start = end + 1;
  }
  for (const auto &[k, v] : prov.tolerances)
    os << "# tolerance " << k << " = " << format_number(v) << "\n";
}

void write_fock_binary(std::ostream &os, const FockVector &v) {
  const FockSpace &s = v.space();
  const GridSpec &g = s.grid().spec();
  os.write("IBCFOCK", 8);
  put<std::uint32_t>(os, kFockFormatVersion);
  put<std::int32_t>(os, g.d);
  put<std::int32_t>(os, g.points);
  put<double>(os, g.k_max);
  put<std::int32_t>(os, s.M());
  put<std::int32_t>(os, s.n_max());
  const auto &tot = s.total_momentum();
  put<std::uint8_t>(os, tot ? 1 : 0);
  for (int a = 0; a < 3; ++a)
    put<std::int32_t>(os, tot ? (*tot)[a] : 0);
  for (int n = 0; n <= s.n_max(); ++n) {
    const auto &sec = v.sector(n);
    std::uint64_t count = 0;
    for (Eigen::Index i = 0; i < sec.size(); ++i)
      count += sec[i] != 0.0;
    put<std::int32_t>(os, n);
    put<std::uint64_t>(os, count);
    for (Eigen::Index i = 0; i < sec.size(); ++i)
      if (sec[i] != 0.0) {
        put<std::uint64_t>(os, std::uint64_t(i));
        put<double>(os, sec[i].real());
        put<double>(os, sec[i].imag());
      }
  }
}

FockVector read_fock_binary(std::istream &is) {
  expect_magic(is, "IBCFOCK\0");
  const auto version = get<std::uint32_t>(is);
  if (version != kFockFormatVersion)
    throw ConfigError("unsupported Fock format version " + std::to_string(version));
  GridSpec g;
  g.d = get<std::int32_t>(is);
  g.points = get<std::int32_t>(is);
  g.k_max = get<double>(is);
  const int M = get<std::int32_t>(is);
  const int n_max = get<std::int32_t>(is);
  const bool has_total = get<std::uint8_t>(is) != 0;
  Coord tot{};
  for (int a = 0; a < 3; ++a)
    tot[a] = get<std::int32_t>(is);
  auto space = FockSpace::create(g, M, n_max, has_total ? std::optional<Coord>(tot) : std::nullopt);
  FockVector v(space);
  for (int s = 0; s <= n_max; ++s) {
    const int n = get<std::int32_t>(is);
    if (n != s)
      throw ConfigError("Fock file sectors out of order");
    const auto count = get<std::uint64_t>(is);
    for (std::uint64_t c = 0; c < count; ++c) {
      const auto idx = get<std::uint64_t>(is);
      const double re = get<double>(is), im = get<double>(is);
      if (idx >= std::uint64_t(v.sector(n).size()))
        throw ConfigError("Fock file index out of range");
      v.sector(n)[Eigen::Index(idx)] = {re, im};
    }
  }
  return v;
}

std::string fock_to_json(const FockVector &v) {
  const FockSpace &s = v.space();
  const MomentumGrid &grid = s.grid();
  const int d = grid.dim();
  json j;
  j["format"] = "ibc-fock";
  j["version"] = kFockFormatVersion;
  j["grid"] = grid_json(grid.spec());
  j["M"] = s.M();
  j["n_max"] = s.n_max();
  j["total_momentum"] = s.total_momentum() ? coord_json(*s.total_momentum(), d) : json(nullptr);
  j["units"] = "coordinates in units of h/2";
  json sectors = json::array();
  for (int n = 0; n <= s.n_max(); ++n) {
    json entries = json::array();
    const auto &sec = v.sector(n);
    for (Eigen::Index i = 0; i < sec.size(); ++i) {
      if (sec[i] == 0.0)
        continue;
      const SectorIndex idx = s.sector(n).index(std::size_t(i));
      json src = json::array(), bos = json::array();
      for (auto sid : idx.sources)
        src.push_back(coord_json(grid.source_coord(sid), d));
      for (auto k : idx.bosons)
        bos.push_back(coord_json(grid.node_coord(k), d));
      entries.push_back({{"sources", src}, {"bosons", bos}, {"re", sec[i].real()}, {"im", sec[i].imag()}});
    }
    sectors.push_back({{"n", n}, {"entries", entries}});
  }
  j["sectors"] = sectors;
  return j.dump(2);
}

FockVector fock_from_json(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("Fock JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "ibc-fock" || j.at("version").get<unsigned>() != kFockFormatVersion)
      throw ConfigError("not an ibc-fock JSON document of a supported version");
    GridSpec g{j.at("grid").at("d").get<int>(), j.at("grid").at("points").get<int>(),
               j.at("grid").at("k_max").get<double>()};
    std::optional<Coord> tot;
    if (!j.at("total_momentum").is_null())
      tot = coord_from(j.at("total_momentum"), g.d);
    auto space = FockSpace::create(g, j.at("M").get<int>(), j.at("n_max").get<int>(), tot);
    FockVector v(space);
    const MomentumGrid &grid = space->grid();
    for (const auto &sec : j.at("sectors")) {
      for (const auto &e : sec.at("entries")) {
        SectorIndex idx;
        for (const auto &c : e.at("sources")) {
          const auto sid = grid.source_id(coord_from(c, g.d));
          if (!sid)
            throw ConfigError("source coordinate off the grid");
          idx.sources.push_back(*sid);
        }
        for (const auto &c : e.at("bosons")) {
          const auto k = grid.node_id(coord_from(c, g.d));
          if (!k)
            throw ConfigError("boson coordinate off the grid");
          idx.bosons.push_back(*k);
        }
        idx.canonicalize();
        v.set(idx, {e.at("re").get<double>(), e.at("im").get<double>()});
      }
    }
    return v;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("Fock JSON: ") + e.what());
  }
}

void write_dense_binary(std::ostream &os, const Eigen::MatrixXd &A) {
  os.write("IBCDENSE", 8);
  put<std::uint32_t>(os, kDenseFormatVersion);
  put<std::uint64_t>(os, std::uint64_t(A.rows()));
  put<std::uint64_t>(os, std::uint64_t(A.cols()));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      put<double>(os, A(i, j));
}

Eigen::MatrixXd read_dense_binary(std::istream &is) {
  expect_magic(is, "IBCDENSE");
  const auto version = get<std::uint32_t>(is);
  if (version != kDenseFormatVersion)
    throw ConfigError("unsupported dense format version " + std::to_string(version));
  const auto rows = get<std::uint64_t>(is), cols = get<std::uint64_t>(is);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      A(i, j) = get<double>(is);
  return A;
}

void write_dense_csv(std::ostream &os, const Eigen::MatrixXd &A) {
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    os << (j ? "," : "") << "c" << j;
  os << "\n";
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      os << (j ? "," : "") << format_number(A(i, j));
    os << "\n";
  }
}

std::string operator_metadata_json(const OperatorHandle &op, std::optional<DiagonalMode> mode) {
  json j;
  j["name"] = op.name;
  j["connectivity"] = to_string(op.connectivity);
  j["selfadjoint_claim"] = op.selfadjoint_claim;
  j["cutoff"] = op.cutoff.full_grid() ? json("FullGrid") : json(op.cutoff.lambda);
  j["mode"] = mode ? json(to_string(*mode)) : json(nullptr);
  j["basis"] = "orthonormal: coefficients scaled by sqrt of the state weight";
  if (op.model)
    j["model"] = model_json(*op.model);
  if (op.space) {
    j["grid"] = grid_json(op.space->grid().spec());
    j["M"] = op.space->M();
    j["n_max"] = op.space->n_max();
    j["dimension"] = op.space->dimension();
  }
  j["version"] = library_version();
  return j.dump(2);
}

std::string grid_json_text(const GridSpec &grid) { return grid_json(grid).dump(); }

std::string provenance_json_text(const Provenance &prov) { return provenance_json(prov).dump(); }

std::string model_json_text(const ModelSpec &model) { return model_json(model).dump(2); }

std::string report_json(const RenormFlowReport &r, const Provenance &prov) {
  json j;
  j["report"] = "renorm_flow";
  j["provenance"] = provenance_json(prov);
  j["model"] = r.spec ? model_json(*r.spec) : json(r.model);
  j["grid"] = grid_json(r.grid);
  j["n_max"] = r.n_max;
  j["solver_tol"] = r.tol;
  j["lambdas"] = r.lambdas;
  j["E_grid"] = r.E_grid;
  j["E_continuum"] = r.E_continuum;
  j["probe_ids"] = r.probe_ids;
  j["resolvent_errors"] = r.errors;
  j["solver_residuals"] = r.solver_residuals;
  j["reference_residuals"] = r.reference_residuals;
  return j.dump(2);
}

void write_report_csv(std::ostream &os, const RenormFlowReport &r, const Provenance &prov) {
  write_csv_preamble(os, prov);
  os << "lambda,E_grid,E_continuum,probe,resolvent_error,solver_residual\n";
  for (std::size_t l = 0; l < r.lambdas.size(); ++l)
    for (std::size_t p = 0; p < r.probe_ids.size(); ++p)
      os << format_number(r.lambdas[l]) << "," << format_number(r.E_grid[l]) << "," << format_number(r.E_continuum[l])
         << "," << r.probe_ids[p] << "," << format_number(r.errors[l][p]) << ","
         << format_number(r.solver_residuals[l][p]) << "\n";
}

std::string report_json(const RegularityReport &r, const Provenance &prov) {
  json j;
  j["report"] = "regularity_scan";
  j["provenance"] = provenance_json(prov);
  j["model"] = r.spec ? model_json(*r.spec) : json(r.model);
  j["eta_threshold"] = r.eta_threshold;
  j["probe"] = r.probe_id;
  j["verdict_tol"] = r.tol;
  json ladder = json::array();
  for (const auto &s : r.ladder)
    ladder.push_back({{"k_max", s.k_max}, {"points", s.points}});
  j["ladder"] = ladder;
  json rows = json::array();
  for (std::size_t e = 0; e < r.etas.size(); ++e)
    rows.push_back({{"eta", r.etas[e]},
                    {"norms", r.norms[e]},
                    {"increments", r.increments[e]},
                    {"verdict", to_string(r.verdicts[e])}});
  j["scan"] = rows;
  return j.dump(2);
}

void write_report_csv(std::ostream &os, const RegularityReport &r, const Provenance &prov) {
  write_csv_preamble(os, prov);
  os << "eta,k_max,points,norm,verdict\n";
  for (std::size_t e = 0; e < r.etas.size(); ++e)
    for (std::size_t c = 0; c < r.ladder.size(); ++c)
      os << format_number(r.etas[e]) << "," << format_number(r.ladder[c].k_max) << "," << r.ladder[c].points << ","
         << format_number(r.norms[e][c]) << "," << to_string(r.verdicts[e]) << "\n";
}

void write_bounds_csv(std::ostream &os, const std::vector<BoundSample> &samples, const Provenance &prov) {
  write_csv_preamble(os, prov);
  os << "p,theta,integral,ratio,dim\n";
  for (const auto &s : samples)
    os << format_number(s.p) << "," << format_number(s.theta) << "," << format_number(s.integral) << ","
       << format_number(s.ratio) << "," << s.dim << "\n";
}

} // namespace ibc
