#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ibc/analysis.hpp"
#include "ibc/quad.hpp"

namespace ibc {

std::string library_version();

//! Scientific notation with 12 significant digits.
std::string format_number(double x);

//! What every exported file carries besides its payload.
struct Provenance {
  std::string config_text; //!< resolved config, embedded verbatim
  std::vector<std::pair<std::string, double>> tolerances;
};

// FockVector containers. Binary layout (little endian):
//   "IBCFOCK\0", u32 version, i32 d, i32 points, f64 k_max, i32 M, i32 n_max,
//   u8 has_total, i32[3] total, then per sector: i32 n, u64 count, count x (u64 index, f64 re, f64 im).
// Only nonzero coefficients are stored.
constexpr unsigned kFockFormatVersion = 1;
void write_fock_binary(std::ostream &os, const FockVector &v);
FockVector read_fock_binary(std::istream &is);
std::string fock_to_json(const FockVector &v);
FockVector fock_from_json(const std::string &text);

// Dense matrices: "IBCDENSE", u32 version, u64 rows, u64 cols, rows*cols f64 row major.
constexpr unsigned kDenseFormatVersion = 1;
void write_dense_binary(std::ostream &os, const Eigen::MatrixXd &A);
Eigen::MatrixXd read_dense_binary(std::istream &is);
void write_dense_csv(std::ostream &os, const Eigen::MatrixXd &A);
std::string operator_metadata_json(const OperatorHandle &op, std::optional<DiagonalMode> mode = std::nullopt);

std::string model_json_text(const ModelSpec &model);
std::string grid_json_text(const GridSpec &grid);
//! {"version", "config", "tolerances"} object shared by every JSON report.
std::string provenance_json_text(const Provenance &prov);

std::string report_json(const RenormFlowReport &r, const Provenance &prov);
void write_report_csv(std::ostream &os, const RenormFlowReport &r, const Provenance &prov);
std::string report_json(const RegularityReport &r, const Provenance &prov);
void write_report_csv(std::ostream &os, const RegularityReport &r, const Provenance &prov);

//! Columns p, theta, integral, ratio, dim.
void write_bounds_csv(std::ostream &os, const std::vector<BoundSample> &samples, const Provenance &prov);

//! Writes the config as '#' comment lines.
void write_csv_preamble(std::ostream &os, const Provenance &prov);

} // namespace ibc
