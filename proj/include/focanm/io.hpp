#pragma once

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "focanm/config.hpp"
#include "focanm/signal_sim.hpp"

namespace focanm {

inline constexpr const char* kSnapshotSchema = "# focanm-snapshots v1";

/// One line per snapshot: re_1,im_1,...,re_M,im_M. Geometry in a
/// "# array.omega = ..." metadata line.
inline void write_snapshots_csv(std::ostream& out, const SnapshotMatrix& y, const std::string& extra_meta = {}) {
  out << kSnapshotSchema << "\n# array.omega = " << y.geom.to_string() << "\n";
  if (!extra_meta.empty()) out << extra_meta;
  for (Eigen::Index m = 0; m < y.data.rows(); ++m) out << (m ? "," : "") << "re_" << m + 1 << ",im_" << m + 1;
  out << "\n";
  char buf[64];
  for (Eigen::Index t = 0; t < y.data.cols(); ++t) {
    for (Eigen::Index m = 0; m < y.data.rows(); ++m) {
      std::snprintf(buf, sizeof buf, "%s%.17g,%.17g", m ? "," : "", y.data(m, t).real(), y.data(m, t).imag());
      out << buf;
    }
    out << "\n";
  }
}

inline SnapshotMatrix read_snapshots_csv(std::istream& in, std::optional<ArrayGeometry> geom_override = std::nullopt) {
  std::string line;
  std::optional<ArrayGeometry> geom = std::move(geom_override);
  bool header_seen = false;
  std::vector<std::vector<cdouble>> cols;
  while (std::getline(in, line)) {
    const std::string body = KeyValueConfig::trim(line);
    if (body.empty()) continue;
    if (body[0] == '#') {
      const auto eq = body.find('=');
      if (eq != std::string::npos && KeyValueConfig::trim(body.substr(1, eq - 1)) == "array.omega" && !geom) {
        geom = parse_geometry(body.substr(eq + 1));
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto fields = split_list(body);
    if (fields.size() % 2) throw std::invalid_argument("snapshot CSV: odd number of fields");
    std::vector<cdouble> col;
    for (std::size_t i = 0; i < fields.size(); i += 2) {
      col.emplace_back(parse_double(fields[i], "snapshot CSV"), parse_double(fields[i + 1], "snapshot CSV"));
    }
    cols.push_back(std::move(col));
  }
  if (!geom) throw std::invalid_argument("snapshot CSV: no geometry (missing '# array.omega = ...')");
  if (cols.empty()) throw std::invalid_argument("snapshot CSV: no snapshots");
  CMatrix data(geom->m_elements(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t t = 0; t < cols.size(); ++t) {
    if (static_cast<Eigen::Index>(cols[t].size()) != data.rows()) throw std::invalid_argument("snapshot CSV: row width does not match geometry");
    for (Eigen::Index m = 0; m < data.rows(); ++m) data(m, static_cast<Eigen::Index>(t)) = cols[t][static_cast<std::size_t>(m)];
  }
  return SnapshotMatrix{std::move(data), *geom};
}

/// Debug dump: one matrix row per line, entries as re,im pairs.
inline void write_matrix_csv(const std::string& path, const CMatrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%s%.17g,%.17g", j ? "," : "", m(i, j).real(), m(i, j).imag());
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace focanm
