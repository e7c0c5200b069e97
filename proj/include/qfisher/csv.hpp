// Deterministic CSV emission: a '#'-prefixed metadata block (tool version,
// config hash, seed) followed by a fixed header line and pre-formatted rows.
// Numbers are rendered with %.17g so files are byte-identical across runs
// and thread counts.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "qfisher/common.hpp"

namespace qfisher {

inline std::string format_double(double value) {
  if (!std::isfinite(value)) throw DomainError("format_double: non-finite value");
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// beta / L axis values where "inf" is a valid sentinel.
inline std::string format_extended(double value) {
  if (std::isinf(value) && value > 0) return "inf";
  return format_double(value);
}

inline std::uint64_t fnv1a64(const std::string &text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

struct ResultTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline void write_csv(std::ostream &out, const ResultTable &table) {
  for (const auto &[key, value] : table.metadata) out << "# " << key << ": " << value << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "");
  out << "\n";
  for (const auto &row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << row[c] << (c + 1 < row.size() ? "," : "");
    out << "\n";
  }
}

// Debug dump of a dense matrix (real and imaginary parts side by side).
template <typename Matrix>
void write_matrix_csv(std::ostream &out, const Matrix &m) {
  for (std::ptrdiff_t r = 0; r < m.rows(); ++r) {
    for (std::ptrdiff_t c = 0; c < m.cols(); ++c) {
      const std::complex<double> z = m(r, c);
      out << format_double(z.real()) << (z.imag() != 0 ? "+" + format_double(z.imag()) + "i" : "");
      out << (c + 1 < m.cols() ? "," : "");
    }
    out << "\n";
  }
}

}  // namespace qfisher
