#pragma once

#include <cstring>
#include <fstream>

#include "pe/types.hpp"

namespace pe {

// Binary matrix container used for debug dumps and checkpoints:
// 16-byte header (magic "PEXT", u32 rows, u32 cols, u32 reserved)
// followed by row-major little-endian doubles.

inline void write_pext(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SolverError("write_pext: cannot open " + path);
  const char magic[4] = {'P', 'E', 'X', 'T'};
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  const std::uint32_t reserved = 0;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * rm.size()));
  if (!out) throw SolverError("write_pext: write failed for " + path);
}

inline Matrix read_pext(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SolverError("read_pext: cannot open " + path);
  char magic[4];
  std::uint32_t rows = 0, cols = 0, reserved = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || std::memcmp(magic, "PEXT", 4) != 0)
    throw SolverError("read_pext: bad header in " + path);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  in.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(sizeof(double) * rm.size()));
  if (!in) throw SolverError("read_pext: truncated file " + path);
  return rm;
}

}  // namespace pe
