#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "satmc/error.hpp"

namespace satmc {

using NamedTensors = std::vector<std::pair<std::string, Eigen::MatrixXd>>;

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'T', 'M', 'C', 'P', 'T', '1'};

/// Single-file checkpoint: 8-byte magic, u64 little-endian manifest length,
/// JSON manifest [{name, rows, cols, offset}], then row-major little-endian
/// 64-bit float payloads.
inline void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  nlohmann::json manifest = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : tensors) {
    manifest.push_back({{"name", name},
                        {"rows", m.rows()},
                        {"cols", m.cols()},
                        {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  }
  const std::string header = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io error", "cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::uint64_t len = header.size();
  char len_bytes[8];
  for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<char>((len >> (8 * i)) & 0xff);
  out.write(len_bytes, 8);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, m] : tensors) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double v = m(i, j);
        char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        out.write(bytes, sizeof(double));
      }
  }
  if (!out) fail("io error", "short write to checkpoint " + path.string());
}

inline NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("format error", "missing checkpoint " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    fail("format error", "bad checkpoint magic in " + path.string());
  char len_bytes[8];
  in.read(len_bytes, 8);
  if (!in) fail("format error", "truncated checkpoint header");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(len_bytes[i])) << (8 * i);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) fail("format error", "truncated checkpoint manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    fail("format error", std::string("bad checkpoint manifest: ") + e.what());
  }

  NamedTensors tensors;
  for (const auto& entry : manifest) {
    const auto rows = entry["rows"].get<Eigen::Index>();
    const auto cols = entry["cols"].get<Eigen::Index>();
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        char bytes[sizeof(double)];
        in.read(bytes, sizeof(double));
        if (!in) fail("format error", "truncated checkpoint payload");
        double v = 0.0;
        std::memcpy(&v, bytes, sizeof(double));
        m(i, j) = v;
      }
    tensors.emplace_back(entry["name"].get<std::string>(), std::move(m));
  }
  return tensors;
}

inline const Eigen::MatrixXd* find_tensor(const NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, m] : tensors)
    if (n == name) return &m;
  return nullptr;
}

}  // namespace satmc
