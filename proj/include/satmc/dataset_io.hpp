#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satmc/graph.hpp"

namespace satmc {

namespace fs = std::filesystem;

namespace detail {

inline std::ifstream open_or_fail(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail("format error", "missing file " + p.string());
  return in;
}

inline std::vector<std::string> split_fields(const std::string& line, char sep = '\t') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) fail("format error", "trailing characters in " + context);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail("format error", "cannot parse number '" + s + "' in " + context);
  }
}

inline int parse_int(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) fail("format error", "trailing characters in " + context);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail("format error", "cannot parse integer '" + s + "' in " + context);
  }
}

/// Shortest text form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

}  // namespace detail

/// Reads a dataset directory (manifest.json, edges.tsv, features.tsv,
/// labels.tsv). Duplicate edges collapse; self-loops are rejected.
inline AttributedGraph load_graph(const fs::path& dir) {
  using nlohmann::json;
  auto manifest_in = detail::open_or_fail(dir / "manifest.json");
  json manifest;
  try {
    manifest_in >> manifest;
  } catch (const json::exception& e) {
    fail("format error", std::string("bad manifest.json: ") + e.what());
  }
  for (const char* key : {"num_nodes", "num_features", "num_classes"})
    if (!manifest.contains(key)) fail("format error", std::string("manifest missing ") + key);

  AttributedGraph g;
  g.num_nodes = manifest["num_nodes"].get<int>();
  const int num_features = manifest["num_features"].get<int>();
  g.num_classes = manifest["num_classes"].get<int>();
  const bool sparse_features = manifest.value("sparse", false);
  if (g.num_nodes < 0 || num_features < 0 || g.num_classes < 0)
    fail("format error", "manifest counts must be non-negative");

  {
    auto in = detail::open_or_fail(dir / "edges.tsv");
    std::vector<std::pair<int, int>> edges;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = detail::split_fields(line);
      if (f.size() != 2)
        fail("format error", "edges.tsv line " + std::to_string(lineno) + ": expected 2 fields");
      const int u = detail::parse_int(f[0], "edges.tsv");
      const int v = detail::parse_int(f[1], "edges.tsv");
      if (u == v)
        fail("format error", "self-loop at edges.tsv line " + std::to_string(lineno));
      if (u < 0 || v < 0 || u >= g.num_nodes || v >= g.num_nodes)
        fail("index error", "edges.tsv line " + std::to_string(lineno) + ": node index out of range");
      edges.emplace_back(u, v);
    }
    g.adjacency = adjacency_from_edges(g.num_nodes, edges);
  }

  {
    auto in = detail::open_or_fail(dir / "features.tsv");
    g.features = Eigen::MatrixXd::Zero(g.num_nodes, num_features);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      if (row >= g.num_nodes)
        fail("format error", "features.tsv has more rows than num_nodes");
      const auto f = detail::split_fields(line);
      if (sparse_features) {
        for (const auto& pair : f) {
          if (pair.empty()) continue;
          const auto colon = pair.find(':');
          if (colon == std::string::npos)
            fail("format error", "features.tsv row " + std::to_string(row) +
                                     ": expected index:value pairs");
          const int idx = detail::parse_int(pair.substr(0, colon), "features.tsv");
          if (idx < 0 || idx >= num_features)
            fail("index error", "features.tsv row " + std::to_string(row) + ": column out of range");
          g.features(row, idx) = detail::parse_double(pair.substr(colon + 1), "features.tsv");
        }
      } else {
        if (static_cast<int>(f.size()) != num_features)
          fail("format error", "features.tsv row " + std::to_string(row) + ": expected " +
                                   std::to_string(num_features) + " values");
        for (int j = 0; j < num_features; ++j)
          g.features(row, j) = detail::parse_double(f[j], "features.tsv");
      }
      ++row;
    }
    if (row != g.num_nodes) fail("format error", "features.tsv has fewer rows than num_nodes");
  }

  {
    auto in = detail::open_or_fail(dir / "labels.tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      g.labels.push_back(detail::parse_int(line, "labels.tsv"));
    }
    if (static_cast<int>(g.labels.size()) != g.num_nodes)
      fail("format error", "labels.tsv row count must equal num_nodes");
  }

  g.validate();
  return g;
}

/// Writes a dataset directory; load_graph inverts it bit-exactly.
inline void save_graph(const AttributedGraph& g, const fs::path& dir) {
  g.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail("io error", "cannot create directory " + dir.string());

  {
    nlohmann::json manifest{{"num_nodes", g.num_nodes},
                            {"num_features", g.feature_dim()},
                            {"num_classes", g.num_classes}};
    std::ofstream out(dir / "manifest.json");
    if (!out) fail("io error", "cannot write manifest.json");
    out << manifest.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "edges.tsv");
    if (!out) fail("io error", "cannot write edges.tsv");
    for (int k = 0; k < g.adjacency.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(g.adjacency, k); it; ++it)
        if (it.row() < it.col()) out << it.row() << '\t' << it.col() << '\n';
  }
  {
    std::ofstream out(dir / "features.tsv");
    if (!out) fail("io error", "cannot write features.tsv");
    for (int i = 0; i < g.num_nodes; ++i) {
      for (int j = 0; j < g.feature_dim(); ++j) {
        if (j) out << '\t';
        out << detail::format_double(g.features(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.tsv");
    if (!out) fail("io error", "cannot write labels.tsv");
    for (int l : g.labels) out << l << '\n';
  }
}

}  // namespace satmc
