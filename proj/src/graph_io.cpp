#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "maxk/detail/binary_io.hpp"
#include "maxk/graph.hpp"

namespace maxk {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Shortest decimal form that reads back to the same float.
std::string format_float(float v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

CsrGraph load_matrix_market(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw FormatError("empty Matrix Market file", 1);
  ++line_no;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate") {
    throw FormatError("expected '%%MatrixMarket matrix coordinate' banner", line_no);
  }
  field = lower(field);
  symmetry = lower(symmetry);
  const bool pattern = field == "pattern";
  if (!pattern && field != "real" && field != "integer") {
    throw FormatError("unsupported field '" + field + "'", line_no);
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw FormatError("unsupported symmetry '" + symmetry + "'", line_no);
  }
  const bool symmetric = symmetry == "symmetric";

  // Skip comments to the size line.
  std::size_t rows = 0, cols = 0, entries = 0;
  for (;;) {
    if (!std::getline(in, line)) throw FormatError("missing size line", line_no + 1);
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> entries)) throw FormatError("malformed size line", line_no);
    break;
  }
  if (rows != cols) throw FormatError("adjacency matrix must be square", line_no);

  std::vector<Edge> edges;
  edges.reserve(symmetric ? 2 * entries : entries);
  std::size_t seen = 0;
  while (seen < entries && std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream entry(line);
    long long r = 0, c = 0;
    double v = 1.0;
    if (!(entry >> r >> c) || (!pattern && !(entry >> v))) {
      throw FormatError("malformed entry", line_no);
    }
    if (r < 1 || c < 1 || static_cast<std::size_t>(r) > rows || static_cast<std::size_t>(c) > cols) {
      throw BoundsError("entry (" + std::to_string(r) + "," + std::to_string(c) + ") outside declared size " +
                        std::to_string(rows) + " at line " + std::to_string(line_no));
    }
    const auto src = static_cast<NodeId>(r - 1);
    const auto dst = static_cast<NodeId>(c - 1);
    edges.push_back({src, dst, static_cast<float>(v)});
    if (symmetric && src != dst) edges.push_back({dst, src, static_cast<float>(v)});
    ++seen;
  }
  if (seen != entries) throw FormatError("expected " + std::to_string(entries) + " entries, found " +
                                         std::to_string(seen), line_no);
  return CsrGraph::from_edges(rows, std::move(edges));
}

void save_matrix_market(const CsrGraph& g, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << g.num_nodes() << ' ' << g.num_nodes() << ' ' << g.num_edges() << '\n';
  for (std::size_t r = 0; r < g.num_nodes(); ++r) {
    const auto cols = g.row_cols(r);
    const auto vals = g.row_vals(r);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      out << r + 1 << ' ' << cols[e] + 1 << ' ' << format_float(vals[e]) << '\n';
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

CsrGraph load_edge_list_binary(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  detail::BinaryReader rd(in, path.string());
  rd.expect_magic("MXKG");
  const std::uint32_t version = rd.u32();
  if (version != 1) throw FormatError("unsupported MXKG version " + std::to_string(version));
  const std::uint64_t n = rd.u64();
  const std::uint64_t nnz = rd.u64();
  if (n > std::numeric_limits<NodeId>::max()) throw BoundsError("node count exceeds 32-bit ids");

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(nnz, 1u << 26)));
  for (std::uint64_t i = 0; i < nnz; ++i) {
    Edge e;
    e.src = rd.u32();
    e.dst = rd.u32();
    e.weight = rd.f32();
    edges.push_back(e);
  }
  return CsrGraph::from_edges(static_cast<std::size_t>(n), std::move(edges));
}

void save_edge_list_binary(const CsrGraph& g, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::binary);
  detail::BinaryWriter wr(out);
  wr.magic("MXKG");
  wr.u32(1);
  wr.u64(g.num_nodes());
  wr.u64(g.num_edges());
  for (std::size_t r = 0; r < g.num_nodes(); ++r) {
    const auto cols = g.row_cols(r);
    const auto vals = g.row_vals(r);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      wr.u32(static_cast<std::uint32_t>(r));
      wr.u32(cols[e]);
      wr.f32(vals[e]);
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

CsrGraph load_graph(const std::filesystem::path& path) {
  if (lower(path.extension().string()) == ".mtx") return load_matrix_market(path);
  return load_edge_list_binary(path);
}

}  // namespace maxk
