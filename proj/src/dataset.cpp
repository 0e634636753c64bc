#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "maxk/detail/binary_io.hpp"
#include "maxk/error.hpp"
#include "maxk/train.hpp"

namespace maxk {
namespace {

bool is_csv(const std::filesystem::path& path) { return path.extension() == ".csv"; }

std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw FormatError("not a number: '" + cell + "'", line_no);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError("ragged CSV row", line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void split_masks(std::size_t n, double train_fraction, double val_fraction, std::uint64_t seed,
                 std::vector<std::uint8_t>& train, std::vector<std::uint8_t>& val) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(val_fraction * static_cast<double>(n)));
  train.assign(n, 0);
  val.assign(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) train[order[i]] = 1;
  for (std::size_t i = n_train; i < n_train + n_val; ++i) val[order[i]] = 1;
}

NodeDataset make_sbm_dataset(const SbmConfig& cfg) {
  if (cfg.blocks < 1 || cfg.nodes < cfg.blocks) throw ParameterError("SBM needs 1 <= blocks <= nodes");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  NodeDataset d;
  d.labels.num_classes = cfg.blocks;
  d.labels.classes.resize(cfg.nodes);
  for (std::size_t i = 0; i < cfg.nodes; ++i) {
    d.labels.classes[i] = static_cast<std::uint32_t>(i * cfg.blocks / cfg.nodes);
  }

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < cfg.nodes; ++i) {
    for (std::size_t j = i + 1; j < cfg.nodes; ++j) {
      const double p = d.labels.classes[i] == d.labels.classes[j] ? cfg.p_in : cfg.p_out;
      if (coin(rng) < p) {
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 1.0f});
        edges.push_back({static_cast<NodeId>(j), static_cast<NodeId>(i), 1.0f});
      }
    }
  }
  d.graph = CsrGraph::from_edges(cfg.nodes, std::move(edges));

  d.features = Matrix<float>(cfg.nodes, cfg.feature_dim);
  for (std::size_t i = 0; i < cfg.nodes; ++i) {
    for (std::size_t f = 0; f < cfg.feature_dim; ++f) {
      double v = noise(rng);
      if (f % cfg.blocks == d.labels.classes[i]) v += cfg.signal;
      d.features(i, f) = static_cast<float>(v);
    }
  }
  split_masks(cfg.nodes, cfg.train_fraction, cfg.val_fraction, cfg.seed, d.train_mask, d.val_mask);
  return d;
}

Matrix<float> load_features(const std::filesystem::path& path) {
  if (is_csv(path)) {
    const auto rows = read_csv_rows(path);
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix<float> m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = static_cast<float>(rows[r][c]);
    }
    return m;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  detail::BinaryReader rd(in, path.string());
  rd.expect_magic("FEAT");
  if (const auto v = rd.u32(); v != 1) throw FormatError("unsupported FEAT version " + std::to_string(v));
  const std::uint64_t rows = rd.u64();
  const std::uint64_t cols = rd.u64();
  Matrix<float> m(rows, cols);
  for (float& v : m.flat()) v = rd.f32();
  return m;
}

void save_features(const Matrix<float>& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  if (is_csv(path)) {
    char buf[32];
    for (std::size_t r = 0; r < f.rows(); ++r) {
      for (std::size_t c = 0; c < f.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(f(r, c)));
        out << (c ? "," : "") << buf;
      }
      out << '\n';
    }
    return;
  }
  detail::BinaryWriter wr(out);
  wr.magic("FEAT");
  wr.u32(1);
  wr.u64(f.rows());
  wr.u64(f.cols());
  for (float v : f.flat()) wr.f32(v);
}

namespace {

LabelSet labels_from_table(std::size_t rows, std::size_t cols, const std::vector<std::uint32_t>& values) {
  LabelSet l;
  if (cols == 1) {
    l.classes = values;
    l.num_classes = values.empty() ? 0 : *std::max_element(values.begin(), values.end()) + 1;
    return l;
  }
  l.multi_label = true;
  l.num_classes = cols;
  l.multi_hot = Matrix<float>(rows, cols);
  for (std::size_t i = 0; i < values.size(); ++i) l.multi_hot.flat()[i] = values[i] ? 1.0f : 0.0f;
  return l;
}

}  // namespace

LabelSet load_labels(const std::filesystem::path& path) {
  if (is_csv(path)) {
    const auto rows = read_csv_rows(path);
    const std::size_t cols = rows.empty() ? 1 : rows.front().size();
    std::vector<std::uint32_t> values;
    values.reserve(rows.size() * cols);
    for (const auto& row : rows) {
      for (double v : row) {
        if (v < 0 || v != static_cast<double>(static_cast<std::uint32_t>(v))) {
          throw FormatError("labels must be non-negative integers");
        }
        values.push_back(static_cast<std::uint32_t>(v));
      }
    }
    return labels_from_table(rows.size(), cols, values);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  detail::BinaryReader rd(in, path.string());
  rd.expect_magic("LABL");
  if (const auto v = rd.u32(); v != 1) throw FormatError("unsupported LABL version " + std::to_string(v));
  const std::uint64_t rows = rd.u64();
  const std::uint64_t cols = rd.u64();
  if (cols < 1) throw FormatError("label file needs at least one column");
  std::vector<std::uint32_t> values(rows * cols);
  for (auto& v : values) v = rd.u32();
  return labels_from_table(rows, cols, values);
}

void save_labels(const LabelSet& l, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::size_t rows = l.size();
  const std::size_t cols = l.multi_label ? l.num_classes : 1;
  const auto value = [&](std::size_t r, std::size_t c) -> std::uint32_t {
    return l.multi_label ? (l.multi_hot(r, c) > 0.5f ? 1u : 0u) : l.classes[r];
  };
  if (is_csv(path)) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out << (c ? "," : "") << value(r, c);
      out << '\n';
    }
    return;
  }
  detail::BinaryWriter wr(out);
  wr.magic("LABL");
  wr.u32(1);
  wr.u64(rows);
  wr.u64(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) wr.u32(value(r, c));
  }
}

}  // namespace maxk
