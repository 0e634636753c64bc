#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <variant>

#include "maxk/approx.hpp"
#include "maxk/cbsr.hpp"
#include "maxk/error.hpp"
#include "maxk/graph.hpp"
#include "maxk/kernels.hpp"
#include "maxk/partition.hpp"
#include "maxk/traffic.hpp"
#include "maxk/train.hpp"

#ifndef MAXK_VERSION
#define MAXK_VERSION "0.0.0"
#endif

namespace maxk::cli {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kToolName = "maxkgnn";

struct Common {
  std::string graph;
  std::uint32_t dim_origin = 256;
  std::uint32_t dim_k = 32;
  std::uint32_t index_bytes = 0;
  std::uint32_t w = kDefaultGroupSize;
  std::string mode = "det";
  int threads = 0;
  std::uint64_t seed = 0;
  std::size_t repeat = 5;
  std::string out;
};

struct TrafficArgs {
  std::string graph_name;
  std::uint64_t nodes = 0;
  std::uint64_t nnz = 0;
  std::string kernel = "all";
  std::string format = "csv";
  std::vector<std::string> profiled;
};

struct BenchArgs {
  std::vector<std::uint32_t> k_list;
  std::size_t nodes = 4096;
  double avg_degree = 16.0;
  double max_mem_mb = 4096.0;
};

struct TrainArgs {
  std::string features;
  std::string labels;
  std::size_t sbm_nodes = 1000;
  std::size_t sbm_blocks = 4;
  double p_in = 0.05;
  double p_out = 0.005;
  std::size_t feature_dim = 16;
  double signal = 1.0;
  std::size_t hidden = 64;
  std::size_t k = 0;
  std::size_t layers = 2;
  std::string activation = "maxk";
  std::size_t epochs = 200;
  double lr = 0.05;
  double momentum = 0.9;
  std::string loss = "auto";
  std::string normalization = "symmetric";
  bool no_self_loops = false;
};

struct ApproxArgs {
  std::vector<std::size_t> hidden_units{4, 16, 64, 256};
  std::string target = "square";
  std::string activation = "maxk";
  std::size_t epochs = 8000;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t grid_points = 101;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ExecMode parse_mode(const std::string& s) {
  if (s == "det" || s == "deterministic") return ExecMode::deterministic;
  if (s == "par" || s == "parallel") return ExecMode::parallel;
  throw ParameterError("unknown mode '" + s + "' (expected det or par)");
}

ExecOptions exec_options(const Common& c) {
  ExecOptions o;
  o.mode = parse_mode(c.mode);
  o.threads = c.threads;
  return o;
}

/// Destination for a report: the file named by --out, or the given stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
      if (!*file_) throw IoError("cannot open '" + path + "' for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

struct Metadata {
  std::string command;
  std::string timestamp;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<std::string> config;
  std::vector<std::pair<std::string, std::string>> notes;

  void write_comments(std::ostream& os) const {
    os << "# tool: " << kToolName << ' ' << MAXK_VERSION << '\n';
    os << "# command: " << command << '\n';
    os << "# timestamp: " << timestamp << '\n';
    os << "# seed: " << seed << '\n';
    os << "# threads: " << threads << '\n';
    for (const auto& line : config) os << "# config: " << line << '\n';
    for (const auto& [k, v] : notes) os << "# " << k << ": " << v << '\n';
  }

  Json to_json() const {
    Json j;
    j["tool"] = std::string(kToolName) + " " + MAXK_VERSION;
    j["command"] = command;
    j["timestamp"] = timestamp;
    j["seed"] = seed;
    j["threads"] = threads;
    j["config"] = config;
    for (const auto& [k, v] : notes) j[k] = v;
    return j;
  }
};

Metadata make_metadata(const CLI::App& app, const std::string& command, const Common& c) {
  Metadata m;
  m.command = command;
  m.timestamp = utc_timestamp();
  m.seed = c.seed;
  m.threads = omp_get_max_threads();
  std::istringstream cfg(app.config_to_str(true, false));
  std::string line;
  const std::string own = command + ".";
  while (std::getline(cfg, line)) {
    const std::string key = line.substr(0, line.find('='));
    if (line.empty() || (key.find('.') != std::string::npos && key.rfind(own, 0) != 0)) continue;
    m.config.push_back(line);
  }
  return m;
}

// A table of cells that renders identically-valued CSV, JSON and text.
using Cell = std::variant<std::string, std::uint64_t, std::int64_t, double, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  static std::string text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, std::string>) return v;
          else if constexpr (std::is_same_v<V, bool>) return v ? "true" : "false";
          else if constexpr (std::is_same_v<V, double>) return fmt_double(v);
          else return std::to_string(v);
        },
        c);
  }

  void write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << text(row[i]);
      os << '\n';
    }
  }

  void write_text(std::ostream& os) const {
    std::vector<std::size_t> width(columns.size());
    for (std::size_t i = 0; i < columns.size(); ++i) width[i] = columns[i].size();
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], text(row[i]).size());
    }
    const auto line = [&](auto&& cell_text) {
      for (std::size_t i = 0; i < columns.size(); ++i) {
        os << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << cell_text(i);
      }
      os << '\n';
    };
    line([&](std::size_t i) { return columns[i]; });
    for (const auto& row : rows) line([&](std::size_t i) { return text(row[i]); });
  }

  Json to_json() const {
    Json arr = Json::array();
    for (const auto& row : rows) {
      Json obj;
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::visit([&](const auto& v) { obj[columns[i]] = v; }, row[i]);
      }
      arr.push_back(std::move(obj));
    }
    return arr;
  }
};

void emit(const Metadata& meta, const Table& table, const std::string& format, std::ostream& os) {
  if (format == "json") {
    Json j;
    j["metadata"] = meta.to_json();
    j["rows"] = table.to_json();
    os << j.dump(2) << '\n';
    return;
  }
  meta.write_comments(os);
  if (format == "table") {
    table.write_text(os);
  } else {
    table.write_csv(os);
  }
}

std::uint32_t resolve_index_bytes(const Common& c) {
  if (c.index_bytes == 0) return static_cast<std::uint32_t>(select_index_width(c.dim_origin));
  if (c.index_bytes != 1 && c.index_bytes != 2 && c.index_bytes != 4) {
    throw ParameterError("--index-bytes must be 0 (auto), 1, 2 or 4");
  }
  return c.index_bytes;
}

CsrGraph require_graph(const Common& c, const std::string& command) {
  if (c.graph.empty()) throw ParameterError(command + " needs --graph");
  return load_graph(c.graph);
}

// partition

int cmd_partition(const CLI::App& app, const Common& c, std::ostream& out) {
  if (c.out.empty() || c.out == "-") throw ParameterError("partition needs --out for the plan file");
  const CsrGraph g = require_graph(c, "partition");
  const EdgeGroupPlan plan = build_plan(g, c.dim_k, c.w);
  save_plan(plan, c.out);

  const PlanStats s = plan_stats(plan);
  Table t{{"nodes", "nnz", "w", "dim_k", "groups", "max_group", "min_group", "mean_group", "warps_used",
           "groups_per_warp", "imbalance"},
          {}};
  t.rows.push_back({std::uint64_t{g.num_nodes()}, std::uint64_t{g.num_edges()}, std::uint64_t{c.w},
                    std::uint64_t{c.dim_k}, std::uint64_t{s.groups}, std::uint64_t{s.max_group},
                    std::uint64_t{s.min_group}, s.mean_group, std::uint64_t{s.warps_used},
                    std::uint64_t{plan.groups_per_warp()}, s.imbalance});
  Metadata meta = make_metadata(app, "partition", c);
  meta.notes.emplace_back("plan_file", c.out);
  emit(meta, t, "csv", out);
  return 0;
}

// traffic

std::vector<KernelKind> kernels_for(const std::string& name) {
  if (name == "all") return {KernelKind::spmm, KernelKind::spgemm, KernelKind::sspmm};
  if (name == "spmm") return {KernelKind::spmm};
  if (name == "spgemm") return {KernelKind::spgemm};
  if (name == "sspmm") return {KernelKind::sspmm};
  throw ParameterError("unknown kernel '" + name + "'");
}

std::map<std::string, double> parse_profiled(const std::vector<std::string>& items) {
  std::map<std::string, double> result;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParameterError("--profiled expects KERNEL=GB, got '" + item + "'");
    const std::string kernel = item.substr(0, eq);
    kernels_for(kernel);
    try {
      result[kernel] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ParameterError("--profiled value is not a number: '" + item + "'");
    }
  }
  return result;
}

int cmd_traffic(const CLI::App& app, const Common& c, const TrafficArgs& a, std::ostream& fallback) {
  if (a.format != "csv" && a.format != "json" && a.format != "table") {
    throw ParameterError("--format must be csv, json or table");
  }
  TrafficParams p;
  std::string source;
  if (!a.graph_name.empty()) {
    const auto stats = find_graph_stats(a.graph_name);
    if (!stats) throw ParameterError("unknown graph name '" + a.graph_name + "'");
    p.num_nodes = stats->nodes;
    p.nnz = stats->edges;
    source = std::string(stats->name);
  } else if (!c.graph.empty()) {
    const CsrGraph g = load_graph(c.graph);
    p.num_nodes = g.num_nodes();
    p.nnz = g.num_edges();
    p.edge_groups = build_plan(g, c.dim_k, c.w).groups().size();
    source = c.graph;
  } else if (a.nodes > 0) {
    p.num_nodes = a.nodes;
    p.nnz = a.nnz;
    source = "custom";
  } else {
    throw ParameterError("traffic needs --graph-name, --graph, or --nodes/--nnz");
  }
  p.dim_origin = c.dim_origin;
  p.dim_k = c.dim_k;
  p.index_bytes = resolve_index_bytes(c);
  p.w = c.w;
  const auto profiled = parse_profiled(a.profiled);

  Table t{{"graph", "kernel", "nodes", "nnz", "dim_origin", "dim_k", "index_bytes", "w", "read_bytes",
           "write_bytes", "atomic_ops", "atomic_ops_closed_form", "baseline_read_bytes", "baseline_write_bytes",
           "reduction_pct", "status"},
          {}};
  if (!profiled.empty()) {
    t.columns.push_back("profiled_gb");
    t.columns.push_back("model_over_profiled");
  }
  for (KernelKind k : kernels_for(a.kernel)) {
    const TrafficReport r = traffic_for(k, p);
    const std::string status = k == KernelKind::spmm ? "baseline" : r.no_benefit() ? "no benefit" : "ok";
    std::vector<Cell> row{source,
                          std::string(to_string(k)),
                          p.num_nodes,
                          p.nnz,
                          std::uint64_t{p.dim_origin},
                          std::uint64_t{p.dim_k},
                          std::uint64_t{p.index_bytes},
                          std::uint64_t{p.w},
                          r.read_bytes,
                          r.write_bytes,
                          r.atomic_ops,
                          r.atomic_ops_closed_form,
                          r.baseline_read_bytes,
                          r.baseline_write_bytes,
                          r.reduction_vs_spmm_pct,
                          status};
    if (!profiled.empty()) {
      const auto it = profiled.find(std::string(to_string(k)));
      if (it != profiled.end()) {
        row.emplace_back(it->second);
        row.emplace_back(static_cast<double>(r.read_bytes) / (it->second * 1e9));
      } else {
        row.emplace_back(std::string());
        row.emplace_back(std::string());
      }
    }
    t.rows.push_back(std::move(row));
  }

  Metadata meta = make_metadata(app, "traffic", c);
  meta.notes.emplace_back("caveat", std::string(kCacheCaveat));
  Sink sink(c.out, fallback);
  emit(meta, t, a.format, sink.get());
  return 0;
}

// bench

constexpr std::uint32_t kSweep[] = {2, 4, 8, 16, 32, 64, 96, 128, 192};

CsrGraph random_graph(std::size_t n, double avg_degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> col(0, static_cast<NodeId>(n - 1));
  std::uniform_real_distribution<float> weight(0.0f, 1.0f);
  std::poisson_distribution<std::size_t> degree(avg_degree);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(avg_degree * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = degree(rng);
    for (std::size_t e = 0; e < d; ++e) edges.push_back({static_cast<NodeId>(i), col(rng), weight(rng)});
  }
  return CsrGraph::from_edges(n, std::move(edges));
}

Matrix<float> random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  Matrix<float> m(rows, cols);
  for (float& v : m.flat()) v = nd(rng);
  return m;
}

template <typename F>
std::pair<double, double> time_runs(std::size_t repeat, F&& f) {
  using clock = std::chrono::steady_clock;
  double total = 0.0, best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < repeat; ++r) {
    const auto start = clock::now();
    f();
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    total += ms;
    best = std::min(best, ms);
  }
  return {total / static_cast<double>(repeat), best};
}

double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

int cmd_bench(const CLI::App& app, const Common& c, const BenchArgs& a, std::ostream& fallback) {
  if (c.repeat < 1) throw ParameterError("--repeat must be >= 1");
  const CsrGraph g = c.graph.empty() ? random_graph(a.nodes, a.avg_degree, c.seed) : load_graph(c.graph);
  const std::size_t n = g.num_nodes();
  if (n == 0) throw ParameterError("bench needs a non-empty graph");

  const double needed_mb =
      (3.0 * 4.0 * static_cast<double>(n) * c.dim_origin + 12.0 * static_cast<double>(g.num_edges())) / (1 << 20);
  if (needed_mb > a.max_mem_mb) {
    std::ostringstream msg;
    msg << "bench would need about " << std::fixed << std::setprecision(0) << needed_mb
        << " MiB, above the --max-mem-mb guard of " << a.max_mem_mb;
    throw ParameterError(msg.str());
  }

  std::vector<std::uint32_t> ks = a.k_list;
  if (ks.empty()) {
    for (std::uint32_t k : kSweep) {
      if (k <= c.dim_origin) ks.push_back(k);
    }
  }
  for (std::uint32_t k : ks) {
    if (k < 1 || k > c.dim_origin) throw ParameterError("every k must be in [1, dim_origin]");
  }
  const std::uint32_t ib = resolve_index_bytes(c);
  const IndexWidth width = static_cast<IndexWidth>(ib);
  ExecOptions exec = exec_options(c);

  std::mt19937_64 rng(c.seed);
  const Matrix<float> x = random_matrix(n, c.dim_origin, rng);
  const Matrix<float> dxl = random_matrix(n, c.dim_origin, rng);

  Table t{{"kernel", "k", "index_bytes", "repeat", "mean_ms", "min_ms", "read_bytes", "write_bytes", "atomic_ops",
           "model_read_bytes", "model_write_bytes", "model_atomic_ops", "traffic_match", "reduction_pct",
           "speedup_vs_spmm", "max_abs_err"},
          {}};
  bool all_ok = true;

  const auto [spmm_mean, spmm_min] = time_runs(c.repeat, [&] { (void)dense_spmm(g, x); });
  TrafficCounter spmm_count;
  (void)dense_spmm(g, x, &spmm_count);
  TrafficParams base;
  base.num_nodes = n;
  base.nnz = g.num_edges();
  base.dim_origin = c.dim_origin;
  base.index_bytes = ib;
  base.w = c.w;
  {
    TrafficParams p = base;
    p.dim_k = c.dim_origin;
    const TrafficReport model = traffic_spmm(p);
    t.rows.push_back({std::string("spmm"), std::uint64_t{c.dim_origin}, std::uint64_t{0}, std::uint64_t{c.repeat},
                      spmm_mean, spmm_min, spmm_count.read_bytes, spmm_count.write_bytes, spmm_count.atomic_ops,
                      model.read_bytes, std::string(), std::string(), model.read_bytes == spmm_count.read_bytes,
                      0.0, 1.0, 0.0});
    all_ok = all_ok && model.read_bytes == spmm_count.read_bytes;
  }

  bool sanity = true;
  const Matrix<float> dense_t = dense_spmm_transpose(g, dxl);
  for (std::uint32_t k : ks) {
    const CbsrMatrix xs = maxk_forward(x, k, width).cbsr;
    const EdgeGroupPlan plan = build_plan(g, k, c.w);
    TrafficParams p = base;
    p.dim_k = k;
    p.edge_groups = plan.groups().size();

    if (k == ks.front()) {
      const CsrGraph eye = identity_graph(n);
      sanity = spgemm_forward(eye, xs, build_plan(eye, k, c.w), exec) == densify(xs);
    }

    Matrix<float> y;
    const auto [fwd_mean, fwd_min] = time_runs(c.repeat, [&] { y = spgemm_forward(g, xs, plan, exec); });
    TrafficCounter fwd_count;
    ExecOptions counted = exec;
    counted.counter = &fwd_count;
    (void)spgemm_forward(g, xs, plan, counted);
    const TrafficReport fwd_model = traffic_spgemm_forward(p);
    const bool fwd_match = fwd_count.read_bytes == fwd_model.read_bytes &&
                           fwd_count.write_bytes == fwd_model.write_bytes &&
                           fwd_count.atomic_ops == fwd_model.atomic_ops;
    const double fwd_err = max_abs_diff(y.flat(), dense_spmm(g, densify(xs)).flat());
    t.rows.push_back({std::string("spgemm"), std::uint64_t{k}, std::uint64_t{ib}, std::uint64_t{c.repeat}, fwd_mean,
                      fwd_min, fwd_count.read_bytes, fwd_count.write_bytes, fwd_count.atomic_ops,
                      fwd_model.read_bytes, fwd_model.write_bytes, fwd_model.atomic_ops, fwd_match,
                      fwd_model.reduction_vs_spmm_pct, spmm_mean / fwd_mean, fwd_err});

    CbsrMatrix dx;
    const auto [bwd_mean, bwd_min] = time_runs(c.repeat, [&] { dx = sspmm_backward(g, dxl, xs, plan, exec); });
    TrafficCounter bwd_count;
    counted.counter = &bwd_count;
    (void)sspmm_backward(g, dxl, xs, plan, counted);
    const TrafficReport bwd_model = traffic_sspmm_backward(p);
    const bool bwd_match = bwd_count.read_bytes == bwd_model.read_bytes &&
                           bwd_count.write_bytes == bwd_model.write_bytes &&
                           bwd_count.atomic_ops == bwd_model.atomic_ops;
    const double bwd_err = max_abs_diff(dx.sp_data(), maxk_gather(dense_t, xs).sp_data());
    t.rows.push_back({std::string("sspmm"), std::uint64_t{k}, std::uint64_t{ib}, std::uint64_t{c.repeat}, bwd_mean,
                      bwd_min, bwd_count.read_bytes, bwd_count.write_bytes, bwd_count.atomic_ops,
                      bwd_model.read_bytes, bwd_model.write_bytes, bwd_model.atomic_ops, bwd_match,
                      bwd_model.reduction_vs_spmm_pct, spmm_mean / bwd_mean, bwd_err});

    const double tol = 1e-4 * (1.0 + g.avg_degree());
    all_ok = all_ok && fwd_match && bwd_match && fwd_err <= tol && bwd_err <= tol;
  }
  all_ok = all_ok && sanity;

  Metadata meta = make_metadata(app, "bench", c);
  meta.notes.emplace_back("graph", c.graph.empty() ? "random" : c.graph);
  meta.notes.emplace_back("nodes", std::to_string(n));
  meta.notes.emplace_back("nnz", std::to_string(g.num_edges()));
  meta.notes.emplace_back("timing", "CPU wall-clock milliseconds; not comparable to GPU kernel latencies");
  meta.notes.emplace_back("sanity", std::string("identity-graph spgemm equals densified input: ") +
                                        (sanity ? "pass" : "FAIL"));
  meta.notes.emplace_back("caveat", std::string(kCacheCaveat));
  Sink sink(c.out, fallback);
  emit(meta, t, "csv", sink.get());
  return all_ok ? 0 : 1;
}

// train

int cmd_train(const CLI::App& app, const Common& c, const TrainArgs& a, std::ostream& fallback) {
  NodeDataset data;
  if (!c.graph.empty()) {
    if (a.features.empty() || a.labels.empty()) throw ParameterError("--graph needs --features and --labels");
    data.graph = load_graph(c.graph);
    data.features = load_features(a.features);
    data.labels = load_labels(a.labels);
    if (data.features.rows() != data.graph.num_nodes() || data.labels.size() != data.graph.num_nodes()) {
      throw DimensionError("features and labels must have one row per node");
    }
    split_masks(data.graph.num_nodes(), 0.6, 0.2, c.seed, data.train_mask, data.val_mask);
  } else {
    SbmConfig s;
    s.nodes = a.sbm_nodes;
    s.blocks = a.sbm_blocks;
    s.p_in = a.p_in;
    s.p_out = a.p_out;
    s.feature_dim = a.feature_dim;
    s.signal = a.signal;
    s.seed = c.seed;
    data = make_sbm_dataset(s);
  }

  TrainConfig cfg;
  cfg.seed = c.seed;
  cfg.model.hidden = a.hidden;
  cfg.model.k = a.k == 0 ? std::max<std::size_t>(1, a.hidden / 8) : a.k;
  cfg.model.layers = a.layers;
  cfg.model.activation = parse_activation(a.activation);
  cfg.model.group_size = c.w;
  cfg.model.exec = exec_options(c);
  cfg.train.epochs = a.epochs;
  cfg.train.lr = a.lr;
  cfg.train.momentum = a.momentum;
  cfg.train.loss = a.loss == "auto" ? (data.labels.multi_label ? LossKind::bce : LossKind::softmax_ce)
                                    : parse_loss(a.loss);
  cfg.normalization = parse_normalization(a.normalization);
  cfg.self_loops = !a.no_self_loops;

  const TrainingLog log = run_training(data, cfg);

  Metadata meta = make_metadata(app, "train", c);
  meta.notes.emplace_back("graph", c.graph.empty() ? "sbm" : c.graph);
  meta.notes.emplace_back("nodes", std::to_string(data.graph.num_nodes()));
  meta.notes.emplace_back("k", std::to_string(cfg.model.k));
  meta.notes.emplace_back("loss", std::string(to_string(cfg.train.loss)));
  Sink sink(c.out, fallback);
  meta.write_comments(sink.get());
  write_log_csv(log, sink.get());
  return 0;
}

// approx

int cmd_approx(const CLI::App& app, const Common& c, const ApproxArgs& a, std::ostream& fallback) {
  ApproxConfig cfg;
  cfg.target = parse_approx_target(a.target);
  cfg.hidden_units = a.hidden_units;
  cfg.activation = parse_activation(a.activation);
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.momentum = a.momentum;
  cfg.grid_points = a.grid_points;
  cfg.seed = c.seed;
  const auto rows = approx_demo(cfg);

  Table t{{"hidden", "k", "mse"}, {}};
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.rows.push_back({std::uint64_t{rows[i].hidden}, std::uint64_t{rows[i].k}, rows[i].mse});
    if (i > 0 && rows[i].mse > rows[i - 1].mse) monotone = false;
  }
  Metadata meta = make_metadata(app, "approx", c);
  meta.notes.emplace_back("mse_non_increasing", monotone ? "yes" : "no");
  Sink sink(c.out, fallback);
  emit(meta, t, "csv", sink.get());
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MaxK-GNN kernels, traffic model and trainer", std::string(kToolName)};
  app.set_version_flag("--version", std::string(MAXK_VERSION));
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  app.add_option("--graph", c.graph, "Graph file (.mtx Matrix Market or MXKG binary)");
  app.add_option("--dim-origin", c.dim_origin, "Hidden dimension before MaxK")->capture_default_str();
  app.add_option("--dim-k", c.dim_k, "Entries kept per row by MaxK")->capture_default_str();
  app.add_option("--index-bytes", c.index_bytes, "sp_index width in bytes: 0 (auto), 1, 2 or 4")
      ->capture_default_str();
  app.add_option("--w", c.w, "Edge group size")->capture_default_str();
  app.add_option("--mode", c.mode, "Kernel execution mode: det or par")->capture_default_str();
  app.add_option("--threads", c.threads, "OpenMP threads (0 keeps the runtime default)")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--repeat", c.repeat, "Timed repetitions per kernel")->capture_default_str();
  app.add_option("--out", c.out, "Output path (stdout when omitted)");

  auto* partition = app.add_subcommand("partition", "Build an edge-group plan and write it to --out");

  TrafficArgs ta;
  auto* traffic = app.add_subcommand("traffic", "Analytical memory-traffic report");
  traffic->add_option("--graph-name", ta.graph_name, "Use the node/edge counts of a known graph");
  traffic->add_option("--nodes", ta.nodes, "Node count when no graph is given");
  traffic->add_option("--nnz", ta.nnz, "Edge count when no graph is given");
  traffic->add_option("--kernel", ta.kernel, "all, spmm, spgemm or sspmm")->capture_default_str();
  traffic->add_option("--format", ta.format, "csv, json or table")->capture_default_str();
  traffic->add_option("--profiled", ta.profiled, "Profiled read traffic as KERNEL=GB, repeatable");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Time kernels over a k sweep and check counted traffic");
  bench->add_option("--k-list", ba.k_list, "k values (default sweep up to dim-origin)")->delimiter(',');
  bench->add_option("--nodes", ba.nodes, "Random graph size when --graph is absent")->capture_default_str();
  bench->add_option("--avg-degree", ba.avg_degree, "Random graph mean degree")->capture_default_str();
  bench->add_option("--max-mem-mb", ba.max_mem_mb, "Refuse runs needing more memory")->capture_default_str();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Full-batch GNN training; writes the per-epoch log");
  train->add_option("--features", tr.features, "Node features (.csv or FEAT binary)");
  train->add_option("--labels", tr.labels, "Node labels (.csv or LABL binary)");
  train->add_option("--sbm-nodes", tr.sbm_nodes, "Synthetic graph size")->capture_default_str();
  train->add_option("--sbm-blocks", tr.sbm_blocks, "Synthetic graph blocks (classes)")->capture_default_str();
  train->add_option("--p-in", tr.p_in, "Intra-block edge probability")->capture_default_str();
  train->add_option("--p-out", tr.p_out, "Inter-block edge probability")->capture_default_str();
  train->add_option("--feature-dim", tr.feature_dim, "Synthetic feature width")->capture_default_str();
  train->add_option("--signal", tr.signal, "Synthetic feature class signal")->capture_default_str();
  train->add_option("--hidden", tr.hidden, "Hidden width")->capture_default_str();
  train->add_option("--k", tr.k, "MaxK entries per row (0 means hidden/8)")->capture_default_str();
  train->add_option("--layers", tr.layers, "Number of GNN layers")->capture_default_str();
  train->add_option("--activation", tr.activation, "maxk, relu or identity")->capture_default_str();
  train->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
  train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  train->add_option("--momentum", tr.momentum, "SGD momentum")->capture_default_str();
  train->add_option("--loss", tr.loss, "auto, softmax_ce or bce")->capture_default_str();
  train->add_option("--normalization", tr.normalization, "none, mean or symmetric")->capture_default_str();
  train->add_flag("--no-self-loops", tr.no_self_loops, "Do not add self loops");

  ApproxArgs aa;
  auto* approx = app.add_subcommand("approx", "Fit a scalar target with a one-hidden-layer MLP");
  approx->add_option("--hidden-units", aa.hidden_units, "Hidden widths")->delimiter(',')->capture_default_str();
  approx->add_option("--target", aa.target, "square or zero")->capture_default_str();
  approx->add_option("--activation", aa.activation, "maxk, relu or identity")->capture_default_str();
  approx->add_option("--epochs", aa.epochs, "Training epochs per width")->capture_default_str();
  approx->add_option("--lr", aa.lr, "Learning rate")->capture_default_str();
  approx->add_option("--momentum", aa.momentum, "SGD momentum")->capture_default_str();
  approx->add_option("--grid-points", aa.grid_points, "Evenly spaced samples on [-1, 1]")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (c.threads > 0) omp_set_num_threads(c.threads);
    parse_mode(c.mode);
    if (*partition) return cmd_partition(app, c, out);
    if (*traffic) return cmd_traffic(app, c, ta, out);
    if (*bench) return cmd_bench(app, c, ba, out);
    if (*train) return cmd_train(app, c, tr, out);
    if (*approx) return cmd_approx(app, c, aa, out);
  } catch (const std::exception& e) {
    err << kToolName << ": error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{kToolName.data()};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace maxk::cli
