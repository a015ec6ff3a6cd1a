#include "tascom/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tascom/error.hpp"

namespace tascom {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError(fmt::format("cannot open '{}'", p.string()));
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", p.string()));
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool skip_line(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_value(const std::string& tok, const fs::path& file, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size())
    throw DataError(fmt::format("{}:{}: '{}' is not a number", file.string(), line_no, tok));
  if (!std::isfinite(v))
    throw DataError(fmt::format("{}:{}: non-finite attribute value '{}'", file.string(), line_no, tok));
  return v;
}

std::string list_offenders(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 10;
  std::string out;
  for (std::size_t i = 0; i < std::min(ids.size(), kShown); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > kShown) out += fmt::format(" ... ({} total)", ids.size());
  return out;
}

// Ordered id set: index by insertion order.
struct IdIndex {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t add(const std::string& id) {
    auto [it, inserted] = index.emplace(id, ids.size());
    if (inserted) ids.push_back(id);
    return it->second;
  }
  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

struct RawLabels {
  IdIndex ids;
  std::vector<std::string> labels;
};

RawLabels read_labels(const fs::path& path) {
  auto in = open_in(path);
  RawLabels raw;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (skip_line(line)) continue;
    auto tok = split_ws(line);
    if (tok.size() != 2) throw DataError(fmt::format("{}:{}: expected 'id label'", path.string(), no));
    if (raw.ids.find(tok[0])) throw DataError(fmt::format("{}:{}: duplicate id '{}'", path.string(), no, tok[0]));
    raw.ids.add(tok[0]);
    raw.labels.push_back(tok[1]);
  }
  return raw;
}

// Keeps integer labels that are already dense, otherwise first-appearance order.
Partition labels_to_partition(const std::vector<std::string>& labels) {
  std::vector<std::size_t> numeric;
  numeric.reserve(labels.size());
  bool all_numeric = true;
  for (const auto& l : labels) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(l.data(), l.data() + l.size(), v);
    if (ec != std::errc() || ptr != l.data() + l.size()) {
      all_numeric = false;
      break;
    }
    numeric.push_back(v);
  }
  if (all_numeric && !numeric.empty()) {
    const std::size_t k = *std::max_element(numeric.begin(), numeric.end()) + 1;
    std::vector<char> seen(k, 0);
    for (auto v : numeric) seen[v] = 1;
    if (std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; })) return Partition(numeric);
  }
  std::unordered_map<std::string, std::size_t> ids;
  std::vector<std::size_t> dense;
  dense.reserve(labels.size());
  for (const auto& l : labels) dense.push_back(ids.emplace(l, ids.size()).first->second);
  return Partition(std::move(dense));
}

struct RawAttributes {
  IdIndex ids;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;  // sparse per id
  std::size_t dim = 0;
  bool dense = false;
};

RawAttributes read_attributes(const fs::path& path) {
  auto in = open_in(path);
  RawAttributes raw;
  std::string line;
  std::optional<bool> csv;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (skip_line(line)) continue;
    if (!csv) csv = line.find(',') != std::string::npos;
    if (*csv) {
      auto tok = split_csv(line);
      if (tok.size() < 2) throw DataError(fmt::format("{}:{}: expected 'id,value,...'", path.string(), no));
      const std::size_t dim = tok.size() - 1;
      if (raw.ids.ids.empty()) raw.dim = dim;
      if (dim != raw.dim)
        throw DataError(fmt::format("{}:{}: {} attribute columns, expected {}", path.string(), no, dim, raw.dim));
      if (raw.ids.find(tok[0])) throw DataError(fmt::format("{}:{}: duplicate id '{}'", path.string(), no, tok[0]));
      raw.ids.add(tok[0]);
      auto& row = raw.rows.emplace_back();
      for (std::size_t j = 0; j < dim; ++j) {
        const double v = parse_value(tok[j + 1], path, no);
        if (v != 0.0) row.emplace_back(j, v);
      }
    } else {
      auto tok = split_ws(line);
      if (tok.size() != 3) throw DataError(fmt::format("{}:{}: expected 'id index value'", path.string(), no));
      std::size_t j = 0;
      auto [ptr, ec] = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), j);
      if (ec != std::errc() || ptr != tok[1].data() + tok[1].size())
        throw DataError(fmt::format("{}:{}: bad attribute index '{}'", path.string(), no, tok[1]));
      const double v = parse_value(tok[2], path, no);
      const std::size_t row = raw.ids.add(tok[0]);
      if (row == raw.rows.size()) raw.rows.emplace_back();
      raw.rows[row].emplace_back(j, v);
      raw.dim = std::max(raw.dim, j + 1);
    }
  }
  raw.dense = csv.value_or(false);
  return raw;
}

struct RawEdges {
  std::vector<std::pair<std::string, std::string>> edges;
};

RawEdges read_edges(const fs::path& path) {
  auto in = open_in(path);
  RawEdges raw;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (skip_line(line)) continue;
    auto tok = split_ws(line);
    if (tok.size() != 2) throw DataError(fmt::format("{}:{}: expected 'u v'", path.string(), no));
    raw.edges.emplace_back(std::move(tok[0]), std::move(tok[1]));
  }
  return raw;
}

}  // namespace

void validate(const DatasetBundle& b) {
  const std::size_t n = b.graph.num_nodes();
  if (b.ids.size() != n) throw DataError(fmt::format("{} ids for {} nodes", b.ids.size(), n));
  if (static_cast<std::size_t>(b.attributes.rows()) != n)
    throw DataError(fmt::format("{} attribute rows for {} nodes", b.attributes.rows(), n));
  if (b.labels && b.labels->size() != n) throw DataError(fmt::format("{} labels for {} nodes", b.labels->size(), n));
  if (!b.attributes.allFinite()) throw DataError("attribute matrix contains non-finite values");
}

DatasetBundle load_dataset(const fs::path& edges_path, const fs::path& attr_path, const fs::path& label_path) {
  const auto edges = read_edges(edges_path);
  std::optional<RawAttributes> attrs;
  if (!attr_path.empty()) attrs = read_attributes(attr_path);
  std::optional<RawLabels> labels;
  if (!label_path.empty()) labels = read_labels(label_path);

  IdIndex order;
  if (labels) {
    order = labels->ids;
  } else if (attrs) {
    order = attrs->ids;
  }
  const bool closed = labels || (attrs && attrs->dense);

  std::vector<std::string> unknown;
  std::unordered_set<std::string> reported;
  auto note_unknown = [&](const std::string& id) {
    if (reported.insert(id).second) unknown.push_back(id);
  };
  std::vector<std::pair<NodeId, NodeId>> edge_ids;
  edge_ids.reserve(edges.edges.size());
  for (const auto& [u, v] : edges.edges) {
    if (closed) {
      auto iu = order.find(u), iv = order.find(v);
      if (!iu) note_unknown(u);
      if (!iv) note_unknown(v);
      if (iu && iv) edge_ids.emplace_back(*iu, *iv);
    } else {
      edge_ids.emplace_back(order.add(u), order.add(v));
    }
  }
  if (attrs && !attrs->dense && closed) {
    for (const auto& id : attrs->ids.ids)
      if (!order.find(id)) note_unknown(id);
  }
  if (attrs && attrs->dense && labels) {
    for (const auto& id : attrs->ids.ids)
      if (!order.find(id)) note_unknown(id);
  }
  if (!unknown.empty()) {
    throw DataError(fmt::format("ids without {}: {}", labels ? "labels" : "attributes", list_offenders(unknown)));
  }

  DatasetBundle b;
  b.name = edges_path.parent_path().filename().string();
  b.ids = order.ids;
  const std::size_t n = b.ids.size();
  b.graph = Graph(n, edge_ids);
  if (b.graph.dropped_self_loops() > 0) {
    spdlog::warn("dropped {} self-loops from '{}'", b.graph.dropped_self_loops(), edges_path.string());
    b.notes.push_back(fmt::format("dropped {} self-loops", b.graph.dropped_self_loops()));
  }
  if (b.graph.dropped_duplicates() > 0) {
    spdlog::warn("dropped {} duplicate edges from '{}'", b.graph.dropped_duplicates(), edges_path.string());
    b.notes.push_back(fmt::format("dropped {} duplicate edges", b.graph.dropped_duplicates()));
  }

  if (attrs) {
    if (attrs->dense) {
      std::vector<std::string> missing;
      for (const auto& id : b.ids)
        if (!attrs->ids.find(id)) missing.push_back(id);
      if (!missing.empty()) throw DataError("ids without attributes: " + list_offenders(missing));
    }
    b.attributes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(attrs->dim));
    for (std::size_t i = 0; i < n; ++i) {
      auto row = attrs->ids.find(b.ids[i]);
      if (!row) continue;
      for (auto [j, v] : attrs->rows[*row])
        b.attributes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += v;
    }
  } else {
    b.attributes = adjacency_as_features(b.graph);
    b.attributes_from_adjacency = true;
  }
  if (labels) b.labels = labels_to_partition(labels->labels);
  validate(b);
  return b;
}

Partition load_partition(const fs::path& path, const std::vector<std::string>& ids) {
  const auto raw = read_labels(path);
  std::vector<std::string> labels(ids.size());
  std::vector<std::string> missing, extra;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto at = raw.ids.find(ids[i]);
    if (!at) missing.push_back(ids[i]);
    else labels[i] = raw.labels[*at];
  }
  if (!missing.empty()) throw DataError("ids without a community: " + list_offenders(missing));
  if (raw.ids.ids.size() != ids.size()) {
    std::unordered_set<std::string> known(ids.begin(), ids.end());
    for (const auto& id : raw.ids.ids)
      if (!known.count(id)) extra.push_back(id);
    throw DataError("unknown ids in partition file: " + list_offenders(extra));
  }
  return labels_to_partition(labels);
}

Eigen::MatrixXd adjacency_as_features(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  if (n > 5000) spdlog::warn("building dense {}x{} adjacency features", n, n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    for (NodeId u : g.neighbors(v)) a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) = 1.0;
  return a;
}

void validate(const SyntheticSpec& s) {
  auto fail = [](const std::string& msg) { throw PreconditionError("synthetic spec: " + msg); };
  if (s.k == 0 || s.n < s.k) fail("need n >= k >= 1");
  if (!(s.p_in >= 0.0 && s.p_in <= 1.0 && s.p_out >= 0.0 && s.p_out <= 1.0)) fail("probabilities must be in [0, 1]");
  if (!(s.p_out < s.p_in)) fail("p_out must be below p_in");
  if (!(s.signal >= 0.0 && s.signal <= 1.0)) fail("signal must be in [0, 1]");
  if (!(s.disconnected_fraction >= 0.0 && s.disconnected_fraction <= 1.0)) fail("disconnected_fraction must be in [0, 1]");
  if (s.attributes > 0 && s.attributes < s.k) fail("need at least one signature column per label (attributes >= k)");
  if (s.disconnected_fraction > 0.0 && s.n < 2 * s.k) fail("disconnected labels need at least two nodes each");
}

namespace {

std::size_t label_of(const SyntheticSpec& s, std::size_t i) { return i * s.k / s.n; }

std::size_t disconnected_labels(const SyntheticSpec& s) {
  return static_cast<std::size_t>(std::lround(s.disconnected_fraction * static_cast<double>(s.k)));
}

}  // namespace

Partition planted_blocks(const SyntheticSpec& s) {
  validate(s);
  const std::size_t split = disconnected_labels(s);
  std::vector<std::size_t> first(s.k, s.n), last(s.k, 0);
  for (std::size_t i = 0; i < s.n; ++i) {
    const auto c = label_of(s, i);
    first[c] = std::min(first[c], i);
    last[c] = i;
  }
  std::vector<std::size_t> block(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    const auto c = label_of(s, i);
    const bool second_half = c < split && i >= first[c] + (last[c] - first[c] + 1) / 2;
    block[i] = 2 * c + (second_half ? 1 : 0);
  }
  return relabel_dense(block);
}

DatasetBundle generate_synthetic(const SyntheticSpec& s) {
  validate(s);
  const Partition blocks = planted_blocks(s);
  std::mt19937_64 rng(s.seed);
  std::bernoulli_distribution in(s.p_in), out(s.p_out);

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = i + 1; j < s.n; ++j) {
      bool edge;
      if (blocks[i] == blocks[j]) edge = in(rng);
      else if (label_of(s, i) == label_of(s, j)) edge = false;
      else edge = out(rng);
      if (edge) edges.emplace_back(i, j);
    }
  }

  DatasetBundle b;
  b.name = "synthetic";
  b.graph = Graph(s.n, edges);
  for (std::size_t i = 0; i < s.n; ++i) b.ids.push_back(std::to_string(i));
  std::vector<std::size_t> labels(s.n);
  for (std::size_t i = 0; i < s.n; ++i) labels[i] = label_of(s, i);
  b.labels = Partition(labels);

  if (s.attributes == 0) {
    b.attributes = adjacency_as_features(b.graph);
    b.attributes_from_adjacency = true;
  } else {
    const std::size_t width = s.attributes / s.k;
    const auto t = static_cast<Eigen::Index>(s.attributes);
    b.attributes.resize(static_cast<Eigen::Index>(s.n), t);
    std::bernoulli_distribution hi(0.5 + s.signal / 2), lo(0.5 - s.signal / 2), coin(0.5);
    for (std::size_t i = 0; i < s.n; ++i) {
      for (std::size_t j = 0; j < s.attributes; ++j) {
        const std::size_t owner = j / width;
        bool bit;
        if (owner >= s.k) bit = coin(rng);
        else if (owner == labels[i]) bit = hi(rng);
        else bit = lo(rng);
        b.attributes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bit ? 1.0 : 0.0;
      }
    }
  }
  b.notes.push_back(fmt::format("synthetic n={} k={} p_in={} p_out={} T={} s={} f={} seed={}", s.n, s.k, s.p_in,
                                s.p_out, s.attributes, s.signal, s.disconnected_fraction, s.seed));
  return b;
}

void write_dataset(const DatasetBundle& b, const fs::path& dir) {
  validate(b);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "edges.txt");
    for (auto [u, v] : b.graph.edges()) out << b.ids[u] << ' ' << b.ids[v] << '\n';
  }
  if (!b.attributes_from_adjacency) {
    auto out = open_out(dir / "attrs.csv");
    for (Eigen::Index i = 0; i < b.attributes.rows(); ++i) {
      out << b.ids[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < b.attributes.cols(); ++j) out << ',' << fmt::format("{}", b.attributes(i, j));
      out << '\n';
    }
  }
  if (b.labels) {
    auto out = open_out(dir / "labels.txt");
    for (std::size_t i = 0; i < b.ids.size(); ++i) out << b.ids[i] << ' ' << (*b.labels)[i] << '\n';
  }
}

void write_results(const DatasetBundle& b, const Partition& cs, const nlohmann::json& metrics,
                   const nlohmann::json& config, const fs::path& dir, const nlohmann::json& timings) {
  if (cs.size() != b.ids.size())
    throw PreconditionError(fmt::format("partition covers {} nodes, dataset has {}", cs.size(), b.ids.size()));
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "assignment.tsv");
    out << "# id\tcommunity\n";
    for (std::size_t i = 0; i < b.ids.size(); ++i) out << b.ids[i] << '\t' << cs[i] << '\n';
  }
  open_out(dir / "metrics.json") << metrics.dump(2) << '\n';
  open_out(dir / "config.json") << config.dump(2) << '\n';
  if (!timings.is_null()) open_out(dir / "timings.json") << timings.dump(2) << '\n';
}

void convert_cites_content(const fs::path& cites, const fs::path& content, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  auto in = open_in(content);
  auto attrs = open_out(out_dir / "attrs.csv");
  auto labels = open_out(out_dir / "labels.txt");
  std::unordered_set<std::string> known;
  std::string line;
  std::size_t dim = 0;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (skip_line(line)) continue;
    auto tok = split_ws(line);
    if (tok.size() < 3) throw DataError(fmt::format("{}:{}: expected 'id features... label'", content.string(), no));
    if (dim == 0) dim = tok.size() - 2;
    if (tok.size() - 2 != dim) throw DataError(fmt::format("{}:{}: ragged feature row", content.string(), no));
    known.insert(tok.front());
    attrs << tok.front();
    for (std::size_t j = 1; j + 1 < tok.size(); ++j) attrs << ',' << tok[j];
    attrs << '\n';
    labels << tok.front() << ' ' << tok.back() << '\n';
  }

  // Citation lists reference papers missing from the content file; those
  // edges are dropped rather than inventing nodes without attributes.
  auto cin = open_in(cites);
  auto edges = open_out(out_dir / "edges.txt");
  std::size_t dropped = 0;
  for (std::size_t no = 1; std::getline(cin, line); ++no) {
    if (skip_line(line)) continue;
    auto tok = split_ws(line);
    if (tok.size() != 2) throw DataError(fmt::format("{}:{}: expected 'cited citing'", cites.string(), no));
    if (!known.count(tok[0]) || !known.count(tok[1])) {
      ++dropped;
      continue;
    }
    edges << tok[0] << ' ' << tok[1] << '\n';
  }
  if (dropped > 0) spdlog::warn("dropped {} citations to papers without content rows", dropped);
}

}  // namespace tascom
