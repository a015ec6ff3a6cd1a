#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tascom/graph.hpp"

namespace tascom {

/// Graph, node attributes and (optional) human labels over one node set.
/// `ids` maps dense indices back to the external string ids.
struct DatasetBundle {
  std::string name;
  std::vector<std::string> ids;
  Graph graph;
  Eigen::MatrixXd attributes;
  bool attributes_from_adjacency = false;
  std::optional<Partition> labels;
  std::vector<std::string> notes;
};

// Throws DataError when the parts disagree on n or attributes are non-finite.
void validate(const DatasetBundle& bundle);

/// Loads an edge list ("u v" per line), optional attributes (dense CSV with the
/// id in the first column, or "id index value" triplets) and optional labels
/// ("id label" per line). Blank lines and lines starting with '#' are ignored.
/// Node order follows the labels file, else the attribute file, else first
/// appearance in the edge list. Without attributes the adjacency rows are used.
DatasetBundle load_dataset(const std::filesystem::path& edges, const std::filesystem::path& attributes = {},
                           const std::filesystem::path& labels = {});

/// Reads "id community" lines for the bundle's ids. Integer community ids that
/// are already dense are kept; anything else is relabeled by first appearance.
Partition load_partition(const std::filesystem::path& path, const std::vector<std::string>& ids);

// Dense 0/1 adjacency rows used as node features.
Eigen::MatrixXd adjacency_as_features(const Graph& g);

struct SyntheticSpec {
  std::size_t n = 300;
  std::size_t k = 6;  // human labels
  double p_in = 0.3;
  double p_out = 0.01;
  std::size_t attributes = 48;  // 0: no attribute file, adjacency rows are used
  double signal = 0.8;
  // Share of labels built from two planted blocks with no edges between them.
  double disconnected_fraction = 0.0;
  std::uint64_t seed = 0;
};

void validate(const SyntheticSpec& spec);

/// Planted-partition attributed network. Labels are contiguous node ranges;
/// a disconnected label is split into two halves that never share an edge.
/// Each label owns attributes/k signature columns, drawn Bernoulli(0.5 + s/2)
/// for its members and Bernoulli(0.5 - s/2) for everyone else; leftover
/// columns are Bernoulli(0.5).
DatasetBundle generate_synthetic(const SyntheticSpec& spec);

// Planted blocks of the generator (a disconnected label contributes two).
Partition planted_blocks(const SyntheticSpec& spec);

// Writes edges.txt, attrs.csv (unless adjacency-derived) and labels.txt.
void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

/// Writes assignment.tsv, metrics.json and config.json (plus timings.json when
/// `timings` is not null) into `dir`, creating it if needed.
void write_results(const DatasetBundle& bundle, const Partition& cs, const nlohmann::json& metrics,
                   const nlohmann::json& config, const std::filesystem::path& dir,
                   const nlohmann::json& timings = nullptr);

/// Converts the public "cites/content" citation-network layout (content lines:
/// id, binary features..., class label) into edges.txt / attrs.csv / labels.txt.
void convert_cites_content(const std::filesystem::path& cites, const std::filesystem::path& content,
                           const std::filesystem::path& out_dir);

}  // namespace tascom
