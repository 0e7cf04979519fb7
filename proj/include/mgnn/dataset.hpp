#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mgnn/graph.hpp"

namespace mgnn {

using Rng = std::mt19937_64;

enum class Split : std::uint8_t { train = 0, test = 1 };

/// Labeled embedding vectors with a train/test tag per item.
struct EmbeddingDataset {
  Matrix<double> embeddings;  // items x m
  std::vector<int> labels;
  std::vector<Split> splits;
  int num_classes = 0;
  std::string provenance;

  Index size() const { return embeddings.rows(); }
  Index dim() const { return embeddings.cols(); }
  std::vector<Index> indices(Split s) const;
  /// Throws InvalidInput when sizes disagree or a label is out of range.
  void validate() const;
};

/// Anchored neighborhood graph: node 0 is the anchor, nodes 1..N-1 are peers
/// drawn uniformly without replacement from the anchor's split.
struct NeighborhoodSample {
  GraphD graph;
  GraphSignal<double> signal;
  std::vector<int> labels;
  std::vector<Index> items;  // dataset row of each node
  Index anchor_node = 0;
};

struct NeighborhoodOptions {
  std::optional<double> sigma;  // empty: median heuristic
  std::optional<SparsifyPolicy> policy;  // empty: SparsifyPolicy::for_size(N)
};

NeighborhoodSample sample_neighborhood_graph(const EmbeddingDataset& data, Index anchor, Index n_nodes, Rng& rng,
                                             const NeighborhoodOptions& opts = {});

/// Same draw restricted to an explicit pool of dataset rows (the anchor must
/// belong to it).
NeighborhoodSample sample_neighborhood_graph(const EmbeddingDataset& data, std::span<const Index> pool,
                                             Index anchor, Index n_nodes, Rng& rng,
                                             const NeighborhoodOptions& opts = {});

// ---------------------------------------------------------------------------
// Serialization and synthetic data.

enum class DatasetFormat { csv, binary };

/// Split assignment for formats that carry none.
struct SplitSpec {
  std::optional<std::filesystem::path> companion;  // one "train"/"test" per line
  double test_fraction = 1.0 / 7.0;                 // 6:1 train:test
  std::uint64_t seed = 0;
};

struct CsvOptions {
  std::optional<int> num_classes;  // empty: max label + 1
  SplitSpec split;
};

EmbeddingDataset read_embeddings(const std::filesystem::path& path, DatasetFormat format,
                                 const CsvOptions& csv = {});
void write_embeddings(const EmbeddingDataset& data, const std::filesystem::path& path, DatasetFormat format);

/// Picks the format from the extension: ".csv" is CSV, everything else binary.
DatasetFormat guess_format(const std::filesystem::path& path);

struct GaussianMixtureSpec {
  int classes = 10;
  int dim = 8;
  int per_class = 200;  // training items per class
  std::optional<int> test_per_class;  // default: per_class / 6
  double separation = 10.0;
};

/// Class centers uniform on the sphere of radius `separation`, unit isotropic noise.
EmbeddingDataset synth_gaussian_mixture(const GaussianMixtureSpec& spec, Rng& rng);

}  // namespace mgnn
