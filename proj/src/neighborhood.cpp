#include <algorithm>
#include <numeric>

#include "mgnn/dataset.hpp"

namespace mgnn {

std::vector<Index> EmbeddingDataset::indices(Split s) const {
  std::vector<Index> out;
  for (Index i = 0; i < size(); ++i)
    if (splits[static_cast<std::size_t>(i)] == s) out.push_back(i);
  return out;
}

void EmbeddingDataset::validate() const {
  const auto n = static_cast<std::size_t>(size());
  if (labels.size() != n || splits.size() != n)
    throw InvalidInput("dataset: labels and split tags must have one entry per item");
  if (num_classes < 1) throw InvalidInput("dataset: class count must be positive");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw InvalidInput("dataset: label out of range");
  if (!embeddings.allFinite()) throw InvalidInput("dataset: embeddings must be finite");
}

NeighborhoodSample sample_neighborhood_graph(const EmbeddingDataset& data, std::span<const Index> pool,
                                             Index anchor, Index n_nodes, Rng& rng,
                                             const NeighborhoodOptions& opts) {
  if (n_nodes < 2) throw InvalidInput("neighborhood graph needs at least 2 nodes");
  if (static_cast<Index>(pool.size()) < n_nodes)
    throw InvalidInput("neighborhood graph: N = " + std::to_string(n_nodes) + " exceeds split size " +
                       std::to_string(pool.size()));
  auto it = std::find(pool.begin(), pool.end(), anchor);
  if (it == pool.end()) throw InvalidInput("neighborhood graph: anchor is not in the sampling pool");

  // Partial Fisher-Yates over the pool with the anchor swapped out.
  std::vector<Index> candidates(pool.begin(), pool.end());
  std::swap(candidates[static_cast<std::size_t>(it - pool.begin())], candidates.back());
  candidates.pop_back();
  const auto peers = static_cast<std::size_t>(n_nodes - 1);
  for (std::size_t i = 0; i < peers; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }

  std::vector<Index> items;
  items.reserve(static_cast<std::size_t>(n_nodes));
  items.push_back(anchor);
  items.insert(items.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(peers));

  Matrix<double> z(n_nodes, data.dim());
  std::vector<int> labels(static_cast<std::size_t>(n_nodes));
  for (Index r = 0; r < n_nodes; ++r) {
    const Index item = items[static_cast<std::size_t>(r)];
    z.row(r) = data.embeddings.row(item);
    labels[static_cast<std::size_t>(r)] = data.labels[static_cast<std::size_t>(item)];
  }
  const SparsifyPolicy policy = opts.policy.value_or(SparsifyPolicy::for_size(n_nodes));
  GraphD g = build_geometric_graph(z, opts.sigma, policy);
  return NeighborhoodSample{std::move(g), std::move(z), std::move(labels), std::move(items), 0};
}

NeighborhoodSample sample_neighborhood_graph(const EmbeddingDataset& data, Index anchor, Index n_nodes, Rng& rng,
                                             const NeighborhoodOptions& opts) {
  if (anchor < 0 || anchor >= data.size()) throw InvalidInput("neighborhood graph: anchor out of range");
  const std::vector<Index> pool = data.indices(data.splits[static_cast<std::size_t>(anchor)]);
  return sample_neighborhood_graph(data, pool, anchor, n_nodes, rng, opts);
}

}  // namespace mgnn
