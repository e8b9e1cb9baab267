#pragma once

#include "scalpel/core.hpp"
#include "scalpel/segment.hpp"

#include <vector>

namespace scalpel {

enum class DissimilarityKind { kSpatial, kTemporal, kCombined, kUnion, kMin, kMax };

/// Symmetric K x K matrix of pairwise dissimilarities in [0, 1] with zero diagonal.
struct DissimilarityMatrix {
  Matrix values;
  DissimilarityKind kind = DissimilarityKind::kCombined;

  int size() const { return static_cast<int>(values.rows()); }
  double operator()(int i, int j) const { return values(i, j); }
};

/// Spatial term used by the combined dissimilarity.
enum class SpatialMetric { kCosine, kUnion, kMin, kMax };

struct ClusterConfig {
  double omega = 0.2;        // weight of the spatial term
  double cut_height = 0.18;  // dendrogram cut-point
  SpatialMetric spatial = SpatialMetric::kCosine;

  void validate() const;
};

/// p_ij: number of pixels shared by components i and j.
Matrix overlap_counts(const SpatialDictionary& dict);

/// 1 - p_ij / sqrt(p_ii p_jj).
DissimilarityMatrix spatial_dissimilarity(const SpatialDictionary& dict);

/// Union, min or max overlap dissimilarity. kCosine gives spatial_dissimilarity.
DissimilarityMatrix alternative_spatial_dissimilarity(const SpatialDictionary& dict,
                                                      SpatialMetric metric);

/// (Y^B)^T a_k for every component: the thresholded fluorescence summed over
/// the component's pixels, one column per component (T x K).
Matrix aggregate_traces(const SpatialDictionary& dict, const ThresholdedVideo& yb);

/// Cosine dissimilarity of the aggregate traces. A component whose aggregate
/// trace is identically zero is at distance 1 from every other component.
DissimilarityMatrix temporal_dissimilarity(const SpatialDictionary& dict,
                                           const ThresholdedVideo& yb);

/// omega * ds + (1 - omega) * dt.
DissimilarityMatrix combined_dissimilarity(const DissimilarityMatrix& ds,
                                           const DissimilarityMatrix& dt, double omega);

/// One agglomeration step. Nodes below `leaves` are elements; node leaves + m is
/// the cluster formed by merge m.
struct Merge {
  int left = 0;
  int right = 0;
  double height = 0.0;  // minimax radius of the merged cluster
  int prototype = 0;    // element attaining the radius
};

struct Dendrogram {
  int leaves = 0;
  std::vector<Merge> merges;
};

/// Hierarchical clustering with minimax linkage. Ties are broken towards the
/// lexicographically smallest pair of clusters (each cluster named by its
/// smallest element) and the smallest prototype index.
Dendrogram protoclust(const DissimilarityMatrix& d);

/// Clusters formed by all merges of height <= h, ordered by smallest element.
std::vector<std::vector<int>> cut_dendrogram(const Dendrogram& dend, double h);

struct RefinedDictionary {
  SpatialDictionary dictionary;       // one representative per cluster
  std::vector<int> representatives;   // preliminary element index of each column
  std::vector<int> cluster_sizes;
};

/// Picks the member with the smallest median dissimilarity to the other
/// members (lowest index on ties).
RefinedDictionary cluster_representatives(const std::vector<std::vector<int>>& clusters,
                                          const DissimilarityMatrix& d,
                                          const SpatialDictionary& dict);

}  // namespace scalpel
