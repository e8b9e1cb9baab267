#include "scalpel/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scalpel {

void ClusterConfig::validate() const {
  if (!(omega >= 0.0 && omega <= 1.0)) throw Error("omega must lie in [0, 1]");
  if (!(cut_height >= 0.0 && cut_height <= 1.0)) throw Error("cut_height must lie in [0, 1]");
}

Matrix overlap_counts(const SpatialDictionary& dict) {
  const auto k = static_cast<int>(dict.size());
  const int npix = dict.geometry.pixels();
  std::vector<std::vector<int>> owners(static_cast<std::size_t>(npix));
  for (int c = 0; c < k; ++c) {
    for (const int p : dict.components[static_cast<std::size_t>(c)].pixels) {
      if (p < 0 || p >= npix) throw Error("component pixel index out of range");
      owners[static_cast<std::size_t>(p)].push_back(c);
    }
  }
  Matrix counts = Matrix::Zero(k, k);
  for (const auto& list : owners) {
    for (std::size_t a = 0; a < list.size(); ++a) {
      for (std::size_t b = a; b < list.size(); ++b) counts(list[a], list[b]) += 1.0;
    }
  }
  counts.triangularView<Eigen::StrictlyLower>() = counts.transpose();
  return counts;
}

namespace {

template <typename Fn>
DissimilarityMatrix from_overlaps(const SpatialDictionary& dict, DissimilarityKind kind, Fn fn) {
  for (const auto& comp : dict.components) {
    if (comp.pixels.empty()) throw Error("dictionary contains an empty component");
  }
  const Matrix p = overlap_counts(dict);
  const auto k = p.rows();
  DissimilarityMatrix out{Matrix::Zero(k, k), kind};
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double v = std::clamp(fn(p(i, j), p(i, i), p(j, j)), 0.0, 1.0);
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

}  // namespace

DissimilarityMatrix spatial_dissimilarity(const SpatialDictionary& dict) {
  return from_overlaps(dict, DissimilarityKind::kSpatial, [](double pij, double pii, double pjj) {
    return 1.0 - pij / std::sqrt(pii * pjj);
  });
}

DissimilarityMatrix alternative_spatial_dissimilarity(const SpatialDictionary& dict,
                                                      SpatialMetric metric) {
  switch (metric) {
    case SpatialMetric::kCosine:
      return spatial_dissimilarity(dict);
    case SpatialMetric::kUnion:
      return from_overlaps(dict, DissimilarityKind::kUnion, [](double pij, double pii, double pjj) {
        return 1.0 - pij / (pii + pjj - pij);
      });
    case SpatialMetric::kMin:
      return from_overlaps(dict, DissimilarityKind::kMin, [](double pij, double pii, double pjj) {
        return 1.0 - pij / std::min(pii, pjj);
      });
    case SpatialMetric::kMax:
      return from_overlaps(dict, DissimilarityKind::kMax, [](double pij, double pii, double pjj) {
        return 1.0 - pij / std::max(pii, pjj);
      });
  }
  throw Error("unknown spatial metric");
}

Matrix aggregate_traces(const SpatialDictionary& dict, const ThresholdedVideo& yb) {
  if (yb.values.rows() != dict.geometry.pixels()) {
    throw Error("thresholded video does not match the dictionary geometry");
  }
  // Pixel traces become contiguous columns.
  const Matrix by_pixel = yb.values.transpose();
  Matrix agg = Matrix::Zero(by_pixel.rows(), static_cast<Eigen::Index>(dict.size()));
  for (std::size_t k = 0; k < dict.size(); ++k) {
    auto col = agg.col(static_cast<Eigen::Index>(k));
    for (const int p : dict.components[k].pixels) col += by_pixel.col(p);
  }
  return agg;
}

DissimilarityMatrix temporal_dissimilarity(const SpatialDictionary& dict,
                                           const ThresholdedVideo& yb) {
  const Matrix agg = aggregate_traces(dict, yb);
  const auto k = agg.cols();
  Matrix gram = Matrix::Zero(k, k);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(agg.transpose());
  const Vector norms = gram.diagonal().cwiseSqrt();
  DissimilarityMatrix out{Matrix::Zero(k, k), DissimilarityKind::kTemporal};
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = j + 1; i < k; ++i) {
      double v = 1.0;
      if (norms(i) > 0.0 && norms(j) > 0.0) {
        v = std::clamp(1.0 - gram(i, j) / (norms(i) * norms(j)), 0.0, 1.0);
      }
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

DissimilarityMatrix combined_dissimilarity(const DissimilarityMatrix& ds,
                                           const DissimilarityMatrix& dt, double omega) {
  if (ds.size() != dt.size()) throw Error("dissimilarity matrices differ in size");
  if (!(omega >= 0.0 && omega <= 1.0)) throw Error("omega must lie in [0, 1]");
  if (omega == 1.0) return {ds.values, DissimilarityKind::kCombined};
  if (omega == 0.0) return {dt.values, DissimilarityKind::kCombined};
  return {omega * ds.values + (1.0 - omega) * dt.values, DissimilarityKind::kCombined};
}

// Minimax linkage. For every element x and live cluster C we keep
// dmax(x, C) = max_{y in C} d(x, y); the linkage of clusters G and H is then
// min_{x in G u H} max(dmax(x, G), dmax(x, H)).
Dendrogram protoclust(const DissimilarityMatrix& d) {
  const int n = d.size();
  if (n == 0) throw Error("empty dictionary");
  if (d.values.cols() != n) throw Error("dissimilarity matrix must be square");
  if (!d.values.allFinite()) throw Error("dissimilarity matrix must be finite");

  Dendrogram dend;
  dend.leaves = n;
  if (n == 1) return dend;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  Matrix dmax = d.values;
  Matrix link = d.values;  // linkage between live clusters, indexed by slot
  std::vector<std::vector<int>> members(static_cast<std::size_t>(n));
  std::vector<int> node(static_cast<std::size_t>(n));
  std::vector<char> live(static_cast<std::size_t>(n), 1);
  for (int i = 0; i < n; ++i) {
    members[static_cast<std::size_t>(i)] = {i};
    node[static_cast<std::size_t>(i)] = i;
  }
  // Merging two singletons: both candidate prototypes have radius d(i, j).
  for (int i = 0; i < n; ++i) link(i, i) = kInf;

  std::vector<int> nn(static_cast<std::size_t>(n), -1);
  std::vector<double> nnd(static_cast<std::size_t>(n), kInf);
  auto rescan = [&](int a) {
    int best = -1;
    double best_d = kInf;
    for (int c = 0; c < n; ++c) {
      if (c == a || !live[static_cast<std::size_t>(c)]) continue;
      if (link(a, c) < best_d || best < 0) {
        best = c;
        best_d = link(a, c);
      }
    }
    nn[static_cast<std::size_t>(a)] = best;
    nnd[static_cast<std::size_t>(a)] = best_d;
  };
  for (int a = 0; a < n; ++a) rescan(a);

  auto radius = [&](int a, int c, int* proto) {
    double best = kInf;
    int arg = -1;
    auto consider = [&](int x) {
      const double r = std::max(dmax(x, a), dmax(x, c));
      if (r < best || (r == best && x < arg)) {
        best = r;
        arg = x;
      }
    };
    for (const int x : members[static_cast<std::size_t>(a)]) consider(x);
    for (const int x : members[static_cast<std::size_t>(c)]) consider(x);
    if (proto) *proto = arg;
    return best;
  };

  dend.merges.reserve(static_cast<std::size_t>(n - 1));
  for (int step = 0; step < n - 1; ++step) {
    int a = -1;
    for (int s = 0; s < n; ++s) {
      if (!live[static_cast<std::size_t>(s)]) continue;
      if (a < 0 || nnd[static_cast<std::size_t>(s)] < nnd[static_cast<std::size_t>(a)]) a = s;
    }
    int lo = std::min(a, nn[static_cast<std::size_t>(a)]);
    int hi = std::max(a, nn[static_cast<std::size_t>(a)]);

    Merge m;
    m.left = node[static_cast<std::size_t>(lo)];
    m.right = node[static_cast<std::size_t>(hi)];
    m.height = radius(lo, hi, &m.prototype);
    dend.merges.push_back(m);

    auto& into = members[static_cast<std::size_t>(lo)];
    auto& from = members[static_cast<std::size_t>(hi)];
    into.insert(into.end(), from.begin(), from.end());
    std::sort(into.begin(), into.end());
    from.clear();
    live[static_cast<std::size_t>(hi)] = 0;
    node[static_cast<std::size_t>(lo)] = n + step;
    dmax.col(lo) = dmax.col(lo).cwiseMax(dmax.col(hi));

    for (int c = 0; c < n; ++c) {
      if (c == lo || !live[static_cast<std::size_t>(c)]) continue;
      const double r = radius(lo, c, nullptr);
      link(lo, c) = r;
      link(c, lo) = r;
    }
    rescan(lo);
    for (int c = 0; c < n; ++c) {
      if (c == lo || !live[static_cast<std::size_t>(c)]) continue;
      const int cur = nn[static_cast<std::size_t>(c)];
      if (cur == lo || cur == hi) {
        rescan(c);
      } else if (link(c, lo) < nnd[static_cast<std::size_t>(c)] ||
                 (link(c, lo) == nnd[static_cast<std::size_t>(c)] && lo < cur)) {
        nn[static_cast<std::size_t>(c)] = lo;
        nnd[static_cast<std::size_t>(c)] = link(c, lo);
      }
    }
  }
  return dend;
}

std::vector<std::vector<int>> cut_dendrogram(const Dendrogram& dend, double h) {
  const int n = dend.leaves;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      x = parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    }
    return x;
  };
  // Any element of a node identifies it.
  std::vector<int> element_of(static_cast<std::size_t>(n) + dend.merges.size());
  std::iota(element_of.begin(), element_of.begin() + n, 0);
  for (std::size_t m = 0; m < dend.merges.size(); ++m) {
    const auto& mg = dend.merges[m];
    const int a = element_of[static_cast<std::size_t>(mg.left)];
    const int b = element_of[static_cast<std::size_t>(mg.right)];
    element_of[static_cast<std::size_t>(n) + m] = a;
    if (mg.height <= h) {
      const int ra = find(a), rb = find(b);
      if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
    }
  }
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) {
    auto& s = slot[static_cast<std::size_t>(find(i))];
    if (s < 0) {
      s = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(s)].push_back(i);
  }
  return clusters;
}

RefinedDictionary cluster_representatives(const std::vector<std::vector<int>>& clusters,
                                          const DissimilarityMatrix& d,
                                          const SpatialDictionary& dict) {
  if (static_cast<std::size_t>(d.size()) != dict.size()) {
    throw Error("dissimilarity matrix does not match dictionary size");
  }
  RefinedDictionary out;
  out.dictionary.geometry = dict.geometry;
  std::vector<double> others;
  for (const auto& cluster : clusters) {
    if (cluster.empty()) throw Error("empty cluster");
    int best = cluster.front();
    if (cluster.size() > 1) {
      double best_median = std::numeric_limits<double>::infinity();
      std::vector<int> sorted = cluster;
      std::sort(sorted.begin(), sorted.end());
      for (const int i : sorted) {
        others.clear();
        for (const int j : sorted) {
          if (j != i) others.push_back(d(i, j));
        }
        const double med = median(others);
        if (med < best_median) {
          best_median = med;
          best = i;
        }
      }
    }
    auto comp = dict.components[static_cast<std::size_t>(best)];
    comp.provenance = ClusterProvenance{best, static_cast<int>(cluster.size())};
    out.dictionary.components.push_back(std::move(comp));
    out.representatives.push_back(best);
    out.cluster_sizes.push_back(static_cast<int>(cluster.size()));
  }
  return out;
}

}  // namespace scalpel
