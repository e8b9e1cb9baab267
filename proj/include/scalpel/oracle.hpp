#pragma once

#include "scalpel/core.hpp"
#include "scalpel/segment.hpp"

#include <vector>

namespace scalpel {

struct OracleResult {
  Matrix z;
  double objective = 0.0;
};

/// Projected subgradient descent on the full non-negative sparse group lasso
/// objective, steps c / sqrt(b) with c = 1 / ||A^T A||_F, keeping the best
/// iterate. Run once per non-empty row support (other rows pinned at zero),
/// `iterations` steps each. Meant for tiny instances only (K <= 12).
OracleResult oracle_sgl(const Matrix& y, const Matrix& a_tilde, double lambda, double alpha,
                        long iterations = 200000);

/// Objective evaluated with plain loops.
double oracle_objective(const Matrix& y, const Matrix& a_tilde, const Matrix& z, double lambda,
                        double alpha);

/// Recursive 4-neighbour flood fill; components sorted internally and ordered
/// by smallest pixel.
std::vector<std::vector<int>> oracle_flood_fill(const BinaryImage& image);

}  // namespace scalpel
