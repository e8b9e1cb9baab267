#include "scalpel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace scalpel {

double oracle_objective(const Matrix& y, const Matrix& a_tilde, const Matrix& z, double lambda,
                        double alpha) {
  const auto p = y.rows(), t = y.cols(), k = a_tilde.cols();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      double fit = 0.0;
      for (Eigen::Index n = 0; n < k; ++n) fit += a_tilde(i, n) * z(n, j);
      const double r = y(i, j) - fit;
      loss += r * r;
    }
  }
  double l1 = 0.0, group = 0.0;
  for (Eigen::Index n = 0; n < k; ++n) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < t; ++j) {
      l1 += std::abs(z(n, j));
      sq += z(n, j) * z(n, j);
    }
    group += std::sqrt(sq);
  }
  return 0.5 * loss + lambda * alpha * l1 + lambda * (1.0 - alpha) * group;
}

OracleResult oracle_sgl(const Matrix& y, const Matrix& a_tilde, double lambda, double alpha,
                        long iterations) {
  if (y.rows() != a_tilde.rows()) throw Error("oracle: Y and A differ in rows");
  const auto p = y.rows(), t = y.cols(), k = a_tilde.cols();
  double gram_fro = 0.0;
  for (Eigen::Index m = 0; m < k; ++m) {
    for (Eigen::Index n = 0; n < k; ++n) {
      double g = 0.0;
      for (Eigen::Index i = 0; i < p; ++i) g += a_tilde(i, m) * a_tilde(i, n);
      gram_fro += g * g;
    }
  }
  const double c = gram_fro > 0.0 ? 1.0 / std::sqrt(gram_fro) : 1.0;

  if (k > 12) throw Error("oracle: too many components for support enumeration");

  Matrix z0 = Matrix::Zero(k, t);
  OracleResult best{z0, oracle_objective(y, a_tilde, z0, lambda, alpha)};
  Matrix resid(p, t), corr(k, t), sub(k, t);
  // Rows outside `support` are held at zero. The row that is zero at the
  // optimum sits on a kink of the group norm; pinning it removes the kink.
  for (long support = 1; support < (1L << k); ++support) {
    Matrix z = Matrix::Zero(k, t);
    for (long b = 1; b <= iterations; ++b) {
      for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < t; ++j) {
          double fit = 0.0;
          for (Eigen::Index n = 0; n < k; ++n) fit += a_tilde(i, n) * z(n, j);
          resid(i, j) = y(i, j) - fit;
        }
      }
      for (Eigen::Index n = 0; n < k; ++n) {
        for (Eigen::Index j = 0; j < t; ++j) {
          double s = 0.0;
          for (Eigen::Index i = 0; i < p; ++i) s += a_tilde(i, n) * resid(i, j);
          corr(n, j) = s;
        }
      }
      // Smallest subgradient compatible with z >= 0, row by row.
      for (Eigen::Index n = 0; n < k; ++n) {
        if (!(support >> n & 1)) {
          sub.row(n).setZero();
          continue;
        }
        double norm = 0.0;
        for (Eigen::Index j = 0; j < t; ++j) norm += z(n, j) * z(n, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) {
          double s2 = 0.0;
          for (Eigen::Index j = 0; j < t; ++j) {
            const double s = std::max(0.0, corr(n, j) - lambda * alpha);
            sub(n, j) = s;
            s2 += s * s;
          }
          const double sn = std::sqrt(s2);
          const double keep = sn > lambda * (1.0 - alpha) ? 1.0 - lambda * (1.0 - alpha) / sn : 0.0;
          for (Eigen::Index j = 0; j < t; ++j) sub(n, j) = -keep * sub(n, j);
        } else {
          for (Eigen::Index j = 0; j < t; ++j) {
            if (z(n, j) > 0.0) {
              sub(n, j) = -corr(n, j) + lambda * alpha + lambda * (1.0 - alpha) * z(n, j) / norm;
            } else {
              sub(n, j) = std::min(0.0, lambda * alpha - corr(n, j));
            }
          }
        }
      }
      const double step = c / std::sqrt(static_cast<double>(b));
      for (Eigen::Index n = 0; n < k; ++n) {
        for (Eigen::Index j = 0; j < t; ++j) z(n, j) = std::max(0.0, z(n, j) - step * sub(n, j));
      }
      const double f = oracle_objective(y, a_tilde, z, lambda, alpha);
      if (f < best.objective) {
        best.objective = f;
        best.z = z;
      }
    }
  }
  return best;
}

std::vector<std::vector<int>> oracle_flood_fill(const BinaryImage& image) {
  const auto& g = image.geometry;
  std::vector<char> seen(static_cast<std::size_t>(g.pixels()), 0);
  std::vector<std::vector<int>> out;
  std::function<void(int, int, std::vector<int>&)> fill = [&](int r, int c, std::vector<int>& comp) {
    if (r < 0 || c < 0 || r >= g.height || c >= g.width) return;
    const int p = g.index(r, c);
    if (seen[static_cast<std::size_t>(p)] || !image.at(p)) return;
    seen[static_cast<std::size_t>(p)] = 1;
    comp.push_back(p);
    fill(r - 1, c, comp);
    fill(r + 1, c, comp);
    fill(r, c - 1, comp);
    fill(r, c + 1, comp);
  };
  for (int p = 0; p < g.pixels(); ++p) {
    if (seen[static_cast<std::size_t>(p)] || !image.at(p)) continue;
    out.emplace_back();
    fill(g.row(p), g.col(p), out.back());
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

}  // namespace scalpel
