#include "poesup/separability.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

namespace poesup {

SeparabilityResult picture_separability(const Matrix& embeddings, std::span<const int> picture_ids) {
  if (static_cast<Index>(picture_ids.size()) != embeddings.rows()) {
    throw std::invalid_argument("picture_separability: picture id count does not match row count");
  }
  std::map<int, std::vector<Index>> clusters;
  for (Index r = 0; r < embeddings.rows(); ++r) clusters[picture_ids[static_cast<std::size_t>(r)]].push_back(r);

  SeparabilityResult out;
  for (auto it = clusters.begin(); it != clusters.end();) {
    if (it->second.size() < 2) {
      out.excluded_pictures.push_back(it->first);
      it = clusters.erase(it);
    } else {
      ++it;
    }
  }
  if (clusters.size() < 2) {
    throw std::invalid_argument("picture_separability: need at least two pictures with two or more samples");
  }

  std::vector<Index> used;
  for (const auto& [pic, rows] : clusters) used.insert(used.end(), rows.begin(), rows.end());
  std::sort(used.begin(), used.end());

  // Pairwise distances among the rows that take part.
  const auto n = static_cast<Index>(used.size());
  Matrix x(n, embeddings.cols());
  for (Index i = 0; i < n; ++i) x.row(i) = embeddings.row(used[static_cast<std::size_t>(i)]);
  Matrix dist = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = (x.row(i) - x.row(j)).norm();
  }

  std::vector<int> label(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) label[static_cast<std::size_t>(i)] = picture_ids[static_cast<std::size_t>(used[static_cast<std::size_t>(i)])];

  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> sums;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& [s, c] = sums[label[static_cast<std::size_t>(j)]];
      s += dist(i, j);
      ++c;
    }
    const int own = label[static_cast<std::size_t>(i)];
    const double a = sums[own].first / sums[own].second;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [pic, sc] : sums) {
      if (pic != own) b = std::min(b, sc.first / sc.second);
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  out.samples_used = static_cast<std::size_t>(n);
  out.mean_silhouette = total / static_cast<double>(n);
  return out;
}

}  // namespace poesup
