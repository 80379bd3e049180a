#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vcc/frame.hpp"
#include "vcc/rng.hpp"

namespace vcc {

inline constexpr std::size_t kHistogramBins = 32;
inline constexpr std::size_t kHistogramDims = 3 * kHistogramBins;

using FeatureVector = std::vector<double>;

// 32 bins per channel (value / 8), each channel block L1-normalised,
// concatenated R, G, B.
inline FeatureVector histogram_feature(const Frame& frame) {
  require_space(frame.space, ColorSpace::Rgb8, "histogram_feature");
  if (frame.pixels.empty()) fail(ErrorCode::EmptyFrame, "histogram of empty frame");
  std::vector<std::size_t> counts(kHistogramDims, 0);
  const std::size_t n = frame.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      ++counts[c * kHistogramBins + frame.pixels[3 * i + c] / 8];
    }
  }
  FeatureVector feature(kHistogramDims);
  for (std::size_t i = 0; i < kHistogramDims; ++i) {
    feature[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  }
  return feature;
}

inline double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;
};

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<FeatureVector> centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
  // Inertia after each Lloyd iteration (assignment + centroid update).
  std::vector<double> inertia_history;
};

namespace detail {

inline std::vector<FeatureVector> kmeans_plus_plus(const std::vector<FeatureVector>& points,
                                                   std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<FeatureVector> centroids;
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  centroids.push_back(points[first]);
  chosen[first] = true;

  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(points[i], centroids[0]);

  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double cumulative = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cumulative += nearest[i];
        if (nearest[i] > 0.0 && cumulative > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // Rounding left target at the very top: take the last positive weight.
        for (std::size_t i = n; i-- > 0;) {
          if (nearest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining point coincides with a centroid.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

}  // namespace detail

// Seeded k-means++ followed by Lloyd iterations. Assignment ties go to the
// lowest centroid index; an emptied cluster is reseeded with the point
// farthest from its own centroid.
inline KMeansResult kmeans(const std::vector<FeatureVector>& points, const KMeansOptions& options) {
  if (points.empty()) fail(ErrorCode::EmptyInput, "kmeans on zero points");
  const std::size_t n = points.size(), k = options.k, dim = points[0].size();
  if (k < 1 || k > n) {
    fail(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " with " + std::to_string(n) + " points");
  }
  for (const auto& p : points) {
    if (p.size() != dim) fail(ErrorCode::DimensionMismatch, "feature vectors differ in length");
  }

  Rng rng(options.seed);
  KMeansResult result;
  result.centroids = detail::kmeans_plus_plus(points, k, rng);
  result.assignments.assign(n, 0);

  std::vector<double> dist(n);
  std::vector<std::size_t> sizes(k);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    // Assignment.
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double d = squared_distance(points[i], result.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      result.assignments[i] = best;
      dist[i] = best_d;
      ++sizes[best];
    }

    // Empty-cluster repair.
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[result.assignments[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      --sizes[result.assignments[far]];
      result.assignments[far] = c;
      result.centroids[c] = points[far];
      dist[far] = 0.0;
      sizes[c] = 1;
    }

    // Update, accumulating in point order.
    std::vector<FeatureVector> updated(k, FeatureVector(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto& target = updated[result.assignments[i]];
      for (std::size_t j = 0; j < dim; ++j) target[j] += points[i][j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (double& v : updated[c]) v /= static_cast<double>(sizes[c]);
      shift = std::max(shift, std::sqrt(squared_distance(updated[c], result.centroids[c])));
    }
    result.centroids = std::move(updated);

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += squared_distance(points[i], result.centroids[result.assignments[i]]);
    }
    result.inertia = inertia;
    result.inertia_history.push_back(inertia);
    result.iterations = iter + 1;
    if (shift <= options.tolerance) break;
  }
  return result;
}

}  // namespace vcc
