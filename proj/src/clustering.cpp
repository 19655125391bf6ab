#include "pcl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "pcl/parallel.hpp"
#include "pcl/rng.hpp"

namespace pcl {

namespace {

void check_features(const Mat& f) {
  for (std::size_t i = 0; i < f.rows; ++i) {
    const double n = norm2(f.row(i));
    if (std::abs(n - 1.0) > 1e-6)
      throw Error("kmeans: feature row " + std::to_string(i) + " is not unit-norm");
  }
}

// Uniform draw in (0,1] keyed on the point's value.
double point_uniform(std::uint64_t seed, std::uint64_t round, std::span<const double> row) {
  const std::uint64_t h = hash_doubles(seed, round, row);
  return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

// k-means++ with the selection done as an exponential race so the choice
// depends on point values only: argmin -ln(u_i)/w_i samples index i with
// probability w_i / sum(w).
Mat seed_centroids(const Mat& f, std::size_t k, std::uint64_t seed) {
  const std::size_t n = f.rows;
  Mat centroids(k, f.cols);
  std::vector<bool> chosen(n, false);
  std::vector<double> best_dot(n, -1.0);

  // First centroid: max keyed uniform.
  std::size_t first = 0;
  double best_u = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = point_uniform(seed, 0, f.row(i));
    if (u > best_u) {
      best_u = u;
      first = i;
    }
  }
  std::copy_n(f.row(first).data(), f.cols, centroids.row(0).data());
  chosen[first] = true;

  for (std::size_t t = 1; t < k; ++t) {
    const auto last = centroids.row(t - 1);
    for (std::size_t i = 0; i < n; ++i)
      best_dot[i] = std::max(best_dot[i], dot(f.row(i), last));

    std::size_t pick = n;
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (chosen[i]) continue;
      const double w = std::max(0.0, 2.0 - 2.0 * best_dot[i]);  // squared chordal distance
      if (w <= 0.0) continue;
      const double u = point_uniform(seed, t, f.row(i));
      const double race = -std::log(u) / w;
      if (race < best_t) {
        best_t = race;
        pick = i;
      }
    }
    if (pick == n) {
      // All remaining points coincide with chosen centroids; take the lowest
      // unchosen index so k stays exact.
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    std::copy_n(f.row(pick).data(), f.cols, centroids.row(t).data());
    chosen[pick] = true;
  }
  return centroids;
}

}  // namespace

Clustering kmeans(const Mat& features, std::size_t k, std::size_t max_iters, double tol,
                  std::uint64_t seed) {
  const std::size_t n = features.rows;
  const std::size_t d = features.cols;
  if (k < 1) throw Error("kmeans: k must be >= 1");
  if (k > n) throw Error("kmeans: k = " + std::to_string(k) + " exceeds sample count " +
                         std::to_string(n));
  check_features(features);

  Clustering out;
  out.k = k;
  out.centroids = seed_centroids(features, k, seed);
  out.assignment.assign(n, 0);
  out.member_count.assign(k, 0);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    // Assignment: highest cosine, ties toward the lowest cluster index.
    parallel_for(n, [&](std::size_t i) {
      const auto v = features.row(i);
      std::size_t best = 0;
      double best_dot = dot(v, out.centroids.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double s = dot(v, out.centroids.row(c));
        if (s > best_dot) {
          best_dot = s;
          best = c;
        }
      }
      out.assignment[i] = best;
    });
    std::fill(out.member_count.begin(), out.member_count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) out.member_count[out.assignment[i]]++;

    // Promote the farthest point of the largest cluster into each empty slot.
    for (std::size_t c = 0; c < k; ++c) {
      if (out.member_count[c] != 0) continue;
      std::size_t big = 0;
      for (std::size_t j = 1; j < k; ++j)
        if (out.member_count[j] > out.member_count[big]) big = j;
      std::size_t far = n;
      double far_dot = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (out.assignment[i] != big) continue;
        const double s = dot(features.row(i), out.centroids.row(big));
        if (s < far_dot) {
          far_dot = s;
          far = i;
        }
      }
      std::copy_n(features.row(far).data(), d, out.centroids.row(c).data());
      out.assignment[far] = c;
      out.member_count[big]--;
      out.member_count[c] = 1;
    }

    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      cost += 1.0 - dot(features.row(i), out.centroids.row(out.assignment[i]));
    if (!out.cost_trace.empty() && cost > out.cost_trace.back() + 1e-9)
      throw NumericError("kmeans: within-cluster cost increased across an iteration");
    out.cost_trace.push_back(cost);
    out.iterations = iter + 1;

    // Centroid update: normalized member mean, accumulated in row order.
    Mat next(k, d);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = features.row(i);
      auto c = next.row(out.assignment[i]);
      for (std::size_t j = 0; j < d; ++j) c[j] += v[j];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto row = next.row(c);
      const double nn = norm2(row);
      if (nn < 1e-12) {
        // Members cancel out; keep the previous centroid.
        std::copy_n(out.centroids.row(c).data(), d, row.data());
      } else {
        for (double& x : row) x /= nn;
      }
      movement = std::max(movement, std::sqrt(distance2(row, out.centroids.row(c))));
    }
    out.centroids = std::move(next);
    if (movement < tol) break;
  }
  return out;
}

std::vector<Clustering> multi_cluster(const Mat& features, const std::vector<std::size_t>& K,
                                      std::size_t max_iters, double tol, std::uint64_t seed) {
  if (K.empty()) throw Error("multi_cluster: K must be non-empty");
  std::vector<Clustering> out;
  out.reserve(K.size());
  for (std::size_t m = 0; m < K.size(); ++m)
    out.push_back(kmeans(features, K[m], max_iters, tol, derive_seed(seed, "multi-cluster", m)));
  return out;
}

void dump_assignments(const Clustering& c, std::ostream& out) {
  for (std::size_t i = 0; i < c.assignment.size(); ++i)
    out << i << "," << c.assignment[i] << "\n";
}

}  // namespace pcl
