#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "contactscan/analysis/distance.hpp"
#include "contactscan/util/rng.hpp"

namespace contactscan::analysis
{
struct KMedoidsResult
{
  std::vector<std::size_t> assignments;  // cluster index per item
  std::vector<std::size_t> medoids;      // item index per cluster, ascending
  double cost = 0.0;
  std::vector<double> cost_history;  // after every assignment, update and swap step
  int restarts_used = 0;
};

namespace kmedoids_detail
{
// Nearest medoid per item; ties go to the lowest cluster index.
inline double assign(const DistanceMatrix& d, const std::vector<std::size_t>& medoids,
                     std::vector<std::size_t>& out)
{
  out.assign(d.size(), 0);
  double cost = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < medoids.size(); ++c)
    {
      const double v = d(i, medoids[c]);
      if (v < best)
      {
        best = v;
        out[i] = c;
      }
    }
    cost += best;
  }
  return cost;
}

inline double total_cost(const DistanceMatrix& d, const std::vector<std::size_t>& medoids)
{
  std::vector<std::size_t> scratch;
  return assign(d, medoids, scratch);
}

inline void sort_medoids(std::vector<std::size_t>& medoids) { std::sort(medoids.begin(), medoids.end()); }

// First medoid minimizes the total distance, the rest are farthest-first.
inline std::vector<std::size_t> greedy_init(const DistanceMatrix& d, std::size_t k)
{
  const std::size_t n = d.size();
  std::vector<std::size_t> medoids;
  std::size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
  {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
    {
      s += d(i, j);
    }
    if (s < best)
    {
      best = s;
      first = i;
    }
  }
  medoids.push_back(first);
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    nearest[i] = d(i, first);
  }
  std::vector<bool> chosen(n, false);
  chosen[first] = true;
  while (medoids.size() < k)
  {
    std::size_t pick = n;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i)
    {
      if (!chosen[i] && nearest[i] > far)
      {
        far = nearest[i];
        pick = i;
      }
    }
    chosen[pick] = true;
    medoids.push_back(pick);
    for (std::size_t i = 0; i < n; ++i)
    {
      nearest[i] = std::min(nearest[i], d(i, pick));
    }
  }
  sort_medoids(medoids);
  return medoids;
}

inline std::vector<std::size_t> random_init(std::size_t n, std::size_t k, util::Rng& rng)
{
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  for (std::size_t i = 0; i < k; ++i)
  {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::size_t> medoids(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  sort_medoids(medoids);
  return medoids;
}

// Alternation (assign, move each medoid to its cluster's cost minimizer)
// until stable, then the best improving single medoid swap; repeated until
// no swap improves.
inline KMedoidsResult run(const DistanceMatrix& d, std::vector<std::size_t> medoids)
{
  const std::size_t n = d.size();
  KMedoidsResult r;
  std::vector<std::size_t> assignments;
  double cost = assign(d, medoids, assignments);
  r.cost_history.push_back(cost);
  for (;;)
  {
    bool changed = false;
    for (std::size_t c = 0; c < medoids.size(); ++c)
    {
      std::size_t best_m = medoids[c];
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < n; ++m)
      {
        if (assignments[m] != c)
        {
          continue;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
          if (assignments[i] == c)
          {
            s += d(i, m);
          }
        }
        if (s < best)
        {
          best = s;
          best_m = m;
        }
      }
      if (best_m != medoids[c])
      {
        std::vector<std::size_t> trial = medoids;
        trial[c] = best_m;
        // Within-cluster sums can tie; only accept moves that lower the cost.
        if (total_cost(d, trial) < cost)
        {
          medoids = std::move(trial);
          changed = true;
        }
      }
    }
    if (changed)
    {
      sort_medoids(medoids);
      cost = assign(d, medoids, assignments);
      r.cost_history.push_back(cost);
      continue;
    }
    // Swap phase.
    double best_cost = cost;
    std::vector<std::size_t> best_medoids;
    for (std::size_t c = 0; c < medoids.size(); ++c)
    {
      for (std::size_t m = 0; m < n; ++m)
      {
        if (std::find(medoids.begin(), medoids.end(), m) != medoids.end())
        {
          continue;
        }
        std::vector<std::size_t> trial = medoids;
        trial[c] = m;
        sort_medoids(trial);
        const double t = total_cost(d, trial);
        if (t < best_cost)
        {
          best_cost = t;
          best_medoids = std::move(trial);
        }
      }
    }
    if (best_medoids.empty())
    {
      break;
    }
    medoids = std::move(best_medoids);
    cost = assign(d, medoids, assignments);
    r.cost_history.push_back(cost);
  }
  r.assignments = std::move(assignments);
  r.medoids = std::move(medoids);
  r.cost = cost;
  return r;
}
}  // namespace kmedoids_detail

/// k-medoids on a precomputed distance matrix. The greedy start is always
/// run; `restarts` extra seeded random starts are kept only if strictly
/// cheaper.
inline KMedoidsResult kmedoids(const DistanceMatrix& d, std::size_t k, std::uint64_t seed = 0,
                               int restarts = 32)
{
  if (k == 0)
  {
    throw std::invalid_argument("k must be positive");
  }
  if (d.size() < k)
  {
    throw std::invalid_argument("k-medoids needs at least k items");
  }
  KMedoidsResult best = kmedoids_detail::run(d, kmedoids_detail::greedy_init(d, k));
  util::Rng rng(seed);
  for (int r = 0; r < restarts && k < d.size(); ++r)
  {
    KMedoidsResult trial = kmedoids_detail::run(d, kmedoids_detail::random_init(d.size(), k, rng));
    if (trial.cost < best.cost)
    {
      best = std::move(trial);
      best.restarts_used = r + 1;
    }
  }
  return best;
}

/// Medoid of the largest cluster; ties go to the lower cluster cost, then
/// the lower medoid index.
inline std::size_t dominant_map(const DistanceMatrix& d, std::size_t k, std::uint64_t seed = 0,
                                int restarts = 32)
{
  const KMedoidsResult r = kmedoids(d, k, seed, restarts);
  std::vector<std::size_t> size(k, 0);
  std::vector<double> cost(k, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    ++size[r.assignments[i]];
    cost[r.assignments[i]] += d(i, r.medoids[r.assignments[i]]);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c)
  {
    if (size[c] > size[best] || (size[c] == size[best] && cost[c] < cost[best]))
    {
      best = c;
    }
  }
  return r.medoids[best];
}
}  // namespace contactscan::analysis
