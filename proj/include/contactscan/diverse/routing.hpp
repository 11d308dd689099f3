#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "contactscan/repr/sample.hpp"
#include "contactscan/util/rng.hpp"

namespace contactscan::diverse
{
struct RoutingParams
{
  double top_weight = 0.95;
  double drop_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const
  {
    if (!(top_weight > 0.0 && top_weight <= 1.0))
    {
      throw std::invalid_argument("top_weight must lie in (0, 1]");
    }
    if (!(drop_prob >= 0.0 && drop_prob < 1.0))
    {
      throw std::invalid_argument("drop_prob must lie in [0, 1)");
    }
  }
};

struct Routing
{
  std::vector<double> weights;
  std::vector<std::uint8_t> dropped;
  std::size_t winner = 0;
  bool fallback = false;  // every prediction was drawn for dropping; none dropped
};

/// Each prediction is dropped with probability drop_prob (one draw per
/// prediction, in index order). The lowest-error survivor gets top_weight and
/// the other survivors share the rest equally; a lone survivor gets 1.
inline Routing smcl_route(std::span<const double> errors, const RoutingParams& params, util::Rng& rng)
{
  params.validate();
  if (errors.empty())
  {
    throw std::invalid_argument("smcl routing needs at least one error");
  }
  for (const double e : errors)
  {
    if (!std::isfinite(e))
    {
      throw std::invalid_argument("smcl routing errors must be finite");
    }
  }
  const std::size_t k = errors.size();
  Routing out;
  out.dropped.assign(k, 0);
  std::size_t survivors = 0;
  for (std::size_t i = 0; i < k; ++i)
  {
    out.dropped[i] = repr::unit_uniform(rng) < params.drop_prob ? 1 : 0;
    survivors += !out.dropped[i];
  }
  if (survivors == 0)
  {
    out.dropped.assign(k, 0);
    out.fallback = true;
    survivors = k;
  }
  bool found = false;
  for (std::size_t i = 0; i < k; ++i)
  {
    if (!out.dropped[i] && (!found || errors[i] < errors[out.winner]))
    {
      out.winner = i;
      found = true;
    }
  }
  out.weights.assign(k, 0.0);
  if (survivors == 1)
  {
    out.weights[out.winner] = 1.0;
    return out;
  }
  const double rest = (1.0 - params.top_weight) / static_cast<double>(survivors - 1);
  for (std::size_t i = 0; i < k; ++i)
  {
    if (!out.dropped[i])
    {
      out.weights[i] = i == out.winner ? params.top_weight : rest;
    }
  }
  return out;
}

inline std::vector<double> smcl_weights(std::span<const double> errors, const RoutingParams& params = {})
{
  util::Rng rng(params.seed);
  return smcl_route(errors, params, rng).weights;
}
}  // namespace contactscan::diverse
