#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace contactscan::repr
{
inline constexpr double kProbEps = 1e-7;

/// -(1/|mask|) sum over masked elements of w y log p + (1 - y) log(1 - p),
/// with p clamped to [1e-7, 1 - 1e-7].
inline double weighted_cross_entropy(std::span<const double> probs, std::span<const std::uint8_t> labels,
                                     std::span<const std::uint8_t> mask, double positive_weight = 10.0)
{
  if (probs.size() != labels.size() || probs.size() != mask.size())
  {
    throw std::invalid_argument("probabilities, labels and mask differ in length");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < probs.size(); ++i)
  {
    if (!mask[i])
    {
      continue;
    }
    const double p = std::clamp(probs[i], kProbEps, 1.0 - kProbEps);
    sum += labels[i] ? positive_weight * std::log(p) : std::log1p(-p);
    ++n;
  }
  if (n == 0)
  {
    throw std::invalid_argument("weighted cross entropy over an empty mask");
  }
  return -sum / static_cast<double>(n);
}
}  // namespace contactscan::repr
