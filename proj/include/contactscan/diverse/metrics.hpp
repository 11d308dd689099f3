#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "contactscan/repr/io.hpp"

namespace contactscan::diverse
{
using repr::PredictionSet;
using Labels = std::vector<std::uint8_t>;

inline constexpr double kPredictionThreshold = 0.5;

/// Rendered in error tables where no prediction had any contact.
inline constexpr const char* kNoContact = "-";

/// Percent of elements where (p > threshold) differs from the label.
inline double prediction_error(std::span<const std::uint8_t> gt, std::span<const float> probs,
                               double threshold = kPredictionThreshold)
{
  if (gt.size() != probs.size())
  {
    throw std::invalid_argument("ground truth has " + std::to_string(gt.size()) + " elements, prediction " +
                                std::to_string(probs.size()));
  }
  if (gt.empty())
  {
    throw std::invalid_argument("prediction error over zero elements");
  }
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < gt.size(); ++i)
  {
    wrong += (probs[i] > threshold) != (gt[i] != 0);
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(gt.size());
}

inline bool has_contact(std::span<const float> probs, double threshold = kPredictionThreshold)
{
  for (const float p : probs)
  {
    if (p > threshold)
    {
      return true;
    }
  }
  return false;
}

struct Match
{
  std::optional<std::size_t> index;  // empty: no prediction had contact
  double error = std::numeric_limits<double>::quiet_NaN();

  bool no_contact() const { return !index.has_value(); }
};

/// Closest prediction among those with at least one contact element; ties go
/// to the lower index.
inline Match match_to_closest(std::span<const std::uint8_t> gt, const PredictionSet& preds,
                              double threshold = kPredictionThreshold)
{
  if (preds.k() == 0)
  {
    throw std::invalid_argument("prediction set is empty");
  }
  Match best;
  for (std::size_t i = 0; i < preds.k(); ++i)
  {
    const auto& m = preds.maps[i];
    const double e = prediction_error(gt, m, threshold);
    if (!has_contact(m, threshold))
    {
      continue;
    }
    if (best.no_contact() || e < best.error)
    {
      best.index = i;
      best.error = e;
    }
  }
  return best;
}

/// Control value whose prediction is closest to the ground truth; ties go to
/// the lowest value. Empty predictions are not discarded here.
inline std::size_t diversenet_assign(std::span<const std::uint8_t> gt, const PredictionSet& per_control,
                                     double threshold = kPredictionThreshold)
{
  if (per_control.k() == 0)
  {
    throw std::invalid_argument("prediction set is empty");
  }
  std::size_t best = 0;
  double best_e = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < per_control.k(); ++c)
  {
    const double e = prediction_error(gt, per_control.maps[c], threshold);
    if (e < best_e)
    {
      best_e = e;
      best = c;
    }
  }
  return best;
}
}  // namespace contactscan::diverse
