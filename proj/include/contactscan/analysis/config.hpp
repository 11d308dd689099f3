#pragma once

#include <stdexcept>

namespace contactscan::analysis
{
struct AnalysisConfig
{
  double contact_threshold = 0.4;
  double sigmoid_low = 0.05;
  double sigmoid_high = 0.95;
  int k = 3;
  int n_sym_angles = 36;

  void validate() const
  {
    if (!(sigmoid_low > 0.0 && sigmoid_low < sigmoid_high && sigmoid_high < 1.0))
    {
      throw std::invalid_argument("sigmoid endpoints must satisfy 0 < low < high < 1");
    }
    if (!(contact_threshold > 0.0 && contact_threshold < 1.0))
    {
      throw std::invalid_argument("contact threshold must lie in (0, 1)");
    }
    if (k < 1 || n_sym_angles < 1)
    {
      throw std::invalid_argument("k and n_sym_angles must be positive");
    }
  }
};
}  // namespace contactscan::analysis
