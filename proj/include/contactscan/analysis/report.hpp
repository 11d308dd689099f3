#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "contactscan/util/format.hpp"

namespace contactscan::analysis
{
enum class Intent
{
  use,
  handoff,
};

inline const char* intent_name(Intent i) { return i == Intent::use ? "use" : "handoff"; }

inline Intent parse_intent(const std::string& s)
{
  if (s == "use")
  {
    return Intent::use;
  }
  if (s == "handoff")
  {
    return Intent::handoff;
  }
  throw std::invalid_argument("intent must be 'use' or 'handoff', got '" + s + "'");
}

struct GraspRecord
{
  std::string participant_id;
  std::string object_id;
  Intent intent = Intent::use;
  bool bimanual = false;
  double hand_length = 0.0;  // m, wrist to middle fingertip
};

struct GroupStats
{
  std::string object_id;
  Intent intent = Intent::use;
  bool bimanual = false;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;     // sample (n - 1) standard deviation
  bool single = false;     // one member: stddev reported as 0
};

/// Hand-length mean and sample standard deviation per (object, intent,
/// bimanual) group, in key order.
inline std::vector<GroupStats> bimanual_stats(const std::vector<GraspRecord>& records)
{
  std::map<std::tuple<std::string, int, bool>, std::vector<double>> groups;
  for (const GraspRecord& r : records)
  {
    if (!(r.hand_length > 0.0))
    {
      throw std::invalid_argument("hand length must be positive for participant '" +
                                  r.participant_id + "'");
    }
    groups[{r.object_id, static_cast<int>(r.intent), r.bimanual}].push_back(r.hand_length);
  }
  std::vector<GroupStats> out;
  for (const auto& [key, values] : groups)
  {
    GroupStats g;
    g.object_id = std::get<0>(key);
    g.intent = static_cast<Intent>(std::get<1>(key));
    g.bimanual = std::get<2>(key);
    g.count = values.size();
    double sum = 0.0;
    for (const double v : values)
    {
      sum += v;
    }
    g.mean = sum / static_cast<double>(values.size());
    if (values.size() == 1)
    {
      g.single = true;
    }
    else
    {
      double ss = 0.0;
      for (const double v : values)
      {
        ss += (v - g.mean) * (v - g.mean);
      }
      g.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    out.push_back(g);
  }
  return out;
}

struct ActiveAreaRow
{
  std::string area;
  Intent intent = Intent::use;
  double fraction = 0.0;
};

/// Percentage with two decimals: 0.28 -> "28.00".
inline std::string format_percent(double fraction) { return util::format_fixed(100.0 * fraction, 2); }

/// Tab-separated active-area table: area, intent, percent.
inline void write_active_area_table(std::ostream& out, const std::vector<ActiveAreaRow>& rows)
{
  out << "area\tintent\tpercent\n";
  for (const auto& r : rows)
  {
    out << r.area << '\t' << intent_name(r.intent) << '\t' << format_percent(r.fraction) << '\n';
  }
}

inline void write_bimanual_table(std::ostream& out, const std::vector<GroupStats>& groups)
{
  out << "object\tintent\tbimanual\tn\tmean_m\tstd_m\n";
  for (const auto& g : groups)
  {
    out << g.object_id << '\t' << intent_name(g.intent) << '\t' << (g.bimanual ? 1 : 0) << '\t'
        << g.count << '\t' << util::format_fixed(g.mean, 5) << '\t'
        << (g.single ? std::string("-") : util::format_fixed(g.stddev, 5)) << '\n';
  }
}
}  // namespace contactscan::analysis
