#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "contactscan/core/error.hpp"
#include "contactscan/diverse/metrics.hpp"
#include "contactscan/util/format.hpp"
#include "contactscan/util/parallel.hpp"

namespace contactscan::diverse
{
struct ColumnSpec
{
  std::string intent;    // handoff | use
  std::string strategy;  // smcl | diversenet
  int k = 1;
  std::string model;  // voxnet | pointnet

  std::string strategy_label() const
  {
    return std::string(strategy == "diversenet" ? "DiverseNet" : "sMCL") + " (k=" + std::to_string(k) + ")";
  }
  std::string model_label() const
  {
    return model == "voxnet" ? "VoxNet" : model == "pointnet" ? "PointNet" : model;
  }
  std::string key() const { return intent + "/" + strategy + "_k" + std::to_string(k) + "/" + model; }

  bool operator==(const ColumnSpec&) const = default;
};

/// Default table rows, in order.
inline std::vector<std::string> default_table_objects() { return {"pan", "wine glass", "mug"}; }

/// Handoff then use; sMCL k=1, sMCL k=10, DiverseNet k=10; VoxNet then PointNet.
inline std::vector<ColumnSpec> default_table_columns()
{
  std::vector<ColumnSpec> out;
  for (const char* intent : {"handoff", "use"})
  {
    for (const auto& [strategy, k] : {std::pair{"smcl", 1}, std::pair{"smcl", 10}, std::pair{"diversenet", 10}})
    {
      for (const char* model : {"voxnet", "pointnet"})
      {
        out.push_back({intent, strategy, k, model});
      }
    }
  }
  return out;
}

/// Ground-truth label sets per intent and object.
using GroundTruth = std::map<std::string, std::map<std::string, std::vector<Labels>>>;

struct ColumnInput
{
  ColumnSpec spec;
  std::map<std::string, PredictionSet> predictions;  // per object
};

struct ErrorTable
{
  std::vector<std::string> objects;  // the average row follows these
  std::vector<ColumnSpec> columns;
  std::vector<std::vector<std::optional<double>>> cells;  // (objects + 1) x columns; empty = no contact

  const std::optional<double>& at(std::size_t row, std::size_t col) const { return cells.at(row).at(col); }
  const std::optional<double>& average(std::size_t col) const { return cells.at(objects.size()).at(col); }
};

/// Mean matched error over the object's ground-truth maps; empty when no
/// prediction has contact.
inline std::optional<double> object_error(const std::vector<Labels>& gts, const PredictionSet& preds)
{
  double sum = 0.0;
  for (const Labels& gt : gts)
  {
    const Match m = match_to_closest(gt, preds);
    if (m.no_contact())
    {
      return std::nullopt;
    }
    sum += m.error;
  }
  return sum / static_cast<double>(gts.size());
}

/// One cell per object and column plus an unweighted average row; the average
/// is empty if any object cell is.
inline ErrorTable evaluate_table(const std::vector<std::string>& objects, const GroundTruth& gt,
                                 const std::vector<ColumnInput>& columns, unsigned threads = 1)
{
  if (objects.empty())
  {
    throw std::invalid_argument("error table needs at least one object");
  }
  ErrorTable t;
  t.objects = objects;
  for (const auto& c : columns)
  {
    t.columns.push_back(c.spec);
  }
  t.cells.assign(objects.size() + 1, std::vector<std::optional<double>>(columns.size()));
  // Validate up front so worker threads never throw.
  for (const auto& c : columns)
  {
    const auto intent = gt.find(c.spec.intent);
    for (const auto& obj : objects)
    {
      if (intent == gt.end() || !intent->second.count(obj) || intent->second.at(obj).empty())
      {
        throw InputError("no ground truth for object '" + obj + "' with intent '" + c.spec.intent + "'");
      }
      const auto p = c.predictions.find(obj);
      if (p == c.predictions.end())
      {
        throw InputError("column " + c.spec.key() + " has no predictions for object '" + obj + "'");
      }
      p->second.validate();
      for (const Labels& l : intent->second.at(obj))
      {
        if (l.size() != p->second.elements())
        {
          throw InputError("column " + c.spec.key() + ", object '" + obj + "': " +
                           std::to_string(p->second.elements()) + " predicted elements for " +
                           std::to_string(l.size()) + " labels");
        }
      }
    }
  }
  util::parallel_for(0, objects.size(), threads, [&](std::size_t r) {
    for (std::size_t c = 0; c < columns.size(); ++c)
    {
      t.cells[r][c] = object_error(gt.at(columns[c].spec.intent).at(objects[r]),
                                   columns[c].predictions.at(objects[r]));
    }
  });
  for (std::size_t c = 0; c < columns.size(); ++c)
  {
    double sum = 0.0;
    bool complete = true;
    for (std::size_t r = 0; r < objects.size(); ++r)
    {
      complete = complete && t.cells[r][c].has_value();
      sum += t.cells[r][c].value_or(0.0);
    }
    if (complete)
    {
      t.cells[objects.size()][c] = sum / static_cast<double>(objects.size());
    }
  }
  return t;
}

inline std::string format_cell(const std::optional<double>& v)
{
  return v ? util::format_fixed(*v, 2) : std::string(kNoContact);
}

// Three tab-separated header lines (intent, strategy, model), then one line
// per object and a final "average" line; errors in percent, two decimals.
inline void write_error_table(std::ostream& out, const ErrorTable& t)
{
  out << "intent";
  for (const auto& c : t.columns)
  {
    out << '\t' << c.intent;
  }
  out << "\nstrategy";
  for (const auto& c : t.columns)
  {
    out << '\t' << c.strategy_label();
  }
  out << "\nmodel";
  for (const auto& c : t.columns)
  {
    out << '\t' << c.model_label();
  }
  out << '\n';
  for (std::size_t r = 0; r <= t.objects.size(); ++r)
  {
    out << (r < t.objects.size() ? t.objects[r] : "average");
    for (std::size_t c = 0; c < t.columns.size(); ++c)
    {
      out << '\t' << format_cell(t.cells[r][c]);
    }
    out << '\n';
  }
}
}  // namespace contactscan::diverse
