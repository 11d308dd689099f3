#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "contactscan/core/error.hpp"
#include "contactscan/repr/features.hpp"

namespace contactscan::repr
{
static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::array<char, 4> kSampleMagic{'C', 'S', 'D', 'S'};
inline constexpr std::array<char, 4> kPredictionMagic{'C', 'S', 'P', 'R'};

enum class SampleKind : std::uint32_t
{
  point = 1,
  voxel = 2,
};

inline const char* kind_name(SampleKind k) { return k == SampleKind::point ? "point" : "voxel"; }

/// xyz features are unit-cube coordinates (voxel centers for grids).
inline constexpr std::uint32_t kXyzNormalized = 1;

namespace io_detail
{
class Writer
{
public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary)
  {
    if (!out_)
    {
      throw InputError("cannot write '" + path.string() + "'");
    }
  }
  template <typename T>
  void put(const T& v)
  {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <typename T>
  void put_array(const std::vector<T>& v)
  {
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  }
  void finish()
  {
    out_.flush();
    if (!out_)
    {
      throw InputError("failed writing '" + path_.string() + "'");
    }
  }

private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader
{
public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary)
  {
    if (!in_)
    {
      throw InputError("cannot open '" + path.string() + "'");
    }
  }
  template <typename T>
  T get(const char* what)
  {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (in_.gcount() != static_cast<std::streamsize>(sizeof(T)))
    {
      fail(std::string("truncated while reading ") + what);
    }
    return v;
  }
  template <typename T>
  std::vector<T> get_array(std::size_t n, const char* what)
  {
    std::vector<T> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (in_.gcount() != static_cast<std::streamsize>(n * sizeof(T)))
    {
      fail(std::string("truncated while reading ") + what);
    }
    return v;
  }
  void expect_end()
  {
    if (in_.peek() != std::char_traits<char>::eof())
    {
      fail("trailing bytes after payload");
    }
  }
  [[noreturn]] void fail(const std::string& msg) const
  {
    throw InputError("'" + path_.string() + "': " + msg);
  }

private:
  std::filesystem::path path_;
  std::ifstream in_;
};

inline void check_magic(Reader& r, const std::array<char, 4>& magic)
{
  for (const char c : magic)
  {
    if (r.get<char>("magic") != c)
    {
      r.fail("bad magic");
    }
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kFormatVersion)
  {
    r.fail("unsupported version " + std::to_string(version));
  }
}

inline void check_labels(Reader& r, const Labels& labels)
{
  if (std::any_of(labels.begin(), labels.end(), [](std::uint8_t v) { return v > 1; }))
  {
    r.fail("labels must be 0 or 1");
  }
}
}  // namespace io_detail

/// Exported sample as stored on disk.
struct SampleRecord
{
  SampleKind kind = SampleKind::point;
  std::uint32_t xyz_convention = kXyzNormalized;
  double scale = 1.0;
  std::uint32_t count = 0;        // points, or grid resolution for voxels
  std::uint32_t feature_dim = 4;  // 4 for points, 5 for voxels
  std::vector<float> features;    // count x 4, or res^3 x 5
  std::vector<std::uint8_t> occupancy;         // voxels only, res^3
  std::vector<std::uint32_t> surface_indices;  // voxels only
  Labels labels;                               // per point or per surface voxel

  bool operator==(const SampleRecord&) const = default;
};

inline SampleRecord to_record(const PointSample& s)
{
  SampleRecord r;
  r.kind = SampleKind::point;
  r.scale = s.scale;
  r.count = static_cast<std::uint32_t>(s.points.size());
  r.feature_dim = 4;
  r.features = s.features();
  r.labels = s.labels;
  return r;
}

inline SampleRecord to_record(const VoxelSample& s)
{
  SampleRecord r;
  r.kind = SampleKind::voxel;
  r.scale = s.scale;
  r.count = static_cast<std::uint32_t>(s.grid.res);
  r.feature_dim = 5;
  r.features = s.features();
  r.occupancy = s.grid.cells;
  r.surface_indices = s.surface_indices;
  r.labels = s.labels;
  return r;
}

// Sample file: "CSDS", u32 version, u32 kind, u32 xyz convention, f64 scale,
// u32 count, u32 feature_dim, f32 features[...]; voxels then add
// u8 occupancy[res^3], u32 n_surface, u32 surface_indices[n_surface];
// finally u8 labels[n_points or n_surface]. Little-endian throughout.
inline void write_sample(const std::filesystem::path& path, const SampleRecord& r)
{
  io_detail::Writer w(path);
  for (const char c : kSampleMagic)
  {
    w.put(c);
  }
  w.put(kFormatVersion);
  w.put(static_cast<std::uint32_t>(r.kind));
  w.put(r.xyz_convention);
  w.put(r.scale);
  w.put(r.count);
  w.put(r.feature_dim);
  w.put_array(r.features);
  if (r.kind == SampleKind::voxel)
  {
    w.put_array(r.occupancy);
    w.put(static_cast<std::uint32_t>(r.surface_indices.size()));
    w.put_array(r.surface_indices);
  }
  w.put_array(r.labels);
  w.finish();
}

inline SampleRecord read_sample(const std::filesystem::path& path)
{
  io_detail::Reader in(path);
  io_detail::check_magic(in, kSampleMagic);
  SampleRecord r;
  const auto kind = in.get<std::uint32_t>("kind");
  if (kind != 1 && kind != 2)
  {
    in.fail("unknown sample kind " + std::to_string(kind));
  }
  r.kind = static_cast<SampleKind>(kind);
  r.xyz_convention = in.get<std::uint32_t>("xyz convention");
  r.scale = in.get<double>("scale");
  if (!(r.scale > 0.0))
  {
    in.fail("scale must be positive");
  }
  r.count = in.get<std::uint32_t>("count");
  r.feature_dim = in.get<std::uint32_t>("feature dim");
  const std::uint32_t expected_dim = r.kind == SampleKind::point ? 4 : 5;
  if (r.feature_dim != expected_dim)
  {
    in.fail("feature dimension " + std::to_string(r.feature_dim) + " for " + kind_name(r.kind) +
            " sample, expected " + std::to_string(expected_dim));
  }
  const std::size_t elements = r.kind == SampleKind::point
                                   ? static_cast<std::size_t>(r.count)
                                   : static_cast<std::size_t>(r.count) * r.count * r.count;
  if (r.count == 0 || elements > (std::size_t{1} << 28))
  {
    in.fail("implausible element count");
  }
  r.features = in.get_array<float>(elements * r.feature_dim, "features");
  std::size_t n_labels = elements;
  if (r.kind == SampleKind::voxel)
  {
    r.occupancy = in.get_array<std::uint8_t>(elements, "occupancy");
    const auto n_surface = in.get<std::uint32_t>("surface count");
    if (n_surface > elements)
    {
      in.fail("more surface voxels than cells");
    }
    r.surface_indices = in.get_array<std::uint32_t>(n_surface, "surface indices");
    for (std::size_t i = 0; i < r.surface_indices.size(); ++i)
    {
      if (r.surface_indices[i] >= elements || (i > 0 && r.surface_indices[i] <= r.surface_indices[i - 1]))
      {
        in.fail("surface indices must be ascending and inside the grid");
      }
    }
    n_labels = n_surface;
  }
  r.labels = in.get_array<std::uint8_t>(n_labels, "labels");
  io_detail::check_labels(in, r.labels);
  in.expect_end();
  return r;
}

/// k probability maps over a shared element set.
struct PredictionSet
{
  SampleKind kind = SampleKind::voxel;
  std::vector<std::vector<float>> maps;

  std::size_t k() const { return maps.size(); }
  std::size_t elements() const { return maps.empty() ? 0 : maps.front().size(); }

  void validate() const
  {
    if (maps.empty())
    {
      throw std::invalid_argument("prediction set needs at least one map");
    }
    for (const auto& m : maps)
    {
      if (m.size() != maps.front().size())
      {
        throw std::invalid_argument("prediction maps differ in length");
      }
      for (const float p : m)
      {
        if (!(p >= 0.0f && p <= 1.0f))
        {
          throw std::invalid_argument("prediction probabilities must lie in [0, 1]");
        }
      }
    }
  }

  bool operator==(const PredictionSet&) const = default;
};

// Prediction file: "CSPR", u32 version, u32 kind, u32 k, u32 n_elements,
// f32 probs[k][n_elements]. Elements follow the sample's point order or
// ascending surface-voxel order.
inline void write_predictions(const std::filesystem::path& path, const PredictionSet& p)
{
  p.validate();
  io_detail::Writer w(path);
  for (const char c : kPredictionMagic)
  {
    w.put(c);
  }
  w.put(kFormatVersion);
  w.put(static_cast<std::uint32_t>(p.kind));
  w.put(static_cast<std::uint32_t>(p.k()));
  w.put(static_cast<std::uint32_t>(p.elements()));
  for (const auto& m : p.maps)
  {
    w.put_array(m);
  }
  w.finish();
}

inline PredictionSet read_predictions(const std::filesystem::path& path)
{
  io_detail::Reader in(path);
  io_detail::check_magic(in, kPredictionMagic);
  PredictionSet p;
  const auto kind = in.get<std::uint32_t>("kind");
  if (kind != 1 && kind != 2)
  {
    in.fail("unknown prediction kind " + std::to_string(kind));
  }
  p.kind = static_cast<SampleKind>(kind);
  const auto k = in.get<std::uint32_t>("k");
  const auto n = in.get<std::uint32_t>("element count");
  if (k == 0 || k > 1024 || n > (1u << 28))
  {
    in.fail("implausible prediction shape");
  }
  for (std::uint32_t i = 0; i < k; ++i)
  {
    p.maps.push_back(in.get_array<float>(n, "probabilities"));
  }
  in.expect_end();
  try
  {
    p.validate();
  }
  catch (const std::invalid_argument& e)
  {
    in.fail(e.what());
  }
  return p;
}

enum class Split
{
  train,
  test,
};

inline const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

inline const std::set<std::string>& default_held_out()
{
  static const std::set<std::string> held{"mug", "pan", "wine glass"};
  return held;
}

struct ManifestEntry
{
  std::string object;
  std::string intent;
  std::string sample_id;
  Split split = Split::train;
  std::string file;  // relative to the dataset root

  bool operator==(const ManifestEntry&) const = default;
};

inline Split split_for(const std::string& object, const std::set<std::string>& held_out = default_held_out())
{
  return held_out.count(object) ? Split::test : Split::train;
}

inline std::string file_safe(std::string s)
{
  for (char& c : s)
  {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.'))
    {
      c = '_';
    }
  }
  return s;
}

// Manifest: "# contactscan dataset 1" then tab-separated
// object, intent, sample id, split, file.
inline void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries)
{
  std::ofstream out(path);
  if (!out)
  {
    throw InputError("cannot write '" + path.string() + "'");
  }
  out << "# contactscan dataset " << kFormatVersion << "\n";
  out << "# object\tintent\tsample\tsplit\tfile\n";
  for (const auto& e : entries)
  {
    out << e.object << '\t' << e.intent << '\t' << e.sample_id << '\t' << split_name(e.split) << '\t'
        << e.file << '\n';
  }
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw InputError("cannot open manifest '" + path.string() + "'");
  }
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.empty() || line[0] == '#')
    {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t'))
    {
      fields.push_back(f);
    }
    if (fields.size() != 5)
    {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 5 tab-separated fields");
    }
    ManifestEntry e{fields[0], fields[1], fields[2], Split::train, fields[4]};
    if (fields[3] == "test")
    {
      e.split = Split::test;
    }
    else if (fields[3] != "train")
    {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": split must be train or test");
    }
    out.push_back(std::move(e));
  }
  return out;
}

struct DatasetItem
{
  std::string object;
  std::string intent;
  std::string sample_id;
  SampleRecord record;
};

/// Manifest entry for one sample: <split>/<object>_<intent>_<id>.<kind>.bin.
inline ManifestEntry dataset_entry(const std::string& object, const std::string& intent,
                                   const std::string& sample_id, SampleKind kind,
                                   const std::set<std::string>& held_out = default_held_out())
{
  ManifestEntry e{object, intent, sample_id, split_for(object, held_out), {}};
  e.file = std::string(split_name(e.split)) + "/" + file_safe(object) + "_" + file_safe(intent) + "_" +
           file_safe(sample_id) + "." + kind_name(kind) + ".bin";
  return e;
}

/// Writes one sample below `root` and returns its manifest entry.
inline ManifestEntry export_item(const std::filesystem::path& root, const DatasetItem& item,
                                 const std::set<std::string>& held_out = default_held_out())
{
  ManifestEntry e = dataset_entry(item.object, item.intent, item.sample_id, item.record.kind, held_out);
  std::filesystem::create_directories((root / e.file).parent_path());
  write_sample(root / e.file, item.record);
  return e;
}

/// Writes <root>/{train,test}/<object>_<intent>_<id>.<kind>.bin and
/// <root>/manifest.txt.
inline std::vector<ManifestEntry> export_dataset(const std::filesystem::path& root,
                                                 const std::vector<DatasetItem>& items,
                                                 const std::set<std::string>& held_out = default_held_out())
{
  std::vector<ManifestEntry> entries;
  for (const Split s : {Split::train, Split::test})
  {
    std::filesystem::create_directories(root / split_name(s));
  }
  for (const auto& item : items)
  {
    entries.push_back(export_item(root, item, held_out));
  }
  write_manifest(root / "manifest.txt", entries);
  return entries;
}
}  // namespace contactscan::repr
