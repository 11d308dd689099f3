#pragma once

// Portable float map (grayscale "Pf", little-endian, rows stored bottom to top)
// and binary 8-bit PGM ("P5") readers/writers.

#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "contactscan/core/error.hpp"
#include "contactscan/util/image.hpp"

namespace contactscan::util
{
namespace pfm_detail
{
inline std::string next_token(std::istream& in)
{
  std::string tok;
  char c = 0;
  while (in.get(c))
  {
    if (c == '#')
    {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)))
    {
      if (!tok.empty())
      {
        break;
      }
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}
}  // namespace pfm_detail

inline void write_pfm(const std::string& path, const FloatImage& img)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw InputError("cannot write '" + path + "'");
  }
  out << "Pf\n" << img.width() << ' ' << img.height() << "\n-1.0\n";
  for (int y = img.height() - 1; y >= 0; --y)
  {
    out.write(reinterpret_cast<const char*>(&img(0, y)),
              static_cast<std::streamsize>(sizeof(float) * img.width()));
  }
  if (!out)
  {
    throw InputError("failed writing '" + path + "'");
  }
}

inline FloatImage read_pfm(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw InputError("cannot open '" + path + "'");
  }
  const std::string magic = pfm_detail::next_token(in);
  if (magic != "Pf")
  {
    throw InputError(path + ": not a grayscale PFM");
  }
  int w = 0;
  int h = 0;
  double scale = 0.0;
  try
  {
    w = std::stoi(pfm_detail::next_token(in));
    h = std::stoi(pfm_detail::next_token(in));
    scale = std::stod(pfm_detail::next_token(in));
  }
  catch (const std::exception&)
  {
    throw InputError(path + ": malformed PFM header");
  }
  if (w <= 0 || h <= 0)
  {
    throw InputError(path + ": bad PFM size");
  }
  if (scale >= 0.0)
  {
    throw InputError(path + ": big-endian PFM not supported");
  }
  FloatImage img(w, h);
  for (int y = h - 1; y >= 0; --y)
  {
    if (!in.read(reinterpret_cast<char*>(&img(0, y)),
                 static_cast<std::streamsize>(sizeof(float) * w)))
    {
      throw InputError(path + ": truncated PFM data");
    }
  }
  return img;
}

inline void write_pgm(const std::string& path, const LabelImage& img)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw InputError("cannot write '" + path + "'");
  }
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()),
            static_cast<std::streamsize>(img.size()));
}

inline LabelImage read_pgm(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw InputError("cannot open '" + path + "'");
  }
  if (pfm_detail::next_token(in) != "P5")
  {
    throw InputError(path + ": not a binary PGM");
  }
  int w = 0;
  int h = 0;
  int maxval = 0;
  try
  {
    w = std::stoi(pfm_detail::next_token(in));
    h = std::stoi(pfm_detail::next_token(in));
    maxval = std::stoi(pfm_detail::next_token(in));
  }
  catch (const std::exception&)
  {
    throw InputError(path + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
  {
    throw InputError(path + ": unsupported PGM");
  }
  LabelImage img(w, h);
  if (!in.read(reinterpret_cast<char*>(img.data().data()), static_cast<std::streamsize>(img.size())))
  {
    throw InputError(path + ": truncated PGM data");
  }
  return img;
}
}  // namespace contactscan::util
