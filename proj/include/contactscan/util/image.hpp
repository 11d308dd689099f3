#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace contactscan
{
/// Row-major single-channel image; (x, y) = (column, row), row 0 at the top.
template <typename T>
class Image
{
public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill)
  {
    if (width < 0 || height < 0)
    {
      throw std::invalid_argument("negative image size");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool in_bounds(int x, int y) const
  {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y)
  {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const
  {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Image&) const = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using FloatImage = Image<float>;
using LabelImage = Image<std::uint8_t>;
}  // namespace contactscan
