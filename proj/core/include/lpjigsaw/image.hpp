#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lpjigsaw {

inline constexpr int kChannels = 3;
inline constexpr std::uint16_t kMaxIntensity = 65535;

// Row-major RGB image with 16-bit intensities. Also used for single pieces.
class Image {
 public:
  Image() = default;
  Image(int width, int height, std::uint16_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  std::uint16_t& at(int row, int col, int channel) {
    return data_[index(row, col, channel)];
  }
  std::uint16_t at(int row, int col, int channel) const {
    return data_[index(row, col, channel)];
  }

  std::span<std::uint16_t> data() { return data_; }
  std::span<const std::uint16_t> data() const { return data_; }

  // Copy of the region [row, row+h) x [col, col+w).
  Image crop(int row, int col, int w, int h) const;
  void paste(const Image& src, int row, int col);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) *
               kChannels +
           static_cast<std::size_t>(channel);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint16_t> data_;
};

// Rotates counter-clockwise by 90 degrees times `quarter_turns` (any integer,
// taken modulo 4).
Image rotate_ccw(const Image& image, int quarter_turns);

// Reads PNG (8/16-bit, gray/RGB/RGBA/palette) or binary PPM (P6). 8-bit
// samples are scaled by 257 onto the 16-bit range.
Image read_image(const std::filesystem::path& path);

// Writes a 16-bit RGB PNG.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace lpjigsaw
