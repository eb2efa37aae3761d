#include "lpjigsaw/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "lpjigsaw/errors.hpp"

namespace lpjigsaw {

namespace {

std::size_t sample_count(int width, int height) {
  if (width < 0 || height < 0) throw DimensionError("negative image dimensions");
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels;
}

}  // namespace

Image::Image(int width, int height, std::uint16_t fill)
    : width_(width), height_(height), data_(sample_count(width, height), fill) {}

Image Image::crop(int row, int col, int w, int h) const {
  if (row < 0 || col < 0 || row + h > height_ || col + w > width_) {
    throw DimensionError("crop region outside image");
  }
  Image out(w, h);
  for (int r = 0; r < h; ++r) {
    const auto* src = &data_[index(row + r, col, 0)];
    std::copy(src, src + static_cast<std::size_t>(w) * kChannels, &out.data_[out.index(r, 0, 0)]);
  }
  return out;
}

void Image::paste(const Image& src, int row, int col) {
  if (row < 0 || col < 0 || row + src.height_ > height_ || col + src.width_ > width_) {
    throw DimensionError("paste region outside image");
  }
  for (int r = 0; r < src.height_; ++r) {
    const auto* from = &src.data_[src.index(r, 0, 0)];
    std::copy(from, from + static_cast<std::size_t>(src.width_) * kChannels,
              &data_[index(row + r, col, 0)]);
  }
}

Image rotate_ccw(const Image& image, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return image;
  const int w = image.width();
  const int h = image.height();
  const bool swap = turns % 2 == 1;
  Image out(swap ? h : w, swap ? w : h);
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      int sr = 0;
      int sc = 0;
      switch (turns) {
        case 1:  // new(r, c) = old(c, w-1-r)
          sr = c;
          sc = w - 1 - r;
          break;
        case 2:
          sr = h - 1 - r;
          sc = w - 1 - c;
          break;
        default:  // 3: new(r, c) = old(h-1-c, r)
          sr = h - 1 - c;
          sc = r;
          break;
      }
      for (int ch = 0; ch < kChannels; ++ch) out.at(r, c, ch) = image.at(sr, sc, ch);
    }
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) {
  throw DataError(std::string("png: ") + message);
}

void png_warning_handler(png_structp, png_const_charp) {}

Image read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  unsigned char signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw DataError("not a PNG file: " + path.string());
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  if (png == nullptr) throw DataError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  if (info == nullptr) throw DataError("png_create_info_struct failed");

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // native little-endian samples
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int out_depth = png_get_bit_depth(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> buffer(rowbytes * static_cast<std::size_t>(height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r) rows[static_cast<std::size_t>(r)] = &buffer[rowbytes * static_cast<std::size_t>(r)];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  Image image(width, height);
  for (int r = 0; r < height; ++r) {
    const unsigned char* row = rows[static_cast<std::size_t>(r)];
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < kChannels; ++ch) {
        const std::size_t k = static_cast<std::size_t>(c) * kChannels + static_cast<std::size_t>(ch);
        std::uint16_t v = 0;
        if (out_depth == 16) {
          v = static_cast<std::uint16_t>(row[2 * k] | (row[2 * k + 1] << 8));
        } else {
          v = static_cast<std::uint16_t>(row[k] * 257);
        }
        image.at(r, c, ch) = v;
      }
    }
  }
  return image;
}

// Skips whitespace and '#' comments between PPM header tokens.
int read_ppm_token(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  if (!(in >> value)) throw DataError("malformed PPM header");
  return value;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '6') throw DataError("only binary PPM (P6) is supported");
  const int width = read_ppm_token(in);
  const int height = read_ppm_token(in);
  const int maxval = read_ppm_token(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw DataError("bad PPM header values");
  }
  in.get();  // single whitespace byte before the raster
  const int bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raster(static_cast<std::size_t>(width) * height * kChannels * bytes);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size())) {
    throw DataError("truncated PPM raster");
  }
  Image image(width, height);
  auto out = image.data();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const unsigned v = bytes == 1 ? raster[k] : (raster[2 * k] << 8) | raster[2 * k + 1];
    // maxval 255 scales by exactly 257
    out[k] = static_cast<std::uint16_t>((static_cast<std::uint64_t>(v) * 65535 + maxval / 2) / maxval);
  }
  return image;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open " + path.string());
  char head[2] = {0, 0};
  probe.read(head, 2);
  if (head[0] == 'P' && head[1] == '6') return read_ppm(path);
  return read_png(path);
}

void write_png(const std::filesystem::path& path, const Image& image) {
  auto file = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  if (png == nullptr) throw DataError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};
  if (info == nullptr) throw DataError("png_create_info_struct failed");

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 16, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<unsigned char> row(static_cast<std::size_t>(image.width()) * kChannels * 2);
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      for (int ch = 0; ch < kChannels; ++ch) {
        const std::uint16_t v = image.at(r, c, ch);
        const std::size_t k = (static_cast<std::size_t>(c) * kChannels + static_cast<std::size_t>(ch)) * 2;
        row[k] = static_cast<unsigned char>(v >> 8);  // PNG is big-endian
        row[k + 1] = static_cast<unsigned char>(v & 0xff);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

}  // namespace lpjigsaw
