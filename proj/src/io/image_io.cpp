#include "carloam/io/image_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

#if defined(CARLOAM_HAS_PNG)
#include <png.h>
#endif

namespace carloam {
namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Skips PPM whitespace and '#' comment lines between header tokens.
int next_header_int(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string junk;
      std::getline(in, junk);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  return v;
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P6") throw std::runtime_error("not a P6 PPM: " + path);
  Image img;
  img.width = next_header_int(in);
  img.height = next_header_int(in);
  const int maxval = next_header_int(in);
  if (img.width <= 0 || img.height <= 0 || maxval != 255)
    throw std::runtime_error("unsupported PPM header in " + path);
  in.get();  // single whitespace after maxval
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    if (!in.read(reinterpret_cast<char*>(row.data()), row.size()))
      throw std::runtime_error("PPM truncated: " + path);
    for (int x = 0; x < img.width; ++x)
      img.at(x, y) = RgbColor{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
  }
  return img;
}

void write_ppm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const RgbColor& c = img.at(x, y);
      row[3 * x] = c.r;
      row[3 * x + 1] = c.g;
      row[3 * x + 2] = c.b;
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

#if defined(CARLOAM_HAS_PNG)

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};

Image read_png(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open image: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("PNG decode failed: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize everything to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  Image img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  std::vector<unsigned char> row(png_get_rowbytes(png, info));
  for (int y = 0; y < img.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < img.width; ++x)
      img.at(x, y) = RgbColor{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const Image& img) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write image: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encode failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const RgbColor& c = img.at(x, y);
      row[3 * x] = c.r;
      row[3 * x + 1] = c.g;
      row[3 * x + 2] = c.b;
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

#endif  // CARLOAM_HAS_PNG

}  // namespace

bool png_supported() {
#if defined(CARLOAM_HAS_PNG)
  return true;
#else
  return false;
#endif
}

Image read_image(const std::string& path) {
  if (ends_with(path, ".ppm")) return read_ppm(path);
#if defined(CARLOAM_HAS_PNG)
  if (ends_with(path, ".png")) return read_png(path);
#else
  if (ends_with(path, ".png"))
    throw std::runtime_error("PNG support not compiled in; use PPM: " + path);
#endif
  throw std::runtime_error("unsupported image extension: " + path);
}

void write_image(const std::string& path, const Image& img) {
  if (ends_with(path, ".ppm")) return write_ppm(path, img);
#if defined(CARLOAM_HAS_PNG)
  if (ends_with(path, ".png")) return write_png(path, img);
#else
  if (ends_with(path, ".png"))
    throw std::runtime_error("PNG support not compiled in; use PPM: " + path);
#endif
  throw std::runtime_error("unsupported image extension: " + path);
}

}  // namespace carloam
