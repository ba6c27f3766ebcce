#include "screenkit/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>

#include "screenkit/error.hpp"

namespace screenkit {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp message) {
  throw FormatError(std::string("png: ") + message);
}

void png_warning_fn(png_structp, png_const_charp) {}

RawImage read_png(std::FILE* file, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, png_warning_fn);
  if (!png) throw FormatError("png: cannot allocate read struct");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  if (!info) throw FormatError("png: cannot allocate info struct");

  png_init_io(png, file);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  RawImage image;
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.channels = png_get_channels(png, info);
  if (image.channels != 1 && image.channels != 3) {
    throw FormatError(path + ": unsupported PNG channel layout");
  }
  const std::size_t stride = png_get_rowbytes(png, info);
  image.data.resize(stride * image.height);
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = &image.data[y * stride];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return image;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
    } else {
      token.push_back(c);
    }
  }
  return token;
}

RawImage read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string magic = pnm_token(in);
  RawImage image;
  image.channels = magic == "P5" ? 1 : magic == "P6" ? 3 : 0;
  if (image.channels == 0) throw FormatError(path + ": unsupported PNM variant");
  try {
    image.width = std::stoi(pnm_token(in));
    image.height = std::stoi(pnm_token(in));
    if (std::stoi(pnm_token(in)) != 255) {
      throw FormatError(path + ": only maxval 255 is supported");
    }
  } catch (const std::logic_error&) {
    throw FormatError(path + ": malformed PNM header");
  }
  if (image.width < 1 || image.height < 1) {
    throw FormatError(path + ": zero image dimension");
  }
  image.data.resize(static_cast<std::size_t>(image.width) * image.height *
                    image.channels);
  in.read(reinterpret_cast<char*>(image.data.data()),
          static_cast<std::streamsize>(image.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.data.size())) {
    throw FormatError(path + ": truncated PNM data");
  }
  return image;
}

}  // namespace

RawImage read_image(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw FormatError("cannot open image '" + path + "'");
  unsigned char sig[8] = {};
  const std::size_t got = std::fread(sig, 1, sizeof(sig), file.get());
  if (got == 8 && png_sig_cmp(sig, 0, 8) == 0) {
    std::rewind(file.get());
    try {
      return read_png(file.get(), path);
    } catch (const FormatError& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
  if (got >= 2 && sig[0] == 'P') return read_pnm(path);
  throw FormatError(path + ": unrecognized image format");
}

void write_png(const std::string& path, const RawImage& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw FormatError("write_png: unsupported channel count");
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warning_fn);
  if (!png) throw Error("png: cannot allocate write struct");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};
  if (!info) throw Error("png: cannot allocate info struct");

  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride =
      static_cast<std::size_t>(image.width) * image.channels;
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&image.data[y * stride]));
  }
  png_write_end(png, nullptr);
}

void write_png(const std::string& path, const GrayImage& image) {
  write_png(path, to_raw(image));
}

void write_pnm(const std::string& path, const RawImage& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw FormatError("write_pnm: unsupported channel count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << (image.channels == 1 ? "P5" : "P6") << '\n'
      << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size()));
}

}  // namespace screenkit
