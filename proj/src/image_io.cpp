#include "boxenergy/image_io.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <array>
#include <csetjmp>
#include <memory>
#include <vector>

namespace boxenergy {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw ImageIoError("cannot open " + path.string());
  return f;
}

// Decoded 8-bit image with 1 or 3 channels.
struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

RawImage decode_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageIoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageIoError("libpng init failed");
  }
  // Declared before setjmp so a libpng longjmp never skips their destructors.
  RawImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageIoError("malformed PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  img.pixels.resize(rowbytes * static_cast<std::size_t>(img.height));
  rows.resize(static_cast<std::size_t>(img.height));
  for (int i = 0; i < img.height; ++i) rows[static_cast<std::size_t>(i)] = img.pixels.data() + rowbytes * i;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  if (img.channels != 1 && img.channels != 3) {
    throw ImageIoError("unsupported PNG channel layout in " + path.string());
  }
  return img;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

RawImage decode_jpeg(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  RawImage img;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageIoError("malformed JPEG: " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.channels = cinfo.output_components;
  const std::size_t stride = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
  img.pixels.resize(stride * static_cast<std::size_t>(img.height));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

RawImage decode_any(const std::filesystem::path& path) {
  std::array<unsigned char, 8> sig{};
  {
    FilePtr f = open_file(path, "rb");
    if (std::fread(sig.data(), 1, sig.size(), f.get()) < 3) {
      throw ImageIoError("file too short to be an image: " + path.string());
    }
  }
  if (png_sig_cmp(sig.data(), 0, sig.size()) == 0) return decode_png(path);
  if (sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return decode_jpeg(path);
  throw ImageIoError("unrecognized image format: " + path.string());
}

void encode_png(const std::filesystem::path& path, int height, int width, int channels,
                const std::uint8_t* pixels) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw ImageIoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageIoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageIoError("failed writing PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (int i = 0; i < height; ++i) {
    png_write_row(png, const_cast<png_bytep>(pixels + stride * static_cast<std::size_t>(i)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw ImageIoError("failed writing PNG: " + path.string());
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
  const RawImage raw = decode_any(path);
  RgbImage out(raw.height, raw.width);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (raw.channels == 1) {
      const std::uint8_t v = raw.pixels[k];
      out[k] = {v, v, v};
    } else {
      out[k] = {raw.pixels[3 * k], raw.pixels[3 * k + 1], raw.pixels[3 * k + 2]};
    }
  }
  return out;
}

Grid2D<std::uint8_t> read_png_gray(const std::filesystem::path& path) {
  const RawImage raw = decode_png(path);
  Grid2D<std::uint8_t> out(raw.height, raw.width, 0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (raw.channels == 1) {
      out[k] = raw.pixels[k];
    } else {
      const int sum = raw.pixels[3 * k] + raw.pixels[3 * k + 1] + raw.pixels[3 * k + 2];
      out[k] = static_cast<std::uint8_t>((sum + 1) / 3);
    }
  }
  return out;
}

void write_png_gray(const Grid2D<std::uint8_t>& gray, const std::filesystem::path& path) {
  encode_png(path, gray.height(), gray.width(), 1, gray.data().data());
}

void write_png_rgb(const RgbImage& rgb, const std::filesystem::path& path) {
  std::vector<std::uint8_t> flat;
  flat.reserve(rgb.size() * 3);
  for (const Rgb8& px : rgb.data()) flat.insert(flat.end(), px.begin(), px.end());
  encode_png(path, rgb.height(), rgb.width(), 3, flat.data());
}

}  // namespace boxenergy
