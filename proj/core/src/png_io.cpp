#include "fishforge/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "fishforge/error.hpp"

namespace fishforge {

std::vector<std::uint8_t> encode_png(const Patch& patch) {
  const std::vector<std::uint8_t> rgb = quantize_rgb8(patch);

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(patch.width());
  image.height = static_cast<png_uint_32>(patch.height());
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0,
                                 nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0,
                                 nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Patch& patch) {
  const std::vector<std::uint8_t> bytes = encode_png(patch);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

Patch read_png(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open PNG: " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(is)),
                                std::istreambuf_iterator<char>());

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError("invalid PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("PNG decode failed " + path.string() + ": " + image.message);
  }
  return dequantize_rgb8(rgb, static_cast<int>(image.width),
                         static_cast<int>(image.height));
}

}  // namespace fishforge
