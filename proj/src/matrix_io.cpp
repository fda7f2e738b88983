#include "scalelens/matrix_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>

#include <fmt/format.h>
#include <png.h>

#include "scalelens/stats.hpp"

namespace scalelens {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary readers assume a little-endian host");

RawDtype raw_dtype_from_string(std::string_view name) {
  if (name == "f64" || name == "float64") return RawDtype::f64;
  if (name == "f32" || name == "float32") return RawDtype::f32;
  if (name == "u8" || name == "uint8") return RawDtype::u8;
  throw ValidationError(fmt::format("unknown raw dtype '{}' (expected f64, f32 or u8)", name));
}

namespace {

std::vector<char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
void fill_from(const char* src, Eigen::MatrixXd& out, bool fortran_order) {
  const auto rows = out.rows(), cols = out.cols();
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const Eigen::Index flat = fortran_order ? j * rows + i : i * cols + j;
      T v;
      std::memcpy(&v, src + flat * static_cast<Eigen::Index>(sizeof(T)), sizeof(T));
      out(i, j) = static_cast<double>(v);
    }
  }
}

}  // namespace

Eigen::MatrixXd load_npy(const fs::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < 10 || std::memcmp(bytes.data(), "\x93NUMPY", 6) != 0)
    throw ValidationError(fmt::format("'{}' is not an .npy file", path.string()));
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0, offset = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
    offset = 10;
  } else {
    if (bytes.size() < 12) throw ValidationError("npy: truncated header");
    std::uint32_t len;
    std::memcpy(&len, bytes.data() + 8, 4);
    header_len = len;
    offset = 12;
  }
  if (bytes.size() < offset + header_len) throw ValidationError("npy: truncated header");
  const std::string header(bytes.data() + offset, header_len);
  const std::size_t data_offset = offset + header_len;

  std::smatch m;
  static const std::regex descr_re(R"('descr'\s*:\s*'([^']+)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(\s*(\d+)\s*,\s*(\d+)\s*,?\s*\))");
  if (!std::regex_search(header, m, descr_re)) throw ValidationError("npy: missing descr");
  const std::string descr = m[1];
  if (!std::regex_search(header, m, order_re)) throw ValidationError("npy: missing fortran_order");
  const bool fortran = m[1] == "True";
  if (!std::regex_search(header, m, shape_re)) throw ValidationError("npy: expected a 2-D shape");
  const auto rows = static_cast<Eigen::Index>(std::stoll(m[1]));
  const auto cols = static_cast<Eigen::Index>(std::stoll(m[2]));

  std::size_t item = 0;
  if (descr == "<f8" || descr == "<i8") item = 8;
  else if (descr == "<f4" || descr == "<i4") item = 4;
  else if (descr == "|u1" || descr == "<u1") item = 1;
  else throw ValidationError(fmt::format("npy: unsupported dtype '{}'", descr));
  if (bytes.size() < data_offset + static_cast<std::size_t>(rows * cols) * item)
    throw ValidationError("npy: file shorter than its shape");

  Eigen::MatrixXd out(rows, cols);
  const char* src = bytes.data() + data_offset;
  if (descr == "<f8") fill_from<double>(src, out, fortran);
  else if (descr == "<f4") fill_from<float>(src, out, fortran);
  else if (descr == "<i8") fill_from<std::int64_t>(src, out, fortran);
  else if (descr == "<i4") fill_from<std::int32_t>(src, out, fortran);
  else fill_from<std::uint8_t>(src, out, fortran);
  return out;
}

void save_npy(const Eigen::MatrixXd& matrix, const fs::path& path) {
  std::string header = fmt::format("{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
                                   matrix.rows(), matrix.cols());
  // Pad so the data starts on a 64-byte boundary, header ends with '\n'.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  out.write(reinterpret_cast<const char*>(&len), 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      const double v = matrix(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

Eigen::MatrixXd load_raw(const fs::path& path, std::size_t rows, std::size_t cols, RawDtype dtype) {
  const auto bytes = read_all(path);
  const std::size_t item = dtype == RawDtype::f64 ? 8 : dtype == RawDtype::f32 ? 4 : 1;
  if (bytes.size() != rows * cols * item)
    throw ValidationError(fmt::format("raw: '{}' has {} bytes, expected {} x {} x {}", path.string(),
                                      bytes.size(), rows, cols, item));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (dtype == RawDtype::f64) fill_from<double>(bytes.data(), out, false);
  else if (dtype == RawDtype::f32) fill_from<float>(bytes.data(), out, false);
  else fill_from<std::uint8_t>(bytes.data(), out, false);
  return out;
}

std::size_t stream_cifar_binary(const std::vector<fs::path>& files, std::size_t label_bytes,
                                std::size_t batch_rows, const BatchSink& sink) {
  if (batch_rows == 0) throw ValidationError("cifar: batch_rows must be positive");
  const std::size_t record = label_bytes + kCifarPixels;
  std::size_t total = 0;
  std::vector<unsigned char> buf(record);
  Eigen::MatrixXd batch(static_cast<Eigen::Index>(batch_rows), static_cast<Eigen::Index>(kCifarPixels));
  Eigen::Index filled = 0;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw ValidationError(fmt::format("cannot open '{}'", f.string()));
    const auto size = fs::file_size(f);
    if (size % record != 0)
      throw ValidationError(fmt::format("cifar: '{}' size {} is not a multiple of {}", f.string(), size, record));
    while (in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(record))) {
      for (std::size_t j = 0; j < kCifarPixels; ++j)
        batch(filled, static_cast<Eigen::Index>(j)) = buf[label_bytes + j] / 255.0;
      ++total;
      if (++filled == batch.rows()) {
        sink(batch);
        filled = 0;
      }
    }
  }
  if (filled > 0) sink(batch.topRows(filled));
  return total;
}

Eigen::MatrixXd load_png_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError(fmt::format("'{}' is not a directory", dir.string()));
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError(fmt::format("no .png files in '{}'", dir.string()));

  Eigen::MatrixXd out;
  std::vector<unsigned char> pixels;
  for (std::size_t i = 0; i < files.size(); ++i) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, files[i].c_str()))
      throw ValidationError(fmt::format("png: cannot read '{}': {}", files[i].string(), image.message));
    image.format = PNG_FORMAT_RGB;
    pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
      png_image_free(&image);
      throw ValidationError(fmt::format("png: cannot decode '{}': {}", files[i].string(), image.message));
    }
    if (i == 0) {
      out.resize(static_cast<Eigen::Index>(files.size()), static_cast<Eigen::Index>(pixels.size()));
    } else if (static_cast<Eigen::Index>(pixels.size()) != out.cols()) {
      throw ValidationError(fmt::format("png: '{}' has different dimensions", files[i].string()));
    }
    for (std::size_t j = 0; j < pixels.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pixels[j] / 255.0;
  }
  return out;
}

}  // namespace scalelens
