#pragma once

// Data-matrix inputs for the spectrum pipeline. Rows are samples.
//
//   .npy         2-D array, dtype <f8, <f4, |u1, <i4 or <i8, either order
//   raw          headerless little-endian values, row-major, rows x cols
//   CIFAR binary fixed-size records: label bytes then 3072 pixel bytes
//                (1024 R, 1024 G, 1024 B); pixels are scaled by 1/255
//   PNG dir      every *.png in a directory (sorted by name), decoded to
//                8-bit RGB, flattened channel-interleaved, scaled by 1/255

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace scalelens {

enum class RawDtype { f64, f32, u8 };
RawDtype raw_dtype_from_string(std::string_view name);

Eigen::MatrixXd load_npy(const std::filesystem::path& path);
void save_npy(const Eigen::MatrixXd& matrix, const std::filesystem::path& path);

Eigen::MatrixXd load_raw(const std::filesystem::path& path, std::size_t rows, std::size_t cols, RawDtype dtype);

inline constexpr std::size_t kCifarPixels = 3072;
inline constexpr std::size_t kCifar100LabelBytes = 2;  // coarse, fine

using BatchSink = std::function<void(const Eigen::MatrixXd&)>;

/// Streams CIFAR-format binary files in batches of at most batch_rows rows.
/// Returns the number of images read.
std::size_t stream_cifar_binary(const std::vector<std::filesystem::path>& files, std::size_t label_bytes,
                                std::size_t batch_rows, const BatchSink& sink);

Eigen::MatrixXd load_png_dir(const std::filesystem::path& dir);

}  // namespace scalelens
