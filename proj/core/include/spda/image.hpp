#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace spda {

/// Row-major 2-D intensity grid.
///
/// Clean and denoised images carry continuous intensities; noisy images
/// carry photon counts stored as integral doubles.
class Image {
 public:
  Image() = default;
  Image(std::size_t rows, std::size_t cols, double fill = 0.0);
  Image(std::size_t rows, std::size_t cols, std::vector<double> pixels);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return pixels_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return pixels_[r * cols_ + c]; }

  std::span<double> pixels() noexcept { return pixels_; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  double max_value() const;
  double min_value() const;
  double sum() const;

  /// True when every pixel is finite and non-negative.
  bool is_valid_intensity() const;

  bool operator==(const Image&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> pixels_;
};

/// Top-left anchor of a patch.
struct PatchPosition {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const PatchPosition&) const = default;
};

/// d x N matrix of column-stacked patches plus their anchors.
///
/// Pixels inside a patch are stacked column-major, so entry `c * side + r`
/// of a column is pixel (row + r, col + c) of the source image.
struct PatchMatrix {
  std::size_t side = 0;
  Eigen::MatrixXd data;
  std::vector<PatchPosition> positions;

  std::size_t dim() const noexcept { return side * side; }
  std::size_t count() const noexcept { return positions.size(); }
};

/// All fully overlapping patches, anchors enumerated column-major.
PatchMatrix extract_patches(const Image& img, std::size_t patch_side);

/// Averages every patch entry back onto its pixel. Throws when a pixel is not covered.
Image reproject_average(const PatchMatrix& patches, std::size_t rows, std::size_t cols);

/// Same as above but with the patch values supplied separately (d x N, same anchors).
Image reproject_average(const Eigen::MatrixXd& values, std::size_t side,
                        std::span<const PatchPosition> positions, std::size_t rows,
                        std::size_t cols);

/// Linear rescale so that the maximal pixel equals `peak`.
Image scale_to_peak(const Image& img, double peak);

/// 10 log10(peak(reference)^2 / MSE); +infinity when the images are identical.
double psnr(const Image& reference, const Image& estimate);

double mean_squared_error(const Image& a, const Image& b);

/// Small dense convolution kernel (odd side lengths).
struct Kernel {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::vector<double> weights{1.0};

  double operator()(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

  static Kernel identity() { return {}; }
  /// Normalized isotropic Gaussian of the given side and standard deviation.
  static Kernel gaussian(std::size_t side, double sigma);
  static Kernel ones(std::size_t side);
};

/// Same-size 2-D convolution with replicate padding.
Image convolve_same(const Image& img, const Kernel& kernel);

/// Replicate-pads to a multiple of `factor`, then sums each factor x factor block.
Image bin_image(const Image& img, std::size_t factor = 3);

/// Bilinear upscaling with edge clamping, divided by factor^2 to undo the
/// intensity gain of `bin_image`.
Image upscale_bilinear(const Image& img, std::size_t factor, std::size_t out_rows,
                       std::size_t out_cols);

}  // namespace spda
