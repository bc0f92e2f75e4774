#include "spda/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "spda/errors.hpp"

namespace spda {

Image::Image(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), pixels_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw DimensionError("image dimensions must be positive");
}

Image::Image(std::size_t rows, std::size_t cols, std::vector<double> pixels)
    : rows_(rows), cols_(cols), pixels_(std::move(pixels)) {
  if (rows == 0 || cols == 0) throw DimensionError("image dimensions must be positive");
  if (pixels_.size() != rows * cols) {
    throw DimensionError("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

double Image::max_value() const {
  if (pixels_.empty()) throw DimensionError("empty image");
  return *std::max_element(pixels_.begin(), pixels_.end());
}

double Image::min_value() const {
  if (pixels_.empty()) throw DimensionError("empty image");
  return *std::min_element(pixels_.begin(), pixels_.end());
}

double Image::sum() const { return std::accumulate(pixels_.begin(), pixels_.end(), 0.0); }

bool Image::is_valid_intensity() const {
  return std::all_of(pixels_.begin(), pixels_.end(),
                     [](double v) { return std::isfinite(v) && v >= 0.0; });
}

PatchMatrix extract_patches(const Image& img, std::size_t patch_side) {
  if (img.empty()) throw DimensionError("cannot extract patches from an empty image");
  if (patch_side == 0 || patch_side > std::min(img.rows(), img.cols())) {
    throw DimensionError("patch side " + std::to_string(patch_side) + " does not fit a " +
                         std::to_string(img.rows()) + "x" + std::to_string(img.cols()) +
                         " image");
  }
  const std::size_t prow = img.rows() - patch_side + 1;
  const std::size_t pcol = img.cols() - patch_side + 1;
  const std::size_t d = patch_side * patch_side;

  PatchMatrix out;
  out.side = patch_side;
  out.data.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(prow * pcol));
  out.positions.reserve(prow * pcol);

  Eigen::Index col = 0;
  for (std::size_t c0 = 0; c0 < pcol; ++c0) {
    for (std::size_t r0 = 0; r0 < prow; ++r0, ++col) {
      out.positions.push_back({r0, c0});
      double* dst = out.data.col(col).data();
      for (std::size_t c = 0; c < patch_side; ++c)
        for (std::size_t r = 0; r < patch_side; ++r) *dst++ = img(r0 + r, c0 + c);
    }
  }
  return out;
}

Image reproject_average(const Eigen::MatrixXd& values, std::size_t side,
                        std::span<const PatchPosition> positions, std::size_t rows,
                        std::size_t cols) {
  if (static_cast<std::size_t>(values.rows()) != side * side ||
      static_cast<std::size_t>(values.cols()) != positions.size()) {
    throw DimensionError("patch values do not match the patch side / anchor count");
  }
  Image sum(rows, cols, 0.0);
  std::vector<std::size_t> hits(rows * cols, 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto [r0, c0] = positions[i];
    if (r0 + side > rows || c0 + side > cols) {
      throw DimensionError("patch anchor (" + std::to_string(r0) + "," + std::to_string(c0) +
                           ") out of bounds");
    }
    const double* src = values.col(static_cast<Eigen::Index>(i)).data();
    for (std::size_t c = 0; c < side; ++c) {
      for (std::size_t r = 0; r < side; ++r) {
        sum(r0 + r, c0 + c) += *src++;
        ++hits[(r0 + r) * cols + c0 + c];
      }
    }
  }
  auto px = sum.pixels();
  for (std::size_t k = 0; k < px.size(); ++k) {
    if (hits[k] == 0) {
      throw DimensionError("pixel (" + std::to_string(k / cols) + "," + std::to_string(k % cols) +
                           ") is not covered by any patch");
    }
    px[k] /= static_cast<double>(hits[k]);
  }
  return sum;
}

Image reproject_average(const PatchMatrix& patches, std::size_t rows, std::size_t cols) {
  return reproject_average(patches.data, patches.side, patches.positions, rows, cols);
}

Image scale_to_peak(const Image& img, double peak) {
  if (!(peak > 0.0)) throw InvalidArgument("peak must be positive");
  const double mx = img.max_value();
  if (!(mx > 0.0)) throw InvalidArgument("cannot scale an all-zero image to a peak");
  Image out = img;
  if (mx == peak) return out;
  const double gain = peak / mx;
  for (double& v : out.pixels()) v *= gain;
  // Pin the maximum exactly; mx * (peak / mx) can be off by one ulp.
  for (std::size_t k = 0; k < out.size(); ++k)
    if (img.pixels()[k] == mx) out.pixels()[k] = peak;
  return out;
}

double mean_squared_error(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("image dimensions differ");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double e = a.pixels()[k] - b.pixels()[k];
    acc += e * e;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(const Image& reference, const Image& estimate) {
  const double mse = mean_squared_error(reference, estimate);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = reference.max_value();
  return 10.0 * std::log10(peak * peak / mse);
}

Kernel Kernel::gaussian(std::size_t side, double sigma) {
  if (side % 2 == 0) throw InvalidArgument("kernel side must be odd");
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian sigma must be positive");
  Kernel k;
  k.rows = k.cols = side;
  k.weights.assign(side * side, 0.0);
  const double half = static_cast<double>(side / 2);
  double total = 0.0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double dr = static_cast<double>(r) - half;
      const double dc = static_cast<double>(c) - half;
      const double w = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      k.weights[r * side + c] = w;
      total += w;
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

Kernel Kernel::ones(std::size_t side) {
  Kernel k;
  k.rows = k.cols = side;
  k.weights.assign(side * side, 1.0);
  return k;
}

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

}  // namespace

Image convolve_same(const Image& img, const Kernel& kernel) {
  if (kernel.rows % 2 == 0 || kernel.cols % 2 == 0) {
    throw InvalidArgument("convolution kernel must have odd side lengths");
  }
  if (kernel.weights.size() != kernel.rows * kernel.cols) {
    throw DimensionError("kernel weight count does not match its shape");
  }
  const auto hr = static_cast<std::ptrdiff_t>(kernel.rows / 2);
  const auto hc = static_cast<std::ptrdiff_t>(kernel.cols / 2);
  Image out(img.rows(), img.cols(), 0.0);
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c) {
      double acc = 0.0;
      for (std::ptrdiff_t kr = -hr; kr <= hr; ++kr) {
        const std::size_t sr = clamp_index(static_cast<std::ptrdiff_t>(r) - kr, img.rows());
        for (std::ptrdiff_t kc = -hc; kc <= hc; ++kc) {
          const std::size_t sc = clamp_index(static_cast<std::ptrdiff_t>(c) - kc, img.cols());
          acc += kernel(static_cast<std::size_t>(kr + hr), static_cast<std::size_t>(kc + hc)) *
                 img(sr, sc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

Image bin_image(const Image& img, std::size_t factor) {
  if (factor < 2) throw InvalidArgument("binning factor must be at least 2");
  const std::size_t orows = (img.rows() + factor - 1) / factor;
  const std::size_t ocols = (img.cols() + factor - 1) / factor;
  Image out(orows, ocols, 0.0);
  for (std::size_t r = 0; r < orows * factor; ++r) {
    const std::size_t sr = std::min(r, img.rows() - 1);
    for (std::size_t c = 0; c < ocols * factor; ++c) {
      const std::size_t sc = std::min(c, img.cols() - 1);
      out(r / factor, c / factor) += img(sr, sc);
    }
  }
  return out;
}

Image upscale_bilinear(const Image& img, std::size_t factor, std::size_t out_rows,
                       std::size_t out_cols) {
  if (factor == 0) throw InvalidArgument("upscale factor must be positive");
  if (out_rows < img.rows() || out_cols < img.cols()) {
    throw DimensionError("upscaled dimensions must not be smaller than the input");
  }
  const double f = static_cast<double>(factor);
  const double norm = 1.0 / (f * f);
  // Output pixel x sits at low-res coordinate (x + 0.5) / f - 0.5 (block centers align).
  auto source = [f](std::size_t x, std::size_t n, std::size_t& i0, std::size_t& i1, double& t) {
    double s = (static_cast<double>(x) + 0.5) / f - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<std::size_t>(std::floor(s));
    i1 = std::min(i0 + 1, n - 1);
    t = s - static_cast<double>(i0);
  };
  Image out(out_rows, out_cols, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    std::size_t r0, r1;
    double tr;
    source(r, img.rows(), r0, r1, tr);
    for (std::size_t c = 0; c < out_cols; ++c) {
      std::size_t c0, c1;
      double tc;
      source(c, img.cols(), c0, c1, tc);
      const double top = (1.0 - tc) * img(r0, c0) + tc * img(r0, c1);
      const double bottom = (1.0 - tc) * img(r1, c0) + tc * img(r1, c1);
      out(r, c) = ((1.0 - tr) * top + tr * bottom) * norm;
    }
  }
  return out;
}

}  // namespace spda
