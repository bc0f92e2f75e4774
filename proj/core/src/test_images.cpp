#include "spda/test_images.hpp"

#include <array>
#include <cmath>
#include <random>

#include "spda/errors.hpp"

namespace spda {

TestImageKind parse_test_image_kind(std::string_view name) {
  if (name == "ridges") return TestImageKind::ridges;
  if (name == "flag-like" || name == "flag") return TestImageKind::flag_like;
  if (name == "constant") return TestImageKind::constant;
  if (name == "triangles") return TestImageKind::triangles;
  throw InvalidArgument("unknown test image kind '" + std::string(name) +
                        "' (expected ridges, flag-like, constant or triangles)");
}

std::string to_string(TestImageKind kind) {
  switch (kind) {
    case TestImageKind::ridges: return "ridges";
    case TestImageKind::flag_like: return "flag-like";
    case TestImageKind::constant: return "constant";
    case TestImageKind::triangles: return "triangles";
  }
  return "unknown";
}

namespace {

Image ridges(std::size_t n) {
  // Bands along the anti-diagonal: bright ridge, soft shoulder, dark gap.
  constexpr std::size_t kPeriod = 16;
  Image img(n, n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t t = (r + c) % kPeriod;
      double v = 24.0;
      if (t < 4) {
        v = 255.0;
      } else if (t < 6 || t >= 14) {
        v = 128.0;
      }
      img(r, c) = v;
    }
  }
  return img;
}

Image flag_like(std::size_t n) {
  Image img(n, n, 0.0);
  const std::size_t stripe = std::max<std::size_t>(1, n / 13);
  for (std::size_t r = 0; r < n; ++r) {
    const double level = (r / stripe) % 2 == 0 ? 200.0 : 245.0;
    for (std::size_t c = 0; c < n; ++c) img(r, c) = level;
  }
  const std::size_t canton_rows = 7 * stripe;
  const std::size_t canton_cols = (n * 2) / 5;
  const std::size_t spacing = std::max<std::size_t>(4, n / 10);
  for (std::size_t r = 0; r < std::min(canton_rows, n); ++r) {
    for (std::size_t c = 0; c < canton_cols; ++c) {
      // Plus-shaped "stars" on a regular grid.
      const std::size_t rr = r % spacing;
      const std::size_t cc = c % spacing;
      const std::size_t mid = spacing / 2;
      const bool star = (rr == mid && cc + 1 >= mid && cc <= mid + 1) ||
                        (cc == mid && rr + 1 >= mid && rr <= mid + 1);
      img(r, c) = star ? 255.0 : 40.0;
    }
  }
  return img;
}

Image triangles(std::size_t n) {
  constexpr std::array<double, 8> kLevels{10.0, 45.0, 80.0, 115.0, 150.0, 185.0, 220.0, 255.0};
  Image img(n, n, kLevels[0]);
  std::mt19937 engine(20140301u);  // fixed: the pattern is part of the artifact
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine()) / 4294967296.0);
  };
  const double s = static_cast<double>(n);
  for (int shape = 0; shape < 14; ++shape) {
    const double level = kLevels[1 + engine() % 7];
    if (shape % 3 == 2) {
      const double r0 = uniform(0, 0.8 * s), c0 = uniform(0, 0.8 * s);
      const double h = uniform(0.1 * s, 0.4 * s), w = uniform(0.1 * s, 0.4 * s);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          if (r >= r0 && r < r0 + h && c >= c0 && c < c0 + w) img(r, c) = level;
      continue;
    }
    double pr[3], pc[3];
    for (int k = 0; k < 3; ++k) {
      pr[k] = uniform(-0.1 * s, 1.1 * s);
      pc[k] = uniform(-0.1 * s, 1.1 * s);
    }
    auto edge = [&](int a, int b, double r, double c) {
      return (pc[b] - pc[a]) * (r - pr[a]) - (pr[b] - pr[a]) * (c - pc[a]);
    };
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double y = static_cast<double>(r) + 0.5, x = static_cast<double>(c) + 0.5;
        const double e0 = edge(0, 1, y, x), e1 = edge(1, 2, y, x), e2 = edge(2, 0, y, x);
        const bool inside = (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
        if (inside) img(r, c) = level;
      }
    }
  }
  return img;
}

}  // namespace

Image make_test_image(TestImageKind kind, std::size_t size) {
  if (size == 0) throw InvalidArgument("test image size must be positive");
  switch (kind) {
    case TestImageKind::ridges: return ridges(size);
    case TestImageKind::flag_like: return flag_like(size);
    case TestImageKind::constant: return Image(size, size, 255.0);
    case TestImageKind::triangles: return triangles(size);
  }
  throw InvalidArgument("unknown test image kind");
}

}  // namespace spda
