#include "spda/noise.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "spda/errors.hpp"
#include "spda/parallel.hpp"

namespace spda {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// 53-bit uniform in [0, 1); independent of the standard library's distribution code.
double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace

Image sample_poisson(const Image& clean, NoiseSeed seed) {
  for (std::size_t k = 0; k < clean.size(); ++k) {
    const double v = clean.pixels()[k];
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("Poisson mean must be finite and non-negative (pixel " +
                            std::to_string(k) + ")");
    }
  }
  Image noisy(clean.rows(), clean.cols(), 0.0);
  parallel_for(clean.rows(), [&](std::size_t r) {
    const std::uint64_t key = splitmix64(seed.value ^ splitmix64(r + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
    std::mt19937_64 engine(seq);
    auto uniform = [&engine] { return unit_uniform(engine); };
    for (std::size_t c = 0; c < clean.cols(); ++c) {
      noisy(r, c) = static_cast<double>(poisson_draw(clean(r, c), uniform));
    }
  });
  return noisy;
}

Image anscombe_forward(const Image& counts) {
  Image out = counts;
  for (double& v : out.pixels()) {
    if (!(v >= 0.0)) throw InvalidArgument("Anscombe transform needs non-negative counts");
    v = 2.0 * std::sqrt(v + 0.375);
  }
  return out;
}

Image anscombe_algebraic_inverse(const Image& stabilized) {
  Image out = stabilized;
  for (double& v : out.pixels()) {
    const double half = 0.5 * v;
    v = std::max(half * half - 0.375, 0.0);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, double peak, std::uint64_t realization) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(peak));
  h = splitmix64(h ^ realization);
  return h;
}

}  // namespace spda
