#pragma once

#include <cstdint>

#include "spda/image.hpp"

namespace spda {

/// Seed for reproducible noise realizations.
struct NoiseSeed {
  std::uint64_t value = 0;
};

/// Draws y[i] ~ Poisson(clean[i]) independently; y[i] = 0 exactly when clean[i] = 0.
/// Each image row has its own generator stream keyed by (seed, row), so the
/// result does not depend on how rows are scheduled across threads.
Image sample_poisson(const Image& clean, NoiseSeed seed);

/// Single Poisson draw from a uniform source in [0, 1). Sequential-search
/// inversion below mean 10, transformed rejection (PTRS) above.
template <class UniformSource>
std::uint64_t poisson_draw(double mean, UniformSource&& uniform);

/// Elementwise 2 sqrt(y + 3/8).
Image anscombe_forward(const Image& counts);

/// Elementwise (z / 2)^2 - 3/8, clamped below at 0.
Image anscombe_algebraic_inverse(const Image& stabilized);

/// Decorrelated 64-bit seed for an experiment cell (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, double peak, std::uint64_t realization);

}  // namespace spda

#include "spda/detail/poisson_draw.hpp"
