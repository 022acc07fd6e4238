#pragma once

#include <cstdint>

namespace pact {

// Counter-based random utilities. Draws are keyed by (seed, counter) rather
// than generator state so that any consumer asking for the draw at a given
// counter gets the same value, independent of evaluation order.

// splitmix64 finalizer; decorrelates nearby (seed, counter) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter);

// Uniform value in (0, 1), derived from the mixed key. Never returns exactly
// 0 or 1 so it is safe to feed into inverse CDFs.
double uniform01(std::uint64_t mixed);

// Inverse CDF of the standard normal (Acklam's rational approximation,
// refined with one Halley step; absolute error well below 1e-9).
double normal_quantile(double p);

// Standard normal CDF via std::erfc.
double normal_cdf(double x);

// Inverse CDF of a standard normal truncated to [-cut, cut].
double truncated_normal_quantile(double p, double cut);

// Standard normal draw truncated to [-cut, cut], keyed by (seed, counter).
double truncated_normal_draw(std::uint64_t seed, std::uint64_t counter, double cut);

}  // namespace pact
