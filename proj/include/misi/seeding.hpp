#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace misi {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of stream `index` under `base`: a counter-based derivation, so
/// replications draw from independent streams regardless of the order in
/// which they run.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Seed for a named purpose ("noise", "inner", ...) under `base`.
std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose);

using Rng = std::mt19937_64;

}  // namespace misi
