#pragma once

// Canonical encoding of configurations for visited sets and trace hashes.
// Ghost counters that grow without bound (passage/attempt numbers, step
// counts) are left out; everything the algorithm or a condition reads is in.

#include <cstdint>
#include <vector>

#include "rme/model.hpp"

namespace rme {

struct Fingerprint {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& f) const { return static_cast<std::size_t>(f.lo ^ (f.hi * 0x9e3779b97f4a7c15ULL)); }
};

/// Append the canonical words of `cfg` to `out`.
void encode(const Configuration& cfg, std::vector<std::int64_t>& out);

std::uint64_t hash64(const Configuration& cfg);
Fingerprint fingerprint(const Configuration& cfg);

/// Mix an arbitrary word sequence (used when extra state joins the configuration).
Fingerprint fingerprint_words(const std::vector<std::int64_t>& words);

}  // namespace rme
