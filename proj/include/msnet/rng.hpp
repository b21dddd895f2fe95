#pragma once

#include <array>
#include <cstdint>

namespace msnet {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
// pure function of (key, counter), so any (stream, index) draw can be
// reproduced without replaying the stream.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block counter) const;

 private:
  std::array<std::uint32_t, 2> key_;
};

// Uniform in (0, 1) from the top 52 bits, centred in its cell; never
// returns 0 or 1.
double to_open_unit(std::uint64_t bits);

// Standard normal for (seed, stream, index): one Philox block feeds one
// Box-Muller draw (cosine branch).
double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace msnet
