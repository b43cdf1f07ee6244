#pragma once

#include <cstdint>
#include <limits>

namespace vmf {

/// Identifies one independent random substream.
///
/// Streams are counter based: the triple (seed, replication, index) fully
/// determines the generated sequence, so replications can run on any thread
/// in any order and still reproduce bit-for-bit.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  std::uint64_t index = 0;
};

/// Replication slots reserved for internal Monte Carlo integrations so they
/// never collide with experiment replications (which count up from zero).
inline constexpr std::uint64_t kIntegrationReplication = 0xF000'0000'0000'0000ULL;

std::uint64_t splitmix64(std::uint64_t &state);

/// xoshiro256** keyed by a StreamKey. Satisfies UniformRandomBitGenerator.
class Stream {
public:
  using result_type = std::uint64_t;

  explicit Stream(const StreamKey &key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform draw in the open interval (0, 1).
  double uniform();

private:
  std::uint64_t s_[4];
};

} // namespace vmf
