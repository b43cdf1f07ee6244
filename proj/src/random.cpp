#include "vmfunc/random.hpp"

namespace vmf {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

std::uint64_t splitmix64(std::uint64_t &state) {
  state += 0x9E3779B97F4A7C15ULL;
  return mix(state);
}

Stream::Stream(const StreamKey &key) {
  std::uint64_t x = mix(key.seed + 0x9E3779B97F4A7C15ULL);
  x = mix(x ^ (key.replication + 0x632BE59BD9B4E019ULL));
  x = mix(x ^ (key.index + 0x85157AF5D1A3C1B3ULL));
  for (auto &word : s_) {
    word = splitmix64(x);
  }
}

Stream::result_type Stream::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Stream::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace vmf
