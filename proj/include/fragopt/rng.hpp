#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fragopt {

/// Philox4x32-10 block function. Pure: the same (counter, key) always
/// produces the same four words.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (seed, replica). Streams for
/// different replicas never overlap, so replicas may be simulated in any
/// order or on any thread and still reproduce bit-for-bit.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t replica);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Exponential with the given rate.
  double exponential(double rate);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t replica_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace fragopt
