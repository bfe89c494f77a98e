#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace qsdkit {

/// (master_seed, stream_index) names one independent stream.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

/// Philox4x32-10 counter-based generator. The key is the master seed; the stream index
/// fills the upper half of the counter, the lower half counts blocks.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(SeedSpec seed = {});

  static Block generate(Block counter, Key key);

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// 53-bit uniform on [0, 1).
  double uniform();
  /// Exp(rate); rate > 0.
  double exponential(double rate);

  std::uint64_t blocks_used() const { return block_; }

 private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int used_ = 4;
};

}  // namespace qsdkit
