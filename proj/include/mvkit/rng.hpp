#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>

namespace mvkit {

/// Counter-based generator: the k-th draw is a pure function of (key, k),
/// computed with the SplitMix64 finalizer. Substreams are obtained by deriving
/// a new key, so results never depend on how work is split across threads.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform on the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }
  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Named substream: derive("ranks"), derive("folds"), ...
std::uint64_t derive_seed(std::uint64_t master, std::string_view name);
/// Indexed substream, e.g. one per Monte Carlo sample.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// 64-bit FNV-1a; used for config hashes and string-keyed substreams.
std::uint64_t fnv1a64(std::string_view bytes);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write results by index.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace mvkit
