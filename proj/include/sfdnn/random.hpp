#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sfdnn {

/// Independent stream roles. Each (seed, role) pair selects its own sequence, so the
/// order in which roles or replications are drawn never changes their values.
enum class Stream : std::uint64_t {
  kTrainCovariates = 1,
  kTrainErrors = 2,
  kTestCovariates = 3,
  kTestErrors = 4,
  kInit = 5,
  kShuffle = 6,
  kValidationSplit = 7,
  kFolds = 8,
  kAuxiliary = 9,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for replication r of a study started from base_seed.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replication) {
  return base_seed ^ replication;
}

/// Counter-based generator: draw k of stream (seed, role) is splitmix64(key + k * golden),
/// where key is a hash of seed and role.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream);
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Exponential with rate 1.
  double exponential();
  /// Central Student-t with an integer number of degrees of freedom.
  double student_t(int dof);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 0, 1, ..., n-1 in an order fixed by (seed, role).
std::vector<int> shuffled_indices(int n, std::uint64_t seed, Stream stream);

}  // namespace sfdnn
