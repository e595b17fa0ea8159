#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace pocmab {

/// Counter-based pseudo-random stream.
///
/// Output i of a stream is a bijective mix of (key, i), so a stream is fully
/// determined by its key and the number of values drawn so far. Child streams
/// are derived from the parent's key and a label (or index); deriving never
/// consumes parent state, so the tree of streams reachable from one master
/// seed is fixed regardless of draw order or thread scheduling.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  /// Child stream for an integer label.
  RandomStream derive(std::uint64_t index) const;
  /// Child stream for a string label (e.g. "contexts", "policy:thompson").
  RandomStream derive(std::string_view label) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double();

  /// Uniform integer in [0, n), n >= 1.
  std::uint64_t next_below(std::uint64_t n);

  /// Standard normal draw (Box-Muller, two uniforms per call).
  double next_gaussian();

  Eigen::VectorXd gaussian_vector(int dim);

  std::uint64_t key() const { return key_; }

 private:
  RandomStream(std::uint64_t key, int);  // internal: key already mixed

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pocmab
