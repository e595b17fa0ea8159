#include "pocmab/random.hpp"

#include <cmath>
#include <numbers>

#include "pocmab/errors.hpp"

namespace pocmab {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kDeriveGamma = 0xD1B54A32D192ED03ULL;

// splitmix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : key_(mix64(seed + kGoldenGamma)) {}

RandomStream::RandomStream(std::uint64_t key, int) : key_(key) {}

RandomStream RandomStream::derive(std::uint64_t index) const {
  // Two mixing rounds keep sibling keys unrelated to each other and to the
  // parent's own output sequence.
  std::uint64_t k = mix64(key_ ^ mix64((index + 1) * kDeriveGamma));
  return RandomStream(k, 0);
}

RandomStream RandomStream::derive(std::string_view label) const {
  return derive(fnv1a(label));
}

std::uint64_t RandomStream::next_u64() {
  counter_ += kGoldenGamma;
  return mix64(key_ + counter_);
}

double RandomStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::next_below(std::uint64_t n) {
  if (n == 0) throw ZeroVector("next_below: n must be >= 1");
  // Multiply-shift; bias is O(n / 2^64), negligible for simulation use.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double RandomStream::next_gaussian() {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd RandomStream::gaussian_vector(int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = next_gaussian();
  return v;
}

}  // namespace pocmab
