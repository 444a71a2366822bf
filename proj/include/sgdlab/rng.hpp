#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <Eigen/Core>

namespace sgdlab {

// Counter-based random stream (Philox4x32-10).  The generator state is a
// 128-bit block counter plus a 64-bit key, so streams are cheap to create,
// trivially reproducible, and independent streams never share state.
// Uniform draws are bit-identical across platforms; Gaussian draws go
// through Box-Muller and inherit the platform's libm rounding.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on (0,1], 53-bit resolution.  Never returns 0, so log() is safe.
  double uniform();

  // Standard normal via Box-Muller, pairwise cached.
  double gaussian();

  // Vector of iid standard normals.
  Eigen::VectorXd gaussian_vector(Eigen::Index n);

  // Uniform integer in [0, bound), unbiased (rejection sampling).
  std::uint64_t uniform_below(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }

  // First 128 bits of output, used by stream-collision diagnostics.
  std::array<std::uint64_t, 2> fingerprint() const;

 private:
  void refill();

  std::uint64_t seed_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_;
  int block_pos_;
  double gauss_cache_;
  bool has_gauss_cache_;
};

// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key);

// Deterministic, collision-free derivation of a substream from
// (master seed, purpose tag, replica index).  The triple is hashed with
// FNV-1a 64 and the hash seeds the counter-based generator, so the same
// triple always produces the same stream on every platform.
RandomStream derive_stream(std::uint64_t master_seed, std::string_view purpose_tag,
                           std::uint64_t replica_index);

// FNV-1a 64-bit over a byte span; shared by stream derivation and config hashing.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis = 14695981039346656037ull);

}  // namespace sgdlab
