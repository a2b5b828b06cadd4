#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace nlsmc {

// Philox4x32-10 block function (Salmon et al., SC'11). Exposed for known-answer tests.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

inline constexpr std::size_t kMaxStreamPath = 4;

/// Identifies one random stream: a master seed plus a path of indices
/// (typically purpose, replication, outer index, inner index).
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> stream_path;

  SeedSpec child(std::uint64_t index) const;
};

/// Counter-based stream of uniforms on (0,1) and standard normals.
///
/// The (seed, path) pair is hashed into a 64-bit Philox key and the upper
/// half of the 128-bit counter; the lower half counts blocks. Deriving a
/// stream is O(path length) and never touches other streams' state.
///
/// Normals use Box-Muller on two consecutive uniforms; the second variate
/// of each pair is cached and returned by the next normal() call.
class UniformStream {
 public:
  explicit UniformStream(const SeedSpec& spec);
  UniformStream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path);
  UniformStream(std::uint64_t master_seed, std::span<const std::uint64_t> path);

  /// Uniform in the open interval (0,1), 53 bits of resolution.
  double uniform() noexcept;
  double normal() noexcept;
  std::uint64_t next_u64() noexcept;

 private:
  void refill() noexcept;
  void init(std::uint64_t master_seed, const std::uint64_t* path, std::size_t len);

  PhiloxKey key_{};
  std::uint64_t path_word_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  unsigned buffered_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

UniformStream derive_stream(const SeedSpec& spec);

/// Reads NESTED_LSMC_SEED if set and parseable as an unsigned 64-bit integer.
std::optional<std::uint64_t> seed_from_env();

}  // namespace nlsmc
