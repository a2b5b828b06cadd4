#include "nested_lsmc/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numbers>

#include "nested_lsmc/errors.hpp"

namespace nlsmc {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Two independent 64-bit digests of (seed, path); together they give 128
// bits of stream identity.
std::pair<std::uint64_t, std::uint64_t> hash_path(std::uint64_t seed, const std::uint64_t* path,
                                                  std::size_t len) noexcept {
  std::uint64_t h1 = splitmix64(seed ^ 0x6A09E667F3BCC908ull);
  std::uint64_t h2 = splitmix64(seed ^ 0xBB67AE8584CAA73Bull);
  h1 = splitmix64(h1 ^ len);
  h2 = splitmix64(h2 + 0x3C6EF372FE94F82Bull * (len + 1));
  for (std::size_t i = 0; i < len; ++i) {
    h1 = splitmix64(h1 ^ splitmix64(path[i] + 0x243F6A8885A308D3ull * (i + 1)));
    h2 = splitmix64(h2 + splitmix64(path[i] ^ (0x13198A2E03707344ull + i)));
  }
  return {h1, h2};
}

inline double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

SeedSpec SeedSpec::child(std::uint64_t index) const {
  SeedSpec out = *this;
  out.stream_path.push_back(index);
  return out;
}

UniformStream::UniformStream(const SeedSpec& spec) {
  init(spec.master_seed, spec.stream_path.data(), spec.stream_path.size());
}

UniformStream::UniformStream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) {
  init(master_seed, path.begin(), path.size());
}

UniformStream::UniformStream(std::uint64_t master_seed, std::span<const std::uint64_t> path) {
  init(master_seed, path.data(), path.size());
}

void UniformStream::init(std::uint64_t master_seed, const std::uint64_t* path, std::size_t len) {
  if (len > kMaxStreamPath) {
    throw DomainError("stream path longer than " + std::to_string(kMaxStreamPath));
  }
  const auto [h1, h2] = hash_path(master_seed, path, len);
  key_ = {static_cast<std::uint32_t>(h1), static_cast<std::uint32_t>(h1 >> 32)};
  path_word_ = h2;
}

void UniformStream::refill() noexcept {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(path_word_),
                          static_cast<std::uint32_t>(path_word_ >> 32)};
  const PhiloxCounter out = philox4x32_10(ctr, key_);
  ++block_;
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  buffered_ = 2;
}

std::uint64_t UniformStream::next_u64() noexcept {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double UniformStream::uniform() noexcept { return to_open_unit(next_u64()); }

double UniformStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

UniformStream derive_stream(const SeedSpec& spec) { return UniformStream(spec); }

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("NESTED_LSMC_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::uint64_t value = 0;
  const char* end = raw + std::strlen(raw);
  const auto [ptr, ec] = std::from_chars(raw, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

}  // namespace nlsmc
