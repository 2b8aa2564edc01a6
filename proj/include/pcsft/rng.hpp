#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pcsft {

/// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Stream ids for independent generators are derived by chaining the mixer
/// over a purpose tag and up to three indices. Every simulation unit (trial,
/// chunk, excursion) gets its own id, which is what makes runs reproducible
/// under any thread count.
inline std::uint64_t derive_stream(std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0,
                                   std::uint64_t c = 0) {
  std::uint64_t h = mix64(tag);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

namespace detail {

// Philox 4x64-10 block cipher (Salmon et al., SC 2011). Keyed by
// (master_seed, stream_id); the counter indexes 256-bit output blocks.
struct Philox4x64 {
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

  static void block(std::uint64_t ctr[4], std::uint64_t k0, std::uint64_t k1) {
    for (int round = 0; round < 10; ++round) {
      const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * ctr[0];
      const unsigned __int128 p2 = static_cast<unsigned __int128>(kMul1) * ctr[2];
      const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
      const std::uint64_t hi2 = static_cast<std::uint64_t>(p2 >> 64);
      const std::uint64_t lo2 = static_cast<std::uint64_t>(p2);
      ctr[0] = hi2 ^ ctr[1] ^ k0;
      ctr[1] = lo2;
      ctr[2] = hi0 ^ ctr[3] ^ k1;
      ctr[3] = lo0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
  }
};

// Marsaglia-Tsang ziggurat tables for the standard normal, scaled to a
// 63-bit integer magnitude. Built once at first use.
struct ZigguratTables {
  std::array<std::uint64_t, 128> kn{};
  std::array<double, 128> wn{};
  std::array<double, 128> fn{};
  static constexpr double kTail = 3.442619855899;

  ZigguratTables() {
    const double m = 9223372036854775808.0;  // 2^63
    double dn = kTail;
    double tn = dn;
    const double vn = 9.91256303526217e-3;
    const double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<std::uint64_t>((dn / q) * m);
    kn[1] = 0;
    wn[0] = q / m;
    wn[127] = dn / m;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<std::uint64_t>((dn / tn) * m);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m;
    }
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// @brief Counter-based random stream keyed by (master_seed, stream_id).
///
/// Distinct key pairs give statistically independent streams; the same pair
/// replays bit-identical output. Streams carry no shared state, so any number
/// may run concurrently.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_(master_seed), stream_(stream_id) {}

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  /// Uniform on [0,1) with 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1]; safe to pass to log().
  double next_unit_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via the 128-layer ziggurat.
  double next_normal() {
    const auto& z = detail::ziggurat();
    for (;;) {
      const std::uint64_t u = next_u64();
      const int idx = static_cast<int>(u & 127);
      const std::uint64_t mag = u & 0x7FFFFFFFFFFFFFFFull;
      const double sign = (u >> 63) ? -1.0 : 1.0;
      const double x = sign * static_cast<double>(mag) * z.wn[idx];
      if (mag < z.kn[idx]) return x;
      if (idx == 0) {
        // Tail beyond x = 3.4426...
        double xt, yt;
        do {
          xt = -std::log(next_unit_pos()) / detail::ZigguratTables::kTail;
          yt = -std::log(next_unit_pos());
        } while (yt + yt < xt * xt);
        return sign * (detail::ZigguratTables::kTail + xt);
      }
      if (z.fn[idx] + next_unit() * (z.fn[idx - 1] - z.fn[idx]) <
          std::exp(-0.5 * x * x))
        return x;
    }
  }

 private:
  void refill() {
    buf_[0] = block_;
    buf_[1] = 0;
    buf_[2] = 0;
    buf_[3] = 0;
    detail::Philox4x64::block(buf_.data(), master_, stream_);
    ++block_;
    pos_ = 0;
  }

  std::uint64_t master_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buf_{};
  int pos_ = 4;
};

}  // namespace pcsft
