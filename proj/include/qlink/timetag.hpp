#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qlink {

/// One detector click: integer clock tick plus detector channel (1-4).
/// The tick counter is 60 bits wide; at the default 156.25 ps tick that is
/// roughly 5.4 years of run time, so rollover never occurs in practice.
struct TimeTag {
  std::uint64_t tick = 0;
  std::uint8_t channel = 1;

  friend bool operator==(const TimeTag& a, const TimeTag& b) {
    return a.tick == b.tick && a.channel == b.channel;
  }
};

inline constexpr std::uint64_t kMaxTick = (std::uint64_t{1} << 60) - 1;
inline constexpr int kChannelCount = 4;

// Default clock resolution: 156.25 ps = 10 ns / 64, exact in binary and in
// integer femtoseconds.
inline constexpr double kDefaultTickSeconds = 156.25e-12;
inline constexpr std::uint64_t kDefaultTickFemtoseconds = 156250;

/// Binary stream header. On disk this occupies exactly 32 bytes:
///   bytes 0-3   magic "QTT1"
///   bytes 4-11  tick duration in femtoseconds, little-endian u64
///   byte  12    channel count
///   bytes 13-31 reserved, zero
struct StreamHeader {
  std::uint64_t tick_femtoseconds = kDefaultTickFemtoseconds;
  std::uint8_t channel_count = kChannelCount;

  double tick_seconds() const { return static_cast<double>(tick_femtoseconds) * 1e-15; }

  friend bool operator==(const StreamHeader& a, const StreamHeader& b) {
    return a.tick_femtoseconds == b.tick_femtoseconds && a.channel_count == b.channel_count;
  }
};

inline constexpr char kStreamMagic[4] = {'Q', 'T', 'T', '1'};
inline constexpr std::size_t kHeaderBytes = 32;
inline constexpr std::size_t kRecordBytes = 8;

/// Errors raised by the tag codec and stream readers/writers. `kind`
/// distinguishes the failure classes the format contract names; `position`
/// is the zero-based record index where the problem was detected (or ~0 when
/// not applicable).
class StreamError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, Unsorted, Truncated, CorruptRecord, Io };

  StreamError(Kind kind, std::uint64_t position, const std::string& message)
      : std::runtime_error(message), kind_(kind), position_(position) {}

  Kind kind() const { return kind_; }
  std::uint64_t position() const { return position_; }

 private:
  Kind kind_;
  std::uint64_t position_;
};

/// Round a time in seconds to the nearest integer tick count.
/// Throws std::domain_error for negative times and std::range_error when the
/// result does not fit in 60 bits.
std::uint64_t quantize(double time_s, double tick_s);

/// Record layout: one little-endian 64-bit word, channel in bits 0-3 and tick
/// in bits 4-63. Sorting encoded words therefore sorts by (tick, channel).
std::uint64_t encode_record(const TimeTag& tag);

/// Inverse of encode_record. Throws StreamError{CorruptRecord} when the
/// channel nibble is 0 or greater than 4.
TimeTag decode_record(std::uint64_t word);

}  // namespace qlink
