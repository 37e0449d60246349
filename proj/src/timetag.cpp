#include "qlink/timetag.hpp"

#include <cmath>

namespace qlink {

std::uint64_t quantize(double time_s, double tick_s) {
  if (!(tick_s > 0.0)) {
    throw std::domain_error("quantize: tick duration must be positive");
  }
  if (time_s < 0.0 || !std::isfinite(time_s)) {
    throw std::domain_error("quantize: time must be finite and non-negative");
  }
  const double ticks = std::round(time_s / tick_s);
  if (ticks > static_cast<double>(kMaxTick)) {
    throw std::range_error("quantize: tick count exceeds 60 bits");
  }
  return static_cast<std::uint64_t>(ticks);
}

std::uint64_t encode_record(const TimeTag& tag) {
  if (tag.channel < 1 || tag.channel > kChannelCount) {
    throw StreamError(StreamError::Kind::CorruptRecord, ~std::uint64_t{0},
                      "encode_record: channel " + std::to_string(tag.channel) +
                          " outside 1-" + std::to_string(kChannelCount));
  }
  if (tag.tick > kMaxTick) {
    throw std::range_error("encode_record: tick exceeds 60 bits");
  }
  return (tag.tick << 4) | tag.channel;
}

TimeTag decode_record(std::uint64_t word) {
  const auto channel = static_cast<std::uint8_t>(word & 0xF);
  if (channel < 1 || channel > kChannelCount) {
    throw StreamError(StreamError::Kind::CorruptRecord, ~std::uint64_t{0},
                      "decode_record: channel nibble " + std::to_string(channel) +
                          " outside 1-" + std::to_string(kChannelCount));
  }
  return TimeTag{word >> 4, channel};
}

}  // namespace qlink
