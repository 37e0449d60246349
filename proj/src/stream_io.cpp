#include "qlink/stream_io.hpp"

#include <array>
#include <cinttypes>
#include <cstring>

namespace qlink {
namespace {

constexpr std::size_t kChunkRecords = 1 << 16;

std::uint64_t load_le64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void store_le64(std::uint64_t v, unsigned char* p) {
  for (int i = 0; i < 8; ++i) {
    p[i] = static_cast<unsigned char>(v & 0xFF);
    v >>= 8;
  }
}

// Sort contract shared by writers and readers: encoded words strictly
// increasing, which is (tick, channel) order with no duplicate records.
void check_order(std::uint64_t prev_word, std::uint64_t word, std::uint64_t position) {
  if (position > 0 && word <= prev_word) {
    const TimeTag prev{prev_word >> 4, static_cast<std::uint8_t>(prev_word & 0xF)};
    const TimeTag cur{word >> 4, static_cast<std::uint8_t>(word & 0xF)};
    throw StreamError(StreamError::Kind::Unsorted, position,
                      "stream not sorted at record " + std::to_string(position) + ": (tick " +
                          std::to_string(cur.tick) + ", ch " + std::to_string(cur.channel) +
                          ") after (tick " + std::to_string(prev.tick) + ", ch " +
                          std::to_string(prev.channel) + ")");
  }
}

std::FILE* open_or_throw(const std::filesystem::path& path, const char* mode) {
  std::FILE* f = std::fopen(path.string().c_str(), mode);
  if (!f) {
    throw StreamError(StreamError::Kind::Io, 0, "cannot open " + path.string());
  }
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// Binary format
// ---------------------------------------------------------------------------

BinaryTagWriter::BinaryTagWriter(const std::filesystem::path& path, const StreamHeader& header) {
  if (header.tick_femtoseconds == 0) {
    throw std::domain_error("stream header: tick_femtoseconds must be positive");
  }
  file_ = open_or_throw(path, "wb");
  std::array<unsigned char, kHeaderBytes> raw{};
  std::memcpy(raw.data(), kStreamMagic, 4);
  store_le64(header.tick_femtoseconds, raw.data() + 4);
  raw[12] = header.channel_count;
  if (std::fwrite(raw.data(), 1, raw.size(), file_) != raw.size()) {
    throw StreamError(StreamError::Kind::Io, 0, "failed to write header to " + path.string());
  }
  buffer_.reserve(kChunkRecords);
}

BinaryTagWriter::~BinaryTagWriter() {
  try {
    close();
  } catch (...) {
    // destructor must not throw; close() explicitly to observe errors
  }
}

void BinaryTagWriter::write(const TimeTag& tag) {
  const std::uint64_t word = encode_record(tag);
  check_order(last_word_, word, count_);
  last_word_ = word;
  ++count_;
  buffer_.push_back(word);
  if (buffer_.size() >= kChunkRecords) flush_buffer();
}

void BinaryTagWriter::write(std::span<const TimeTag> tags) {
  for (const TimeTag& t : tags) write(t);
}

void BinaryTagWriter::flush_buffer() {
  if (!file_ || buffer_.empty()) return;
  std::vector<unsigned char> raw(buffer_.size() * kRecordBytes);
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    store_le64(buffer_[i], raw.data() + i * kRecordBytes);
  }
  if (std::fwrite(raw.data(), 1, raw.size(), file_) != raw.size()) {
    throw StreamError(StreamError::Kind::Io, count_, "short write");
  }
  buffer_.clear();
}

void BinaryTagWriter::close() {
  if (!file_) return;
  flush_buffer();
  const int rc = std::fclose(file_);
  file_ = nullptr;
  if (rc != 0) {
    throw StreamError(StreamError::Kind::Io, count_, "failed to close output stream");
  }
}

BinaryTagReader::BinaryTagReader(const std::filesystem::path& path) {
  file_ = open_or_throw(path, "rb");
  std::array<unsigned char, kHeaderBytes> raw{};
  const std::size_t got = std::fread(raw.data(), 1, raw.size(), file_);
  if (got < raw.size()) {
    throw StreamError(StreamError::Kind::Truncated, 0,
                      "file shorter than the 32-byte header: " + path.string());
  }
  if (std::memcmp(raw.data(), kStreamMagic, 4) != 0) {
    throw StreamError(StreamError::Kind::BadMagic, 0, "bad magic in " + path.string());
  }
  header_.tick_femtoseconds = load_le64(raw.data() + 4);
  header_.channel_count = raw[12];
  if (header_.tick_femtoseconds == 0) {
    throw StreamError(StreamError::Kind::BadMagic, 0,
                      "header tick_femtoseconds is zero in " + path.string());
  }
  buffer_.resize(kChunkRecords);
}

BinaryTagReader::~BinaryTagReader() {
  if (file_) std::fclose(file_);
}

bool BinaryTagReader::refill() {
  if (truncated_tail_bytes_ > 0) {
    throw StreamError(StreamError::Kind::Truncated, count_,
                      "truncated record at end of stream (" +
                          std::to_string(truncated_tail_bytes_) + " trailing bytes)");
  }
  std::vector<unsigned char> raw(kChunkRecords * kRecordBytes);
  const std::size_t got = std::fread(raw.data(), 1, raw.size(), file_);
  if (got == 0) return false;
  // Deliver the complete records first; the partial tail only errors when
  // the cursor actually reaches it.
  truncated_tail_bytes_ = got % kRecordBytes;
  buf_len_ = got / kRecordBytes;
  if (buf_len_ == 0) return refill();
  for (std::size_t i = 0; i < buf_len_; ++i) {
    buffer_[i] = load_le64(raw.data() + i * kRecordBytes);
  }
  buf_pos_ = 0;
  return true;
}

bool BinaryTagReader::next(TimeTag& out) {
  if (buf_pos_ >= buf_len_ && !refill()) return false;
  const std::uint64_t word = buffer_[buf_pos_++];
  TimeTag tag;
  try {
    tag = decode_record(word);
  } catch (const StreamError& e) {
    throw StreamError(e.kind(), count_,
                      std::string(e.what()) + " (record " + std::to_string(count_) + ")");
  }
  check_order(last_word_, word, count_);
  last_word_ = word;
  ++count_;
  out = tag;
  return true;
}

// ---------------------------------------------------------------------------
// CSV variant
// ---------------------------------------------------------------------------

CsvTagWriter::CsvTagWriter(const std::filesystem::path& path, const StreamHeader& header) {
  if (header.tick_femtoseconds == 0) {
    throw std::domain_error("stream header: tick_femtoseconds must be positive");
  }
  file_ = open_or_throw(path, "wb");
  std::fprintf(file_, "# tick_fs=%" PRIu64 "\n", header.tick_femtoseconds);
}

CsvTagWriter::~CsvTagWriter() {
  try {
    close();
  } catch (...) {
  }
}

void CsvTagWriter::write(const TimeTag& tag) {
  const std::uint64_t word = encode_record(tag);
  check_order(last_word_, word, count_);
  last_word_ = word;
  ++count_;
  if (std::fprintf(file_, "%" PRIu64 ",%u\n", tag.tick, unsigned{tag.channel}) < 0) {
    throw StreamError(StreamError::Kind::Io, count_, "short write");
  }
}

void CsvTagWriter::write(std::span<const TimeTag> tags) {
  for (const TimeTag& t : tags) write(t);
}

void CsvTagWriter::close() {
  if (!file_) return;
  const int rc = std::fclose(file_);
  file_ = nullptr;
  if (rc != 0) {
    throw StreamError(StreamError::Kind::Io, count_, "failed to close output stream");
  }
}

CsvTagReader::CsvTagReader(const std::filesystem::path& path) {
  file_ = open_or_throw(path, "rb");
}

CsvTagReader::~CsvTagReader() {
  if (file_) std::fclose(file_);
}

bool CsvTagReader::next(TimeTag& out) {
  char line[128];
  while (std::fgets(line, sizeof line, file_)) {
    if (line[0] == '\n' || line[0] == '\r') continue;
    if (line[0] == '#') {
      std::uint64_t fs = 0;
      if (!header_parsed_ && std::sscanf(line, "# tick_fs=%" SCNu64, &fs) == 1 && fs > 0) {
        header_.tick_femtoseconds = fs;
        header_parsed_ = true;
      }
      continue;
    }
    std::uint64_t tick = 0;
    unsigned channel = 0;
    if (std::sscanf(line, "%" SCNu64 ",%u", &tick, &channel) != 2) {
      throw StreamError(StreamError::Kind::CorruptRecord, count_,
                        "malformed CSV record " + std::to_string(count_));
    }
    if (channel < 1 || channel > kChannelCount) {
      throw StreamError(StreamError::Kind::CorruptRecord, count_,
                        "channel " + std::to_string(channel) + " outside 1-4 at record " +
                            std::to_string(count_));
    }
    if (tick > kMaxTick) {
      throw StreamError(StreamError::Kind::CorruptRecord, count_,
                        "tick exceeds 60 bits at record " + std::to_string(count_));
    }
    const std::uint64_t word = (tick << 4) | channel;
    check_order(last_word_, word, count_);
    last_word_ = word;
    ++count_;
    out = TimeTag{tick, static_cast<std::uint8_t>(channel)};
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

std::unique_ptr<TagSource> open_tag_source(const std::filesystem::path& path,
                                           StreamHeader* header_out) {
  {
    std::FILE* f = open_or_throw(path, "rb");
    char magic[4] = {};
    const std::size_t got = std::fread(magic, 1, 4, f);
    std::fclose(f);
    if (got == 4 && std::memcmp(magic, kStreamMagic, 4) == 0) {
      auto reader = std::make_unique<BinaryTagReader>(path);
      if (header_out) *header_out = reader->header();
      return reader;
    }
  }
  auto reader = std::make_unique<CsvTagReader>(path);
  if (header_out) *header_out = reader->header();
  return reader;
}

std::vector<TimeTag> read_all_tags(const std::filesystem::path& path, StreamHeader* header_out) {
  auto source = open_tag_source(path, header_out);
  std::vector<TimeTag> tags;
  TimeTag tag;
  // CSV headers are parsed lazily, so refresh the caller's header at the end.
  while (source->next(tag)) tags.push_back(tag);
  if (header_out) {
    if (auto* csv = dynamic_cast<CsvTagReader*>(source.get())) *header_out = csv->header();
  }
  return tags;
}

void write_all_tags(const std::filesystem::path& path, std::span<const TimeTag> tags,
                    StreamFormat format, const StreamHeader& header) {
  if (format == StreamFormat::Binary) {
    BinaryTagWriter writer(path, header);
    writer.write(tags);
    writer.close();
  } else {
    CsvTagWriter writer(path, header);
    writer.write(tags);
    writer.close();
  }
}

}  // namespace qlink
