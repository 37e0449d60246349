#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "qlink/timetag.hpp"

namespace qlink {

/// Pull interface for tag streams. Readers, in-memory spans and synthetic
/// generators all expose it so analysis code never needs the whole stream in
/// memory.
class TagSource {
 public:
  virtual ~TagSource() = default;
  /// Fills `out` with the next tag and returns true, or returns false at end.
  virtual bool next(TimeTag& out) = 0;
};

/// TagSource over an in-memory, already-sorted sequence.
class SpanTagSource final : public TagSource {
 public:
  explicit SpanTagSource(std::span<const TimeTag> tags) : tags_(tags) {}
  bool next(TimeTag& out) override {
    if (index_ >= tags_.size()) return false;
    out = tags_[index_++];
    return true;
  }

 private:
  std::span<const TimeTag> tags_;
  std::size_t index_ = 0;
};

/// Streaming binary writer. Input must arrive sorted by (tick, channel) with
/// no duplicate records; the first inversion is rejected with its position.
/// Memory use is a fixed-size chunk buffer regardless of stream length.
class BinaryTagWriter {
 public:
  BinaryTagWriter(const std::filesystem::path& path, const StreamHeader& header = {});
  ~BinaryTagWriter();
  BinaryTagWriter(const BinaryTagWriter&) = delete;
  BinaryTagWriter& operator=(const BinaryTagWriter&) = delete;

  void write(const TimeTag& tag);
  void write(std::span<const TimeTag> tags);
  /// Flushes and closes; called by the destructor if still open.
  void close();

  std::uint64_t records_written() const { return count_; }

 private:
  void flush_buffer();

  std::FILE* file_ = nullptr;
  std::vector<std::uint64_t> buffer_;
  std::uint64_t count_ = 0;
  std::uint64_t last_word_ = 0;
};

/// Streaming binary reader; validates magic, record integrity and sort order
/// on the fly. Constant memory (one chunk buffer).
class BinaryTagReader final : public TagSource {
 public:
  explicit BinaryTagReader(const std::filesystem::path& path);
  ~BinaryTagReader();
  BinaryTagReader(const BinaryTagReader&) = delete;
  BinaryTagReader& operator=(const BinaryTagReader&) = delete;

  const StreamHeader& header() const { return header_; }
  bool next(TimeTag& out) override;
  std::uint64_t records_read() const { return count_; }

 private:
  bool refill();

  std::FILE* file_ = nullptr;
  StreamHeader header_;
  std::vector<std::uint64_t> buffer_;
  std::size_t buf_pos_ = 0;
  std::size_t buf_len_ = 0;
  std::size_t truncated_tail_bytes_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t last_word_ = 0;
};

/// CSV variant: optional comment header `# tick_fs=<n>`, then one
/// `tick,channel` record per line. Losslessly interconvertible with the
/// binary format (channel_count is the fixed default in CSV).
class CsvTagWriter {
 public:
  CsvTagWriter(const std::filesystem::path& path, const StreamHeader& header = {});
  ~CsvTagWriter();
  CsvTagWriter(const CsvTagWriter&) = delete;
  CsvTagWriter& operator=(const CsvTagWriter&) = delete;

  void write(const TimeTag& tag);
  void write(std::span<const TimeTag> tags);
  void close();

 private:
  std::FILE* file_ = nullptr;
  std::uint64_t count_ = 0;
  std::uint64_t last_word_ = 0;
};

class CsvTagReader final : public TagSource {
 public:
  explicit CsvTagReader(const std::filesystem::path& path);
  ~CsvTagReader();
  CsvTagReader(const CsvTagReader&) = delete;
  CsvTagReader& operator=(const CsvTagReader&) = delete;

  const StreamHeader& header() const { return header_; }
  bool next(TimeTag& out) override;

 private:
  std::FILE* file_ = nullptr;
  StreamHeader header_;
  std::uint64_t count_ = 0;
  std::uint64_t last_word_ = 0;
  bool header_parsed_ = false;
};

enum class StreamFormat { Binary, Csv };

/// Opens a tag stream, sniffing the format from the leading magic bytes.
std::unique_ptr<TagSource> open_tag_source(const std::filesystem::path& path,
                                           StreamHeader* header_out = nullptr);

/// Convenience helpers for small streams and tests.
std::vector<TimeTag> read_all_tags(const std::filesystem::path& path,
                                   StreamHeader* header_out = nullptr);
void write_all_tags(const std::filesystem::path& path, std::span<const TimeTag> tags,
                    StreamFormat format, const StreamHeader& header = {});

}  // namespace qlink
