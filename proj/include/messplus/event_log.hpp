#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace messplus {

/// Append-only, segmented record log.
///
/// Each record is one line: `<payload bytes> <crc32 hex> <payload>\n`, where
/// the payload is compact JSON. Segments are named events-NNNNNN.log and roll
/// over once they exceed `segment_max_bytes`. Opening a log scans every
/// segment and truncates a torn or corrupt tail, so a crash mid-append loses
/// at most the record being written.
class EventLog {
public:
    explicit EventLog(std::filesystem::path dir, std::size_t segment_max_bytes = 4u << 20);

    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    /// Valid payloads in append order (as found when the log was opened,
    /// plus everything appended since).
    std::vector<std::string> read_all() const;

    /// Appends and flushes one record. The payload must not contain '\n'.
    void append(std::string_view payload);

    std::uint64_t records() const noexcept { return records_; }
    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::vector<std::filesystem::path> segments() const;

    static std::string encode(std::string_view payload);
    static std::uint32_t crc32(std::string_view bytes) noexcept;

private:
    void recover();
    void open_segment(std::uint64_t index);

    std::filesystem::path dir_;
    std::size_t segment_max_bytes_;
    std::uint64_t records_ = 0;
    std::uint64_t segment_index_ = 1;
    std::size_t segment_bytes_ = 0;
    std::ofstream out_;
};

}  // namespace messplus
