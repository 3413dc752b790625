#include "messplus/event_log.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace messplus {

namespace fs = std::filesystem;

namespace {

fs::path segment_path(const fs::path& dir, std::uint64_t index) {
    char name[32];
    std::snprintf(name, sizeof name, "events-%06llu.log", static_cast<unsigned long long>(index));
    return dir / name;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parses records from `data`; returns the byte offset just past the last
/// valid record and appends payloads to `out`.
std::size_t scan_segment(std::string_view data, std::vector<std::string>* out) {
    std::size_t pos = 0;
    while (pos < data.size()) {
        const auto sp1 = data.find(' ', pos);
        if (sp1 == std::string_view::npos) {
            break;
        }
        std::size_t len = 0;
        auto [p1, ec1] = std::from_chars(data.data() + pos, data.data() + sp1, len);
        if (ec1 != std::errc() || p1 != data.data() + sp1) {
            break;
        }
        const auto crc_begin = sp1 + 1;
        if (crc_begin + 9 > data.size() || data[crc_begin + 8] != ' ') {
            break;
        }
        std::uint32_t crc = 0;
        auto [p2, ec2] = std::from_chars(data.data() + crc_begin, data.data() + crc_begin + 8, crc, 16);
        if (ec2 != std::errc() || p2 != data.data() + crc_begin + 8) {
            break;
        }
        const auto payload_begin = crc_begin + 9;
        if (payload_begin + len + 1 > data.size() || data[payload_begin + len] != '\n') {
            break;
        }
        const auto payload = data.substr(payload_begin, len);
        if (EventLog::crc32(payload) != crc) {
            break;
        }
        if (out) {
            out->emplace_back(payload);
        }
        pos = payload_begin + len + 1;
    }
    return pos;
}

}  // namespace

EventLog::EventLog(fs::path dir, std::size_t segment_max_bytes)
    : dir_(std::move(dir)), segment_max_bytes_(segment_max_bytes) {
    fs::create_directories(dir_);
    recover();
}

std::uint32_t EventLog::crc32(std::string_view bytes) noexcept {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::string EventLog::encode(std::string_view payload) {
    char prefix[40];
    const int n = std::snprintf(prefix, sizeof prefix, "%zu %08x ", payload.size(), crc32(payload));
    std::string line(prefix, static_cast<std::size_t>(n));
    line.append(payload);
    line.push_back('\n');
    return line;
}

std::vector<fs::path> EventLog::segments() const {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with("events-") && name.ends_with(".log")) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void EventLog::recover() {
    const auto segs = segments();
    records_ = 0;
    bool torn = false;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (torn) {
            fs::remove(segs[i]);
            continue;
        }
        const auto data = read_file(segs[i]);
        std::vector<std::string> payloads;
        const auto valid = scan_segment(data, &payloads);
        records_ += payloads.size();
        segment_index_ = static_cast<std::uint64_t>(std::stoull(segs[i].filename().string().substr(7, 6)));
        segment_bytes_ = valid;
        if (valid != data.size()) {
            fs::resize_file(segs[i], valid);
            torn = true;
        }
    }
    if (segs.empty()) {
        segment_index_ = 1;
        segment_bytes_ = 0;
    }
    open_segment(segment_index_);
}

void EventLog::open_segment(std::uint64_t index) {
    if (out_.is_open()) {
        out_.close();
    }
    segment_index_ = index;
    const auto path = segment_path(dir_, index);
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) {
        throw std::runtime_error("cannot open event log segment " + path.string());
    }
    segment_bytes_ = fs::file_size(path);
}

void EventLog::append(std::string_view payload) {
    if (payload.find('\n') != std::string_view::npos) {
        throw std::invalid_argument("event log payload must be a single line");
    }
    if (segment_bytes_ > 0 && segment_bytes_ >= segment_max_bytes_) {
        open_segment(segment_index_ + 1);
    }
    const auto line = encode(payload);
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
    if (!out_) {
        throw std::runtime_error("failed appending to event log in " + dir_.string());
    }
    segment_bytes_ += line.size();
    ++records_;
}

std::vector<std::string> EventLog::read_all() const {
    std::vector<std::string> payloads;
    for (const auto& seg : segments()) {
        const auto data = read_file(seg);
        if (scan_segment(data, &payloads) != data.size()) {
            break;
        }
    }
    return payloads;
}

}  // namespace messplus
