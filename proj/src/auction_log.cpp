#include "pgrtb/auction_log.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "pgrtb/errors.hpp"

namespace pgrtb {

namespace {

int read_int(const std::string& text, std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) {
        throw InputError("truncated timestamp '" + text + "'");
    }
    int value = 0;
    const char* first = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc() || ptr != first + len) {
        throw InputError("bad timestamp '" + text + "'");
    }
    return value;
}

void expect_char(const std::string& text, std::size_t pos, char c) {
    if (pos >= text.size() || text[pos] != c) {
        throw InputError("bad timestamp '" + text + "'");
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string format_bid(double bid) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, bid);
    return std::string(buf, ptr);
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
    using namespace std::chrono;
    const int y = read_int(text, 0, 4);
    expect_char(text, 4, '-');
    const int mo = read_int(text, 5, 2);
    expect_char(text, 7, '-');
    const int d = read_int(text, 8, 2);
    if (text.size() < 11 || (text[10] != 'T' && text[10] != ' ')) {
        throw InputError("bad timestamp '" + text + "'");
    }
    const int h = read_int(text, 11, 2);
    expect_char(text, 13, ':');
    const int mi = read_int(text, 14, 2);
    expect_char(text, 16, ':');
    const int s = read_int(text, 17, 2);
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    }
    const std::string zone = text.substr(pos);
    if (zone != "Z" && zone != "+00:00" && zone != "") {
        throw InputError("timestamp '" + text + "' is not UTC");
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        throw InputError("invalid date in timestamp '" + text + "'");
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(std::int64_t seconds) {
    using namespace std::chrono;
    const auto day_count = static_cast<int>(std::floor(static_cast<double>(seconds) / 86400.0));
    const std::int64_t rem = seconds - static_cast<std::int64_t>(day_count) * 86400;
    const year_month_day ymd{sys_days{days{day_count}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
    return buf;
}

std::vector<AuctionLogRecord> read_auction_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("auction log is empty (no header)");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line != kAuctionLogHeader) {
        throw InputError(std::string("auction log header must be '") + kAuctionLogHeader + "'");
    }
    std::vector<AuctionLogRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) {
            throw InputError("line " + std::to_string(line_no) + ": expected 4 fields");
        }
        AuctionLogRecord r;
        r.slot_id = f[0];
        r.auction_id = f[1];
        if (r.auction_id.empty()) {
            throw InputError("line " + std::to_string(line_no) + ": empty auction_id");
        }
        try {
            r.timestamp = parse_timestamp(f[2]);
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const char* first = f[3].data();
        const auto [ptr, ec] = std::from_chars(first, first + f[3].size(), r.bid_cpm);
        if (ec != std::errc() || ptr != first + f[3].size() || !std::isfinite(r.bid_cpm) || !(r.bid_cpm > 0.0)) {
            throw InputError("line " + std::to_string(line_no) + ": bid_cpm must be a positive number");
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<AuctionLogRecord> read_auction_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open auction log " + path.string());
    }
    return read_auction_log(in);
}

void write_auction_log(std::ostream& out, const std::vector<AuctionLogRecord>& records) {
    out << kAuctionLogHeader << '\n';
    for (const auto& r : records) {
        out << r.slot_id << ',' << r.auction_id << ',' << format_timestamp(r.timestamp) << ','
            << format_bid(r.bid_cpm) << '\n';
    }
}

void write_auction_log(const std::filesystem::path& path, const std::vector<AuctionLogRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    write_auction_log(out, records);
    if (!out) {
        throw InputError("failed writing " + path.string());
    }
}

std::vector<AuctionSummary> summarize_auctions(const std::vector<AuctionLogRecord>& records) {
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::string> ids;
    std::vector<std::int64_t> first_seen;
    std::vector<std::vector<double>> bids;
    for (const auto& r : records) {
        auto [it, inserted] = index.try_emplace(r.auction_id, ids.size());
        if (inserted) {
            ids.push_back(r.auction_id);
            first_seen.push_back(r.timestamp);
            bids.emplace_back();
        }
        first_seen[it->second] = std::min(first_seen[it->second], r.timestamp);
        bids[it->second].push_back(r.bid_cpm);
    }
    std::vector<AuctionSummary> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto ts = first_seen[i];
        const std::int64_t hour = ts >= 0 ? ts / 3600 : -((-ts + 3599) / 3600);
        out.push_back(AuctionSummary::from_bids(ids[i], hour, std::move(bids[i])));
    }
    return out;
}

}  // namespace pgrtb
