#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgrtb/curve_fit.hpp"

namespace pgrtb {

// One bid in one auction. Timestamps are seconds since the Unix epoch (UTC).
struct AuctionLogRecord {
    std::string slot_id;
    std::string auction_id;
    std::int64_t timestamp = 0;
    double bid_cpm = 0.0;
};

inline constexpr const char* kAuctionLogHeader = "slot_id,auction_id,timestamp,bid_cpm";

// ISO-8601 UTC: YYYY-MM-DDTHH:MM:SS[.fff](Z|+00:00). Throws InputError.
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t seconds);

std::vector<AuctionLogRecord> read_auction_log(std::istream& in);
std::vector<AuctionLogRecord> read_auction_log(const std::filesystem::path& path);
void write_auction_log(std::ostream& out, const std::vector<AuctionLogRecord>& records);
void write_auction_log(const std::filesystem::path& path, const std::vector<AuctionLogRecord>& records);

// Groups rows by auction id in order of first appearance. The hour of an
// auction is that of its earliest row.
std::vector<AuctionSummary> summarize_auctions(const std::vector<AuctionLogRecord>& records);

}  // namespace pgrtb
