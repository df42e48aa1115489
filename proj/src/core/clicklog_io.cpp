/**
 * Copyright (c) 2026, clicklab contributors
 */
#include "clicklab/clicklog_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>

namespace clicklab {
namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::size_t parse_count(std::string_view field, std::size_t line, const char* what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw Error(ErrorCode::kParse, fmt::format("line {}: field '{}' is not a valid {}", line, field, what));
  }
  return value;
}

}  // namespace

void write_click_log(std::ostream& out, const ClickLog& log) {
  for (const auto& imp : log.impressions()) {
    out << imp.query.str() << '\t' << imp.index;
    for (std::size_t k = 0; k < imp.ranking.size(); ++k) {
      out << '\t' << imp.ranking.items()[k].str() << ',' << (k + 1) << ',' << static_cast<int>(imp.clicks[k]);
    }
    out << '\n';
  }
}

std::string serialize_click_log(const ClickLog& log) {
  std::ostringstream out;
  write_click_log(out, log);
  return out.str();
}

std::vector<ClickLog> read_click_logs(std::istream& in) {
  std::vector<ClickLog> logs;
  std::map<QueryId, std::size_t> slot;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2) {
      throw Error(ErrorCode::kParse, fmt::format("line {}: expected query and impression index", line_no));
    }
    QueryId query;
    try {
      query = QueryId(std::string(fields[0]));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, fmt::format("line {}: query field: {}", line_no, e.what()));
    }
    const std::size_t index = parse_count(fields[1], line_no, "impression index");

    std::vector<ItemId> items;
    std::vector<std::uint8_t> clicks;
    for (std::size_t f = 2; f < fields.size(); ++f) {
      auto triple = split(fields[f], ',');
      if (triple.size() != 3) {
        throw Error(ErrorCode::kParse,
                    fmt::format("line {}: field {} is not an item,rank,click triple", line_no, f + 1));
      }
      const std::size_t rank = parse_count(triple[1], line_no, "rank");
      if (rank != items.size() + 1) {
        throw Error(ErrorCode::kParse,
                    fmt::format("line {}: field {} has rank {}, expected {}", line_no, f + 1, rank, items.size() + 1));
      }
      const std::size_t click = parse_count(triple[2], line_no, "click flag");
      if (click > 1) throw Error(ErrorCode::kParse, fmt::format("line {}: click flag must be 0 or 1", line_no));
      try {
        items.emplace_back(std::string(triple[0]));
      } catch (const Error& e) {
        throw Error(ErrorCode::kParse, fmt::format("line {}: field {}: {}", line_no, f + 1, e.what()));
      }
      clicks.push_back(static_cast<std::uint8_t>(click));
    }

    auto [it, inserted] = slot.try_emplace(query, logs.size());
    if (inserted) logs.emplace_back(query);
    try {
      logs[it->second].append(Impression(query, index, Ranking(std::move(items)), std::move(clicks)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return logs;
}

std::vector<ClickLog> parse_click_logs(const std::string& text) {
  std::istringstream in(text);
  return read_click_logs(in);
}

}  // namespace clicklab
