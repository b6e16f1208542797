#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "riskforge/frame.hpp"

namespace riskforge {

enum class ColumnType {
  Numeric,
  Categorical,
  /// Either a plain number (hours) or "YYYY-MM-DD[ HH:MM[:SS]]", stored as
  /// hours since 1970-01-01.
  Timestamp,
};

struct ColumnSpec {
  std::string name;
  ColumnType type = ColumnType::Numeric;
  bool required = true;
};

using Schema = std::vector<ColumnSpec>;

/// Parses CSV text (comma separated, RFC-4180 quoting, blank cell = missing).
/// Only schema columns are kept, in schema order; absent required columns
/// raise MissingColumn, absent optional ones become fully masked columns.
PatientFrame parse_csv(std::string_view text, const Schema& schema, std::string_view origin = "<memory>");

/// Same, inferring each column: numeric when every non-blank cell parses as
/// a finite number, categorical otherwise.
PatientFrame parse_csv(std::string_view text, std::string_view origin = "<memory>");

PatientFrame read_csv(const std::filesystem::path& path, const Schema& schema);
PatientFrame read_csv(const std::filesystem::path& path);

std::string to_csv(const PatientFrame& frame);

/// Writes via a temporary file and rename, so readers never observe a
/// partially written table.
void write_csv(const PatientFrame& frame, const std::filesystem::path& path);
void write_text_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_text(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_number(double value);

/// Hours since epoch for "YYYY-MM-DD[ HH:MM[:SS]]"; nullopt when malformed.
std::optional<double> parse_timestamp(std::string_view text);

/// Inverse of parse_timestamp, rounded to whole seconds.
std::string format_timestamp(double hours);

}  // namespace riskforge
