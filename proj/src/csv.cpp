#include "riskforge/csv.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "riskforge/error.hpp"

namespace riskforge {

namespace {

struct Field {
  std::string text;
  bool quoted = false;
};

using Record = std::vector<Field>;

std::vector<Record> tokenize(std::string_view text, std::string_view origin) {
  std::vector<Record> records;
  Record current;
  Field field;
  bool in_quotes = false;
  bool field_started = false;
  bool any_content = false;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field = Field{};
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current.clear();
    any_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.text.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.text.find_first_not_of(" \t") == std::string::npos) {
          field.text.clear();
          field.quoted = true;
          in_quotes = true;
          field_started = true;
          any_content = true;
        } else {
          field.text.push_back(c);
        }
        break;
      case ',':
        end_field();
        any_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any_content || field_started || !current.empty()) {
          end_record();
        }
        break;
      default:
        field.text.push_back(c);
        field_started = true;
        any_content = true;
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::IoFailure, std::string(origin) + ": unterminated quoted field");
  }
  if (any_content || field_started || !current.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool is_blank(const Field& f) { return !f.quoted && trim(f.text).empty(); }

// Howard Hinnant's days_from_civil.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

Column build_column(const std::string& name, ColumnType type,
                    const std::vector<Record>& records, std::optional<std::size_t> index) {
  const std::size_t n = records.size() - 1;
  if (!index) {
    if (type == ColumnType::Categorical) {
      return Column::categorical(name, std::vector<std::string>(n), std::vector<std::uint8_t>(n, 1));
    }
    return Column::missing_numeric(name, n);
  }
  auto cell = [&](std::size_t r) -> const Field* {
    const Record& rec = records[r + 1];
    return *index < rec.size() ? &rec[*index] : nullptr;
  };
  if (type == ColumnType::Categorical) {
    std::vector<std::string> values(n);
    std::vector<std::uint8_t> missing(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
      const Field* f = cell(r);
      if (f == nullptr || is_blank(*f)) {
        missing[r] = 1;
      } else {
        values[r] = f->text;
      }
    }
    return Column::categorical(name, std::move(values), std::move(missing));
  }
  std::vector<double> values(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> missing(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    const Field* f = cell(r);
    if (f == nullptr) continue;
    std::optional<double> v = parse_number(f->text);
    if (!v && type == ColumnType::Timestamp) v = parse_timestamp(trim(f->text));
    if (v) {
      values[r] = *v;
      missing[r] = 0;
    }
  }
  return Column::numeric(name, std::move(values), std::move(missing));
}

std::vector<std::string> header_names(const std::vector<Record>& records) {
  std::vector<std::string> names;
  if (records.empty()) return names;
  for (const auto& f : records.front()) names.emplace_back(trim(f.text));
  return names;
}

bool needs_quotes(std::string_view s) {
  if (s.empty()) return true;
  if (s.front() == ' ' || s.back() == ' ' || s.front() == '\t' || s.back() == '\t') return true;
  return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

void append_quoted(std::string& out, std::string_view s) {
  if (!needs_quotes(s)) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::optional<double> parse_timestamp(std::string_view s) {
  // YYYY-MM-DD[ HH:MM[:SS]] (a 'T' separator is accepted too).
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    if (pos + len > s.size()) return std::nullopt;
    int v = 0;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc() || p != s.data() + pos + len) return std::nullopt;
    return v;
  };
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = num(0, 4), mo = num(5, 2), d = num(8, 2);
  if (!y || !mo || !d || *mo < 1 || *mo > 12 || *d < 1 || *d > 31) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (s.size() > 10) {
    if ((s[10] != ' ' && s[10] != 'T') || s.size() < 16 || s[13] != ':') return std::nullopt;
    auto h = num(11, 2), m = num(14, 2);
    if (!h || !m) return std::nullopt;
    hh = *h;
    mm = *m;
    if (s.size() > 16) {
      if (s[16] != ':' || s.size() != 19) return std::nullopt;
      auto sec = num(17, 2);
      if (!sec) return std::nullopt;
      ss = *sec;
    }
  }
  const long long days = days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d));
  return static_cast<double>(days) * 24.0 + hh + mm / 60.0 + ss / 3600.0;
}

PatientFrame parse_csv(std::string_view text, const Schema& schema, std::string_view origin) {
  auto records = tokenize(text, origin);
  if (records.empty()) records.emplace_back();
  const auto header = header_names(records);
  std::vector<Column> cols;
  cols.reserve(schema.size());
  for (const auto& spec : schema) {
    std::optional<std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == spec.name) {
        index = i;
        break;
      }
    }
    if (!index && spec.required) {
      throw Error(ErrorCode::MissingColumn, spec.name + " (in " + std::string(origin) + ")");
    }
    cols.push_back(build_column(spec.name, spec.type, records, index));
  }
  return PatientFrame(std::move(cols));
}

PatientFrame parse_csv(std::string_view text, std::string_view origin) {
  auto records = tokenize(text, origin);
  if (records.empty()) return PatientFrame();
  const auto header = header_names(records);
  Schema schema;
  for (std::size_t i = 0; i < header.size(); ++i) {
    bool numeric = true;
    for (std::size_t r = 1; r < records.size() && numeric; ++r) {
      if (i >= records[r].size()) continue;
      const Field& f = records[r][i];
      if (is_blank(f)) continue;
      if (f.quoted || !parse_number(f.text)) numeric = false;
    }
    schema.push_back({header[i], numeric ? ColumnType::Numeric : ColumnType::Categorical, true});
  }
  return parse_csv(text, schema, origin);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
  return buf.str();
}

PatientFrame read_csv(const std::filesystem::path& path, const Schema& schema) {
  return parse_csv(read_text(path), schema, path.string());
}

PatientFrame read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text(path), path.string());
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0 into 0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::IoFailure, "number formatting failed");
  return std::string(buf, ptr);
}

std::string to_csv(const PatientFrame& frame) {
  std::string out;
  const auto& cols = frame.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out.push_back(',');
    append_quoted(out, cols[c].name());
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out.push_back(',');
      const Column& col = cols[c];
      if (col.is_missing(r)) continue;
      if (col.is_numeric()) {
        out += format_number(col.number(r));
      } else {
        append_quoted(out, col.text(r));
      }
    }
    out.push_back('\n');
  }
  return out;
}

void write_text_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "rename to " + path.string() + ": " + ec.message());
}

void write_csv(const PatientFrame& frame, const std::filesystem::path& path) {
  write_text_atomic(path, to_csv(frame));
}

std::string format_timestamp(double hours) {
  const auto total = static_cast<long long>(std::llround(hours * 3600.0));
  long long days = total >= 0 ? total / 86400 : -((-total + 86399) / 86400);
  long long secs = total - days * 86400;
  // days -> proleptic Gregorian date
  days += 719468;
  const long long era = (days >= 0 ? days : days - 146096) / 146097;
  const auto doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  const long long y = static_cast<long long>(yoe) + era * 400 + (m <= 2);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02lld:%02lld:%02lld", y, m, d, secs / 3600, (secs / 60) % 60,
                secs % 60);
  return buf;
}

}  // namespace riskforge
