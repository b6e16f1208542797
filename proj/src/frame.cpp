#include "riskforge/frame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_set>

#include "riskforge/error.hpp"

namespace riskforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Column Column::numeric(std::string name, std::vector<double> values) {
  std::vector<std::uint8_t> missing(values.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) missing[i] = 1;
  }
  return numeric(std::move(name), std::move(values), std::move(missing));
}

Column Column::numeric(std::string name, std::vector<double> values,
                       std::vector<std::uint8_t> missing) {
  if (missing.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "mask length differs from column '" + name + "'");
  }
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::Numeric;
  c.numbers_ = std::move(values);
  c.missing_ = std::move(missing);
  for (std::size_t i = 0; i < c.numbers_.size(); ++i) {
    if (c.missing_[i]) c.numbers_[i] = kNaN;
  }
  return c;
}

Column Column::categorical(std::string name, std::vector<std::string> values,
                           std::vector<std::uint8_t> missing) {
  if (missing.empty()) missing.assign(values.size(), 0);
  if (missing.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "mask length differs from column '" + name + "'");
  }
  Column c;
  c.name_ = std::move(name);
  c.kind_ = ColumnKind::Categorical;
  c.texts_ = std::move(values);
  c.missing_ = std::move(missing);
  for (std::size_t i = 0; i < c.texts_.size(); ++i) {
    if (c.missing_[i]) c.texts_[i].clear();
  }
  return c;
}

Column Column::missing_numeric(std::string name, std::size_t rows) {
  return numeric(std::move(name), std::vector<double>(rows, kNaN),
                 std::vector<std::uint8_t>(rows, 1));
}

double Column::number(std::size_t row) const {
  if (kind_ != ColumnKind::Numeric) {
    throw Error(ErrorCode::NonNumericColumn, name_);
  }
  return numbers_[row];
}

const std::string& Column::text(std::size_t row) const {
  if (kind_ != ColumnKind::Categorical) {
    throw Error(ErrorCode::InvalidArgument, "column '" + name_ + "' is numeric");
  }
  return texts_[row];
}

std::size_t Column::missing_count() const noexcept {
  return static_cast<std::size_t>(std::count(missing_.begin(), missing_.end(), 1));
}

void Column::set_number(std::size_t row, double value) {
  if (kind_ != ColumnKind::Numeric) throw Error(ErrorCode::NonNumericColumn, name_);
  if (std::isfinite(value)) {
    numbers_[row] = value;
    missing_[row] = 0;
  } else {
    set_missing(row);
  }
}

void Column::set_missing(std::size_t row) {
  missing_[row] = 1;
  if (kind_ == ColumnKind::Numeric) {
    numbers_[row] = kNaN;
  } else {
    texts_[row].clear();
  }
}

Column Column::renamed(std::string name) const {
  Column c = *this;
  c.name_ = std::move(name);
  return c;
}

Column Column::take(std::span<const std::size_t> rows) const {
  Column c;
  c.name_ = name_;
  c.kind_ = kind_;
  c.missing_.reserve(rows.size());
  if (kind_ == ColumnKind::Numeric) {
    c.numbers_.reserve(rows.size());
    for (std::size_t r : rows) {
      c.numbers_.push_back(numbers_[r]);
      c.missing_.push_back(missing_[r]);
    }
  } else {
    c.texts_.reserve(rows.size());
    for (std::size_t r : rows) {
      c.texts_.push_back(texts_[r]);
      c.missing_.push_back(missing_[r]);
    }
  }
  return c;
}

PatientFrame::PatientFrame(std::vector<Column> columns) : columns_(std::move(columns)) {
  rows_ = columns_.empty() ? 0 : columns_.front().size();
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.size() != rows_) {
      throw Error(ErrorCode::InvalidArgument, "column '" + c.name() + "' has " +
                                                  std::to_string(c.size()) + " rows, expected " +
                                                  std::to_string(rows_));
    }
    if (!seen.insert(c.name()).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate column '" + c.name() + "'");
    }
  }
}

std::optional<std::size_t> PatientFrame::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name() == name) return i;
  }
  return std::nullopt;
}

const Column& PatientFrame::column(std::string_view name) const {
  auto idx = find(name);
  if (!idx) throw Error(ErrorCode::MissingColumn, std::string(name));
  return columns_[*idx];
}

std::vector<std::string> PatientFrame::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name());
  return out;
}

PatientFrame PatientFrame::with_column(Column column) const {
  if (!columns_.empty() && column.size() != rows_) {
    throw Error(ErrorCode::InvalidArgument, "column '" + column.name() + "' length mismatch");
  }
  std::vector<Column> cols = columns_;
  if (auto idx = find(column.name())) {
    cols[*idx] = std::move(column);
  } else {
    cols.push_back(std::move(column));
  }
  return PatientFrame(std::move(cols));
}

PatientFrame PatientFrame::without(std::span<const std::string> names) const {
  std::vector<Column> cols;
  for (const auto& c : columns_) {
    if (std::find(names.begin(), names.end(), c.name()) == names.end()) cols.push_back(c);
  }
  return PatientFrame(std::move(cols));
}

PatientFrame PatientFrame::select(std::span<const std::string> names) const {
  std::vector<Column> cols;
  cols.reserve(names.size());
  for (const auto& n : names) cols.push_back(column(n));
  return PatientFrame(std::move(cols));
}

PatientFrame PatientFrame::take_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const auto& c : columns_) cols.push_back(c.take(rows));
  PatientFrame out(std::move(cols));
  out.rows_ = rows.size();
  return out;
}

PatientFrame PatientFrame::filter_rows(const std::function<bool(std::size_t)>& keep) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < rows_; ++r) {
    if (keep(r)) rows.push_back(r);
  }
  return take_rows(rows);
}

std::vector<RowKey> PatientFrame::row_keys() const {
  std::vector<RowKey> keys(rows_);
  auto read = [&](std::string_view name, auto&& assign) {
    auto idx = find(name);
    if (!idx || !columns_[*idx].is_numeric()) return;
    const Column& c = columns_[*idx];
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!c.is_missing(r)) assign(keys[r], static_cast<std::int64_t>(c.number(r)));
    }
  };
  read("subject_id", [](RowKey& k, std::int64_t v) { k.subject_id = v; });
  read("hadm_id", [](RowKey& k, std::int64_t v) { k.hadm_id = v; });
  read("stay_id", [](RowKey& k, std::int64_t v) { k.stay_id = v; });
  return keys;
}

std::optional<double> PatientFrame::value(std::string_view name, std::size_t row) const {
  const Column& c = column(name);
  if (c.is_missing(row)) return std::nullopt;
  return c.number(row);
}

std::string_view key_column_name(JoinKey key) {
  switch (key) {
    case JoinKey::SubjectId: return "subject_id";
    case JoinKey::HadmId: return "hadm_id";
    case JoinKey::StayId: return "stay_id";
  }
  return "";
}

namespace {

using KeyTuple = std::vector<std::int64_t>;

std::vector<std::optional<KeyTuple>> key_tuples(const PatientFrame& frame,
                                                const std::vector<JoinKey>& keys) {
  std::vector<const Column*> cols;
  for (JoinKey k : keys) {
    auto name = key_column_name(k);
    auto idx = frame.find(name);
    if (!idx) throw Error(ErrorCode::KeyMissing, std::string(name));
    const Column& c = frame.column(*idx);
    if (!c.is_numeric()) throw Error(ErrorCode::KeyMissing, std::string(name) + " is not numeric");
    cols.push_back(&c);
  }
  std::vector<std::optional<KeyTuple>> out(frame.rows());
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    KeyTuple t;
    bool ok = true;
    for (const Column* c : cols) {
      if (c->is_missing(r)) {
        ok = false;
        break;
      }
      t.push_back(static_cast<std::int64_t>(c->number(r)));
    }
    if (ok) out[r] = std::move(t);
  }
  return out;
}

Column all_missing_like(const Column& c, std::size_t rows) {
  if (c.is_numeric()) return Column::missing_numeric(c.name(), rows);
  return Column::categorical(c.name(), std::vector<std::string>(rows),
                             std::vector<std::uint8_t>(rows, 1));
}

}  // namespace

PatientFrame join(const PatientFrame& left, const PatientFrame& right, const JoinSpec& spec) {
  if (spec.keys.empty()) throw Error(ErrorCode::InvalidArgument, "join requires at least one key");
  auto left_keys = key_tuples(left, spec.keys);
  auto right_keys = key_tuples(right, spec.keys);

  std::map<KeyTuple, std::vector<std::size_t>> index;
  for (std::size_t r = 0; r < right.rows(); ++r) {
    if (right_keys[r]) index[*right_keys[r]].push_back(r);
  }

  std::vector<std::size_t> left_rows;
  std::vector<std::optional<std::size_t>> right_rows;
  for (std::size_t r = 0; r < left.rows(); ++r) {
    const std::vector<std::size_t>* matches = nullptr;
    if (left_keys[r]) {
      auto it = index.find(*left_keys[r]);
      if (it != index.end()) matches = &it->second;
    }
    if (matches != nullptr) {
      for (std::size_t rr : *matches) {
        left_rows.push_back(r);
        right_rows.push_back(rr);
      }
    } else if (spec.kind == JoinKind::Left) {
      left_rows.push_back(r);
      right_rows.push_back(std::nullopt);
    }
  }

  std::vector<Column> cols;
  for (const auto& c : left.columns()) cols.push_back(c.take(left_rows));

  std::vector<std::string> key_names;
  for (JoinKey k : spec.keys) key_names.emplace_back(key_column_name(k));

  std::vector<std::size_t> right_take(right_rows.size(), 0);
  for (std::size_t i = 0; i < right_rows.size(); ++i) right_take[i] = right_rows[i].value_or(0);

  for (const auto& c : right.columns()) {
    if (std::find(key_names.begin(), key_names.end(), c.name()) != key_names.end()) continue;
    Column taken = right.rows() == 0 ? all_missing_like(c, right_rows.size()) : c.take(right_take);
    for (std::size_t i = 0; i < right_rows.size(); ++i) {
      if (!right_rows[i]) taken.set_missing(i);
    }
    std::string name = c.name();
    if (left.has(name)) name += "_r";
    cols.push_back(taken.renamed(std::move(name)));
  }
  return PatientFrame(std::move(cols));
}

std::string_view stat_suffix(Stat stat) {
  switch (stat) {
    case Stat::Mean: return "_mean";
    case Stat::Min: return "_min";
    case Stat::Max: return "_max";
  }
  return "";
}

std::vector<std::vector<std::size_t>> group_rows(const PatientFrame& frame, std::string_view column) {
  const Column& key = frame.column(column);
  if (!key.is_numeric()) throw Error(ErrorCode::NonNumericColumn, std::string(column));
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    if (!key.is_missing(r)) groups[key.number(r)].push_back(r);
  }
  std::vector<std::vector<std::size_t>> out;
  out.reserve(groups.size());
  for (auto& [_, rows] : groups) out.push_back(std::move(rows));
  return out;
}

PatientFrame aggregate_by_key(const PatientFrame& frame, std::string_view key,
                              std::span<const std::string> columns,
                              std::span<const Stat> stats) {
  for (const auto& name : columns) {
    if (!frame.column(name).is_numeric()) throw Error(ErrorCode::NonNumericColumn, name);
  }
  auto groups = group_rows(frame, key);
  const Column& key_col = frame.column(key);

  std::vector<double> keys;
  keys.reserve(groups.size());
  for (const auto& g : groups) keys.push_back(key_col.number(g.front()));
  std::vector<Column> out;
  out.push_back(Column::numeric(std::string(key), std::move(keys)));

  for (const auto& name : columns) {
    const Column& c = frame.column(name);
    for (Stat s : stats) {
      Column agg = Column::missing_numeric(name + std::string(stat_suffix(s)), groups.size());
      for (std::size_t g = 0; g < groups.size(); ++g) {
        double sum = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        std::size_t count = 0;
        for (std::size_t r : groups[g]) {
          if (c.is_missing(r)) continue;
          double v = c.number(r);
          sum += v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
          ++count;
        }
        if (count == 0) continue;
        switch (s) {
          case Stat::Mean: agg.set_number(g, sum / static_cast<double>(count)); break;
          case Stat::Min: agg.set_number(g, lo); break;
          case Stat::Max: agg.set_number(g, hi); break;
        }
      }
      out.push_back(std::move(agg));
    }
  }
  return PatientFrame(std::move(out));
}

}  // namespace riskforge
