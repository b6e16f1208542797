#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace riskforge {

enum class ColumnKind { Numeric, Categorical };

/// One named column. Numeric cells that are masked also hold NaN, but the mask
/// is authoritative: a masked cell is missing regardless of its stored value.
class Column {
 public:
  static Column numeric(std::string name, std::vector<double> values);
  static Column numeric(std::string name, std::vector<double> values,
                        std::vector<std::uint8_t> missing);
  static Column categorical(std::string name, std::vector<std::string> values,
                            std::vector<std::uint8_t> missing = {});
  /// All cells masked.
  static Column missing_numeric(std::string name, std::size_t rows);

  const std::string& name() const noexcept { return name_; }
  ColumnKind kind() const noexcept { return kind_; }
  bool is_numeric() const noexcept { return kind_ == ColumnKind::Numeric; }
  std::size_t size() const noexcept { return missing_.size(); }

  bool is_missing(std::size_t row) const { return missing_[row] != 0; }
  double number(std::size_t row) const;
  const std::string& text(std::size_t row) const;

  std::span<const double> numbers() const noexcept { return numbers_; }
  std::span<const std::string> texts() const noexcept { return texts_; }
  std::span<const std::uint8_t> missing_mask() const noexcept { return missing_; }
  std::size_t missing_count() const noexcept;

  // Builders. Frames never expose these on shared columns; callers mutate
  // their own copy and hand it to PatientFrame::with_column.
  void set_number(std::size_t row, double value);
  void set_missing(std::size_t row);
  Column renamed(std::string name) const;
  Column take(std::span<const std::size_t> rows) const;

 private:
  Column() = default;

  std::string name_;
  ColumnKind kind_ = ColumnKind::Numeric;
  std::vector<double> numbers_;
  std::vector<std::string> texts_;
  std::vector<std::uint8_t> missing_;
};

struct RowKey {
  std::int64_t subject_id = 0;
  std::int64_t hadm_id = 0;
  std::optional<std::int64_t> stay_id;

  friend bool operator==(const RowKey&, const RowKey&) = default;
  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

/// Column-oriented table with a per-cell missing mask. Value type; every
/// operation returns a new frame.
class PatientFrame {
 public:
  PatientFrame() = default;
  explicit PatientFrame(std::vector<Column> columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return columns_.size(); }

  bool has(std::string_view name) const { return find(name).has_value(); }
  std::optional<std::size_t> find(std::string_view name) const;
  const Column& column(std::string_view name) const;
  const Column& column(std::size_t index) const { return columns_.at(index); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  std::vector<std::string> names() const;

  /// Adds the column, replacing any existing column of the same name in place.
  PatientFrame with_column(Column column) const;
  PatientFrame without(std::span<const std::string> names) const;
  PatientFrame select(std::span<const std::string> names) const;
  PatientFrame take_rows(std::span<const std::size_t> rows) const;
  PatientFrame filter_rows(const std::function<bool(std::size_t)>& keep) const;

  /// Row identifiers read from the subject_id / hadm_id / stay_id columns.
  /// Missing id cells read as 0 (stay_id as nullopt).
  std::vector<RowKey> row_keys() const;

  /// Convenience: numeric cell or nullopt when masked.
  std::optional<double> value(std::string_view column, std::size_t row) const;

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
};

enum class JoinKey { SubjectId, HadmId, StayId };
enum class JoinKind { Inner, Left };

struct JoinSpec {
  std::vector<JoinKey> keys;
  JoinKind kind = JoinKind::Inner;
};

std::string_view key_column_name(JoinKey key);

/// Key-based join. Right-side non-key columns whose names collide with a left
/// column are suffixed with "_r". Left rows with no match are dropped (inner)
/// or kept with every right-side cell masked (left).
PatientFrame join(const PatientFrame& left, const PatientFrame& right, const JoinSpec& spec);

enum class Stat { Mean, Min, Max };

/// One row per distinct unmasked key value, ascending. Emits `<col>_mean`,
/// `<col>_min`, `<col>_max` for each requested stat. Masked cells are skipped;
/// a group with no observed cells yields masked outputs.
PatientFrame aggregate_by_key(const PatientFrame& frame, std::string_view key,
                              std::span<const std::string> columns,
                              std::span<const Stat> stats);

std::string_view stat_suffix(Stat stat);

/// Rows of `frame` whose `column` value is unmasked, in ascending key order
/// grouped together; used by the cohort and harmonization stages.
std::vector<std::vector<std::size_t>> group_rows(const PatientFrame& frame, std::string_view column);

}  // namespace riskforge
