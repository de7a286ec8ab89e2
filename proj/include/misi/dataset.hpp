#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace misi {

/// One observed variable: a name plus M finite samples. Units are metadata
/// only and never enter a computation.
class SampleColumn {
public:
    SampleColumn() = default;
    /// Throws InvalidArgument if the name is empty, fewer than two samples
    /// are given, or any sample is NaN/Inf.
    SampleColumn(std::string name, std::vector<double> values, std::string units = {});

    const std::string& name() const noexcept { return name_; }
    const std::string& units() const noexcept { return units_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

private:
    std::string name_;
    std::vector<double> values_;
    std::string units_;
};

enum class Role { cv, qoi };

std::string_view to_string(Role role);

/// M joint observations of named control variables and quantities of
/// interest. Row m across all columns is one (X, Y) observation.
class IoDataset {
public:
    IoDataset() = default;

    /// Appends a column. Throws InvalidArgument on a duplicate name and
    /// LengthMismatch if the length differs from existing columns.
    void add(SampleColumn column, Role role);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t column_count() const noexcept { return columns_.size(); }
    bool contains(std::string_view name) const noexcept;

    /// Throws UnknownColumn.
    const SampleColumn& column(std::string_view name) const;
    Role role(std::string_view name) const;

    /// Throws UnknownColumn or RoleMismatch.
    const SampleColumn& column(std::string_view name, Role expected) const;

    std::vector<std::string> names() const;
    std::vector<std::string> names(Role role) const;
    std::size_t cv_count() const { return names(Role::cv).size(); }
    std::size_t qoi_count() const { return names(Role::qoi).size(); }

    const std::vector<SampleColumn>& columns() const noexcept { return columns_; }
    const std::vector<Role>& roles() const noexcept { return roles_; }

    /// New dataset holding the listed rows (indices may repeat).
    IoDataset select_rows(std::span<const std::size_t> rows) const;

    /// New dataset with the named columns only, roles preserved.
    IoDataset select_columns(std::span<const std::string> names) const;

    /// Row-wise concatenation of the columns of `other` (same row count).
    void merge(const IoDataset& other);

private:
    std::size_t index_of(std::string_view name) const;

    std::vector<SampleColumn> columns_;
    std::vector<Role> roles_;
    std::size_t rows_ = 0;
};

}  // namespace misi
