#include "misi/dataset.hpp"

#include "misi/error.hpp"

#include <cmath>

namespace misi {

SampleColumn::SampleColumn(std::string name, std::vector<double> values, std::string units)
    : name_(std::move(name)), values_(std::move(values)), units_(std::move(units)) {
    if (name_.empty()) throw InvalidArgument("column name must be nonempty");
    if (values_.size() < 2)
        throw InvalidArgument("column '" + name_ + "' needs at least 2 samples, got " +
                              std::to_string(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw InvalidArgument("column '" + name_ + "' has a non-finite value at row " +
                                  std::to_string(i));
    }
}

std::string_view to_string(Role role) { return role == Role::cv ? "cv" : "qoi"; }

void IoDataset::add(SampleColumn column, Role role) {
    if (contains(column.name()))
        throw InvalidArgument("duplicate column name '" + column.name() + "'");
    if (!columns_.empty() && column.size() != rows_)
        throw LengthMismatch("column '" + column.name() + "' has " + std::to_string(column.size()) +
                             " rows, dataset has " + std::to_string(rows_));
    rows_ = column.size();
    columns_.push_back(std::move(column));
    roles_.push_back(role);
}

std::size_t IoDataset::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name() == name) return i;
    throw UnknownColumn("no column named '" + std::string(name) + "'");
}

bool IoDataset::contains(std::string_view name) const noexcept {
    for (const auto& c : columns_)
        if (c.name() == name) return true;
    return false;
}

const SampleColumn& IoDataset::column(std::string_view name) const { return columns_[index_of(name)]; }

Role IoDataset::role(std::string_view name) const { return roles_[index_of(name)]; }

const SampleColumn& IoDataset::column(std::string_view name, Role expected) const {
    const auto i = index_of(name);
    if (roles_[i] != expected)
        throw RoleMismatch("column '" + std::string(name) + "' has role " +
                           std::string(to_string(roles_[i])) + ", expected " +
                           std::string(to_string(expected)));
    return columns_[i];
}

std::vector<std::string> IoDataset::names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_) out.push_back(c.name());
    return out;
}

std::vector<std::string> IoDataset::names(Role role) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (roles_[i] == role) out.push_back(columns_[i].name());
    return out;
}

IoDataset IoDataset::select_rows(std::span<const std::size_t> rows) const {
    IoDataset out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto src = columns_[i].values();
        std::vector<double> v;
        v.reserve(rows.size());
        for (auto r : rows) {
            if (r >= rows_) throw InvalidArgument("row index out of range");
            v.push_back(src[r]);
        }
        out.add(SampleColumn(columns_[i].name(), std::move(v), columns_[i].units()), roles_[i]);
    }
    return out;
}

IoDataset IoDataset::select_columns(std::span<const std::string> names) const {
    IoDataset out;
    for (const auto& n : names) {
        const auto i = index_of(n);
        out.add(columns_[i], roles_[i]);
    }
    return out;
}

void IoDataset::merge(const IoDataset& other) {
    for (std::size_t i = 0; i < other.columns_.size(); ++i) add(other.columns_[i], other.roles_[i]);
}

}  // namespace misi
