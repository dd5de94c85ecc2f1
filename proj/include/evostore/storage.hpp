#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "evostore/genome.hpp"

namespace evostore {

inline constexpr std::size_t kDefaultMemoryBudgetBytes = std::size_t{2} << 30;

// Immutable base dataset: dense keys 0..n_rows-1 as a separate column and a
// row-major payload of n_rows x P signed 64-bit properties.
class BaseTable {
 public:
  // Payload values drawn uniformly from [0, 2^32); deterministic per
  // (n_rows, n_props, seed). Throws on a zero shape or when keys + payload
  // would exceed the memory budget.
  static BaseTable generate(std::uint64_t n_rows, std::uint32_t n_props, std::uint64_t seed,
                            std::size_t memory_budget_bytes = kDefaultMemoryBudgetBytes);

  // CSV ingest: one row per line, P comma-separated decimal integers, no
  // header. Keys are assigned densely in file order.
  static BaseTable load_csv(const std::filesystem::path& path);

  std::uint64_t n_rows() const { return n_rows_; }
  std::uint32_t n_props() const { return n_props_; }
  std::span<const std::uint64_t> keys() const { return keys_; }
  std::span<const std::int64_t> payload() const { return payload_; }

  std::int64_t value(std::uint64_t row, std::uint32_t prop) const {
    return payload_[row * n_props_ + prop];
  }

  // Largest absolute payload value (INT64_MIN maps to 2^63). Scans use it to
  // size overflow-safe 64-bit accumulation chunks.
  std::uint64_t value_magnitude_bound() const { return value_bound_; }

  // FNV-1a over the payload block; used to assert immutability in tests.
  std::uint64_t payload_checksum() const;

 private:
  BaseTable() = default;

  void compute_value_bound();

  std::uint64_t n_rows_ = 0;
  std::uint32_t n_props_ = 0;
  std::uint64_t value_bound_ = 0;
  std::vector<std::uint64_t> keys_;
  std::vector<std::int64_t> payload_;
};

// One candidate's physical layout: per group, a contiguous block of
// n_rows x |group| values, row-major within the group, properties ascending.
// Shares the base table's key column (the base must outlive the layout).
// Move-only so that live-byte accounting stays exact.
class MaterializedLayout {
 public:
  MaterializedLayout(LayoutGenome layout, std::uint64_t n_rows,
                     std::span<const std::uint64_t> keys,
                     std::vector<std::vector<std::int64_t>> blocks,
                     std::uint64_t value_bound);
  ~MaterializedLayout();

  MaterializedLayout(MaterializedLayout&&) noexcept;
  MaterializedLayout& operator=(MaterializedLayout&&) noexcept;
  MaterializedLayout(const MaterializedLayout&) = delete;
  MaterializedLayout& operator=(const MaterializedLayout&) = delete;

  const LayoutGenome& layout() const { return layout_; }
  std::uint64_t n_rows() const { return n_rows_; }
  std::span<const std::uint64_t> keys() const { return keys_; }
  bool dropped() const { return dropped_; }

  // Releases the group blocks; idempotent. Any later block access throws.
  void drop();

  std::span<const std::int64_t> block(std::size_t group_index) const;
  std::size_t group_width(std::size_t group_index) const {
    return layout_.groups[group_index].size();
  }

  // (group index, offset within the group's row) of a property.
  std::pair<std::uint32_t, std::uint32_t> locate(PropertyId prop) const {
    return prop_location_[prop];
  }

  // Inherited from the base table; see BaseTable::value_magnitude_bound.
  std::uint64_t value_magnitude_bound() const { return value_bound_; }

  std::size_t memory_bytes() const;

 private:
  void ensure_live() const;

  LayoutGenome layout_;
  std::uint64_t n_rows_ = 0;
  std::uint64_t value_bound_ = 0;
  std::span<const std::uint64_t> keys_;
  std::vector<std::vector<std::int64_t>> blocks_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> prop_location_;
  bool dropped_ = false;
};

// Full sequential passes over BaseTable.payload performed while
// materializing. Counted by instrumentation of the row sweep, not inferred.
struct ReadAccounting {
  std::uint64_t base_passes = 0;
};

// Straightforward per-layout transform (one pass per call).
MaterializedLayout materialize(const BaseTable& base, const LayoutGenome& layout);

// Materializes every layout in one shared pass over the base payload:
// base_passes == 1 for any non-empty list, 0 for an empty one. Outputs are
// value-equal to per-layout materialize.
std::pair<std::vector<MaterializedLayout>, ReadAccounting> materialize_many(
    const BaseTable& base, const std::vector<LayoutGenome>& layouts);

// Free-function form of MaterializedLayout::drop.
void drop_layout(MaterializedLayout& layout);

// Bytes currently held by live materialized layouts (process-wide).
std::size_t live_layout_bytes();

}  // namespace evostore
