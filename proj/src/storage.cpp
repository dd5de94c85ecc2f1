#include "evostore/storage.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>

#include "evostore/rng.hpp"

namespace evostore {

namespace {

std::atomic<std::size_t> g_live_layout_bytes{0};

std::size_t blocks_bytes(const std::vector<std::vector<std::int64_t>>& blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) {
    n += b.size() * sizeof(std::int64_t);
  }
  return n;
}

}  // namespace

BaseTable BaseTable::generate(std::uint64_t n_rows, std::uint32_t n_props, std::uint64_t seed,
                              std::size_t memory_budget_bytes) {
  if (n_rows < 1 || n_props < 1) {
    throw std::invalid_argument("generate_base: n_rows and n_props must be >= 1");
  }
  const std::uint64_t cells = n_rows * static_cast<std::uint64_t>(n_props);
  const std::uint64_t bytes = cells * sizeof(std::int64_t) + n_rows * sizeof(std::uint64_t);
  if (bytes > memory_budget_bytes) {
    throw std::runtime_error("generate_base: " + std::to_string(bytes) +
                             " bytes exceed the memory budget of " +
                             std::to_string(memory_budget_bytes));
  }

  BaseTable table;
  table.n_rows_ = n_rows;
  table.n_props_ = n_props;
  table.keys_.resize(n_rows);
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    table.keys_[r] = r;
  }
  table.payload_.resize(cells);
  Rng rng(seed);
  for (auto& v : table.payload_) {
    v = static_cast<std::int64_t>(rng.next_u64() >> 32);  // uniform [0, 2^32)
  }
  table.compute_value_bound();
  return table;
}

BaseTable BaseTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_base: cannot open '" + path.string() + "'");
  }

  BaseTable table;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) {
      break;
    }
    std::vector<std::int64_t> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t pos = line.find(',', start);
      const std::string token =
          pos == std::string::npos ? line.substr(start) : line.substr(start, pos - start);
      std::int64_t value = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw std::runtime_error("load_base: parse error at line " + std::to_string(line_no) +
                                 ": bad integer '" + token + "'");
      }
      row.push_back(value);
      if (pos == std::string::npos) {
        break;
      }
      start = pos + 1;
    }
    if (table.n_rows_ == 0) {
      table.n_props_ = static_cast<std::uint32_t>(row.size());
    } else if (row.size() != table.n_props_) {
      throw std::runtime_error("load_base: ragged row at line " + std::to_string(line_no) +
                               ": expected " + std::to_string(table.n_props_) + " fields, got " +
                               std::to_string(row.size()));
    }
    table.payload_.insert(table.payload_.end(), row.begin(), row.end());
    ++table.n_rows_;
  }
  if (table.n_rows_ == 0) {
    throw std::runtime_error("load_base: no rows in '" + path.string() + "'");
  }
  table.keys_.resize(table.n_rows_);
  for (std::uint64_t r = 0; r < table.n_rows_; ++r) {
    table.keys_[r] = r;
  }
  table.compute_value_bound();
  return table;
}

void BaseTable::compute_value_bound() {
  std::uint64_t bound = 0;
  for (const std::int64_t v : payload_) {
    const std::uint64_t magnitude =
        v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
    bound = std::max(bound, magnitude);
  }
  value_bound_ = bound;
}

std::uint64_t BaseTable::payload_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const std::int64_t v : payload_) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 0x100000001b3ull;
  }
  return h;
}

MaterializedLayout::MaterializedLayout(LayoutGenome layout, std::uint64_t n_rows,
                                       std::span<const std::uint64_t> keys,
                                       std::vector<std::vector<std::int64_t>> blocks,
                                       std::uint64_t value_bound)
    : layout_(std::move(layout)),
      n_rows_(n_rows),
      value_bound_(value_bound),
      keys_(keys),
      blocks_(std::move(blocks)) {
  prop_location_.resize(layout_.property_count());
  for (std::size_t gi = 0; gi < layout_.groups.size(); ++gi) {
    for (std::size_t off = 0; off < layout_.groups[gi].size(); ++off) {
      prop_location_[layout_.groups[gi][off]] = {static_cast<std::uint32_t>(gi),
                                                 static_cast<std::uint32_t>(off)};
    }
  }
  g_live_layout_bytes += blocks_bytes(blocks_);
}

MaterializedLayout::~MaterializedLayout() { drop(); }

MaterializedLayout::MaterializedLayout(MaterializedLayout&& other) noexcept
    : layout_(std::move(other.layout_)),
      n_rows_(other.n_rows_),
      value_bound_(other.value_bound_),
      keys_(other.keys_),
      blocks_(std::move(other.blocks_)),
      prop_location_(std::move(other.prop_location_)),
      dropped_(other.dropped_) {
  other.blocks_.clear();
  other.dropped_ = true;
}

MaterializedLayout& MaterializedLayout::operator=(MaterializedLayout&& other) noexcept {
  if (this != &other) {
    drop();
    layout_ = std::move(other.layout_);
    n_rows_ = other.n_rows_;
    value_bound_ = other.value_bound_;
    keys_ = other.keys_;
    blocks_ = std::move(other.blocks_);
    prop_location_ = std::move(other.prop_location_);
    dropped_ = other.dropped_;
    other.blocks_.clear();
    other.dropped_ = true;
  }
  return *this;
}

void MaterializedLayout::drop() {
  if (dropped_) {
    return;
  }
  g_live_layout_bytes -= blocks_bytes(blocks_);
  blocks_.clear();
  blocks_.shrink_to_fit();
  dropped_ = true;
}

void MaterializedLayout::ensure_live() const {
  if (dropped_) {
    throw std::runtime_error("layout dropped");
  }
}

std::span<const std::int64_t> MaterializedLayout::block(std::size_t group_index) const {
  ensure_live();
  return blocks_[group_index];
}

std::size_t MaterializedLayout::memory_bytes() const {
  return dropped_ ? 0 : blocks_bytes(blocks_);
}

namespace {

std::vector<std::vector<std::int64_t>> allocate_blocks(const BaseTable& base,
                                                       const LayoutGenome& layout) {
  std::vector<std::vector<std::int64_t>> blocks(layout.groups.size());
  for (std::size_t gi = 0; gi < layout.groups.size(); ++gi) {
    blocks[gi].resize(base.n_rows() * layout.groups[gi].size());
  }
  return blocks;
}

}  // namespace

MaterializedLayout materialize(const BaseTable& base, const LayoutGenome& layout) {
  LayoutGenome canonical = canonicalize(layout);
  if (canonical.property_count() != base.n_props()) {
    throw std::invalid_argument("materialize: layout covers " +
                                std::to_string(canonical.property_count()) +
                                " properties, table has " + std::to_string(base.n_props()));
  }
  auto blocks = allocate_blocks(base, canonical);
  const auto payload = base.payload();
  const std::uint32_t n_props = base.n_props();
  for (std::uint64_t r = 0; r < base.n_rows(); ++r) {
    const std::int64_t* row = payload.data() + r * n_props;
    for (std::size_t gi = 0; gi < canonical.groups.size(); ++gi) {
      const auto& group = canonical.groups[gi];
      std::int64_t* dst = blocks[gi].data() + r * group.size();
      for (std::size_t off = 0; off < group.size(); ++off) {
        dst[off] = row[group[off]];
      }
    }
  }
  return MaterializedLayout(std::move(canonical), base.n_rows(), base.keys(), std::move(blocks),
                            base.value_magnitude_bound());
}

std::pair<std::vector<MaterializedLayout>, ReadAccounting> materialize_many(
    const BaseTable& base, const std::vector<LayoutGenome>& layouts) {
  ReadAccounting accounting;
  std::vector<MaterializedLayout> out;
  if (layouts.empty()) {
    return {std::move(out), accounting};
  }

  std::vector<LayoutGenome> canonical;
  canonical.reserve(layouts.size());
  std::vector<std::vector<std::vector<std::int64_t>>> all_blocks;
  all_blocks.reserve(layouts.size());
  for (const auto& layout : layouts) {
    canonical.push_back(canonicalize(layout));
    if (canonical.back().property_count() != base.n_props()) {
      throw std::invalid_argument("materialize_many: layout covers " +
                                  std::to_string(canonical.back().property_count()) +
                                  " properties, table has " + std::to_string(base.n_props()));
    }
    all_blocks.push_back(allocate_blocks(base, canonical.back()));
  }

  // Single shared sweep: every target format is filled from one read of each
  // base row.
  const auto payload = base.payload();
  const std::uint32_t n_props = base.n_props();
  ++accounting.base_passes;
  for (std::uint64_t r = 0; r < base.n_rows(); ++r) {
    const std::int64_t* row = payload.data() + r * n_props;
    for (std::size_t li = 0; li < canonical.size(); ++li) {
      const auto& groups = canonical[li].groups;
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& group = groups[gi];
        std::int64_t* dst = all_blocks[li][gi].data() + r * group.size();
        for (std::size_t off = 0; off < group.size(); ++off) {
          dst[off] = row[group[off]];
        }
      }
    }
  }

  for (std::size_t li = 0; li < canonical.size(); ++li) {
    out.emplace_back(std::move(canonical[li]), base.n_rows(), base.keys(),
                     std::move(all_blocks[li]), base.value_magnitude_bound());
  }
  return {std::move(out), accounting};
}

void drop_layout(MaterializedLayout& layout) { layout.drop(); }

std::size_t live_layout_bytes() { return g_live_layout_bytes.load(); }

}  // namespace evostore
