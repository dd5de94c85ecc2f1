#include "evostore/exec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace evostore {

std::string to_string(Int128 value) {
  if (value == 0) {
    return "0";
  }
  const bool negative = value < 0;
  unsigned __int128 magnitude =
      negative ? -static_cast<unsigned __int128>(value) : static_cast<unsigned __int128>(value);
  std::string digits;
  while (magnitude > 0) {
    digits += static_cast<char>('0' + static_cast<int>(magnitude % 10));
    magnitude /= 10;
  }
  if (negative) {
    digits += '-';
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

Query make_query(std::vector<PropertyId> accessed_props, double selectivity) {
  std::sort(accessed_props.begin(), accessed_props.end());
  accessed_props.erase(std::unique(accessed_props.begin(), accessed_props.end()),
                       accessed_props.end());
  if (accessed_props.empty()) {
    throw std::invalid_argument("invalid query: no accessed properties");
  }
  if (selectivity < 0.0 || selectivity > 1.0) {
    throw std::invalid_argument("invalid query: selectivity must be in [0, 1]");
  }
  Query q;
  q.filter_prop = accessed_props.front();
  q.accessed_props = std::move(accessed_props);
  q.selectivity = selectivity;
  q.threshold = static_cast<std::int64_t>(std::floor(selectivity * 4294967296.0));
  return q;
}

void validate_query(const Query& query, std::uint32_t n_props) {
  if (query.accessed_props.empty()) {
    throw std::invalid_argument("invalid query: no accessed properties");
  }
  for (const PropertyId p : query.accessed_props) {
    if (p >= n_props) {
      throw std::invalid_argument("invalid query: property " + std::to_string(p) +
                                  " out of range for P=" + std::to_string(n_props));
    }
  }
  if (std::find(query.accessed_props.begin(), query.accessed_props.end(), query.filter_prop) ==
      query.accessed_props.end()) {
    throw std::invalid_argument("invalid query: filter property not among accessed properties");
  }
}

QueryResult reference_execute(const Query& query, const BaseTable& base) {
  validate_query(query, base.n_props());
  QueryResult result;
  result.sums.assign(query.accessed_props.size(), 0);
  const auto payload = base.payload();
  const std::uint32_t n_props = base.n_props();
  for (std::uint64_t r = 0; r < base.n_rows(); ++r) {
    const std::int64_t* row = payload.data() + r * n_props;
    if (row[query.filter_prop] < query.threshold) {
      ++result.selected_count;
      for (std::size_t i = 0; i < query.accessed_props.size(); ++i) {
        result.sums[i] += row[query.accessed_props[i]];
      }
    }
  }
  return result;
}

namespace {

// One accessed column bound for the scan: the group block it lives in, the
// group's row width, its offset within the group row, and the slot of the
// accumulator it feeds.
struct BoundColumn {
  const std::int64_t* block;
  std::size_t width;
  std::size_t offset;
  std::size_t sum_slot;
};

struct ScanPlan {
  std::vector<BoundColumn> columns;
  const std::int64_t* filter_block;
  std::size_t filter_width;
  std::size_t filter_offset;
  std::uint64_t groups_read;
};

ScanPlan bind_scan(const Query& query, const MaterializedLayout& layout) {
  ScanPlan plan;
  plan.groups_read = 0;

  // Bind each touched group's block once; untouched groups are never read.
  std::vector<const std::int64_t*> bound(layout.layout().groups.size(), nullptr);
  auto bind_group = [&](std::uint32_t gi) {
    if (bound[gi] == nullptr) {
      bound[gi] = layout.block(gi).data();
      ++plan.groups_read;
    }
    return bound[gi];
  };

  for (std::size_t i = 0; i < query.accessed_props.size(); ++i) {
    const auto [gi, off] = layout.locate(query.accessed_props[i]);
    BoundColumn col;
    col.block = bind_group(gi);
    col.width = layout.group_width(gi);
    col.offset = off;
    col.sum_slot = i;
    plan.columns.push_back(col);
  }

  const auto [fgi, foff] = layout.locate(query.filter_prop);
  plan.filter_block = bind_group(fgi);
  plan.filter_width = layout.group_width(fgi);
  plan.filter_offset = foff;
  return plan;
}

// Rows whose 64-bit partial sum provably cannot overflow for a given value
// magnitude bound. Integer sums reassociate exactly, so accumulating a chunk
// in int64 and widening once per chunk is bit-identical to a 128-bit fold.
std::uint64_t overflow_safe_chunk_rows(std::uint64_t value_bound) {
  if (value_bound == 0) {
    return std::uint64_t{1} << 62;
  }
  return (std::uint64_t{1} << 62) / value_bound;
}

// Scan-select-sum over one column that is also the filter column. The narrow
// case the evolution is meant to reward, so the row loop carries no plan
// interpretation and (when the value bound allows) runs on vectorizable
// 64-bit accumulators.
template <bool kPredicated, std::size_t kWidth>
void scan_single_column(const std::int64_t* block, std::size_t width, std::size_t offset,
                        std::uint64_t n_rows, std::int64_t threshold, std::uint64_t value_bound,
                        QueryResult& result) {
  const std::size_t stride = kWidth != 0 ? kWidth : width;
  const std::int64_t* cursor = block + offset;
  const std::uint64_t chunk_rows = overflow_safe_chunk_rows(value_bound);

  if (chunk_rows >= 64) {
    Int128 total = 0;
    std::uint64_t count = 0;
    std::uint64_t done = 0;
    while (done < n_rows) {
      const std::uint64_t n = std::min(chunk_rows, n_rows - done);
      std::int64_t sum = 0;
      std::uint64_t chunk_count = 0;
      if constexpr (kPredicated) {
        for (std::uint64_t r = 0; r < n; ++r) {
          const std::int64_t v = cursor[r * stride];
          const bool pass = v < threshold;
          chunk_count += pass;
          sum += v & -static_cast<std::int64_t>(pass);
        }
      } else {
        for (std::uint64_t r = 0; r < n; ++r) {
          const std::int64_t v = cursor[r * stride];
          if (v < threshold) {
            ++chunk_count;
            sum += v;
          }
        }
      }
      total += sum;
      count += chunk_count;
      cursor += n * stride;
      done += n;
    }
    result.selected_count = count;
    result.sums[0] += total;
    return;
  }

  // Huge values: 128-bit accumulation, four lanes to break the carry chain.
  Int128 s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::uint64_t c0 = 0, c1 = 0, c2 = 0, c3 = 0;
  auto step = [&](std::int64_t v, Int128& sum, std::uint64_t& count) {
    if constexpr (kPredicated) {
      const bool pass = v < threshold;
      count += pass;
      sum += v & -static_cast<std::int64_t>(pass);
    } else {
      if (v < threshold) {
        ++count;
        sum += v;
      }
    }
  };
  std::uint64_t r = 0;
  for (const std::uint64_t n4 = n_rows & ~std::uint64_t{3}; r < n4; r += 4, cursor += 4 * stride) {
    step(cursor[0], s0, c0);
    step(cursor[stride], s1, c1);
    step(cursor[2 * stride], s2, c2);
    step(cursor[3 * stride], s3, c3);
  }
  for (; r < n_rows; ++r, cursor += stride) {
    step(cursor[0], s0, c0);
  }
  result.selected_count = (c0 + c1) + (c2 + c3);
  result.sums[0] += (s0 + s1) + (s2 + s3);
}

// Row-at-a-time scan over all touched groups, one pass over the whole table.
template <bool kPredicated>
void scan_full(const ScanPlan& plan, std::uint64_t n_rows, std::int64_t threshold,
               std::uint64_t value_bound, QueryResult& result) {
  if (plan.columns.size() == 1 && plan.columns[0].block == plan.filter_block &&
      plan.columns[0].offset == plan.filter_offset) {
    const auto& col = plan.columns[0];
    if (col.width == 1) {
      scan_single_column<kPredicated, 1>(col.block, 1, col.offset, n_rows, threshold,
                                         value_bound, result);
    } else {
      scan_single_column<kPredicated, 0>(col.block, col.width, col.offset, n_rows, threshold,
                                         value_bound, result);
    }
    return;
  }

  std::uint64_t count = 0;
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    const std::int64_t fv = plan.filter_block[r * plan.filter_width + plan.filter_offset];
    if constexpr (kPredicated) {
      const bool pass = fv < threshold;
      const std::int64_t mask = -static_cast<std::int64_t>(pass);
      count += pass;
      for (const BoundColumn& col : plan.columns) {
        result.sums[col.sum_slot] += col.block[r * col.width + col.offset] & mask;
      }
    } else {
      if (fv < threshold) {
        ++count;
        for (const BoundColumn& col : plan.columns) {
          result.sums[col.sum_slot] += col.block[r * col.width + col.offset];
        }
      }
    }
  }
  result.selected_count = count;
}

// Batch-at-a-time: the predicate mask for a batch is materialized first, then
// each accessed column is accumulated column-wise within the batch. Batches
// short enough for the value bound accumulate in 64-bit.
template <bool kPredicated>
void scan_batched(const ScanPlan& plan, std::uint64_t n_rows, std::int64_t threshold,
                  std::uint32_t batch_rows, std::uint64_t value_bound, QueryResult& result) {
  std::vector<std::uint8_t> mask(std::min<std::uint64_t>(batch_rows, n_rows));
  const std::uint64_t chunk_rows = overflow_safe_chunk_rows(value_bound);
  std::uint64_t count = 0;
  for (std::uint64_t start = 0; start < n_rows; start += batch_rows) {
    const std::uint64_t end = std::min<std::uint64_t>(start + batch_rows, n_rows);
    for (std::uint64_t r = start; r < end; ++r) {
      mask[r - start] = plan.filter_block[r * plan.filter_width + plan.filter_offset] < threshold;
      count += mask[r - start];
    }
    for (const BoundColumn& col : plan.columns) {
      if (end - start <= chunk_rows) {
        std::int64_t acc = 0;
        if constexpr (kPredicated) {
          for (std::uint64_t r = start; r < end; ++r) {
            acc += col.block[r * col.width + col.offset] &
                   -static_cast<std::int64_t>(mask[r - start]);
          }
        } else {
          for (std::uint64_t r = start; r < end; ++r) {
            if (mask[r - start]) {
              acc += col.block[r * col.width + col.offset];
            }
          }
        }
        result.sums[col.sum_slot] += acc;
      } else {
        Int128 acc = 0;
        if constexpr (kPredicated) {
          for (std::uint64_t r = start; r < end; ++r) {
            acc += col.block[r * col.width + col.offset] &
                   -static_cast<std::int64_t>(mask[r - start]);
          }
        } else {
          for (std::uint64_t r = start; r < end; ++r) {
            if (mask[r - start]) {
              acc += col.block[r * col.width + col.offset];
            }
          }
        }
        result.sums[col.sum_slot] += acc;
      }
    }
  }
  result.selected_count = count;
}

}  // namespace

QueryResult execute(const Query& query, const MaterializedLayout& layout, const AccessGenes& genes,
                    ExecStats* stats) {
  validate_query(query, static_cast<std::uint32_t>(layout.layout().property_count()));
  if (layout.dropped()) {
    throw std::runtime_error("layout dropped");
  }

  const ScanPlan plan = bind_scan(query, layout);
  if (stats != nullptr) {
    stats->groups_read = plan.groups_read;
  }

  QueryResult result;
  result.sums.assign(query.accessed_props.size(), 0);
  const std::uint64_t n_rows = layout.n_rows();
  const std::uint64_t bound = layout.value_magnitude_bound();
  const bool predicated = genes.selection == SelectionStrategy::kPredicated;

  if (genes.granularity == Granularity::kFull) {
    predicated ? scan_full<true>(plan, n_rows, query.threshold, bound, result)
               : scan_full<false>(plan, n_rows, query.threshold, bound, result);
  } else {
    if (genes.batch_rows < 1) {
      throw std::invalid_argument("invalid access genes: batch_rows must be >= 1");
    }
    // Batches larger than the table degenerate to a single pass.
    predicated
        ? scan_batched<true>(plan, n_rows, query.threshold, genes.batch_rows, bound, result)
        : scan_batched<false>(plan, n_rows, query.threshold, genes.batch_rows, bound, result);
  }
  return result;
}

ExecOutcome execute_timed(const Query& query, const MaterializedLayout& layout,
                          const AccessGenes& genes) {
  ExecOutcome outcome;
  ExecStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  outcome.result = execute(query, layout, genes, &stats);
  const auto t1 = std::chrono::steady_clock::now();
  outcome.cost_ns =
      static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  outcome.groups_read = stats.groups_read;
  return outcome;
}

double simulated_cost(const Query& query, const LayoutGenome& layout,
                      const AccessGenes& /*genes: no contribution in this model*/,
                      std::uint64_t n_rows) {
  validate_query(query, static_cast<std::uint32_t>(layout.property_count()));
  std::vector<bool> accessed(layout.property_count(), false);
  for (const PropertyId p : query.accessed_props) {
    accessed[p] = true;
  }
  double bytes = 0.0;
  for (const auto& group : layout.groups) {
    const bool touched =
        std::any_of(group.begin(), group.end(), [&](PropertyId p) { return accessed[p]; });
    if (touched) {
      bytes += static_cast<double>(n_rows) * static_cast<double>(group.size()) * 8.0;
    }
  }
  return bytes;
}

}  // namespace evostore
