#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evostore/genome.hpp"
#include "evostore/storage.hpp"

namespace evostore {

using Int128 = __int128;

std::string to_string(Int128 value);

// Scan-select-aggregate over a set of properties: predicate
// value(filter_prop) < threshold, per-property SUM over selected rows.
// threshold = floor(selectivity * 2^32) yields the target selectivity on
// uniform [0, 2^32) data.
struct Query {
  std::vector<PropertyId> accessed_props;  // sorted, unique
  PropertyId filter_prop = 0;
  std::int64_t threshold = 0;
  double selectivity = 0.0;
};

Query make_query(std::vector<PropertyId> accessed_props, double selectivity);

void validate_query(const Query& query, std::uint32_t n_props);

struct QueryResult {
  std::uint64_t selected_count = 0;
  std::vector<Int128> sums;  // one per accessed property, ascending id order

  bool operator==(const QueryResult&) const = default;
};

struct FitnessSample {
  double cost = 0.0;  // nanoseconds (measured) or model units (simulated)
  Query query;
  std::uint64_t candidate_id = 0;
};

// Instrumentation snapshot: how many group blocks a scan actually bound.
struct ExecStats {
  std::uint64_t groups_read = 0;
};

// Row-major scan of the base table; the correctness oracle every layout and
// gene combination must match bit-exactly.
QueryResult reference_execute(const Query& query, const BaseTable& base);

// Executes against a materialized layout honoring the access genes. Only
// groups containing at least one accessed property are touched.
QueryResult execute(const Query& query, const MaterializedLayout& layout, const AccessGenes& genes,
                    ExecStats* stats = nullptr);

struct ExecOutcome {
  QueryResult result;
  double cost_ns = 0.0;  // scan + aggregate wall time only
  std::uint64_t groups_read = 0;
};

ExecOutcome execute_timed(const Query& query, const MaterializedLayout& layout,
                          const AccessGenes& genes);

// Deterministic fitness model: bytes touched by group-granular scans, i.e.
// sum of n_rows * |g| * 8 over groups g intersecting the accessed set.
// Access genes contribute nothing in this model.
double simulated_cost(const Query& query, const LayoutGenome& layout, const AccessGenes& genes,
                      std::uint64_t n_rows);

}  // namespace evostore
