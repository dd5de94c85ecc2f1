#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "evostore/rng.hpp"

namespace evostore {

using PropertyId = std::uint32_t;

// Vertical partition of the property indices {0..P-1} into co-located groups.
// Canonical form: members ascending within each group, groups ordered by
// their minimum member. Two layouts are the same genome iff their canonical
// forms are identical.
struct LayoutGenome {
  std::vector<std::vector<PropertyId>> groups;

  std::size_t property_count() const;
  bool operator==(const LayoutGenome&) const = default;
};

enum class SelectionStrategy { kBranching, kPredicated };
enum class Granularity { kFull, kBatched };

// Batch sizes a batched-granularity gene may take, cache-resident through
// streaming regimes.
inline constexpr std::array<std::uint32_t, 4> kBatchRowsLadder{1024, 4096, 16384, 65536};

// Execution-strategy genes, global per candidate. batch_rows is meaningful
// only when granularity is kBatched and is 0 otherwise so that genes compare
// by value.
struct AccessGenes {
  SelectionStrategy selection = SelectionStrategy::kBranching;
  Granularity granularity = Granularity::kFull;
  std::uint32_t batch_rows = 0;

  bool operator==(const AccessGenes&) const = default;
};

struct Genome {
  LayoutGenome layout;
  AccessGenes access;

  bool operator==(const Genome&) const = default;
};

struct MutationParams {
  double p_layout = 0.7;
};

// Validates partition invariants (disjoint, complete over {0..P-1}, no empty
// group); throws std::invalid_argument otherwise.
void validate_partition(const LayoutGenome& layout);

// Returns the canonical form. Idempotent; throws on an invalid partition.
LayoutGenome canonicalize(LayoutGenome layout);

// Applies exactly one primitive edit (SPLIT, MERGE or MOVE), chosen uniformly
// among the applicable edit classes and uniformly within the class. The
// result is canonical and always differs from the input. Throws
// std::runtime_error("no mutation possible...") when P == 1.
LayoutGenome mutate_layout(const LayoutGenome& layout, Rng& rng);

// Flips exactly one access gene; the result always differs from the input.
AccessGenes mutate_access(const AccessGenes& genes, Rng& rng);

// With probability p_layout mutates the layout, otherwise the access genes.
Genome mutate(const Genome& genome, Rng& rng, const MutationParams& params = {});

// Child layout via group exchange: start from a's groups, import a random
// subset of b's groups wholesale (each imported group's members are removed
// from wherever they currently live; emptied groups are dropped). Access
// genes are taken per-gene from either parent. crossover(g, g) == g.
Genome crossover(const Genome& a, const Genome& b, Rng& rng);

// Every set partition of {0..P-1}, canonical, no duplicates; the count is the
// Bell number B(P). Guarded to P <= 10.
std::vector<LayoutGenome> enumerate_layouts(std::size_t n_props);

// Genome string grammar: groups separated by '|', members by ',', access
// genes appended as ";sel=branching|predicated;gran=full|batched:<rows>".
// Example: "0,1,2|3|4,5,6;sel=branching;gran=batched:4096".
std::string to_string(const LayoutGenome& layout);
std::string to_string(const Genome& genome);
LayoutGenome parse_layout(const std::string& text);
Genome parse_genome(const std::string& text);

}  // namespace evostore
