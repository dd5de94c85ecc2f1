#include "evostore/genome.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace evostore {

namespace {

// Applicable primitive edits on a layout. MOVE needs a donor group of >= 2
// members plus a distinct destination group.
enum class EditClass { kSplit, kMerge, kMove };

std::vector<std::size_t> splittable_groups(const LayoutGenome& layout) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layout.groups.size(); ++i) {
    if (layout.groups[i].size() >= 2) {
      out.push_back(i);
    }
  }
  return out;
}

void erase_group(LayoutGenome& layout, std::size_t index) {
  layout.groups.erase(layout.groups.begin() + static_cast<std::ptrdiff_t>(index));
}

}  // namespace

std::size_t LayoutGenome::property_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) {
    n += g.size();
  }
  return n;
}

void validate_partition(const LayoutGenome& layout) {
  if (layout.groups.empty()) {
    throw std::invalid_argument("invalid partition: no groups");
  }
  std::vector<PropertyId> all;
  for (const auto& g : layout.groups) {
    if (g.empty()) {
      throw std::invalid_argument("invalid partition: empty group");
    }
    all.insert(all.end(), g.begin(), g.end());
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] != i) {
      throw std::invalid_argument(
          all[i] < i ? "invalid partition: property " + std::to_string(all[i]) + " appears twice"
                     : "invalid partition: property " + std::to_string(i) + " missing");
    }
  }
}

LayoutGenome canonicalize(LayoutGenome layout) {
  validate_partition(layout);
  for (auto& g : layout.groups) {
    std::sort(g.begin(), g.end());
  }
  std::sort(layout.groups.begin(), layout.groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return layout;
}

LayoutGenome mutate_layout(const LayoutGenome& layout, Rng& rng) {
  validate_partition(layout);
  const auto splittable = splittable_groups(layout);
  const std::size_t n_groups = layout.groups.size();

  std::vector<EditClass> applicable;
  if (!splittable.empty()) {
    applicable.push_back(EditClass::kSplit);
  }
  if (n_groups >= 2) {
    applicable.push_back(EditClass::kMerge);
  }
  if (!splittable.empty() && n_groups >= 2) {
    applicable.push_back(EditClass::kMove);
  }
  if (applicable.empty()) {
    throw std::runtime_error("no mutation possible: single singleton group admits no edit");
  }

  LayoutGenome out = layout;
  switch (applicable[rng.below(applicable.size())]) {
    case EditClass::kSplit: {
      const std::size_t gi = splittable[rng.below(splittable.size())];
      const auto group = out.groups[gi];
      std::vector<PropertyId> left;
      std::vector<PropertyId> right;
      do {
        left.clear();
        right.clear();
        for (const PropertyId p : group) {
          (rng.below(2) == 0 ? left : right).push_back(p);
        }
      } while (left.empty() || right.empty());
      erase_group(out, gi);
      out.groups.push_back(std::move(left));
      out.groups.push_back(std::move(right));
      break;
    }
    case EditClass::kMerge: {
      const std::size_t i = rng.below(n_groups);
      std::size_t j = rng.below(n_groups - 1);
      if (j >= i) {
        ++j;
      }
      auto& dst = out.groups[i];
      dst.insert(dst.end(), out.groups[j].begin(), out.groups[j].end());
      erase_group(out, j);
      break;
    }
    case EditClass::kMove: {
      const std::size_t src = splittable[rng.below(splittable.size())];
      std::size_t dst = rng.below(n_groups - 1);
      if (dst >= src) {
        ++dst;
      }
      auto& from = out.groups[src];
      const std::size_t mi = rng.below(from.size());
      out.groups[dst].push_back(from[mi]);
      from.erase(from.begin() + static_cast<std::ptrdiff_t>(mi));
      break;
    }
  }
  return canonicalize(std::move(out));
}

AccessGenes mutate_access(const AccessGenes& genes, Rng& rng) {
  // Neighborhood: toggle selection, toggle granularity, and (when batched)
  // resample batch_rows from the ladder.
  const bool batched = genes.granularity == Granularity::kBatched;
  const std::uint64_t n_options = batched ? 3 : 2;
  AccessGenes out = genes;
  switch (rng.below(n_options)) {
    case 0:
      out.selection = out.selection == SelectionStrategy::kBranching
                          ? SelectionStrategy::kPredicated
                          : SelectionStrategy::kBranching;
      break;
    case 1:
      if (batched) {
        out.granularity = Granularity::kFull;
        out.batch_rows = 0;
      } else {
        out.granularity = Granularity::kBatched;
        out.batch_rows = kBatchRowsLadder[rng.below(kBatchRowsLadder.size())];
      }
      break;
    case 2: {
      std::vector<std::uint32_t> others;
      for (const std::uint32_t b : kBatchRowsLadder) {
        if (b != genes.batch_rows) {
          others.push_back(b);
        }
      }
      out.batch_rows = others[rng.below(others.size())];
      break;
    }
  }
  return out;
}

Genome mutate(const Genome& genome, Rng& rng, const MutationParams& params) {
  Genome out = genome;
  if (rng.chance(params.p_layout)) {
    out.layout = mutate_layout(genome.layout, rng);
  } else {
    out.access = mutate_access(genome.access, rng);
  }
  return out;
}

Genome crossover(const Genome& a, const Genome& b, Rng& rng) {
  validate_partition(a.layout);
  validate_partition(b.layout);
  if (a.layout.property_count() != b.layout.property_count()) {
    throw std::invalid_argument("crossover: parents cover different property sets");
  }

  LayoutGenome child = a.layout;

  std::vector<std::size_t> order(b.layout.groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }

  for (const std::size_t bi : order) {
    if (rng.below(2) == 0) {
      continue;
    }
    const auto& imported = b.layout.groups[bi];
    for (auto& g : child.groups) {
      std::erase_if(g, [&](PropertyId p) {
        return std::find(imported.begin(), imported.end(), p) != imported.end();
      });
    }
    std::erase_if(child.groups, [](const auto& g) { return g.empty(); });
    child.groups.push_back(imported);
  }

  Genome out;
  out.layout = canonicalize(std::move(child));
  out.access.selection = rng.below(2) == 0 ? a.access.selection : b.access.selection;
  const AccessGenes& gran_src = rng.below(2) == 0 ? a.access : b.access;
  out.access.granularity = gran_src.granularity;
  out.access.batch_rows = gran_src.batch_rows;
  return out;
}

std::vector<LayoutGenome> enumerate_layouts(std::size_t n_props) {
  if (n_props < 1) {
    throw std::invalid_argument("enumerate_layouts: need at least one property");
  }
  if (n_props > 10) {
    throw std::invalid_argument("too many properties: enumeration is guarded to P <= 10");
  }

  // Restricted growth strings: rgs[0] = 0, rgs[i] <= max(rgs[0..i-1]) + 1.
  // Building groups in rgs order yields the canonical form directly.
  std::vector<LayoutGenome> out;
  std::vector<std::uint32_t> rgs(n_props, 0);

  auto emit = [&] {
    LayoutGenome layout;
    const std::uint32_t n_groups = *std::max_element(rgs.begin(), rgs.end()) + 1;
    layout.groups.resize(n_groups);
    for (std::size_t p = 0; p < n_props; ++p) {
      layout.groups[rgs[p]].push_back(static_cast<PropertyId>(p));
    }
    out.push_back(std::move(layout));
  };

  auto recurse = [&](auto&& self, std::size_t pos, std::uint32_t max_used) -> void {
    if (pos == n_props) {
      emit();
      return;
    }
    for (std::uint32_t v = 0; v <= max_used + 1; ++v) {
      rgs[pos] = v;
      self(self, pos + 1, std::max(max_used, v));
    }
  };

  if (n_props == 1) {
    emit();
  } else {
    recurse(recurse, 1, 0);
  }
  return out;
}

std::string to_string(const LayoutGenome& layout) {
  std::string out;
  for (std::size_t gi = 0; gi < layout.groups.size(); ++gi) {
    if (gi > 0) {
      out += '|';
    }
    for (std::size_t i = 0; i < layout.groups[gi].size(); ++i) {
      if (i > 0) {
        out += ',';
      }
      out += std::to_string(layout.groups[gi][i]);
    }
  }
  return out;
}

std::string to_string(const Genome& genome) {
  std::string out = to_string(genome.layout);
  out += ";sel=";
  out += genome.access.selection == SelectionStrategy::kBranching ? "branching" : "predicated";
  out += ";gran=";
  if (genome.access.granularity == Granularity::kFull) {
    out += "full";
  } else {
    out += "batched:" + std::to_string(genome.access.batch_rows);
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::uint64_t parse_uint(const std::string& token, const char* what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw std::invalid_argument(std::string("genome parse: bad ") + what + " '" + token + "'");
  }
  return value;
}

}  // namespace

LayoutGenome parse_layout(const std::string& text) {
  LayoutGenome layout;
  for (const auto& group_text : split(text, '|')) {
    std::vector<PropertyId> group;
    for (const auto& member : split(group_text, ',')) {
      group.push_back(static_cast<PropertyId>(parse_uint(member, "property id")));
    }
    layout.groups.push_back(std::move(group));
  }
  return canonicalize(std::move(layout));
}

Genome parse_genome(const std::string& text) {
  const auto parts = split(text, ';');
  if (parts.size() != 3) {
    throw std::invalid_argument("genome parse: expected '<layout>;sel=...;gran=...'");
  }
  Genome out;
  out.layout = parse_layout(parts[0]);

  if (parts[1] == "sel=branching") {
    out.access.selection = SelectionStrategy::kBranching;
  } else if (parts[1] == "sel=predicated") {
    out.access.selection = SelectionStrategy::kPredicated;
  } else {
    throw std::invalid_argument("genome parse: bad selection gene '" + parts[1] + "'");
  }

  if (parts[2] == "gran=full") {
    out.access.granularity = Granularity::kFull;
    out.access.batch_rows = 0;
  } else if (parts[2].rfind("gran=batched:", 0) == 0) {
    out.access.granularity = Granularity::kBatched;
    out.access.batch_rows =
        static_cast<std::uint32_t>(parse_uint(parts[2].substr(13), "batch size"));
    if (out.access.batch_rows == 0) {
      throw std::invalid_argument("genome parse: batch size must be >= 1");
    }
  } else {
    throw std::invalid_argument("genome parse: bad granularity gene '" + parts[2] + "'");
  }
  return out;
}

}  // namespace evostore
