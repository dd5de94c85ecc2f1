#include "evostore/workload.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace evostore {

namespace {

constexpr std::uint64_t kWorkloadStreamTag = 1;
constexpr std::uint64_t kBuiltinPhaseQueries = 1600;

[[noreturn]] void syntax_error(std::uint64_t line_no, const std::string& what) {
  throw std::runtime_error("workload parse: line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    tokens.push_back(token);
  }
  return tokens;
}

// Returns the value of a "key=value" token or nullopt-ish empty string.
bool key_value(const std::string& token, const std::string& key, std::string& value) {
  if (token.rfind(key + "=", 0) != 0) {
    return false;
  }
  value = token.substr(key.size() + 1);
  return true;
}

double parse_double(const std::string& text, std::uint64_t line_no, const char* what) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(text, &consumed);
    if (consumed != text.size()) {
      syntax_error(line_no, std::string("bad ") + what + " '" + text + "'");
    }
    return v;
  } catch (const std::logic_error&) {
    syntax_error(line_no, std::string("bad ") + what + " '" + text + "'");
  }
}

std::uint64_t parse_u64(const std::string& text, std::uint64_t line_no, const char* what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    syntax_error(line_no, std::string("bad ") + what + " '" + text + "'");
  }
  return v;
}

std::vector<PropertyId> parse_prop_list(const std::string& text, std::uint64_t line_no) {
  std::vector<PropertyId> props;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(',', start);
    const std::string token =
        pos == std::string::npos ? text.substr(start) : text.substr(start, pos - start);
    props.push_back(static_cast<PropertyId>(parse_u64(token, line_no, "property id")));
    if (pos == std::string::npos) {
      break;
    }
    start = pos + 1;
  }
  std::sort(props.begin(), props.end());
  props.erase(std::unique(props.begin(), props.end()), props.end());
  return props;
}

}  // namespace

WorkloadSpec parse_workload(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("workload parse: cannot open '" + path.string() + "'");
  }

  WorkloadSpec spec;
  std::string line;
  std::uint64_t line_no = 0;
  auto close_phase = [&] {
    if (!spec.phases.empty() && spec.phases.back().templates.empty()) {
      throw std::runtime_error("workload parse: empty phase '" + spec.phases.back().name +
                               "' has no templates");
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    const auto tokens = tokenize(line);
    if (tokens.empty()) {
      continue;
    }

    if (tokens[0] == "phase") {
      if (tokens.size() != 3) {
        syntax_error(line_no, "expected 'phase <name> queries=<int>'");
      }
      std::string queries_text;
      if (!key_value(tokens[2], "queries", queries_text)) {
        syntax_error(line_no, "expected queries=<int>");
      }
      close_phase();
      WorkloadPhase phase;
      phase.name = tokens[1];
      phase.n_queries = parse_u64(queries_text, line_no, "query count");
      if (phase.n_queries < 1) {
        syntax_error(line_no, "queries must be >= 1");
      }
      spec.phases.push_back(std::move(phase));
    } else if (tokens[0] == "template") {
      if (spec.phases.empty()) {
        syntax_error(line_no, "template before any phase");
      }
      QueryTemplate tmpl;
      bool have_props = false;
      bool have_sel = false;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        std::string value;
        if (key_value(tokens[i], "props", value)) {
          tmpl.accessed_props = parse_prop_list(value, line_no);
          have_props = true;
        } else if (key_value(tokens[i], "sel", value)) {
          tmpl.selectivity = parse_double(value, line_no, "selectivity");
          have_sel = true;
        } else if (key_value(tokens[i], "weight", value)) {
          tmpl.weight = parse_double(value, line_no, "weight");
        } else {
          syntax_error(line_no, "unknown token '" + tokens[i] + "'");
        }
      }
      if (!have_props || !have_sel) {
        syntax_error(line_no, "template needs props=... and sel=...");
      }
      if (tmpl.accessed_props.empty()) {
        syntax_error(line_no, "template props list is empty");
      }
      if (tmpl.selectivity < 0.0 || tmpl.selectivity > 1.0) {
        syntax_error(line_no, "bad selectivity " + std::to_string(tmpl.selectivity) +
                                  ": must be in [0, 1]");
      }
      if (tmpl.weight <= 0.0) {
        syntax_error(line_no, "weight must be positive");
      }
      spec.phases.back().templates.push_back(std::move(tmpl));
    } else {
      syntax_error(line_no, "unknown directive '" + tokens[0] + "'");
    }
  }
  close_phase();
  if (spec.phases.empty()) {
    throw std::runtime_error("workload parse: empty workload, no phases");
  }
  return spec;
}

void validate_workload(const WorkloadSpec& spec, std::uint32_t n_props) {
  if (spec.phases.empty()) {
    throw std::invalid_argument("workload: no phases");
  }
  for (const auto& phase : spec.phases) {
    if (phase.templates.empty()) {
      throw std::invalid_argument("workload: empty phase '" + phase.name + "'");
    }
    if (phase.n_queries < 1) {
      throw std::invalid_argument("workload: phase '" + phase.name + "' has no queries");
    }
    for (const auto& tmpl : phase.templates) {
      if (tmpl.accessed_props.empty()) {
        throw std::invalid_argument("workload: template without properties in phase '" +
                                    phase.name + "'");
      }
      if (tmpl.selectivity < 0.0 || tmpl.selectivity > 1.0) {
        throw std::invalid_argument("workload: bad selectivity in phase '" + phase.name + "'");
      }
      if (tmpl.weight <= 0.0) {
        throw std::invalid_argument("workload: non-positive weight in phase '" + phase.name +
                                    "'");
      }
      for (const PropertyId p : tmpl.accessed_props) {
        if (p >= n_props) {
          throw std::invalid_argument("workload: property " + std::to_string(p) +
                                      " out of range for P=" + std::to_string(n_props) +
                                      " in phase '" + phase.name + "'");
        }
      }
    }
  }
}

Query query_from_template(const QueryTemplate& tmpl) {
  return make_query(tmpl.accessed_props, tmpl.selectivity);
}

std::vector<Query> generate_stream(const WorkloadSpec& spec, std::uint32_t n_props) {
  validate_workload(spec, n_props);
  Rng rng = Rng::sub(spec.seed, kWorkloadStreamTag);
  std::vector<Query> stream;
  for (const auto& phase : spec.phases) {
    double total_weight = 0.0;
    for (const auto& tmpl : phase.templates) {
      total_weight += tmpl.weight;
    }
    for (std::uint64_t q = 0; q < phase.n_queries; ++q) {
      const double u = rng.next_double() * total_weight;
      double cum = 0.0;
      std::size_t pick = phase.templates.size() - 1;
      for (std::size_t t = 0; t < phase.templates.size(); ++t) {
        cum += phase.templates[t].weight;
        if (u < cum) {
          pick = t;
          break;
        }
      }
      stream.push_back(query_from_template(phase.templates[pick]));
    }
  }
  return stream;
}

std::vector<std::uint64_t> phase_offsets(const WorkloadSpec& spec) {
  std::vector<std::uint64_t> offsets{0};
  for (const auto& phase : spec.phases) {
    offsets.push_back(offsets.back() + phase.n_queries);
  }
  return offsets;
}

WorkloadSpec builtin_paper_workload(std::uint32_t n_props, std::uint64_t seed) {
  if (n_props < 2) {
    throw std::invalid_argument("builtin workload needs P >= 2");
  }
  const PropertyId last = n_props - 1;
  auto range = [](PropertyId lo, PropertyId hi) {  // inclusive
    std::vector<PropertyId> out;
    for (PropertyId p = lo; p <= hi; ++p) {
      out.push_back(p);
    }
    return out;
  };

  WorkloadSpec spec;
  spec.seed = seed;

  // Phase 1: every query needs all properties.
  spec.phases.push_back(
      {"all-props", {{range(0, last), 0.5, 1.0}}, kBuiltinPhaseQueries});

  // Phase 2: a narrow head pair and the tail third, at opposite selectivities.
  {
    WorkloadPhase phase{"head-and-tail", {}, kBuiltinPhaseQueries};
    phase.templates.push_back({n_props >= 3 ? range(0, 1) : range(0, 0), 0.1, 1.0});
    const auto tail = static_cast<PropertyId>((n_props + 2) / 3);
    phase.templates.push_back({range(n_props - tail, last), 0.9, 1.0});
    spec.phases.push_back(std::move(phase));
  }

  // Phase 3: two mid singletons plus (when proper) the head pair.
  {
    WorkloadPhase phase{"mid-singletons", {}, kBuiltinPhaseQueries};
    const PropertyId a = n_props / 2;
    const PropertyId b = (a + 1) % n_props;
    phase.templates.push_back({{a}, 0.05, 1.0});
    phase.templates.push_back({{b}, 0.5, 1.0});
    if (n_props >= 3) {
      phase.templates.push_back({range(0, 1), 0.2, 1.0});
    }
    spec.phases.push_back(std::move(phase));
  }

  // Phase 4: the front half, its trailing pair, and (when proper) the tail
  // pair, at mixed selectivities.
  {
    WorkloadPhase phase{"front-overlap", {}, kBuiltinPhaseQueries};
    const auto half = static_cast<PropertyId>((n_props + 1) / 2);
    phase.templates.push_back({range(0, half - 1), 0.3, 1.0});
    phase.templates.push_back({half >= 2 ? range(half - 2, half - 1) : range(0, 0), 0.7, 1.0});
    if (n_props >= 4) {
      phase.templates.push_back({range(n_props - 2, last), 0.1, 1.0});
    }
    spec.phases.push_back(std::move(phase));
  }
  return spec;
}

}  // namespace evostore
