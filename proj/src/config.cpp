#include "braid/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace braid::config {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] void fail(int line, const std::string& message) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << message;
  throw ConfigError(os.str());
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> out;
  std::string current;
  for (char c : value) {
    if (c == ',') {
      out.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  const std::string tail = trim(current);
  if (!tail.empty() || !out.empty()) out.push_back(tail);
  return out;
}

std::vector<std::string> split_whitespace(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream is(value);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) fail(line, "bad number '" + s + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(line, "bad number '" + s + "'");
  }
}

size_t parse_uint(const std::string& s, int line) {
  try {
    size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size() || v < 0) fail(line, "bad nonnegative integer '" + s + "'");
    return static_cast<size_t>(v);
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(line, "bad nonnegative integer '" + s + "'");
  }
}

std::vector<double> parse_values(const std::string& s, int line) {
  std::vector<double> out;
  for (const auto& piece : split_commas(s)) {
    if (piece.empty()) fail(line, "empty value in list");
    out.push_back(parse_double(piece, line));
  }
  if (out.empty()) fail(line, "expected a list of numbers");
  return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& s, int line) {
  std::vector<uint64_t> out;
  for (const auto& piece : split_commas(s)) {
    const size_t dots = piece.find("..");
    if (dots != std::string::npos) {
      const uint64_t lo = parse_uint(trim(piece.substr(0, dots)), line);
      const uint64_t hi = parse_uint(trim(piece.substr(dots + 2)), line);
      if (hi < lo) fail(line, "seed range '" + piece + "' is reversed");
      for (uint64_t v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(parse_uint(piece, line));
    }
  }
  if (out.empty()) fail(line, "expected at least one seed");
  return out;
}

// A table row: history tokens, values, source line.
struct Row {
  std::vector<std::string> tokens;
  std::vector<double> values;
  int line = 0;
};

Row parse_row(const std::string& value, int line) {
  const size_t colon = value.find(':');
  if (colon == std::string::npos) fail(line, "row needs the form 'tokens : values'");
  Row row;
  row.line = line;
  row.tokens = split_whitespace(value.substr(0, colon));
  if (row.tokens.size() == 1 && row.tokens[0] == "eps") row.tokens.clear();
  row.values = parse_values(value.substr(colon + 1), line);
  return row;
}

void check_prob_row(const std::vector<double>& row, const std::string& table,
                    const std::string& which, int line) {
  double s = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p))
      fail(line, "table [" + table + "] row " + which + " has a negative or non-finite entry");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "table [" << table << "] row " << which << " sums to " << s << ", expected 1";
    fail(line, os.str());
  }
}

// ---------------------------------------------------------------------------
// Key catalogs

const std::vector<std::string> kTopKeys = {"config_version", "kind",    "id",   "out",
                                           "alpha",          "seeds",   "horizon",
                                           "log_base",       "jobs"};

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

void check_keys(const RawSection& section, const std::vector<std::string>& allowed) {
  for (const auto& entry : section.entries) {
    if (std::find(allowed.begin(), allowed.end(), entry.key) == allowed.end())
      fail(entry.line, "unknown key '" + entry.key + "' in [" + section.name +
                           "]; valid keys: " + join(allowed));
  }
}

struct SectionRule {
  std::string exact;   // exact name, or
  std::string prefix;  // "name." prefix
  std::vector<std::string> keys;
};

void check_sections(const RawDoc& doc, const std::vector<SectionRule>& rules) {
  for (const auto& section : doc.sections) {
    const SectionRule* match = nullptr;
    for (const auto& rule : rules) {
      if (!rule.exact.empty() && section.name == rule.exact) match = &rule;
      if (!rule.prefix.empty() && section.name.size() > rule.prefix.size() &&
          section.name.compare(0, rule.prefix.size(), rule.prefix) == 0)
        match = &rule;
      if (match) break;
    }
    if (!match) {
      std::vector<std::string> forms;
      for (const auto& rule : rules)
        forms.push_back(rule.exact.empty() ? rule.prefix + "NAME" : rule.exact);
      fail(section.line,
           "unknown section [" + section.name + "]; valid sections: " + join(forms));
    }
    check_keys(section, match->keys);
  }
}

// ---------------------------------------------------------------------------
// Shared lookups

const RawEntry* find_entry(const RawSection& section, const std::string& key) {
  for (const auto& entry : section.entries)
    if (entry.key == key) return &entry;
  return nullptr;
}

std::string require_value(const RawSection& section, const std::string& key) {
  const RawEntry* entry = find_entry(section, key);
  if (!entry) fail(section.line, "section [" + section.name + "] is missing key '" + key + "'");
  return entry->value;
}

std::vector<std::string> alphabet_symbols(const RawDoc& doc, const std::string& name, int line) {
  const RawSection* section = doc.find("alphabet." + name);
  if (!section) fail(line, "alphabet '" + name + "' is not declared");
  const RawEntry* symbols = find_entry(*section, "symbols");
  if (!symbols) fail(section->line, "[alphabet." + name + "] needs 'symbols'");
  auto out = split_commas(symbols->value);
  if (out.empty()) fail(symbols->line, "alphabet '" + name + "' has no symbols");
  return out;
}

size_t symbol_index(const std::vector<std::string>& alphabet, const std::string& token,
                    int line) {
  for (size_t i = 0; i < alphabet.size(); ++i)
    if (alphabet[i] == token) return i;
  fail(line, "unknown symbol '" + token + "'; alphabet is: " + join(alphabet));
}

// Collects 'default' and 'row' entries from a section (which may be absent).
struct TableRows {
  std::optional<std::vector<double>> fallback;
  int fallback_line = 0;
  std::vector<Row> rows;
  bool present = false;
  std::string name;
};

TableRows collect_rows(const RawDoc& doc, const std::string& section_name) {
  TableRows out;
  out.name = section_name;
  const RawSection* section = doc.find(section_name);
  if (!section) return out;
  out.present = true;
  for (const auto& entry : section->entries) {
    if (entry.key == "default") {
      out.fallback = parse_values(entry.value, entry.line);
      out.fallback_line = entry.line;
    } else if (entry.key == "row") {
      out.rows.push_back(parse_row(entry.value, entry.line));
    }
  }
  return out;
}

std::string tokens_name(const std::vector<std::string>& tokens) {
  return tokens.empty() ? std::string("eps") : join(tokens);
}

}  // namespace

// ---------------------------------------------------------------------------
// Raw parsing

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Control: return "control";
    case ExperimentKind::Estimate: return "estimate";
    case ExperimentKind::Bcr: return "bcr";
    case ExperimentKind::Gvp: return "gvp";
    case ExperimentKind::Verify: return "verify";
  }
  return "?";
}

const RawSection* RawDoc::find(const std::string& name) const {
  for (const auto& section : sections)
    if (section.name == name) return &section;
  return nullptr;
}

RawDoc parse_raw(const std::string& text) {
  RawDoc doc;
  RawSection* current = nullptr;
  int line_no = 0;
  std::istringstream is(text);
  std::string raw_line;
  while (std::getline(is, raw_line)) {
    ++line_no;
    const size_t hash = raw_line.find('#');
    if (hash != std::string::npos) raw_line.erase(hash);
    const std::string line = trim(raw_line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail(line_no, "empty section name");
      doc.sections.push_back({name, line_no, {}});
      current = &doc.sections.back();
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    RawEntry entry{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (entry.key.empty()) fail(line_no, "empty key");
    if (current)
      current->entries.push_back(std::move(entry));
    else
      doc.top.push_back(std::move(entry));
  }
  return doc;
}

// Splices `file = path` entries in table sections: the referenced file
// holds plain `default = ...` / `row = ...` lines. Paths resolve against
// the config's directory.
void resolve_file_references(RawDoc& doc, const std::string& base_dir) {
  for (auto& section : doc.sections) {
    std::vector<RawEntry> expanded;
    for (auto& entry : section.entries) {
      if (entry.key != "file") {
        expanded.push_back(std::move(entry));
        continue;
      }
      const std::string path =
          !base_dir.empty() && entry.value.front() != '/' ? base_dir + "/" + entry.value
                                                          : entry.value;
      std::ifstream in(path);
      if (!in)
        fail(entry.line, "cannot open referenced table file '" + path + "' for [" +
                             section.name + "]");
      std::ostringstream buffer;
      buffer << in.rdbuf();
      RawDoc included = parse_raw(buffer.str());
      if (!included.sections.empty())
        fail(entry.line, "referenced table file '" + path + "' must not contain sections");
      for (auto& row : included.top) expanded.push_back(std::move(row));
    }
    section.entries = std::move(expanded);
  }
}

void apply_override(RawDoc& doc, const std::string& path, const std::string& value) {
  const size_t dot = path.rfind('.');
  std::string section_name, key;
  if (dot == std::string::npos) {
    key = path;
  } else {
    section_name = path.substr(0, dot);
    key = path.substr(dot + 1);
  }
  auto apply = [&](std::vector<RawEntry>& entries) {
    for (auto& entry : entries)
      if (entry.key == key) {
        entry.value = value;
        return true;
      }
    entries.push_back({key, value, 0});
    return true;
  };
  if (section_name.empty()) {
    apply(doc.top);
    return;
  }
  for (auto& section : doc.sections)
    if (section.name == section_name) {
      apply(section.entries);
      return;
    }
  doc.sections.push_back({section_name, 0, {{key, value, 0}}});
}

// ---------------------------------------------------------------------------
// Kind builders

namespace {

ControlSpec build_control(const RawDoc& doc, const ExperimentConfig& cfg) {
  const RawSection* control = doc.find("control");
  if (!control) fail(0, "kind control needs a [control] section");
  const auto actions = alphabet_symbols(doc, require_value(*control, "actions"), control->line);
  const auto observations =
      alphabet_symbols(doc, require_value(*control, "observations"), control->line);
  const size_t nA = actions.size();
  const size_t nO = observations.size();
  const size_t T = cfg.horizon;
  if (T == 0) fail(0, "kind control needs horizon >= 1");

  // Token sequences alternate action, observation, ... ; for the
  // environment and observation-reward tables the final token is the
  // action taken this cycle.
  auto locate = [&](const Row& row, bool with_action, const std::string& table) {
    const size_t len = row.tokens.size();
    if (with_action ? (len % 2 != 1) : (len % 2 != 0))
      fail(row.line, "table [" + table + "] row '" + tokens_name(row.tokens) +
                         "' has the wrong number of tokens");
    const size_t t = with_action ? (len - 1) / 2 : len / 2;
    if (t >= T)
      fail(row.line, "table [" + table + "] row '" + tokens_name(row.tokens) +
                         "' lies beyond the horizon");
    size_t rank = 0;
    for (size_t i = 0; i + 1 < len; i += 2) {
      rank = rank * nA + symbol_index(actions, row.tokens[i], row.line);
      rank = rank * nO + symbol_index(observations, row.tokens[i + 1], row.line);
    }
    if (with_action)
      rank = rank * nA + symbol_index(actions, row.tokens[len - 1], row.line);
    return std::pair<size_t, size_t>(t, rank);
  };

  // arity: row width; rows_per_level(t): number of keyed slots at level t.
  auto materialize = [&](const TableRows& table, bool with_action, size_t arity,
                         bool probabilistic, double missing_value,
                         std::vector<std::vector<double>>& out) {
    out.assign(T, {});
    std::vector<std::map<size_t, std::vector<double>>> keyed(T);
    if (table.fallback) {
      if (table.fallback->size() != arity)
        fail(table.fallback_line, "table [" + table.name + "] default has wrong arity");
      if (probabilistic)
        check_prob_row(*table.fallback, table.name, "default", table.fallback_line);
    }
    for (const auto& row : table.rows) {
      if (row.values.size() != arity)
        fail(row.line,
             "table [" + table.name + "] row '" + tokens_name(row.tokens) + "' has wrong arity");
      if (probabilistic)
        check_prob_row(row.values, table.name, "'" + tokens_name(row.tokens) + "'", row.line);
      const auto [t, rank] = locate(row, with_action, table.name);
      keyed[t][rank] = row.values;
    }
    for (size_t t = 0; t < T; ++t) {
      size_t slots = 1;
      for (size_t s = 0; s < t; ++s) slots *= nA * nO;
      if (with_action) slots *= nA;
      out[t].assign(slots * arity, missing_value);
      for (size_t slot = 0; slot < slots; ++slot) {
        auto it = keyed[t].find(slot);
        const std::vector<double>* row = nullptr;
        if (it != keyed[t].end())
          row = &it->second;
        else if (table.fallback)
          row = &*table.fallback;
        else if (probabilistic)
          fail(0, "table [" + table.name + "] has no row for a level-" + std::to_string(t + 1) +
                      " history and no default");
        if (row)
          std::copy(row->begin(), row->end(), out[t].begin() + slot * arity);
      }
    }
  };

  std::vector<std::vector<double>> reference, environment, reward_action, reward_obs;
  materialize(collect_rows(doc, "reference"), false, nA, true, 0.0, reference);
  materialize(collect_rows(doc, "environment"), true, nO, true, 0.0, environment);
  materialize(collect_rows(doc, "reward.action"), false, nA, false, 0.0, reward_action);
  materialize(collect_rows(doc, "reward.observation"), true, nO, false, 0.0, reward_obs);

  return ControlSpec{solvers::ControlProblem::make(
      T, nA, nO, solvers::Temperature(cfg.alphas.front()), std::move(reference),
      std::move(environment), std::move(reward_action), std::move(reward_obs))};
}

EstimateSpec build_estimate(const RawDoc& doc, const ExperimentConfig& cfg) {
  const RawSection* estimate = doc.find("estimate");
  if (!estimate) fail(0, "kind estimate needs an [estimate] section");
  EstimateSpec spec;
  const auto symbols =
      alphabet_symbols(doc, require_value(*estimate, "observations"), estimate->line);
  spec.num_symbols = symbols.size();
  spec.param_names = split_commas(require_value(*estimate, "params"));
  if (spec.param_names.empty()) fail(estimate->line, "params must name at least one parameter");
  const RawEntry* prior = find_entry(*estimate, "prior");
  if (prior) {
    spec.prior = parse_values(prior->value, prior->line);
    if (spec.prior.size() != spec.param_names.size())
      fail(prior->line, "prior needs one weight per parameter");
    check_prob_row(spec.prior, "estimate", "prior", prior->line);
  } else {
    spec.prior.assign(spec.param_names.size(), 1.0 / spec.param_names.size());
  }

  for (const auto& name : spec.param_names) {
    const TableRows table = collect_rows(doc, "likelihood." + name);
    if (!table.present) fail(0, "missing [likelihood." + name + "] section");
    EstimateSpec::SourceTable source;
    if (table.fallback) {
      if (table.fallback->size() != spec.num_symbols)
        fail(table.fallback_line, "[likelihood." + name + "] default has wrong arity");
      check_prob_row(*table.fallback, "likelihood." + name, "default", table.fallback_line);
      source.fallback = table.fallback;
    }
    for (const auto& row : table.rows) {
      if (row.values.size() != spec.num_symbols)
        fail(row.line, "[likelihood." + name + "] row '" + tokens_name(row.tokens) +
                           "' has wrong arity");
      check_prob_row(row.values, "likelihood." + name, "'" + tokens_name(row.tokens) + "'",
                     row.line);
      std::vector<size_t> key;
      for (const auto& tok : row.tokens) key.push_back(symbol_index(symbols, tok, row.line));
      source.rows[key] = row.values;
    }
    if (!source.fallback && source.rows.empty())
      fail(0, "[likelihood." + name + "] needs a default or at least one row");
    spec.sources.push_back(std::move(source));
  }
  (void)cfg;
  return spec;
}

BcrSpec build_bcr(const RawDoc& doc, const ExperimentConfig& cfg) {
  const RawSection* bcr = doc.find("bcr");
  if (!bcr) fail(0, "kind bcr needs a [bcr] section");
  const RawEntry* env_entry = find_entry(*bcr, "environment");
  const std::string env_kind = env_entry ? lower(env_entry->value) : "bandit";

  BcrSpec spec;
  if (env_kind == "bandit") {
    const RawSection* bandit = doc.find("bandit");
    if (!bandit) fail(bcr->line, "bandit environment needs a [bandit] section");
    std::vector<std::vector<double>> means;
    for (const auto& entry : bandit->entries)
      if (entry.key == "means") means.push_back(parse_values(entry.value, entry.line));
    if (means.empty()) fail(bandit->line, "[bandit] needs one 'means' row per parameter");
    std::vector<double> prior(means.size(), 1.0 / means.size());
    if (const RawEntry* p = find_entry(*bandit, "prior")) {
      prior = parse_values(p->value, p->line);
      if (prior.size() != means.size()) fail(p->line, "prior needs one weight per parameter");
      check_prob_row(prior, "bandit", "prior", p->line);
    }
    for (size_t k = 0; k < means.size(); ++k)
      spec.param_names.push_back("theta" + std::to_string(k + 1));
    spec.controllers = envs::greedy_bandit_controllers(means);
    spec.environment = envs::make_bernoulli_bandit(std::move(means), std::move(prior));
    return spec;
  }
  if (env_kind != "tables")
    fail(env_entry ? env_entry->line : bcr->line,
         "unknown environment '" + env_kind + "'; valid: bandit, tables");

  // Fully table-driven agent/environment pair.
  const auto actions = alphabet_symbols(doc, require_value(*bcr, "actions"), bcr->line);
  const auto observations =
      alphabet_symbols(doc, require_value(*bcr, "observations"), bcr->line);
  spec.param_names = split_commas(require_value(*bcr, "params"));
  if (spec.param_names.empty()) fail(bcr->line, "params must name at least one parameter");
  std::vector<double> prior(spec.param_names.size(), 1.0 / spec.param_names.size());
  if (const RawEntry* p = find_entry(*bcr, "prior")) {
    prior = parse_values(p->value, p->line);
    if (prior.size() != spec.param_names.size())
      fail(p->line, "prior needs one weight per parameter");
    check_prob_row(prior, "bcr", "prior", p->line);
  }
  std::vector<double> obs_reward(observations.size(), 0.0);
  if (const RawEntry* r = find_entry(*bcr, "observation_reward")) {
    obs_reward = parse_values(r->value, r->line);
    if (obs_reward.size() != observations.size())
      fail(r->line, "observation_reward needs one value per observation symbol");
  }

  // Keyed lookup tables shared by the environment and the agent. A row
  // keyed by an action alone applies at every history.
  struct Lookup {
    std::map<std::vector<size_t>, std::vector<double>> rows;
    std::map<size_t, std::vector<double>> by_action;
    std::optional<std::vector<double>> fallback;
  };
  auto build_lookup = [&](const std::string& section, bool with_action, size_t arity) {
    const TableRows table = collect_rows(doc, section);
    if (!table.present) fail(0, "missing [" + section + "] section");
    Lookup lookup;
    if (table.fallback) {
      if (table.fallback->size() != arity)
        fail(table.fallback_line, "[" + section + "] default has wrong arity");
      check_prob_row(*table.fallback, section, "default", table.fallback_line);
      lookup.fallback = table.fallback;
    }
    for (const auto& row : table.rows) {
      if (row.values.size() != arity)
        fail(row.line, "[" + section + "] row '" + tokens_name(row.tokens) + "' has wrong arity");
      check_prob_row(row.values, section, "'" + tokens_name(row.tokens) + "'", row.line);
      const size_t len = row.tokens.size();
      if (with_action ? (len % 2 != 1) : (len % 2 != 0))
        fail(row.line, "[" + section + "] row '" + tokens_name(row.tokens) +
                           "' has the wrong number of tokens");
      if (with_action && len == 1) {
        lookup.by_action[symbol_index(actions, row.tokens[0], row.line)] = row.values;
        continue;
      }
      std::vector<size_t> key;
      for (size_t i = 0; i + 1 < len; i += 2) {
        key.push_back(symbol_index(actions, row.tokens[i], row.line));
        key.push_back(symbol_index(observations, row.tokens[i + 1], row.line));
      }
      if (with_action) key.push_back(symbol_index(actions, row.tokens[len - 1], row.line));
      lookup.rows[key] = row.values;
    }
    if (!lookup.fallback && lookup.rows.empty() && lookup.by_action.empty())
      fail(0, "[" + section + "] needs a default or at least one row");
    return std::make_shared<Lookup>(std::move(lookup));
  };

  std::vector<std::shared_ptr<Lookup>> likelihoods, controllers;
  for (const auto& name : spec.param_names) {
    controllers.push_back(build_lookup("controller." + name, false, actions.size()));
    likelihoods.push_back(build_lookup("likelihood." + name, true, observations.size()));
  }

  envs::Environment env;
  env.num_params = spec.param_names.size();
  env.num_actions = actions.size();
  env.num_observations = observations.size();
  env.param_prior = prior;
  env.observation_reward = obs_reward;
  auto lik_tables = std::make_shared<std::vector<std::shared_ptr<Lookup>>>(likelihoods);
  env.observe_dist = [lik_tables](size_t theta, std::span<const envs::Interaction> history,
                                  size_t action) {
    std::vector<size_t> key;
    key.reserve(history.size() * 2 + 1);
    for (const auto& step : history) {
      key.push_back(step.action);
      key.push_back(step.observation);
    }
    key.push_back(action);
    const Lookup& lookup = *(*lik_tables)[theta];
    if (auto it = lookup.rows.find(key); it != lookup.rows.end()) return it->second;
    if (auto it = lookup.by_action.find(action); it != lookup.by_action.end())
      return it->second;
    if (lookup.fallback) return *lookup.fallback;
    throw Error("likelihood table has no row for the current history");
  };
  auto reward_copy = std::make_shared<std::vector<double>>(obs_reward);
  auto dist_copy = env.observe_dist;
  const size_t num_actions = env.num_actions;
  env.oracle_step_reward = [dist_copy, reward_copy, num_actions](
                               size_t theta, std::span<const envs::Interaction> history) {
    double best = -kPosInf;
    for (size_t a = 0; a < num_actions; ++a) {
      const auto dist = dist_copy(theta, history, a);
      double v = 0.0;
      for (size_t o = 0; o < dist.size(); ++o) v += dist[o] * (*reward_copy)[o];
      best = std::max(best, v);
    }
    return best;
  };
  spec.environment = std::move(env);

  for (size_t k = 0; k < spec.param_names.size(); ++k) {
    auto lookup = controllers[k];
    spec.controllers.push_back(
        [lookup](std::span<const envs::Interaction> history) -> std::vector<double> {
          std::vector<size_t> key;
          key.reserve(history.size() * 2);
          for (const auto& step : history) {
            key.push_back(step.action);
            key.push_back(step.observation);
          }
          auto it = lookup->rows.find(key);
          if (it != lookup->rows.end()) return it->second;
          if (lookup->fallback) return *lookup->fallback;
          throw Error("controller table has no row for the current history");
        });
  }
  (void)cfg;
  return spec;
}

GvpSpec build_gvp(const RawDoc& doc, const ExperimentConfig& cfg) {
  const RawSection* gvp_section = doc.find("gvp");
  if (!gvp_section) fail(0, "kind gvp needs a [gvp] section");
  const auto names = split_commas(require_value(*gvp_section, "variables"));
  if (names.empty()) fail(gvp_section->line, "variables must name at least one variable");

  std::vector<prob::VariableSpec> variables;
  std::vector<std::vector<std::string>> alphabets;
  for (const auto& name : names) {
    const RawSection* section = doc.find("variable." + name);
    if (!section) fail(0, "missing [variable." + name + "] section");
    const auto symbols = alphabet_symbols(doc, require_value(*section, "alphabet"),
                                          section->line);
    prob::IoType io = prob::IoType::DisclosedInput;
    if (const RawEntry* e = find_entry(*section, "io")) {
      const std::string v = lower(e->value);
      if (v == "output")
        io = prob::IoType::Output;
      else if (v == "disclosed" || v == "disclosed_input")
        io = prob::IoType::DisclosedInput;
      else if (v == "undisclosed" || v == "undisclosed_input")
        io = prob::IoType::UndisclosedInput;
      else
        fail(e->line, "bad io '" + e->value + "'; valid: output, disclosed, undisclosed");
    }
    prob::VpMode mode = prob::VpMode::Estimated;
    if (const RawEntry* e = find_entry(*section, "mode")) {
      const std::string v = lower(e->value);
      if (v == "controlled")
        mode = prob::VpMode::Controlled;
      else if (v == "estimated")
        mode = prob::VpMode::Estimated;
      else
        fail(e->line, "bad mode '" + e->value + "'; valid: controlled, estimated");
    }
    variables.push_back({name, prob::Alphabet(symbols), io, mode});
    alphabets.push_back(symbols);
  }

  // Dense tables over preceding-variable histories.
  auto locate = [&](const Row& row, size_t t, const std::string& table) {
    if (row.tokens.size() != t)
      fail(row.line, "table [" + table + "] row '" + tokens_name(row.tokens) + "' needs " +
                         std::to_string(t) + " history tokens");
    size_t rank = 0;
    for (size_t s = 0; s < t; ++s)
      rank = rank * alphabets[s].size() + symbol_index(alphabets[s], row.tokens[s], row.line);
    return rank;
  };

  std::vector<prob::DistTable> tables;
  std::vector<std::vector<double>> utility_blocks;
  for (size_t t = 0; t < names.size(); ++t) {
    const size_t arity = alphabets[t].size();
    size_t nh = 1;
    for (size_t s = 0; s < t; ++s) nh *= alphabets[s].size();

    const std::string ref_name = "reference." + names[t];
    const TableRows ref_rows = collect_rows(doc, ref_name);
    if (!ref_rows.present) fail(0, "missing [" + ref_name + "] section");
    std::vector<std::vector<double>> rows(nh);
    std::vector<bool> have(nh, false);
    if (ref_rows.fallback) {
      if (ref_rows.fallback->size() != arity)
        fail(ref_rows.fallback_line, "[" + ref_name + "] default has wrong arity");
      check_prob_row(*ref_rows.fallback, ref_name, "default", ref_rows.fallback_line);
      rows.assign(nh, *ref_rows.fallback);
      have.assign(nh, true);
    }
    for (const auto& row : ref_rows.rows) {
      if (row.values.size() != arity)
        fail(row.line, "[" + ref_name + "] row '" + tokens_name(row.tokens) + "' has wrong arity");
      check_prob_row(row.values, ref_name, "'" + tokens_name(row.tokens) + "'", row.line);
      const size_t rank = locate(row, t, ref_name);
      rows[rank] = row.values;
      have[rank] = true;
    }
    for (size_t h = 0; h < nh; ++h)
      if (!have[h])
        fail(0, "[" + ref_name + "] has no row for some history and no default");
    std::vector<size_t> radices;
    for (size_t s = 0; s < t; ++s) radices.push_back(alphabets[s].size());
    tables.emplace_back(std::move(radices), arity, std::move(rows));

    const std::string util_name = "utility." + names[t];
    const TableRows util_rows = collect_rows(doc, util_name);
    std::vector<double> block(nh * arity, 0.0);
    if (util_rows.present) {
      if (util_rows.fallback) {
        if (util_rows.fallback->size() != arity)
          fail(util_rows.fallback_line, "[" + util_name + "] default has wrong arity");
        for (size_t h = 0; h < nh; ++h)
          std::copy(util_rows.fallback->begin(), util_rows.fallback->end(),
                    block.begin() + h * arity);
      }
      for (const auto& row : util_rows.rows) {
        if (row.values.size() != arity)
          fail(row.line,
               "[" + util_name + "] row '" + tokens_name(row.tokens) + "' has wrong arity");
        const size_t rank = locate(row, t, util_name);
        std::copy(row.values.begin(), row.values.end(), block.begin() + rank * arity);
      }
    }
    utility_blocks.push_back(std::move(block));
  }

  prob::CausalModel reference(std::move(variables), std::move(tables));
  gvp::UtilityTable utility(reference, std::move(utility_blocks));
  (void)cfg;
  return GvpSpec{std::move(reference), std::move(utility)};
}

VerifySpec build_verify(const RawDoc& doc) {
  VerifySpec spec;
  const RawSection* section = doc.find("verify");
  if (!section) return spec;
  if (const RawEntry* e = find_entry(*section, "suites")) {
    const auto names = split_commas(e->value);
    for (const auto& n : names)
      if (n != "all") spec.suites.push_back(n);
  }
  if (const RawEntry* e = find_entry(*section, "scale")) {
    const std::string v = lower(e->value);
    if (v == "quick")
      spec.quick = true;
    else if (v != "full")
      fail(e->line, "bad scale '" + e->value + "'; valid: full, quick");
  }
  if (const RawEntry* e = find_entry(*section, "mutation")) {
    const std::string v = lower(e->value);
    if (v != "none") spec.mutation = v;
  }
  return spec;
}

}  // namespace

// ---------------------------------------------------------------------------
// EstimateSpec::problem

solvers::EstimationProblem EstimateSpec::problem(size_t horizon) const {
  solvers::EstimationProblem p;
  p.prior = prior;
  p.num_symbols = num_symbols;
  p.horizon = horizon;
  auto tables = std::make_shared<std::vector<SourceTable>>(sources);
  p.likelihood = [tables](size_t theta, std::span<const size_t> history) {
    const SourceTable& source = (*tables)[theta];
    const std::vector<size_t> key(history.begin(), history.end());
    auto it = source.rows.find(key);
    if (it != source.rows.end()) return it->second;
    if (source.fallback) return *source.fallback;
    throw Error("likelihood table has no row for the current history");
  };
  return p;
}

// ---------------------------------------------------------------------------
// Entry points

ExperimentConfig parse_config_text(
    const std::string& text, const std::string& origin,
    const std::vector<std::pair<std::string, std::string>>& overrides,
    const std::string& base_dir) {
  RawDoc doc = parse_raw(text);
  for (const auto& [path, value] : overrides) apply_override(doc, path, value);
  resolve_file_references(doc, base_dir);

  ExperimentConfig cfg;
  cfg.id = origin;

  // Top-level keys first.
  for (const auto& entry : doc.top)
    if (std::find(kTopKeys.begin(), kTopKeys.end(), entry.key) == kTopKeys.end())
      fail(entry.line,
           "unknown key '" + entry.key + "' at top level; valid keys: " + join(kTopKeys));

  auto top = [&](const std::string& key) -> const RawEntry* {
    for (const auto& entry : doc.top)
      if (entry.key == key) return &entry;
    return nullptr;
  };

  const RawEntry* version = top("config_version");
  if (!version) fail(0, "config_version is required (current version: 1)");
  if (parse_uint(version->value, version->line) != 1)
    fail(version->line, "unsupported config_version (current version: 1)");

  const RawEntry* kind = top("kind");
  if (!kind) fail(0, "kind is required: control, estimate, bcr, gvp or verify");
  const std::string kind_value = lower(kind->value);
  if (kind_value == "control")
    cfg.kind = ExperimentKind::Control;
  else if (kind_value == "estimate")
    cfg.kind = ExperimentKind::Estimate;
  else if (kind_value == "bcr")
    cfg.kind = ExperimentKind::Bcr;
  else if (kind_value == "gvp")
    cfg.kind = ExperimentKind::Gvp;
  else if (kind_value == "verify")
    cfg.kind = ExperimentKind::Verify;
  else
    fail(kind->line,
         "unknown kind '" + kind->value + "'; valid: control, estimate, bcr, gvp, verify");

  if (const RawEntry* e = top("id")) cfg.id = e->value;
  if (const RawEntry* e = top("out")) cfg.out = e->value;
  if (const RawEntry* e = top("alpha")) {
    cfg.alphas = parse_values(e->value, e->line);
    for (double a : cfg.alphas)
      if (!(a > 0.0) || !std::isfinite(a)) fail(e->line, "alpha values must be positive");
  }
  if (const RawEntry* e = top("seeds")) cfg.seeds = parse_seed_list(e->value, e->line);
  if (const RawEntry* e = top("horizon")) cfg.horizon = parse_uint(e->value, e->line);
  if (const RawEntry* e = top("log_base")) {
    const std::string v = lower(e->value);
    if (v == "2")
      cfg.log_base = LogBase::Two;
    else if (v == "e")
      cfg.log_base = LogBase::E;
    else
      fail(e->line, "log_base must be 2 or e");
  }
  if (const RawEntry* e = top("jobs")) {
    cfg.jobs = static_cast<int>(parse_uint(e->value, e->line));
    if (cfg.jobs < 1) fail(e->line, "jobs must be at least 1");
  }

  // Section catalog per kind.
  std::vector<SectionRule> rules{{"", "alphabet.", {"symbols"}}};
  switch (cfg.kind) {
    case ExperimentKind::Control:
      rules.push_back({"control", "", {"actions", "observations"}});
      rules.push_back({"reference", "", {"default", "row"}});
      rules.push_back({"environment", "", {"default", "row"}});
      rules.push_back({"reward.action", "", {"default", "row"}});
      rules.push_back({"reward.observation", "", {"default", "row"}});
      break;
    case ExperimentKind::Estimate:
      rules.push_back({"estimate", "", {"observations", "params", "prior"}});
      rules.push_back({"", "likelihood.", {"default", "row"}});
      break;
    case ExperimentKind::Bcr:
      rules.push_back({"bcr",
                       "",
                       {"environment", "actions", "observations", "params", "prior",
                        "observation_reward"}});
      rules.push_back({"bandit", "", {"means", "prior"}});
      rules.push_back({"", "controller.", {"default", "row"}});
      rules.push_back({"", "likelihood.", {"default", "row"}});
      break;
    case ExperimentKind::Gvp:
      rules.push_back({"gvp", "", {"variables"}});
      rules.push_back({"", "variable.", {"alphabet", "io", "mode"}});
      rules.push_back({"", "reference.", {"default", "row"}});
      rules.push_back({"", "utility.", {"default", "row"}});
      break;
    case ExperimentKind::Verify:
      rules.push_back({"verify", "", {"suites", "scale", "mutation"}});
      break;
  }
  check_sections(doc, rules);

  switch (cfg.kind) {
    case ExperimentKind::Control:
      cfg.control = build_control(doc, cfg);
      break;
    case ExperimentKind::Estimate:
      if (cfg.horizon == 0) fail(0, "kind estimate needs horizon >= 1");
      cfg.estimate = build_estimate(doc, cfg);
      break;
    case ExperimentKind::Bcr:
      if (cfg.horizon == 0) fail(0, "kind bcr needs horizon >= 1");
      cfg.bcr = build_bcr(doc, cfg);
      break;
    case ExperimentKind::Gvp:
      cfg.gvp = build_gvp(doc, cfg);
      break;
    case ExperimentKind::Verify:
      cfg.verify = build_verify(doc);
      break;
  }
  return cfg;
}

ExperimentConfig parse_config(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();

  std::string stem = path;
  std::string base_dir;
  if (const size_t slash = stem.find_last_of('/'); slash != std::string::npos) {
    base_dir = stem.substr(0, slash);
    stem = stem.substr(slash + 1);
  }
  if (const size_t dot = stem.find_last_of('.'); dot != std::string::npos)
    stem = stem.substr(0, dot);

  return parse_config_text(buffer.str(), stem, overrides, base_dir);
}

}  // namespace braid::config
