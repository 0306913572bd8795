#include "dgfl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

#include "dgfl/errors.hpp"

namespace dgfl {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kDgfl: return "dgfl";
    case Method::kFedAvg: return "fedavg";
    case Method::kFedProx: return "fedprox";
  }
  return "?";
}

std::string_view to_string(DataSource s) { return s == DataSource::kSynthetic ? "synthetic" : "tudataset"; }
std::string_view to_string(PartitionScheme p) { return p == PartitionScheme::kByFamily ? "by_family" : "random"; }
std::string_view to_string(Similarity s) { return s == Similarity::kCosine ? "cosine" : "dtw"; }
std::string_view to_string(Standardization s) {
  return s == Standardization::kMinMaxRound ? "minmax_round" : "squash";
}
std::string_view to_string(UpdateRule r) { return r == UpdateRule::kAdam ? "adam" : "direct"; }

namespace {

using Value = std::variant<std::string, std::int64_t, double, bool>;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s = buf;
  // Keep a decimal point so the value re-parses as a real.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

/// Strips a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (in_string && c == '\\') {
      ++k;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return line.substr(0, k);
    }
  }
  return line;
}

Value parse_value(std::string_view raw, std::size_t line) {
  raw = trim(raw);
  if (raw.empty()) throw ParseError(line, "missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ParseError(line, "unterminated string");
    std::string out;
    for (std::size_t k = 1; k + 1 < raw.size(); ++k) {
      if (raw[k] == '\\' && k + 2 < raw.size()) ++k;
      out += raw[k];
    }
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  std::string digits;
  for (char c : raw) {
    if (c != '_') digits += c;
  }
  const char* begin = digits.data();
  const char* end = begin + digits.size();
  if (*begin == '+') ++begin;
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(begin, end, i); ec == std::errc() && p == end) return i;
  double d = 0;
  if (auto [p, ec] = std::from_chars(begin, end, d); ec == std::errc() && p == end) return d;
  throw ParseError(line, "cannot parse value '" + std::string(raw) + "'");
}

struct Field {
  std::function<void(ExperimentConfig&, const Value&, const std::string& key)> set;
  /// Empty optional means "omit from serialized output".
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

std::int64_t as_int(const Value& v, const std::string& key) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw ConfigError(key + ": expected an integer");
}

double as_real(const Value& v, const std::string& key) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ConfigError(key + ": expected a number");
}

const std::string& as_string(const Value& v, const std::string& key) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError(key + ": expected a quoted string");
}

bool as_bool(const Value& v, const std::string& key) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError(key + ": expected true or false");
}

template <typename T>
Field count_field(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const Value& v, const std::string& key) {
            const auto x = as_int(v, key);
            if (x < 0) throw RangeError(key, "must be non-negative");
            c.*member = static_cast<T>(x);
          },
          [member](const ExperimentConfig& c) { return std::optional(std::to_string(c.*member)); }};
}

template <typename Getter>
Field real_field(Getter ref) {
  return {[ref](ExperimentConfig& c, const Value& v, const std::string& key) { ref(c) = as_real(v, key); },
          [ref](const ExperimentConfig& c) { return std::optional(format_real(ref(c))); }};
}

template <typename Getter>
Field size_field(Getter ref) {
  return {[ref](ExperimentConfig& c, const Value& v, const std::string& key) {
            const auto x = as_int(v, key);
            if (x < 0) throw RangeError(key, "must be non-negative");
            ref(c) = static_cast<std::size_t>(x);
          },
          [ref](const ExperimentConfig& c) { return std::optional(std::to_string(ref(c))); }};
}

Field string_field(std::string ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const Value& v, const std::string& key) { c.*member = as_string(v, key); },
          [member](const ExperimentConfig& c) { return std::optional(quote(c.*member)); }};
}

Field seed_field(std::optional<std::uint64_t> ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const Value& v, const std::string& key) {
            const auto x = as_int(v, key);
            if (x < 0) throw RangeError(key, "must be non-negative");
            c.*member = static_cast<std::uint64_t>(x);
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            if (!(c.*member)) return std::nullopt;
            return std::to_string(*(c.*member));
          }};
}

template <typename E>
Field enum_field(E ExperimentConfig::*member, std::vector<E> options) {
  return {[member, options](ExperimentConfig& c, const Value& v, const std::string& key) {
            const std::string& s = as_string(v, key);
            for (E e : options) {
              if (to_string(e) == s) {
                c.*member = e;
                return;
              }
            }
            std::string allowed;
            for (E e : options) allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(e));
            throw RangeError(key, "'" + s + "' is not one of " + allowed);
          },
          [member](const ExperimentConfig& c) { return std::optional(quote(to_string(c.*member))); }};
}

template <typename E, typename Getter>
Field nested_enum_field(Getter ref, std::vector<E> options) {
  return {[ref, options](ExperimentConfig& c, const Value& v, const std::string& key) {
            const std::string& s = as_string(v, key);
            for (E e : options) {
              if (to_string(e) == s) {
                ref(c) = e;
                return;
              }
            }
            throw RangeError(key, "unknown value '" + s + "'");
          },
          [ref](const ExperimentConfig& c) {
            return std::optional(quote(to_string(ref(c))));
          }};
}

/// Ordered key table; serialization follows this order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("method", enum_field(&ExperimentConfig::method, {Method::kDgfl, Method::kFedAvg, Method::kFedProx}));
    t.emplace_back("rounds", Field{[](ExperimentConfig& c, const Value& v, const std::string& key) {
                                     const auto x = as_int(v, key);
                                     if (x < 0) throw RangeError(key, "must be >= 0");
                                     c.rounds = static_cast<int>(x);
                                   },
                                   [](const ExperimentConfig& c) { return std::optional(std::to_string(c.rounds)); }});
    t.emplace_back("seed", count_field(&ExperimentConfig::seed));
    t.emplace_back("eval_interval", Field{[](ExperimentConfig& c, const Value& v, const std::string& key) {
                                            const auto x = as_int(v, key);
                                            if (x < 1) throw RangeError(key, "must be >= 1");
                                            c.eval_interval = static_cast<int>(x);
                                          },
                                          [](const ExperimentConfig& c) {
                                            return std::optional(std::to_string(c.eval_interval));
                                          }});
    t.emplace_back("output_dir", string_field(&ExperimentConfig::output_dir));

    t.emplace_back("data.source", enum_field(&ExperimentConfig::source, {DataSource::kTuDataset, DataSource::kSynthetic}));
    t.emplace_back("data.path", string_field(&ExperimentConfig::data_path));
    t.emplace_back("data.name", string_field(&ExperimentConfig::data_name));
    t.emplace_back("data.degree_cap", count_field(&ExperimentConfig::degree_cap));
    t.emplace_back("data.n_clients", count_field(&ExperimentConfig::n_clients));
    t.emplace_back("data.test_fraction", real_field([](auto& c) -> auto& { return c.test_fraction; }));
    t.emplace_back("data.unevenness", real_field([](auto& c) -> auto& { return c.unevenness; }));
    t.emplace_back("data.partition",
                   enum_field(&ExperimentConfig::partition, {PartitionScheme::kRandom, PartitionScheme::kByFamily}));

    t.emplace_back("synthetic.name", Field{[](ExperimentConfig& c, const Value& v, const std::string& key) {
                                             c.synthetic.name = as_string(v, key);
                                           },
                                           [](const ExperimentConfig& c) { return std::optional(quote(c.synthetic.name)); }});
    t.emplace_back("synthetic.seed", seed_field(&ExperimentConfig::synthetic_seed));
    for (std::size_t f = 0; f < 2; ++f) {
      const std::string prefix = std::string("synthetic.family_") + static_cast<char>('a' + f) + "_";
      t.emplace_back(prefix + "count", size_field([f](auto& c) -> auto& { return c.synthetic.families.at(f).count; }));
      t.emplace_back(prefix + "nodes", size_field([f](auto& c) -> auto& { return c.synthetic.families.at(f).nodes; }));
      t.emplace_back(prefix + "degree", real_field([f](auto& c) -> auto& { return c.synthetic.families.at(f).mean_degree; }));
    }

    t.emplace_back("model.hidden", count_field(&ExperimentConfig::hidden));
    t.emplace_back("model.layers", count_field(&ExperimentConfig::layers));
    t.emplace_back("model.init_seed", seed_field(&ExperimentConfig::init_seed));

    t.emplace_back("train.local_epochs", count_field(&ExperimentConfig::local_epochs));
    t.emplace_back("train.batch_size", count_field(&ExperimentConfig::batch_size));
    t.emplace_back("train.lr", real_field([](auto& c) -> auto& { return c.adam.lr; }));
    t.emplace_back("train.weight_decay", real_field([](auto& c) -> auto& { return c.adam.weight_decay; }));
    t.emplace_back("train.beta1", real_field([](auto& c) -> auto& { return c.adam.beta1; }));
    t.emplace_back("train.beta2", real_field([](auto& c) -> auto& { return c.adam.beta2; }));
    t.emplace_back("train.eps", real_field([](auto& c) -> auto& { return c.adam.eps; }));
    t.emplace_back("train.mu", real_field([](auto& c) -> auto& { return c.mu; }));

    t.emplace_back("confidence.similarity",
                   nested_enum_field<Similarity>([](auto& c) -> auto& { return c.confidence.similarity; },
                                                 {Similarity::kDtw, Similarity::kCosine}));
    t.emplace_back("confidence.standardization",
                   nested_enum_field<Standardization>(
                       [](auto& c) -> auto& { return c.confidence.standardization; },
                       {Standardization::kSquash, Standardization::kMinMaxRound}));
    t.emplace_back("confidence.stride", size_field([](auto& c) -> auto& { return c.confidence.stride; }));
    t.emplace_back("confidence.band", size_field([](auto& c) -> auto& { return c.confidence.band; }));
    t.emplace_back("confidence.max_sequence_length",
                   size_field([](auto& c) -> auto& { return c.confidence.max_sequence_length; }));
    t.emplace_back("confidence.band_fraction",
                   real_field([](auto& c) -> auto& { return c.confidence.band_fraction; }));

    t.emplace_back("protocol.update_rule", enum_field(&ExperimentConfig::update_rule, {UpdateRule::kDirect, UpdateRule::kAdam}));
    t.emplace_back("protocol.record_pairwise", Field{[](ExperimentConfig& c, const Value& v, const std::string& key) {
                                                       c.record_pairwise = as_bool(v, key);
                                                     },
                                                     [](const ExperimentConfig& c) {
                                                       return std::optional(std::string(c.record_pairwise ? "true" : "false"));
                                                     }});

    t.emplace_back("convergence.window", size_field([](auto& c) -> auto& { return c.convergence.window; }));
    t.emplace_back("convergence.threshold",
                   real_field([](auto& c) -> auto& { return c.convergence.threshold; }));

    t.emplace_back("checkpoint.every", count_field(&ExperimentConfig::checkpoint_every));
    t.emplace_back("checkpoint.resume", string_field(&ExperimentConfig::resume_from));
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  const auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw RangeError(key, what);
  };
  require(c.rounds >= 0, "rounds", "must be >= 0");
  require(c.eval_interval >= 1, "eval_interval", "must be >= 1");
  require(c.n_clients >= 1, "data.n_clients", "must be >= 1");
  require(c.test_fraction > 0.0 && c.test_fraction < 1.0, "data.test_fraction", "must be in (0, 1)");
  require(c.unevenness >= 0.0 && std::isfinite(c.unevenness), "data.unevenness", "must be >= 0");
  require(c.degree_cap >= 1, "data.degree_cap", "must be >= 1");
  require(c.source != DataSource::kTuDataset || !c.data_name.empty(), "data.name", "required for tudataset input");
  require(c.synthetic.families.size() == 2, "synthetic", "exactly two families are supported");
  for (const auto& fam : c.synthetic.families) {
    require(fam.count >= 20, "synthetic.family_count", "must be >= 20");
    require(fam.nodes >= 2, "synthetic.family_nodes", "must be >= 2");
    require(fam.mean_degree >= 0.0, "synthetic.family_degree", "must be >= 0");
  }
  require(c.hidden >= 1, "model.hidden", "must be >= 1");
  require(c.layers >= 1, "model.layers", "must be >= 1");
  require(c.batch_size >= 1, "train.batch_size", "must be >= 1");
  require(c.adam.lr > 0.0, "train.lr", "must be > 0");
  require(c.adam.weight_decay >= 0.0, "train.weight_decay", "must be >= 0");
  require(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0, "train.beta1", "must be in [0, 1)");
  require(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0, "train.beta2", "must be in [0, 1)");
  require(c.adam.eps > 0.0, "train.eps", "must be > 0");
  require(c.mu >= 0.0, "train.mu", "must be >= 0");
  require(c.confidence.max_sequence_length >= 1, "confidence.max_sequence_length", "must be >= 1");
  require(c.confidence.band_fraction > 0.0, "confidence.band_fraction", "must be > 0");
  require(c.convergence.window >= 2, "convergence.window", "must be >= 2");
  require(c.convergence.threshold > 0.0, "convergence.threshold", "must be > 0");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::string section;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw_line;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string_view line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ParseError(line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string name(trim(line.substr(0, eq)));
    if (name.empty()) throw ParseError(line_no, "missing key");
    const std::string key = section.empty() ? name : section + "." + name;
    const Field* field = find_field(key);
    if (field == nullptr) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ParseError(line_no, "duplicate key '" + key + "'");
    const Value value = parse_value(line.substr(eq + 1), line_no);
    try {
      field->set(config, value, key);
    } catch (const RangeError&) {
      throw;
    } catch (const ConfigError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& [key, field] : fields()) {
    const auto value = field.get(config);
    if (!value) continue;
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + *value + "\n";
  }
  return out;
}

}  // namespace dgfl
