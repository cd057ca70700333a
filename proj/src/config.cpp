#include "hfde/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hfde {

namespace {

using nlohmann::json;

struct Entry {
  json value;
  std::string raw;
  int line = 0;
  int column = 0;  // of the first character of raw
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"generator", {"A", "mtilde", "growth"}},
      {"order", {"alpha", "beta"}},
      {"nonlocal", {"t0", "a", "u0", "c", "tk"}},
      {"rhs", {"f", "delays", "lipschitz"}},
      {"solver", {"grid", "tol", "max_iter", "seed", "samples", "continuity_k", "ml_tol"}},
  };
  return keys;
}

std::string message_at(int line, int column, const std::string& what) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
}

// Position of the first '#' outside a string literal, or npos.
std::size_t comment_start(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
    } else if (c == '"') {
      in_str = true;
    } else if (c == '#') {
      return i;
    }
  }
  return std::string::npos;
}

int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
    } else if (c == '"') {
      in_str = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

bool valid_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

// Offset in raw of the opening quote of the index-th string literal.
std::size_t string_literal_offset(const std::string& raw, std::size_t index) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '"') continue;
    if (seen == index) return i;
    ++seen;
    for (++i; i < raw.size() && raw[i] != '"'; ++i)
      if (raw[i] == '\\') ++i;
  }
  return 0;
}

std::map<std::string, Section> tokenize(const std::string& text) {
  std::map<std::string, Section> out;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (auto c = comment_start(line); c != std::string::npos) line.erase(c);
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const std::size_t last = line.find_last_not_of(" \t");

    if (line[first] == '[') {
      if (line[last] != ']') throw ConfigParseError("unterminated section header", line_no, static_cast<int>(last) + 1);
      std::string name = line.substr(first + 1, last - first - 1);
      if (!known_keys().count(name))
        throw ConfigParseError("unknown section [" + name + "]", line_no, static_cast<int>(first) + 1);
      if (out.count(name)) throw ConfigParseError("duplicate section [" + name + "]", line_no, static_cast<int>(first) + 1);
      out[name];
      current = name;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigParseError("expected 'key = value'", line_no, static_cast<int>(first) + 1);
    std::string key = line.substr(first, eq - first);
    key.erase(key.find_last_not_of(" \t") + 1);
    if (!valid_identifier(key)) throw ConfigParseError("invalid key '" + key + "'", line_no, static_cast<int>(first) + 1);
    if (current.empty()) throw ConfigParseError("key outside of a section", line_no, static_cast<int>(first) + 1);
    if (!known_keys().at(current).count(key))
      throw ConfigParseError("unknown key '" + key + "' in [" + current + "]", line_no, static_cast<int>(first) + 1);
    if (out[current].count(key)) throw ConfigParseError("duplicate key '" + key + "'", line_no, static_cast<int>(first) + 1);

    const std::size_t vstart = line.find_first_not_of(" \t", eq + 1);
    if (vstart == std::string::npos) throw ConfigParseError("missing value", line_no, static_cast<int>(eq) + 2);
    Entry e;
    e.line = line_no;
    e.column = static_cast<int>(vstart) + 1;
    e.raw = line.substr(vstart, last + 1 - vstart);
    // lists may continue over several lines
    int continued = 0;
    while (bracket_balance(e.raw) > 0) {
      std::string more;
      if (!std::getline(in, more)) throw ConfigParseError("unbalanced '['", e.line, e.column);
      ++line_no;
      ++continued;
      if (auto c = comment_start(more); c != std::string::npos) more.erase(c);
      e.raw += " " + more;
    }
    try {
      e.value = json::parse(e.raw);
    } catch (const json::parse_error& err) {
      const int col = continued ? e.column : e.column + static_cast<int>(err.byte) - 1;
      throw ConfigParseError("malformed value for '" + key + "'", e.line, col);
    }
    out[current][key] = std::move(e);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Section> sections) : sections_(std::move(sections)) {}

  const Entry* find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  void missing(const std::string& section, const std::string& key) {
    issues.push_back("missing key '" + key + "' in [" + section + "]");
  }

  void bad(const Entry& e, const std::string& what) { issues.push_back(message_at(e.line, e.column, what)); }

  std::optional<double> number(const std::string& section, const std::string& key, bool required) {
    const Entry* e = find(section, key);
    if (!e) {
      if (required) missing(section, key);
      return std::nullopt;
    }
    if (!e->value.is_number()) {
      bad(*e, key + " must be a number");
      return std::nullopt;
    }
    return e->value.get<double>();
  }

  std::optional<long long> integer(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    if (!e->value.is_number_integer()) {
      bad(*e, key + " must be an integer");
      return std::nullopt;
    }
    return e->value.get<long long>();
  }

  std::optional<std::vector<double>> numbers(const std::string& section, const std::string& key, bool required) {
    const Entry* e = find(section, key);
    if (!e) {
      if (required) missing(section, key);
      return std::nullopt;
    }
    if (!e->value.is_array()) {
      bad(*e, key + " must be a list of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& x : e->value) {
      if (!x.is_number()) {
        bad(*e, key + " must be a list of numbers");
        return std::nullopt;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<std::vector<std::string>> strings(const std::string& section, const std::string& key, bool required) {
    const Entry* e = find(section, key);
    if (!e) {
      if (required) missing(section, key);
      return std::nullopt;
    }
    json v = e->value;
    if (v.is_string()) v = json::array({v});
    if (!v.is_array()) {
      bad(*e, key + " must be a list of quoted expressions");
      return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) {
        bad(*e, key + " must be a list of quoted expressions");
        return std::nullopt;
      }
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  std::optional<SquareMatrix> matrix(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) {
      missing(section, key);
      return std::nullopt;
    }
    const json& v = e->value;
    const std::string shape = key + " must be a non-empty square list of rows";
    if (!v.is_array() || v.empty()) {
      bad(*e, shape);
      return std::nullopt;
    }
    const auto n = static_cast<Eigen::Index>(v.size());
    SquareMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& row = v[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
        bad(*e, shape);
        return std::nullopt;
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!row[static_cast<std::size_t>(j)].is_number()) {
          bad(*e, key + " entries must be numbers");
          return std::nullopt;
        }
        m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
    }
    return m;
  }

  std::vector<std::string> issues;

 private:
  std::map<std::string, Section> sections_;
};

// Parses each expression on its own so a syntax error can be located in the file.
void locate_expression_errors(const Entry& e, const std::vector<std::string>& src, const ExprScope& scope,
                              const std::string& key) {
  for (std::size_t i = 0; i < src.size(); ++i) {
    try {
      parse(src[i], scope);
    } catch (const ParseError& err) {
      const std::size_t quote = e.value.is_string() ? 0 : string_literal_offset(e.raw, i);
      throw ConfigParseError(key + "[" + std::to_string(i) + "]: " + err.what(), e.line,
                             e.column + static_cast<int>(quote + 1 + err.offset()));
    }
  }
}

}  // namespace

ConfigParseError::ConfigParseError(const std::string& what, int line, int column)
    : Error(message_at(line, column, what)), line_(line), column_(column) {}

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string msg = "invalid configuration:";
  for (const auto& s : issues) msg += "\n  " + s;
  return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues) : Error(join_issues(issues)), issues_(std::move(issues)) {}

RunConfig parse_config(const std::string& text) {
  Reader rd(tokenize(text));
  RunConfig cfg;
  ProblemSpec& p = cfg.problem;
  SolverConfig& s = cfg.solver;

  bool have_generator = false;
  if (auto a = rd.matrix("generator", "A")) {
    p.generator.a = *a;
    have_generator = true;
  }
  if (auto v = rd.number("generator", "mtilde", false)) p.generator.mtilde = *v;
  if (auto v = rd.number("generator", "growth", false)) p.generator.growth = *v;

  if (auto v = rd.number("order", "alpha", true)) p.order.alpha = *v;
  if (auto v = rd.number("order", "beta", false)) p.order.beta = *v;

  if (auto v = rd.number("nonlocal", "t0", false)) p.t0 = *v;
  if (auto v = rd.number("nonlocal", "a", false)) p.a = *v;
  bool have_u0 = false;
  if (auto v = rd.numbers("nonlocal", "u0", true)) {
    p.nonlocal.u0 = Eigen::Map<const Eigen::VectorXd>(v->data(), static_cast<Eigen::Index>(v->size()));
    have_u0 = true;
  }
  if (auto v = rd.numbers("nonlocal", "c", false)) p.nonlocal.c = *v;
  if (auto v = rd.numbers("nonlocal", "tk", false)) p.nonlocal.tk = *v;

  if (auto v = rd.number("rhs", "lipschitz", false)) {
    if (*v < 0.0) rd.bad(*rd.find("rhs", "lipschitz"), "lipschitz must be nonnegative");
    p.lipschitz = *v;
  }
  auto f_src = rd.strings("rhs", "f", true);
  auto b_src = rd.strings("rhs", "delays", false);
  bool have_rhs = false;
  if (f_src && !f_src->empty()) {
    const std::vector<std::string> delays = b_src ? *b_src : std::vector<std::string>{};
    const int n = static_cast<int>(f_src->size());
    const int r = static_cast<int>(delays.size());
    locate_expression_errors(*rd.find("rhs", "f"), *f_src, ExprScope{n, r, false}, "f");
    if (b_src) locate_expression_errors(*rd.find("rhs", "delays"), delays, ExprScope{n, r, true}, "delays");
    p.rhs = RhsSpec::from_strings(*f_src, delays);
    have_rhs = true;
  } else if (f_src) {
    rd.bad(*rd.find("rhs", "f"), "f needs one expression per state component");
  }

  if (auto v = rd.integer("solver", "grid")) s.grid = static_cast<int>(*v);
  if (auto v = rd.number("solver", "tol", false)) s.fp_tol = *v;
  if (auto v = rd.integer("solver", "max_iter")) s.max_iter = static_cast<int>(*v);
  if (auto v = rd.integer("solver", "seed")) s.seed = static_cast<std::uint64_t>(*v);
  if (auto v = rd.integer("solver", "samples")) s.lipschitz_samples = static_cast<int>(*v);
  if (auto v = rd.number("solver", "ml_tol", false)) s.accuracy.tol = *v;
  if (auto v = rd.number("solver", "continuity_k", false)) cfg.continuity_k = *v;

  std::vector<std::string> issues = rd.issues;
  if (have_generator && have_u0 && have_rhs) {
    for (auto& msg : p.issues()) issues.push_back(std::move(msg));
  } else {
    // report the order and interval checks even when the problem is incomplete
    for (auto& msg : p.issues())
      if (msg.find("alpha") == 0 || msg.find("beta") == 0 || msg.find("C_k") == 0 || msg.find("t_") == 0)
        issues.push_back(std::move(msg));
  }
  try {
    s.validate();
  } catch (const Error& e) {
    issues.emplace_back(e.what());
  }
  if (s.lipschitz_samples < 100) issues.emplace_back("solver: samples must be at least 100");
  if (!(cfg.continuity_k >= 0.0)) issues.emplace_back("solver: continuity_k must be nonnegative");

  const bool interval_ok = std::isfinite(p.t0) && p.a > 0.0 && std::isfinite(p.a);
  const bool order_ok = p.order.alpha > 0.0 && p.order.alpha <= 1.0 && p.order.beta >= 0.0 && p.order.beta <= 1.0;
  if (have_rhs && interval_ok && s.grid >= 16) {
    const auto nodes = uniform_nodes(p.t0, p.a, s.grid, order_ok ? p.order.gamma() : 1.0);
    std::map<int, std::vector<DelayViolation>> by_map;
    for (const auto& v : check_delay_range(p.rhs, p.t0, p.a, nodes)) by_map[v.map].push_back(v);
    for (const auto& [map, list] : by_map) {
      std::ostringstream os;
      os.precision(17);
      os << "delay b_" << map << "(t) = " << list.front().value << " at t = " << list.front().t
         << " leaves [t0, t0+a] (" << list.size() << " grid nodes)";
      issues.push_back(os.str());
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace hfde
