#include "msrb/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace msrb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace

double parse_number(const std::string& text, const std::string& path) {
  std::string s = trim(text);
  if (s.empty()) throw std::invalid_argument(path + ": empty numeric value");

  // "2pi" and "pi" prefixes for mesh sizes like 2pi/128.
  double scale = 1.0;
  if (s.rfind("2pi", 0) == 0) {
    scale = 2.0 * std::numbers::pi;
    s = trim(s.substr(3));
    if (s.empty()) return scale;
  } else if (s.rfind("pi", 0) == 0) {
    scale = std::numbers::pi;
    s = trim(s.substr(2));
    if (s.empty()) return scale;
  }

  const auto slash = s.find('/');
  try {
    if (scale != 1.0) {
      if (s[0] != '/') throw std::invalid_argument("expected '/'");
      const double denom = std::stod(trim(s.substr(1)));
      return scale / denom;
    }
    if (slash != std::string::npos) {
      const double num = std::stod(trim(s.substr(0, slash)));
      const double den = std::stod(trim(s.substr(slash + 1)));
      return num / den;
    }
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(path + ": cannot parse number '" + text + "'");
  }
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": empty key");
    if (section.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": key outside any [section]");
    cfg.values_[section + "." + key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

void Config::set(const std::string& path, const std::string& value) {
  if (path.find('.') == std::string::npos)
    throw std::invalid_argument("config path '" + path + "' needs section.key form");
  values_[path] = value;
}

bool Config::has(const std::string& path) const { return values_.count(path) > 0; }

void Config::fail(const std::string& path, const std::string& what) const {
  throw std::invalid_argument("config " + path + ": " + what);
}

std::string Config::get_string(const std::string& path) const {
  const auto it = values_.find(path);
  if (it == values_.end()) fail(path, "missing required value");
  return it->second;
}

std::string Config::get_string(const std::string& path,
                               const std::string& fallback) const {
  const auto it = values_.find(path);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& path) const {
  return parse_number(get_string(path), path);
}

double Config::get_double(const std::string& path, double fallback) const {
  const auto it = values_.find(path);
  return it == values_.end() ? fallback : parse_number(it->second, path);
}

long Config::get_int(const std::string& path) const {
  const double v = get_double(path);
  const long r = std::lround(v);
  if (std::abs(v - double(r)) > 1e-9) fail(path, "expected an integer");
  return r;
}

long Config::get_int(const std::string& path, long fallback) const {
  return has(path) ? get_int(path) : fallback;
}

bool Config::get_bool(const std::string& path, bool fallback) const {
  if (!has(path)) return fallback;
  const std::string v = get_string(path);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(path, "expected a boolean");
  return false;
}

std::vector<double> Config::get_double_list(const std::string& path) const {
  const auto items = split_list(get_string(path));
  if (items.empty()) fail(path, "expected a non-empty list");
  std::vector<double> out;
  for (const auto& item : items) out.push_back(parse_number(item, path));
  return out;
}

std::vector<double> Config::get_double_list(
    const std::string& path, const std::vector<double>& fallback) const {
  return has(path) ? get_double_list(path) : fallback;
}

std::vector<long> Config::get_int_list(const std::string& path) const {
  std::vector<long> out;
  for (double v : get_double_list(path)) {
    const long r = std::lround(v);
    if (std::abs(v - double(r)) > 1e-9) fail(path, "expected integers");
    out.push_back(r);
  }
  return out;
}

std::vector<long> Config::get_int_list(const std::string& path,
                                       const std::vector<long>& fallback) const {
  return has(path) ? get_int_list(path) : fallback;
}

std::string Config::canonical_string() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << "=" << v << ";";
  return os.str();
}

std::uint64_t Config::content_hash() const { return fnv1a(canonical_string()); }

}  // namespace msrb
