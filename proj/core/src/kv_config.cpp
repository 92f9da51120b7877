#include "cemb/kv_config.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "cemb/errors.hpp"
#include "cemb/text.hpp"

namespace cemb {

KvConfig KvConfig::parse(std::istream& in, const std::string& source) {
  KvConfig cfg;
  cfg.source_ = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(text::trim(view.substr(0, eq)));
    if (key.empty()) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    }
    if (cfg.values_.count(key)) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    cfg.values_[key] = std::string(text::trim(view.substr(eq + 1)));
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

std::optional<std::string> KvConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

namespace {

[[noreturn]] void bad_value(const std::string& source, const std::string& key,
                            const std::string& value, const char* expected) {
  throw ConfigError(source + ": key '" + key + "' has value '" + value + "', expected " +
                    expected);
}

}  // namespace

double KvConfig::real(const std::string& key, double fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  double out;
  if (!text::parse_real(*v, out)) bad_value(source_, key, *v, "a real number");
  return out;
}

std::size_t KvConfig::size(const std::string& key, std::size_t fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  std::size_t out;
  if (!text::parse_size(*v, out)) bad_value(source_, key, *v, "a non-negative integer");
  return out;
}

std::uint64_t KvConfig::u64(const std::string& key, std::uint64_t fallback) const {
  return static_cast<std::uint64_t>(size(key, static_cast<std::size_t>(fallback)));
}

bool KvConfig::boolean(const std::string& key, bool fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "off" || *v == "no") return false;
  bad_value(source_, key, *v, "a boolean");
}

std::vector<double> KvConfig::reals(const std::string& key, std::vector<double> fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  std::vector<double> out;
  if (text::trim(*v).empty()) return out;
  for (auto part : text::split(*v, ',')) {
    double d;
    if (!text::parse_real(part, d)) bad_value(source_, key, *v, "a comma-separated real list");
    out.push_back(d);
  }
  return out;
}

std::vector<std::size_t> KvConfig::sizes(const std::string& key,
                                         std::vector<std::size_t> fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  std::vector<std::size_t> out;
  if (text::trim(*v).empty()) return out;
  for (auto part : text::split(*v, ',')) {
    std::size_t n;
    if (!text::parse_size(part, n)) {
      bad_value(source_, key, *v, "a comma-separated integer list");
    }
    out.push_back(n);
  }
  return out;
}

void KvConfig::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

void KvConfig::reject_unused() const {
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) throw ConfigError(source_ + ": unknown key '" + key + "'");
  }
}

void KvConfig::write(std::ostream& out) const {
  for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
}

}  // namespace cemb
