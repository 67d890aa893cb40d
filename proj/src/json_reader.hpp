#pragma once

#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

#include "focusforge/pattern_io.hpp"

namespace focusforge::detail {

/// Strict accessor for one JSON object: typed lookups by key, with every key
/// that was never asked for reported by finish().
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw SchemaError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw SchemaError(field(key) + ": missing");
    return obj_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw SchemaError(field(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(field(key) + ": must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

  int integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw SchemaError(field(key) + ": expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : mark(key, fallback); }

  bool boolean(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_boolean()) throw SchemaError(field(key) + ": expected true or false");
    return v.get<bool>();
  }
  bool boolean(const std::string& key, bool fallback) { return has(key) ? boolean(key) : mark(key, fallback); }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw SchemaError(field(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : mark(key, fallback);
  }

  const nlohmann::json& array(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw SchemaError(field(key) + ": expected an array");
    return v;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw SchemaError(field(it.key()) + ": unknown key");
  }

 private:
  template <class T>
  T mark(const std::string& key, T v) {
    seen_.insert(key);
    return v;
  }

  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace focusforge::detail
