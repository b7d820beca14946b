#pragma once

#include "sgraphs/io.hpp"

#include "json.hpp"

#include <initializer_list>
#include <optional>
#include <set>
#include <string>

namespace sgraphs::detail {

// Field access with path-qualified diagnostics.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InputError(path_or_root() + ": expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) throw InputError(sub(k) + ": unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    if (!j_.contains(key)) {
      if (fallback) return *fallback;
      throw InputError(sub(key) + ": required field missing");
    }
    const nlohmann::json& v = j_.at(key);
    if (!v.is_number()) throw InputError(sub(key) + ": expected a number");
    return v.get<double>();
  }

  int integer(const char* key, int fallback) const {
    if (!j_.contains(key)) return fallback;
    const nlohmann::json& v = j_.at(key);
    if (!v.is_number_integer()) throw InputError(sub(key) + ": expected an integer");
    return v.get<int>();
  }

  /// Absent or null gives nullopt.
  std::optional<double> nullable_number(const char* key) const {
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    return number(key);
  }

  std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    if (!j_.contains(key)) {
      if (fallback) return *fallback;
      throw InputError(sub(key) + ": required field missing");
    }
    const nlohmann::json& v = j_.at(key);
    if (!v.is_string()) throw InputError(sub(key) + ": expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!j_.contains(key)) return fallback;
    const nlohmann::json& v = j_.at(key);
    if (!v.is_boolean()) throw InputError(sub(key) + ": expected true or false");
    return v.get<bool>();
  }

  const nlohmann::json& array(const char* key) const {
    if (!j_.contains(key)) throw InputError(sub(key) + ": required field missing");
    const nlohmann::json& v = j_.at(key);
    if (!v.is_array()) throw InputError(sub(key) + ": expected an array");
    return v;
  }

  Reader object(const char* key) const {
    static const nlohmann::json empty = nlohmann::json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, sub(key));
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string path_or_root() const { return path_.empty() ? "<root>" : path_; }

  const nlohmann::json& j_;
  std::string path_;
};

}  // namespace sgraphs::detail
