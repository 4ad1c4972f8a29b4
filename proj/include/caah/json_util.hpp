#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <string>

#include "caah/errors.hpp"

namespace caah {

// Reads fields from a JSON object and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& obj, std::string context) : obj_(obj), context_(std::move(context)) {
    if (!obj_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  const nlohmann::json& at(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  // Throws ConfigError naming the first unknown key.
  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(context_ + ": unknown key \"" + key + "\"");
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string context_;
  std::set<std::string> seen_;
};

// FNV-1a of the compact dump, rendered as 16 hex digits.
std::string config_digest(const nlohmann::json& config);

}  // namespace caah
