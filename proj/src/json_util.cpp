#include "caah/json_util.hpp"

#include <cstdio>

#include "caah/nn/rng.hpp"

namespace caah {

std::string config_digest(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(nn::fnv1a64(config.dump())));
  return buf;
}

}  // namespace caah
