#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace icesel::testsupport {

inline nlohmann::json load_fixture_json(const std::string& name) {
  std::string path = std::string(ICESEL_FIXTURE_DIR) + "/" + name;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing fixture: " + path);
  return nlohmann::json::parse(in);
}

}  // namespace icesel::testsupport
