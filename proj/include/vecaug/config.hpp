#pragma once

#include "vecaug/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace vecaug {

/// Flat key=value experiment configuration. Unknown keys are rejected;
/// missing keys take module defaults. Every key is also a CLI flag.
class ExperimentConfig {
 public:
  ExperimentConfig();

  bool has_key(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  void load_file(const std::string& path);
  void save_file(const std::string& path) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace vecaug
