#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace policylab {

// Flat key-value configuration with dotted sections:
//   env.kind = cer
//   principal.grid = 0:5:2.5
//   seeds = 1,2,3
// '#' starts a comment; later assignments win.
class Config {
 public:
  static Config parse_string(const std::string& text);
  static Config parse_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_str(const std::string& key, const std::string& fallback = "") const;
  std::string require_str(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long> get_int_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;

  // Keys beginning with the prefix, sorted.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  // Stable content hash over sorted key=value pairs.
  std::string digest() const;
  // Digest ignoring volatile run-control keys (budget, seeds, flush_every),
  // used to decide whether serialized state may be resumed.
  std::string resume_digest() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace policylab
