#pragma once

// Flat dotted-key configuration. Every key has a documented default; unknown
// keys are rejected; parse(render(c)) == c.

#include <map>
#include <string>
#include <vector>

#include "nnkit/common.hpp"

namespace nnkit {

struct KeyDoc {
  std::string key;
  std::string default_value;
  std::string doc;
};

class RunConfig {
public:
  /// All known keys with defaults and one-line docs, in render order.
  static const std::vector<KeyDoc> &schema();

  RunConfig(); // defaults

  static RunConfig from_text(const std::string &text);
  static RunConfig from_file(const std::string &path);

  void set(const std::string &key, const std::string &value);
  const std::string &get(const std::string &key) const;

  std::size_t get_size(const std::string &key) const;
  double get_double(const std::string &key) const;
  bool get_bool(const std::string &key) const;
  std::uint64_t get_seed(const std::string &key) const;
  std::vector<std::size_t> get_counts(const std::string &key) const; // comma list

  /// Full key = value text with doc comments, schema order.
  std::string render() const;

private:
  std::map<std::string, std::string> values_;
};

} // namespace nnkit
