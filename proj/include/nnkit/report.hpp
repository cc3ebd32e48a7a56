#pragma once

// Text reports: a timestamp header line (the only non-reproducible byte),
// the resolved config, aligned tables, and a machine-readable metric=value
// block.

#include <map>
#include <string>
#include <vector>

#include "nnkit/config.hpp"

namespace nnkit {

class ReportWriter {
public:
  explicit ReportWriter(const std::string &title, const RunConfig *config = nullptr);

  void table(const std::string &name, const std::vector<std::string> &headers,
             const std::vector<std::vector<std::string>> &rows);
  void metric(const std::string &name, double value);
  void metric(const std::string &name, const std::string &value);
  void note(const std::string &line);

  std::string str() const;
  void write_file(const std::string &path) const;

private:
  std::string title_;
  std::string config_block_;
  std::vector<std::string> notes_;
  std::string tables_;
  std::vector<std::pair<std::string, std::string>> metrics_;
};

/// The metric=value block of a report produced by ReportWriter.
std::map<std::string, std::string> parse_report_metrics(const std::string &text);

/// Report text with the "# generated:" header line removed, for byte
/// comparisons between reruns.
std::string strip_timestamp_header(const std::string &text);

/// Fixed-width percentage with 2 decimals (confusion matrices, rank tables).
std::string format_percent(double fraction);

} // namespace nnkit
