#include "nnkit/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "nnkit/specio.hpp"

namespace nnkit {

ReportWriter::ReportWriter(const std::string &title, const RunConfig *config) : title_(title) {
  if (config)
    config_block_ = config->render();
}

void ReportWriter::table(const std::string &name, const std::vector<std::string> &headers,
                         const std::vector<std::vector<std::string>> &rows) {
  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c)
    width[c] = headers[c].size();
  for (const auto &row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], row[c].size());

  std::ostringstream out;
  out << "[table " << name << "]\n";
  auto emit_row = [&](const std::vector<std::string> &cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c)
        out << " | ";
      out << cells[c];
      if (c + 1 < cells.size())
        for (std::size_t p = cells[c].size(); p < width[c]; ++p)
          out << ' ';
    }
    out << "\n";
  };
  emit_row(headers);
  for (std::size_t c = 0; c < width.size(); ++c) {
    if (c)
      out << "-+-";
    out << std::string(width[c], '-');
  }
  out << "\n";
  for (const auto &row : rows)
    emit_row(row);
  out << "\n";
  tables_ += out.str();
}

void ReportWriter::metric(const std::string &name, double value) {
  metrics_.emplace_back(name, format_double(value));
}

void ReportWriter::metric(const std::string &name, const std::string &value) {
  metrics_.emplace_back(name, value);
}

void ReportWriter::note(const std::string &line) { notes_.push_back(line); }

std::string ReportWriter::str() const {
  std::ostringstream out;
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  out << "# generated: " << stamp << "\n";
  out << "# report: " << title_ << "\n\n";
  for (const auto &n : notes_)
    out << "# " << n << "\n";
  if (!notes_.empty())
    out << "\n";
  if (!config_block_.empty())
    out << "[config]\n" << config_block_ << "\n";
  out << tables_;
  out << "[metrics]\n";
  for (const auto &[k, v] : metrics_)
    out << k << "=" << v << "\n";
  return out.str();
}

void ReportWriter::write_file(const std::string &path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw InputError("cannot write report '" + path + "'");
  out << str();
}

std::map<std::string, std::string> parse_report_metrics(const std::string &text) {
  std::map<std::string, std::string> metrics;
  std::istringstream in(text);
  std::string line;
  bool in_metrics = false;
  while (std::getline(in, line)) {
    if (line == "[metrics]") {
      in_metrics = true;
      continue;
    }
    if (in_metrics) {
      if (line.empty() || line[0] == '[')
        break;
      auto eq = line.find('=');
      if (eq != std::string::npos)
        metrics[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  return metrics;
}

std::string strip_timestamp_header(const std::string &text) {
  if (text.rfind("# generated:", 0) == 0) {
    auto nl = text.find('\n');
    if (nl != std::string::npos)
      return text.substr(nl + 1);
  }
  return text;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

} // namespace nnkit
