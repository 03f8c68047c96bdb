#include "confclip/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "confclip/rewards.hpp"

namespace confclip {

std::string to_string(MetricsFormat f) {
  return f == MetricsFormat::csv ? "csv" : "jsonl";
}

MetricsFormat metrics_format_from_string(const std::string& s) {
  if (s == "csv") return MetricsFormat::csv;
  if (s == "jsonl") return MetricsFormat::jsonl;
  throw std::invalid_argument("metrics format must be csv or jsonl, got '" + s + "'");
}

namespace {

constexpr const char* kCsvHeader =
    "step,correctness_reward_plot,shaped_reward_mean,confidence_mean,"
    "response_length_mean,degenerate_fraction,accuracy_eval";

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string render_line(const MetricsRecord& r, MetricsFormat format) {
  if (format == MetricsFormat::csv) {
    std::string line = std::to_string(r.step);
    line += ',';
    line += fmt6(r.correctness_reward_plot);
    line += ',';
    line += fmt6(r.shaped_reward_mean);
    line += ',';
    line += fmt6(r.confidence_mean);
    line += ',';
    line += fmt6(r.response_length_mean);
    line += ',';
    line += fmt6(r.degenerate_fraction);
    line += ',';
    if (r.accuracy_eval) line += fmt6(*r.accuracy_eval);
    return line;
  }
  std::string line = "{\"step\":" + std::to_string(r.step);
  line += ",\"correctness_reward_plot\":" + fmt6(r.correctness_reward_plot);
  line += ",\"shaped_reward_mean\":" + fmt6(r.shaped_reward_mean);
  line += ",\"confidence_mean\":" + fmt6(r.confidence_mean);
  line += ",\"response_length_mean\":" + fmt6(r.response_length_mean);
  line += ",\"degenerate_fraction\":" + fmt6(r.degenerate_fraction);
  line += ",\"accuracy_eval\":";
  line += r.accuracy_eval ? fmt6(*r.accuracy_eval) : std::string("null");
  line += '}';
  return line;
}

}  // namespace

namespace metrics {

MetricsRecord record(int step, const std::vector<Group>& groups,
                     const std::optional<EvalReport>& eval) {
  if (groups.empty())
    throw std::invalid_argument("metrics::record: groups must be non-empty");
  MetricsRecord rec;
  rec.step = step;
  std::size_t n = 0;
  std::size_t n_correct = 0;
  for (const Group& g : groups) {
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      ++n;
      n_correct += g.correct[i] ? 1 : 0;
      rec.shaped_reward_mean += g.shaped[i];
      rec.confidence_mean += confidence(g.rollouts[i]);
      rec.response_length_mean += static_cast<double>(g.rollouts[i].length());
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  rec.correctness_reward_plot = static_cast<double>(n_correct) * inv;
  rec.shaped_reward_mean *= inv;
  rec.confidence_mean *= inv;
  rec.response_length_mean *= inv;
  rec.degenerate_fraction = degenerate_fraction(groups);
  if (eval) rec.accuracy_eval = eval->accuracy;
  return rec;
}

std::vector<double> moving_average(const std::vector<double>& series, int window) {
  if (window < 1)
    throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  double running = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    running += series[i];
    if (i >= static_cast<std::size_t>(window)) running -= series[i - window];
    const auto span = std::min<std::size_t>(i + 1, window);
    out[i] = running / static_cast<double>(span);
  }
  return out;
}

void emit(const std::vector<MetricsRecord>& records, const std::string& path,
          MetricsFormat format) {
  MetricsWriter writer(path, format);
  for (const MetricsRecord& r : records) writer.write(r);
}

std::vector<MetricsRecord> parse_metrics_file(const std::string& path,
                                              MetricsFormat format) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("parse_metrics_file: cannot open '" + path + "'");
  std::vector<MetricsRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (format == MetricsFormat::csv) {
      if (line_no == 1) {
        if (line != kCsvHeader)
          throw std::runtime_error("parse_metrics_file: unexpected header in '" +
                                   path + "'");
        continue;
      }
      std::vector<std::string> fields;
      std::string field;
      std::istringstream ls(line);
      while (std::getline(ls, field, ',')) fields.push_back(field);
      // A trailing empty field (absent eval accuracy) is dropped by getline.
      if (fields.size() == 6) fields.emplace_back();
      if (fields.size() != 7)
        throw std::runtime_error("parse_metrics_file: bad column count at " +
                                 path + ":" + std::to_string(line_no));
      MetricsRecord r;
      r.step = std::stoi(fields[0]);
      r.correctness_reward_plot = std::stod(fields[1]);
      r.shaped_reward_mean = std::stod(fields[2]);
      r.confidence_mean = std::stod(fields[3]);
      r.response_length_mean = std::stod(fields[4]);
      r.degenerate_fraction = std::stod(fields[5]);
      if (!fields[6].empty()) r.accuracy_eval = std::stod(fields[6]);
      out.push_back(r);
    } else {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("parse_metrics_file: bad JSON at " + path + ":" +
                                 std::to_string(line_no) + ": " + e.what());
      }
      MetricsRecord r;
      r.step = j.at("step").get<int>();
      r.correctness_reward_plot = j.at("correctness_reward_plot").get<double>();
      r.shaped_reward_mean = j.at("shaped_reward_mean").get<double>();
      r.confidence_mean = j.at("confidence_mean").get<double>();
      r.response_length_mean = j.at("response_length_mean").get<double>();
      r.degenerate_fraction = j.at("degenerate_fraction").get<double>();
      if (!j.at("accuracy_eval").is_null())
        r.accuracy_eval = j.at("accuracy_eval").get<double>();
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace metrics

MetricsWriter::MetricsWriter(const std::string& path, MetricsFormat format)
    : path_(path), format_(format) {
  file_ = std::fopen(path.c_str(), "w");
  if (!file_)
    throw std::runtime_error("MetricsWriter: cannot open '" + path +
                             "' for writing");
  if (format_ == MetricsFormat::csv) {
    std::fputs(kCsvHeader, file_);
    std::fputc('\n', file_);
    std::fflush(file_);
  }
}

MetricsWriter::~MetricsWriter() {
  if (file_) std::fclose(file_);
}

void MetricsWriter::write(const MetricsRecord& rec) {
  const std::string line = render_line(rec, format_);
  if (std::fputs(line.c_str(), file_) == EOF || std::fputc('\n', file_) == EOF)
    throw std::runtime_error("MetricsWriter: write failed for '" + path_ + "'");
  std::fflush(file_);
}

}  // namespace confclip
