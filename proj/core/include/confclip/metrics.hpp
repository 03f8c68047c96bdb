#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "confclip/optim.hpp"

namespace confclip {

// Greedy-decode evaluation summary over a task suite.
struct EvalReport {
  double accuracy = 0.0;
  double mean_length = 0.0;
  double mean_confidence = 0.0;
};

// One training step's aggregates. correctness_reward_plot counts wrong
// answers as 0 whatever the reward spec says, so curves from differently
// shaped runs share a scale; shaped_reward_mean is the actual training
// signal.
struct MetricsRecord {
  int step = 0;
  double correctness_reward_plot = 0.0;
  double shaped_reward_mean = 0.0;
  double confidence_mean = 0.0;
  double response_length_mean = 0.0;
  double degenerate_fraction = 0.0;
  std::optional<double> accuracy_eval;
};

enum class MetricsFormat { csv, jsonl };

std::string to_string(MetricsFormat f);
MetricsFormat metrics_format_from_string(const std::string& s);

namespace metrics {

MetricsRecord record(int step, const std::vector<Group>& groups,
                     const std::optional<EvalReport>& eval = std::nullopt);

// Trailing mean over `window` entries; the first window-1 outputs average
// whatever prefix is available. Output length equals input length.
std::vector<double> moving_average(const std::vector<double>& series, int window);

void emit(const std::vector<MetricsRecord>& records, const std::string& path,
          MetricsFormat format);

std::vector<MetricsRecord> parse_metrics_file(const std::string& path,
                                              MetricsFormat format);

}  // namespace metrics

// Streaming emitter: header on open, one flushed line per record, so an
// interrupted run leaves a valid file prefix behind.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, MetricsFormat format);
  ~MetricsWriter();
  MetricsWriter(const MetricsWriter&) = delete;
  MetricsWriter& operator=(const MetricsWriter&) = delete;

  void write(const MetricsRecord& rec);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  MetricsFormat format_;
  std::FILE* file_ = nullptr;
};

}  // namespace confclip
