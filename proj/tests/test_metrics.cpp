#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "confclip/metrics.hpp"
#include "confclip/optim.hpp"

#include "test_util.hpp"

using namespace confclip;

namespace {

constexpr double kGuard = 1e-8;

TaskPrompt a_task() {
  TaskPrompt t;
  t.a = 2;
  t.b = 3;
  t.op = Op::add;
  t.modulus = 10;
  t.tier = Tier::easy;
  return t;
}

// Group built directly from token sequences; `s` fixes every rollout's
// confidence by back-solving the per-token logprobs.
Group group_of(const std::vector<std::vector<TokenId>>& sequences,
               const std::vector<double>& confidences, const RewardSpec& spec) {
  const Vocab vocab = Vocab::with_digits(11);
  std::vector<Rollout> rollouts;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    Rollout r;
    r.tokens = sequences[i];
    r.terminated = r.tokens.back() == vocab.eos;
    r.token_logprobs.assign(r.tokens.size(), std::log(confidences[i]));
    rollouts.push_back(std::move(r));
  }
  return make_group(a_task(), std::move(rollouts), spec, vocab, kGuard);
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("record aggregates over every rollout in the batch") {
  const RewardSpec b01{RewardVariant::Binary01};
  const Group all_right = group_of({{5, 10}, {5, 10}}, {0.5, 0.25}, b01);
  const MetricsRecord rec = metrics::record(3, {all_right});
  CHECK(rec.step == 3);
  CHECK(rec.correctness_reward_plot == 1.0);
  CHECK(rec.shaped_reward_mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rec.confidence_mean == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(rec.response_length_mean == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rec.degenerate_fraction == 1.0);
  CHECK_FALSE(rec.accuracy_eval.has_value());
}

TEST_CASE("wrong answers plot as zero even when the training signal is negative") {
  const RewardSpec cs{RewardVariant::ConfSign};
  const Group all_wrong = group_of({{4, 10}, {3, 10}}, {0.4, 0.4}, cs);
  const MetricsRecord rec = metrics::record(1, {all_wrong});
  CHECK(rec.correctness_reward_plot == 0.0);
  CHECK(rec.shaped_reward_mean == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(rec.confidence_mean == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("the correctness plot is the exact verified fraction") {
  const RewardSpec b01{RewardVariant::Binary01};
  const Group half = group_of({{5, 10}, {4, 10}}, {0.5, 0.5}, b01);
  const Group full = group_of({{5, 10}, {5, 10}}, {0.5, 0.5}, b01);
  const MetricsRecord rec = metrics::record(2, {half, full});
  CHECK(rec.correctness_reward_plot == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(rec.degenerate_fraction == doctest::Approx(0.5).epsilon(1e-12));

  EvalReport eval;
  eval.accuracy = 0.25;
  const MetricsRecord with_eval = metrics::record(2, {half}, eval);
  REQUIRE(with_eval.accuracy_eval.has_value());
  CHECK(*with_eval.accuracy_eval == doctest::Approx(0.25));

  CHECK_THROWS_AS((void)metrics::record(0, {}), std::invalid_argument);
}

TEST_CASE("moving_average worked values") {
  const std::vector<double> series{0, 0, 0, 0, 1};
  const std::vector<double> ma = metrics::moving_average(series, 5);
  REQUIRE(ma.size() == series.size());
  CHECK(ma.back() == doctest::Approx(0.2).epsilon(1e-12));

  CHECK(metrics::moving_average({3, 1, 4}, 1) == std::vector<double>{3, 1, 4});

  const std::vector<double> warm = metrics::moving_average({1, 2, 3}, 2);
  CHECK(warm[0] == doctest::Approx(1.0));
  CHECK(warm[1] == doctest::Approx(1.5));
  CHECK(warm[2] == doctest::Approx(2.5));

  const std::vector<double> flat = metrics::moving_average({0.7, 0.7, 0.7}, 3);
  for (double v : flat) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));

  CHECK_THROWS_AS((void)metrics::moving_average({1.0}, 0), std::invalid_argument);
}

TEST_CASE("moving_average is shift-equivariant") {
  const std::vector<double> xs{0.1, 0.9, 0.4, 0.4, 0.8, 0.2, 0.6};
  std::vector<double> shifted = xs;
  for (double& v : shifted) v += 2.5;
  const std::vector<double> ma = metrics::moving_average(xs, 3);
  const std::vector<double> ma_shift = metrics::moving_average(shifted, 3);
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(ma_shift[i] == doctest::Approx(ma[i] + 2.5).epsilon(1e-12));
}

TEST_CASE("emitted files round-trip through the parser") {
  testutil::TempDir tmp;
  std::vector<MetricsRecord> records;
  for (int i = 1; i <= 4; ++i) {
    MetricsRecord r;
    r.step = i;
    r.correctness_reward_plot = 0.125 * i;
    r.shaped_reward_mean = -0.817231 + 0.3 * i;
    r.confidence_mean = 0.0625 + 0.01 * i;
    r.response_length_mean = 2.0 + 0.5 * i;
    r.degenerate_fraction = i % 2 ? 0.4375 : 1.0;
    if (i % 2 == 0) r.accuracy_eval = 0.333333;
    records.push_back(r);
  }

  for (MetricsFormat format : {MetricsFormat::csv, MetricsFormat::jsonl}) {
    const std::string path =
        tmp.file(std::string("m.") + to_string(format));
    metrics::emit(records, path, format);

    const std::vector<MetricsRecord> back = metrics::parse_metrics_file(path, format);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(back[i].step == records[i].step);
      // Values survive the 6-significant-digit rendering.
      CHECK(back[i].shaped_reward_mean ==
            doctest::Approx(records[i].shaped_reward_mean).epsilon(1e-5));
      CHECK(back[i].confidence_mean ==
            doctest::Approx(records[i].confidence_mean).epsilon(1e-5));
      CHECK(back[i].accuracy_eval.has_value() ==
            records[i].accuracy_eval.has_value());
    }

    // Re-rendering the parsed records reproduces the file byte for byte.
    const std::string again = tmp.file(std::string("m2.") + to_string(format));
    metrics::emit(back, again, format);
    CHECK(testutil::slurp(again) == testutil::slurp(path));

    const int lines = count_lines(testutil::slurp(path));
    CHECK(lines == static_cast<int>(records.size()) +
                       (format == MetricsFormat::csv ? 1 : 0));
  }
}

TEST_CASE("an empty record list leaves a valid header-only file") {
  testutil::TempDir tmp;
  const std::string csv = tmp.file("empty.csv");
  metrics::emit({}, csv, MetricsFormat::csv);
  CHECK(testutil::slurp(csv) ==
        "step,correctness_reward_plot,shaped_reward_mean,confidence_mean,"
        "response_length_mean,degenerate_fraction,accuracy_eval\n");
  CHECK(metrics::parse_metrics_file(csv, MetricsFormat::csv).empty());

  const std::string jsonl = tmp.file("empty.jsonl");
  metrics::emit({}, jsonl, MetricsFormat::jsonl);
  CHECK(testutil::slurp(jsonl).empty());
  CHECK(metrics::parse_metrics_file(jsonl, MetricsFormat::jsonl).empty());
}

TEST_CASE("the parser rejects files it did not write") {
  testutil::TempDir tmp;
  CHECK_THROWS_WITH_AS(
      (void)metrics::parse_metrics_file(tmp.file("nope.csv"), MetricsFormat::csv),
      doctest::Contains("nope.csv"), std::runtime_error);

  const std::string bad_header = tmp.file("bad.csv");
  testutil::spit(bad_header, "time,value\n1,2\n");
  CHECK_THROWS_AS(
      (void)metrics::parse_metrics_file(bad_header, MetricsFormat::csv),
      std::runtime_error);

  const std::string short_row = tmp.file("short.csv");
  testutil::spit(short_row,
                 "step,correctness_reward_plot,shaped_reward_mean,"
                 "confidence_mean,response_length_mean,degenerate_fraction,"
                 "accuracy_eval\n1,0.5,0.5\n");
  CHECK_THROWS_AS(
      (void)metrics::parse_metrics_file(short_row, MetricsFormat::csv),
      std::runtime_error);

  const std::string bad_json = tmp.file("bad.jsonl");
  testutil::spit(bad_json, "{not json}\n");
  CHECK_THROWS_AS(
      (void)metrics::parse_metrics_file(bad_json, MetricsFormat::jsonl),
      std::runtime_error);
}

TEST_CASE("format names round-trip") {
  CHECK(metrics_format_from_string("csv") == MetricsFormat::csv);
  CHECK(metrics_format_from_string("jsonl") == MetricsFormat::jsonl);
  CHECK(to_string(MetricsFormat::csv) == "csv");
  CHECK_THROWS_AS((void)metrics_format_from_string("yaml"), std::invalid_argument);
}
