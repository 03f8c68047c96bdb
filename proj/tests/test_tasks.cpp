#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <vector>

#include "confclip/tasks.hpp"
#include "confclip/vocab.hpp"

#include "test_util.hpp"

using namespace confclip;

namespace {

Rollout make_rollout(std::vector<TokenId> tokens, bool terminated) {
  Rollout r;
  r.tokens = std::move(tokens);
  r.token_logprobs.assign(r.tokens.size(), -0.1);
  r.terminated = terminated;
  return r;
}

bool same_task(const TaskPrompt& x, const TaskPrompt& y) {
  return x.prompt_id == y.prompt_id && x.a == y.a && x.b == y.b && x.op == y.op &&
         x.modulus == y.modulus && x.tier == y.tier;
}

}  // namespace

TEST_CASE("suite generation is deterministic in its inputs") {
  const TaskSuite s1 = gen_task_suite(Regime::easy, 10, 7);
  const TaskSuite s2 = gen_task_suite(Regime::easy, 10, 7);
  REQUIRE(s1.tasks.size() == 10);
  REQUIRE(s2.tasks.size() == 10);
  for (std::size_t i = 0; i < s1.tasks.size(); ++i)
    CHECK(same_task(s1.tasks[i], s2.tasks[i]));
  CHECK(s1.regime == Regime::easy);
  CHECK(s1.seed == 7);

  const TaskSuite s3 = gen_task_suite(Regime::easy, 10, 8);
  bool all_equal = true;
  for (std::size_t i = 0; i < s1.tasks.size(); ++i)
    all_equal = all_equal && s1.tasks[i].a == s3.tasks[i].a &&
                s1.tasks[i].b == s3.tasks[i].b;
  CHECK_FALSE(all_equal);
}

TEST_CASE("regimes control the tier mix") {
  for (const TaskPrompt& t : gen_task_suite(Regime::easy, 12, 3).tasks)
    CHECK(t.tier == Tier::easy);
  for (const TaskPrompt& t : gen_task_suite(Regime::hard, 12, 3).tasks)
    CHECK(t.tier == Tier::hard);

  const TaskSuite mixed = gen_task_suite(Regime::mixed, 20, 1);
  int easy = 0, hard = 0;
  for (const TaskPrompt& t : mixed.tasks)
    (t.tier == Tier::easy ? easy : hard) += 1;
  CHECK(easy >= 1);
  CHECK(hard >= 1);

  // The floor holds even at the smallest legal mixed size.
  const TaskSuite tiny = gen_task_suite(Regime::mixed, 2, 42);
  CHECK(tiny.tasks[0].tier != tiny.tasks[1].tier);
}

TEST_CASE("generated tasks satisfy their field invariants") {
  for (std::int64_t seed : {0, 5, 91}) {
    const TaskSuite suite = gen_task_suite(Regime::mixed, 16, seed, 7, 100);
    std::set<std::int64_t> ids;
    for (const TaskPrompt& t : suite.tasks) {
      CHECK(ids.insert(t.prompt_id).second);
      CHECK(t.prompt_id >= 100);
      CHECK(t.a >= 0);
      CHECK(t.a < t.modulus);
      CHECK(t.b >= 0);
      CHECK(t.b < t.modulus);
      CHECK(t.modulus == 7);
    }
  }
}

TEST_CASE("generation rejects bad arguments") {
  CHECK_THROWS_AS((void)gen_task_suite(Regime::easy, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)gen_task_suite(Regime::mixed, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)gen_task_suite(Regime::easy, 4, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)gen_task_suite(Regime::easy, 4, 1, 11), std::invalid_argument);
}

TEST_CASE("verify accepts exactly the answer window followed by EOS") {
  const Vocab vocab = Vocab::with_digits(11);
  TaskPrompt task;
  task.a = 2;
  task.b = 3;
  task.op = Op::add;
  task.modulus = 10;
  task.tier = Tier::easy;

  CHECK(verify(task, make_rollout({5, 10}, true), vocab));
  CHECK_FALSE(verify(task, make_rollout({4, 10}, true), vocab));
  CHECK_FALSE(verify(task, make_rollout({5}, false), vocab));

  // Noise before the window is ignored; noise between window and EOS is not.
  CHECK(verify(task, make_rollout({7, 7, 5, 10}, true), vocab));
  CHECK_FALSE(verify(task, make_rollout({5, 4, 10}, true), vocab));
  CHECK_FALSE(verify(task, make_rollout({10}, true), vocab));

  TaskPrompt hard = task;
  hard.op = Op::mul;
  hard.tier = Tier::hard;
  // Window is operand sum then product: [5, 6].
  CHECK(verify(hard, make_rollout({5, 6, 10}, true), vocab));
  CHECK(verify(hard, make_rollout({1, 5, 6, 10}, true), vocab));
  CHECK_FALSE(verify(hard, make_rollout({6, 5, 10}, true), vocab));
  CHECK_FALSE(verify(hard, make_rollout({6, 10}, true), vocab));
}

TEST_CASE("verify is pure and stable across repeated calls") {
  const Vocab vocab = Vocab::with_digits(11);
  TaskPrompt task;
  task.a = 4;
  task.b = 4;
  task.op = Op::add;
  const Rollout good = make_rollout({8, 10}, true);
  const Rollout bad = make_rollout({7, 10}, true);
  for (int i = 0; i < 100000; ++i) {
    CHECK(verify(task, good, vocab));
    CHECK_FALSE(verify(task, bad, vocab));
  }
}

TEST_CASE("every generated task is solvable within a short budget") {
  const Vocab vocab = Vocab::with_digits(11);
  for (Regime regime : {Regime::easy, Regime::hard, Regime::mixed}) {
    for (const TaskPrompt& task : gen_task_suite(regime, 12, 21).tasks) {
      std::vector<TokenId> answer = task.answer_window();
      answer.push_back(vocab.eos);
      CHECK(answer.size() <= 3);
      CHECK(verify_tokens(task, answer, true, vocab));
    }
  }
}

TEST_CASE("easy tasks have exactly one verifying single-digit answer") {
  const Vocab vocab = Vocab::with_digits(11);
  for (const TaskPrompt& task : gen_task_suite(Regime::easy, 10, 33).tasks) {
    int hits = 0;
    for (TokenId d = 0; d < 10; ++d) {
      const std::vector<TokenId> seq{d, vocab.eos};
      if (verify_tokens(task, seq, true, vocab)) ++hits;
    }
    CHECK(hits == 1);
  }
}

TEST_CASE("prompt keys depend on task content, not suite position") {
  TaskPrompt x;
  x.prompt_id = 1;
  x.a = 3;
  x.b = 4;
  x.op = Op::add;
  TaskPrompt y = x;
  y.prompt_id = 999;
  CHECK(x.prompt_key() == y.prompt_key());

  TaskPrompt z = x;
  z.op = Op::mul;
  CHECK_FALSE(x.prompt_key() == z.prompt_key());
  TaskPrompt w = x;
  w.b = 5;
  CHECK_FALSE(x.prompt_key() == w.prompt_key());
}

TEST_CASE("suite save and load round-trip") {
  testutil::TempDir tmp;
  const std::string path = tmp.file("suite.txt");
  const TaskSuite suite = gen_task_suite(Regime::mixed, 9, 17, 8, 50);
  save_suite(suite, path);

  const TaskSuite loaded = load_suite(path);
  CHECK(loaded.regime == suite.regime);
  CHECK(loaded.seed == suite.seed);
  REQUIRE(loaded.tasks.size() == suite.tasks.size());
  for (std::size_t i = 0; i < suite.tasks.size(); ++i)
    CHECK(same_task(loaded.tasks[i], suite.tasks[i]));
}

TEST_CASE("suite loading rejects malformed files") {
  testutil::TempDir tmp;

  CHECK_THROWS_WITH_AS((void)load_suite(tmp.file("absent.txt")),
                       doctest::Contains("absent.txt"), std::runtime_error);

  const std::string bad_header = tmp.file("header.txt");
  testutil::spit(bad_header, "task-list v=9\n");
  CHECK_THROWS_AS((void)load_suite(bad_header), std::runtime_error);

  const std::string path = tmp.file("suite.txt");
  save_suite(gen_task_suite(Regime::easy, 4, 2), path);
  std::string text = testutil::slurp(path);

  const std::string truncated = tmp.file("truncated.txt");
  testutil::spit(truncated, text.substr(0, text.rfind('\n', text.size() - 2) + 1));
  CHECK_THROWS_AS((void)load_suite(truncated), std::runtime_error);

  std::string dup = text;
  const std::size_t header_end = dup.find('\n') + 1;
  const std::size_t first_line_end = dup.find('\n', header_end) + 1;
  const std::string first_line = dup.substr(header_end, first_line_end - header_end);
  dup.replace(first_line_end, dup.find('\n', first_line_end) + 1 - first_line_end,
              first_line);
  const std::string dup_path = tmp.file("dup.txt");
  testutil::spit(dup_path, dup);
  CHECK_THROWS_AS((void)load_suite(dup_path), std::runtime_error);
}
