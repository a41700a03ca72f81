#include <catch2/catch_amalgamated.hpp>

#include "jc/prompts.hpp"

using namespace jc;

namespace {

Trace make_trace(const std::string& id, const std::string& content) {
  Trace t;
  t.trace_id = id;
  t.question_id = "q";
  t.content = content;
  t.answer_raw = "42";
  return t;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("independent math prompt matches the template", "[prompts]") {
  const Trace y = make_trace("t1", "Step 1 ... the answer is 42.");
  PromptBundle b = render_independent_prompt("What is 6*7?", y, TaskKind::math);

  CHECK(b.kind == PromptKind::independent_math);
  REQUIRE(b.messages.size() == 3);
  CHECK(b.messages[0].role == "user");
  CHECK(b.messages[1].role == "assistant");
  CHECK(b.messages[2].role == "user");

  CHECK(contains(b.messages[0].text,
                 "Please reason step by step, and put your final answer within \\boxed{}."));
  CHECK(contains(b.messages[0].text, "What is 6*7?"));
  CHECK(b.messages[1].text == y.content);
  CHECK(contains(b.messages[2].text,
                 "choose an evaluation score among 0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, "
                 "0.9, 1.0"));
  CHECK(contains(b.messages[2].text, "Please only output only the evaluation score."));
}

TEST_CASE("independent code prompt shares the score grid", "[prompts]") {
  const Trace y = make_trace("t1", "Reasoning: ... Output: [1, 2]");
  PromptBundle b =
      render_independent_prompt("Function:\ndef f(x): return x\n\nInput:\n[1, 2]", y,
                                TaskKind::code);
  CHECK(b.kind == PromptKind::independent_code);
  REQUIRE(b.messages.size() == 3);
  CHECK(contains(b.messages[0].text, "predict the output"));
  CHECK(contains(b.messages[0].text, "def f(x): return x"));
  CHECK(contains(b.messages[2].text,
                 "choose an evaluation score among 0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, "
                 "0.9, 1.0"));
}

TEST_CASE("prompt substitution is injective", "[prompts]") {
  const Trace a = make_trace("t1", "solution A");
  const Trace b = make_trace("t2", "solution B");
  CHECK(!(render_independent_prompt("q", a, TaskKind::math) ==
          render_independent_prompt("q", b, TaskKind::math)));
}

TEST_CASE("pairwise math prompt matches the template", "[prompts]") {
  const Trace y1 = make_trace("t1", "first solution");
  const Trace y2 = make_trace("t2", "second solution");
  PromptBundle b = render_pairwise_prompt("What is 6*7?", y1, y2, TaskKind::math);

  CHECK(b.kind == PromptKind::pairwise_math);
  REQUIRE(b.messages.size() == 1);
  CHECK(b.messages[0].role == "user");
  const std::string& text = b.messages[0].text;
  CHECK(contains(text, "probability that Response 1 is a better answer than Response 2"));
  CHECK(contains(text, "#### Question ####"));
  CHECK(contains(text, "#### Response 1 ####"));
  CHECK(contains(text, "#### Response 2 ####"));
  CHECK(contains(text, "#### Instruction ####"));
  CHECK(contains(text, "Please only output the number."));
  CHECK(text.find("first solution") < text.find("second solution"));
}

TEST_CASE("swapping the pair swaps only the response sections", "[prompts]") {
  const Trace y1 = make_trace("t1", "CONTENT_ONE");
  const Trace y2 = make_trace("t2", "CONTENT_TWO");
  PromptBundle fwd = render_pairwise_prompt("q?", y1, y2, TaskKind::math);
  PromptBundle rev = render_pairwise_prompt("q?", y2, y1, TaskKind::math);
  std::string fwd_text = fwd.messages[0].text;
  std::string rev_text = rev.messages[0].text;
  // Substituting each content for a common placeholder makes the two equal.
  auto blank = [](std::string s, const std::string& from) {
    std::size_t pos;
    while ((pos = s.find(from)) != std::string::npos) s.replace(pos, from.size(), "X");
    return s;
  };
  CHECK(blank(blank(fwd_text, "CONTENT_ONE"), "CONTENT_TWO") ==
        blank(blank(rev_text, "CONTENT_TWO"), "CONTENT_ONE"));
  CHECK(fwd_text != rev_text);
}

TEST_CASE("pairwise code prompt names the function-and-input section", "[prompts]") {
  const Trace y1 = make_trace("t1", "Output: 3");
  const Trace y2 = make_trace("t2", "Output: 4");
  PromptBundle b = render_pairwise_prompt("Function:\ndef g(): pass\n\nInput:\n()", y1, y2,
                                          TaskKind::code);
  CHECK(b.kind == PromptKind::pairwise_code);
  CHECK(contains(b.messages[0].text, "#### Python function and input ####"));
  CHECK(contains(b.messages[0].text,
                 "two responses to the same Python function and input"));
}
