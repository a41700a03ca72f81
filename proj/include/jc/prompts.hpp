#pragma once

#include <string>
#include <vector>

#include "jc/trace.hpp"

namespace jc {

enum class TaskKind { math, code };

enum class PromptKind { independent_math, pairwise_math, independent_code, pairwise_code };

inline const char* to_string(PromptKind k) {
  switch (k) {
    case PromptKind::independent_math: return "independent_math";
    case PromptKind::pairwise_math: return "pairwise_math";
    case PromptKind::independent_code: return "independent_code";
    case PromptKind::pairwise_code: return "pairwise_code";
  }
  return "?";
}

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string text;

  friend bool operator==(const ChatMessage& a, const ChatMessage& b) {
    return a.role == b.role && a.text == b.text;
  }
};

/// A fully rendered judge query. The text is produced by template
/// substitution only; backends must send it verbatim.
struct PromptBundle {
  std::vector<ChatMessage> messages;
  PromptKind kind;

  friend bool operator==(const PromptBundle& a, const PromptBundle& b) {
    return a.kind == b.kind && a.messages == b.messages;
  }
};

namespace prompt_text {

// The evaluation request shared by both independent-score templates.
inline constexpr const char* kEvaluationRequest =
    "Please evaluate the above answer based on the following criteria:\n"
    "1. Is the answer correct?\n"
    "2. Is the reasoning process correct?\n"
    "Please choose an evaluation score among 0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, "
    "1.0.\n"
    "\n"
    "Please only output only the evaluation score.";

inline constexpr const char* kPairwiseInstruction =
    "Now, please output the probability (a real number between 0 and 1) that Response 1 is a "
    "better answer than Response 2. Please only output the number.";

}  // namespace prompt_text

/// Renders the three-message independent-score query: the original question
/// (with the step-by-step instruction), the trace as the assistant turn, and
/// the evaluation request over the 11-point score grid.
inline PromptBundle render_independent_prompt(const std::string& question, const Trace& trace,
                                              TaskKind task) {
  PromptBundle b;
  if (task == TaskKind::math) {
    b.kind = PromptKind::independent_math;
    b.messages.push_back(
        {"user", "Please reason step by step, and put your final answer within \\boxed{}.\n\n" +
                     question});
  } else {
    b.kind = PromptKind::independent_code;
    b.messages.push_back(
        {"user",
         "Given the following Python function and input, predict the output.\n\n" + question +
             "\n\nPlease think step by step after \"Reasoning:\\n\\n\" and then leave the output "
             "after \"Output:\\n\\n\". Note the output should be a python object and please "
             "ignore markdown format."});
  }
  b.messages.push_back({"assistant", trace.content});
  b.messages.push_back({"user", prompt_text::kEvaluationRequest});
  return b;
}

/// Renders the single-message pairwise query. The Response 1 slot is y_i, so
/// the argument order fixes the direction of the elicited preference.
inline PromptBundle render_pairwise_prompt(const std::string& question, const Trace& y_i,
                                           const Trace& y_j, TaskKind task) {
  PromptBundle b;
  std::string text;
  if (task == TaskKind::math) {
    b.kind = PromptKind::pairwise_math;
    text =
        "Suppose there are two responses to the same question. Please output the probability "
        "that Response 1 is a better answer than Response 2.\n"
        "\n"
        "#### Question ####\n"
        "\n" +
        question + "\n";
  } else {
    b.kind = PromptKind::pairwise_code;
    text =
        "Suppose there are two responses to the same Python function and input. Please output "
        "the probability that Response 1 is a better answer than Response 2.\n"
        "\n"
        "#### Python function and input ####\n"
        "\n" +
        question + "\n";
  }
  text +=
      "\n"
      "#### Response 1 ####\n"
      "\n" +
      y_i.content +
      "\n"
      "\n"
      "#### Response 2 ####\n"
      "\n" +
      y_j.content +
      "\n"
      "\n"
      "#### Instruction ####\n"
      "\n" +
      std::string(prompt_text::kPairwiseInstruction);
  b.messages.push_back({"user", std::move(text)});
  return b;
}

}  // namespace jc
