#pragma once

#include <algorithm>
#include <cctype>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jc/errors.hpp"

namespace jc {

/// Generator-side signals attached to a trace, when available.
struct IntrinsicSignals {
  std::optional<double> avg_logprob;  // mean token log-probability, nats/token
  std::optional<std::vector<double>> token_confidences;
};

/// One reasoning chain plus its extracted final answer.
///
/// `label` is ground-truth correctness and is read only by the harness
/// scorer, never by an aggregation operation.
struct Trace {
  std::string trace_id;
  std::string question_id;
  std::optional<std::string> generator_id;
  std::string content;     // full reasoning chain including the final answer
  std::string answer_raw;  // extracted final answer, non-empty
  std::optional<IntrinsicSignals> intrinsic;
  std::optional<bool> label;
};

/// Canonical answer string. Equal keys <=> same answer group.
struct AnswerKey {
  std::string key;

  friend bool operator==(const AnswerKey& a, const AnswerKey& b) { return a.key == b.key; }
  friend bool operator!=(const AnswerKey& a, const AnswerKey& b) { return a.key != b.key; }
  friend bool operator<(const AnswerKey& a, const AnswerKey& b) { return a.key < b.key; }
};

enum class Normalizer { exact, math };

namespace detail {

inline std::string trim_collapse(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

/// Strips one level of math wrapper: $...$, $$...$$, \(...\), \[...\],
/// or a \boxed{...} whose closing brace is the final character.
inline bool strip_math_wrapper(std::string& s) {
  auto wrapped_by = [&](std::string_view open, std::string_view close) {
    return s.size() > open.size() + close.size() && s.starts_with(open) && s.ends_with(close);
  };
  if (wrapped_by("$$", "$$")) {
    s = s.substr(2, s.size() - 4);
    return true;
  }
  if (wrapped_by("$", "$")) {
    s = s.substr(1, s.size() - 2);
    return true;
  }
  if (wrapped_by("\\(", "\\)") || wrapped_by("\\[", "\\]")) {
    s = s.substr(2, s.size() - 4);
    return true;
  }
  constexpr std::string_view boxed = "\\boxed{";
  if (s.starts_with(boxed) && s.ends_with("}")) {
    int depth = 0;
    for (std::size_t i = boxed.size() - 1; i < s.size(); ++i) {
      if (s[i] == '{') ++depth;
      if (s[i] == '}') --depth;
      if (depth == 0) {
        if (i + 1 != s.size()) return false;  // wrapper does not span the whole string
        s = s.substr(boxed.size(), s.size() - boxed.size() - 1);
        return true;
      }
    }
  }
  return false;
}

}  // namespace detail

/// Canonicalizes a raw answer string. Deterministic and idempotent:
/// normalizing an already-normalized key returns it unchanged.
///
/// "exact" trims and collapses internal whitespace runs. "math" additionally
/// strips \boxed{...} wrappers and surrounding math delimiters, repeating
/// until a fixed point.
inline AnswerKey normalize_answer(std::string_view raw, Normalizer mode) {
  std::string s = detail::trim_collapse(raw);
  if (mode == Normalizer::math) {
    while (detail::strip_math_wrapper(s)) {
      s = detail::trim_collapse(s);
    }
  }
  if (s.empty()) throw InvalidAnswer("answer empty after normalization: \"" + std::string(raw) + "\"");
  return AnswerKey{std::move(s)};
}

/// One answer group: the canonical answer plus the sorted pool indices of
/// its member traces.
struct AnswerGroup {
  AnswerKey answer;
  std::vector<std::size_t> members;
};

/// The answer-group structure over a trace pool. Groups are ordered by first
/// appearance of the answer in the pool, so downstream group indices are
/// reproducible across runs.
struct Partition {
  std::vector<Trace> pool;
  std::vector<AnswerGroup> groups;

  std::size_t n() const { return pool.size(); }
  std::size_t k() const { return groups.size(); }
  std::size_t group_size(std::size_t g) const { return groups[g].members.size(); }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) out[g] = groups[g].members.size();
    return out;
  }

  /// Group index of a pool index.
  std::size_t group_of(std::size_t trace_index) const { return group_of_[trace_index]; }

  std::vector<std::size_t> group_of_;  // filled by build_partition
};

inline Partition build_partition(std::vector<Trace> traces, Normalizer mode = Normalizer::exact) {
  if (traces.empty()) throw Error("build_partition: empty pool");
  Partition p;
  p.pool = std::move(traces);
  p.group_of_.resize(p.pool.size());
  std::unordered_map<std::string, std::size_t> key_to_group;
  for (std::size_t i = 0; i < p.pool.size(); ++i) {
    AnswerKey key = normalize_answer(p.pool[i].answer_raw, mode);
    auto [it, inserted] = key_to_group.emplace(key.key, p.groups.size());
    if (inserted) p.groups.push_back(AnswerGroup{std::move(key), {}});
    p.groups[it->second].members.push_back(i);
    p.group_of_[i] = it->second;
  }
  return p;
}

/// Returns min(kappa, K) group indices ranked by (size descending,
/// first appearance ascending). The ranking is prefix-stable in kappa.
inline std::vector<std::size_t> top_kappa(const Partition& p, std::size_t kappa) {
  std::vector<std::size_t> order(p.k());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.group_size(a) > p.group_size(b);
  });
  order.resize(std::min(kappa, order.size()));
  return order;
}

}  // namespace jc
