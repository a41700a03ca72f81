#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "jc/errors.hpp"
#include "jc/trace.hpp"

namespace jc {

/// Trace pool files are UTF-8 JSON lines, one trace object per line:
///   {trace_id, question_id, generator_id?, content, answer_raw,
///    intrinsic?{avg_logprob?, token_confidences?}, label?}
/// Unknown fields are ignored.
inline Trace trace_from_json(const nlohmann::json& j) {
  Trace t;
  t.trace_id = j.at("trace_id").get<std::string>();
  t.question_id = j.at("question_id").get<std::string>();
  if (j.contains("generator_id") && !j["generator_id"].is_null())
    t.generator_id = j["generator_id"].get<std::string>();
  t.content = j.at("content").get<std::string>();
  t.answer_raw = j.at("answer_raw").get<std::string>();
  if (j.contains("intrinsic") && !j["intrinsic"].is_null()) {
    const auto& in = j["intrinsic"];
    IntrinsicSignals sig;
    if (in.contains("avg_logprob") && !in["avg_logprob"].is_null())
      sig.avg_logprob = in["avg_logprob"].get<double>();
    if (in.contains("token_confidences") && !in["token_confidences"].is_null()) {
      sig.token_confidences = in["token_confidences"].get<std::vector<double>>();
      if (sig.token_confidences->empty())
        throw Error("trace " + t.trace_id + ": token_confidences must be non-empty");
    }
    t.intrinsic = std::move(sig);
  }
  if (j.contains("label") && !j["label"].is_null()) t.label = j["label"].get<bool>();
  return t;
}

inline nlohmann::json trace_to_json(const Trace& t) {
  nlohmann::json j;
  j["trace_id"] = t.trace_id;
  j["question_id"] = t.question_id;
  if (t.generator_id) j["generator_id"] = *t.generator_id;
  j["content"] = t.content;
  j["answer_raw"] = t.answer_raw;
  if (t.intrinsic) {
    nlohmann::json in = nlohmann::json::object();
    if (t.intrinsic->avg_logprob) in["avg_logprob"] = *t.intrinsic->avg_logprob;
    if (t.intrinsic->token_confidences) in["token_confidences"] = *t.intrinsic->token_confidences;
    j["intrinsic"] = std::move(in);
  }
  if (t.label) j["label"] = *t.label;
  return j;
}

inline std::vector<Trace> read_pool(std::istream& in, const std::string& origin = "<stream>") {
  std::vector<Trace> pool;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Trace t = trace_from_json(nlohmann::json::parse(line));
    if (!seen.insert(t.trace_id).second)
      throw Error(origin + ":" + std::to_string(lineno) + ": duplicate trace_id " + t.trace_id);
    if (t.answer_raw.empty())
      throw InvalidAnswer(origin + ":" + std::to_string(lineno) + ": empty answer_raw");
    pool.push_back(std::move(t));
  }
  return pool;
}

inline std::vector<Trace> read_pool_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pool file: " + path);
  return read_pool(in, path);
}

inline void write_pool(std::ostream& out, const std::vector<Trace>& pool) {
  for (const Trace& t : pool) out << trace_to_json(t).dump() << "\n";
}

inline void write_pool_file(const std::string& path, const std::vector<Trace>& pool) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open pool file for writing: " + path);
  write_pool(out, pool);
}

}  // namespace jc
