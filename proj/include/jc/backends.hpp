#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "jc/errors.hpp"
#include "jc/http_backend.hpp"
#include "jc/judge.hpp"
#include "jc/sim.hpp"

namespace jc {

struct PoolSpec;       // harness.hpp
struct JudgeSetup;     // harness.hpp

namespace detail {

inline std::shared_ptr<JudgeBackend> make_backend(const std::string& kind,
                                                  const std::string& fixture_path,
                                                  const std::string& sidecar_path,
                                                  const std::string& endpoint,
                                                  const std::string& url_path,
                                                  const std::string& model,
                                                  const std::string& api_key_env,
                                                  const std::string& auth_header,
                                                  const JudgeConfig& cfg) {
  if (kind == "sim") {
    if (!std::filesystem::exists(sidecar_path))
      throw Error("sim judge needs a sidecar file: " + sidecar_path);
    return SimJudgeBackend::from_sidecar_file(sidecar_path);
  }
  if (kind == "scripted") {
    if (fixture_path.empty()) return std::make_shared<ScriptedBackend>();
    return ScriptedBackend::from_file(fixture_path);
  }
  if (kind == "http") {
    HttpBackend::Options opt;
    opt.endpoint = endpoint;
    opt.path = url_path;
    opt.model = model;
    opt.api_key = HttpBackend::key_from_env(api_key_env);
    opt.auth_header = auth_header;
    opt.temperature = cfg.temperature;
    opt.reasoning_effort = cfg.reasoning_effort;
    return std::make_shared<HttpBackend>(opt);
  }
  throw Error("unknown judge backend: " + kind);
}

}  // namespace detail

}  // namespace jc
