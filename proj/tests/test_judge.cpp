#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>

#include "jc/judge.hpp"
#include "oracles.hpp"

using namespace jc;

namespace {

Trace make_trace(const std::string& id, const std::string& content = "") {
  Trace t;
  t.trace_id = id;
  t.question_id = "q";
  t.content = content.empty() ? "content of " + id : content;
  t.answer_raw = "1";
  return t;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
    std::remove(path.c_str());
  }
  ~TempFile() { std::remove(path.c_str()); }
};

/// Backend whose replies can change between calls; counts invocations.
class SequenceBackend : public JudgeBackend {
 public:
  std::vector<std::string> replies;
  std::size_t calls = 0;
  std::string id() const override { return "seq"; }
  BackendReply complete(const PromptBundle& bundle, const QueryMeta&) override {
    const std::string reply = replies[std::min(calls, replies.size() - 1)];
    ++calls;
    return {reply, detail::approx_tokens(detail::bundle_chars(bundle)),
            detail::approx_tokens(reply.size())};
  }
};

}  // namespace

TEST_CASE("parse_score extracts the last in-range literal", "[judge]") {
  CHECK(parse_score("0.7") == 0.7);
  CHECK(parse_score("The probability is 0.85.") == 0.85);
  CHECK_THROWS_AS(parse_score("score: 1.2"), ParseFailure);
  CHECK(parse_score("Response 1 is better. I'd say 0.8") == 0.8);
  CHECK(parse_score("**0.7**") == 0.7);
  CHECK(parse_score("`0.35`") == 0.35);
  CHECK(parse_score("0.2 or maybe 0.3") == 0.3);
  CHECK(parse_score("1") == 1.0);
  CHECK(parse_score("1.0") == 1.0);
  CHECK(parse_score(".5") == 0.5);
  CHECK_THROWS_AS(parse_score("-0.5"), ParseFailure);
  CHECK_THROWS_AS(parse_score("no numbers here"), ParseFailure);
  CHECK_THROWS_AS(parse_score(""), ParseFailure);
  CHECK_THROWS_AS(parse_score("version 1.2 was used"), ParseFailure);
  CHECK(parse_score("2 out of range, then 0.4") == 0.4);
}

TEST_CASE("parse_score round-trips the 11-point grid", "[judge]") {
  for (int i = 0; i <= 10; ++i) {
    const double x = i / 10.0;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%g", x);
    CHECK(parse_score(buf) == x);
  }
}

TEST_CASE("record ids are pure functions of their inputs", "[judge]") {
  const Trace y = make_trace("t1");
  const PromptBundle b1 = render_independent_prompt("q", y, TaskKind::math);
  const PromptBundle b2 = render_independent_prompt("q", y, TaskKind::math);
  CHECK(record_id_for("backend", b1, 0) == record_id_for("backend", b2, 0));
  CHECK(record_id_for("backend", b1, 0) != record_id_for("backend", b1, 1));
  CHECK(record_id_for("backend", b1, 0) != record_id_for("other", b1, 0));
  const PromptBundle b3 = render_independent_prompt("q'", y, TaskKind::math);
  CHECK(record_id_for("backend", b1, 0) != record_id_for("backend", b3, 0));
}

TEST_CASE("score_independent averages replicates and caches", "[judge]") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->set_independent("t1", "0.9");
  JudgeConfig cfg;
  cfg.replicates = 1;
  JudgeGateway gw(backend, cfg);
  const Trace y = make_trace("t1");

  CHECK(gw.score_independent("q", y, CostCategory::field) == 0.9);
  const LedgerTotals after_first = gw.ledger().totals();
  CHECK(after_first.calls == 1);

  // cache hit: identical result, zero new cost
  CHECK(gw.score_independent("q", y, CostCategory::field) == 0.9);
  CHECK(gw.ledger().totals() == after_first);
  CHECK(gw.ledger().cache_hits() == 1);
}

TEST_CASE("replicates are averaged", "[judge]") {
  auto backend = std::make_shared<SequenceBackend>();
  backend->replies = {"0.6", "0.8"};
  JudgeConfig cfg;
  cfg.replicates = 2;
  JudgeGateway gw(backend, cfg);
  CHECK(gw.score_independent("q", make_trace("t1"), CostCategory::field) ==
        Catch::Approx(0.7).margin(1e-15));
  CHECK(gw.ledger().totals().calls == 2);
}

TEST_CASE("score_pairwise direction and conventions", "[judge]") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->set_pairwise("t1", "t2", "0.4");
  backend->set_pairwise("t2", "t1", "0.6");
  JudgeGateway gw(backend, JudgeConfig{});
  const Trace y1 = make_trace("t1");
  const Trace y2 = make_trace("t2");

  CHECK(gw.score_pairwise("q", y1, y2, CostCategory::interaction) == 0.4);
  CHECK(gw.score_pairwise("q", y2, y1, CostCategory::interaction) == 0.6);

  // self-pair: 0.5 by convention, no judge call
  const LedgerTotals before = gw.ledger().totals();
  CHECK(gw.score_pairwise("q", y1, y1, CostCategory::interaction) == 0.5);
  CHECK(gw.ledger().totals() == before);
}

TEST_CASE("symmetrized pairwise scores combine both directions", "[judge]") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->set_pairwise("t1", "t2", "0.7");
  backend->set_pairwise("t2", "t1", "0.4");
  JudgeConfig cfg;
  cfg.symmetrize_pairwise = true;
  JudgeGateway gw(backend, cfg);
  CHECK(gw.score_pairwise("q", make_trace("t1"), make_trace("t2"), CostCategory::interaction) ==
        Catch::Approx((0.7 + 0.6) / 2).margin(1e-15));
  CHECK(gw.ledger().totals().calls == 2);
}

TEST_CASE("parse failures retry then surface ScoreUnavailable", "[judge]") {
  auto backend = std::make_shared<SequenceBackend>();
  backend->replies = {"gibberish"};
  JudgeConfig cfg;
  cfg.retry_limit = 3;
  JudgeGateway gw(backend, cfg);
  CHECK_THROWS_AS(gw.score_independent("q", make_trace("t1"), CostCategory::field),
                  ScoreUnavailable);
  CHECK(backend->calls == 4);  // initial attempt + 3 retries
  CHECK(gw.ledger().totals().calls == 1);  // one (failed) record

  // a retry that eventually parses succeeds
  auto healing = std::make_shared<SequenceBackend>();
  healing->replies = {"nope", "still no", "0.6"};
  JudgeGateway gw2(healing, cfg);
  CHECK(gw2.score_independent("q", make_trace("t1"), CostCategory::field) == 0.6);
  CHECK(healing->calls == 3);
}

TEST_CASE("failed records replay deterministically from cache", "[judge]") {
  auto backend = std::make_shared<SequenceBackend>();
  backend->replies = {"gibberish"};
  JudgeConfig cfg;
  cfg.retry_limit = 0;
  JudgeGateway gw(backend, cfg);
  CHECK_THROWS_AS(gw.score_independent("q", make_trace("t1"), CostCategory::field),
                  ScoreUnavailable);
  const std::size_t live = backend->calls;
  CHECK_THROWS_AS(gw.score_independent("q", make_trace("t1"), CostCategory::field),
                  ScoreUnavailable);
  CHECK(backend->calls == live);  // second failure came from the cache
}

TEST_CASE("ledger totals are exact sums per category", "[judge]") {
  CostLedger ledger;
  CHECK(ledger_totals(ledger) == LedgerTotals{});

  JudgeRecord rec;
  rec.input_tokens = 100;
  rec.output_tokens = 10;
  rec.cost_nanousd = 10000000;  // $0.01
  ledger.add_live(CostCategory::field, rec);
  ledger.add_live(CostCategory::interaction, rec);
  const LedgerTotals t = ledger_totals(ledger);
  CHECK(t.calls == 2);
  CHECK(t.input_tokens == 200);
  CHECK(t.cost_nanousd == 20000000);
  CHECK(t.cost_usd() == Catch::Approx(0.02));
  CHECK(ledger.totals(CostCategory::field).calls == 1);
  CHECK(ledger.totals(CostCategory::baseline).calls == 0);
}

TEST_CASE("cost accounting uses configured prices", "[judge]") {
  JudgeConfig cfg;
  cfg.price_per_million_input = 0.039;  // $/1M tokens
  cfg.price_per_million_output = 0.18;
  // 1M input tokens cost exactly the configured price
  CHECK(cfg.cost_nanousd(1000000, 0) == 39000000);
  CHECK(cfg.cost_nanousd(0, 1000000) == 180000000);
  CHECK(cfg.cost_nanousd(100, 10) == 100 * 39 + 10 * 180);
}

TEST_CASE("cost is monotone over a run", "[judge]") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->set_fallback("0.5");
  JudgeConfig cfg;
  cfg.price_per_million_input = 1.0;
  JudgeGateway gw(backend, cfg);
  LedgerTotals prev = gw.ledger().totals();
  for (int i = 0; i < 5; ++i) {
    gw.score_independent("q", make_trace("t" + std::to_string(i)), CostCategory::field);
    const LedgerTotals cur = gw.ledger().totals();
    CHECK(cur.calls >= prev.calls);
    CHECK(cur.cost_nanousd >= prev.cost_nanousd);
    prev = cur;
  }
}

TEST_CASE("cache persists to disk and replays identically", "[judge]") {
  TempFile tmp("jc_test_cache.jsonl");
  JudgeRecord original;
  {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->set_independent("t1", "0.8");
    JudgeGateway gw(backend, JudgeConfig{}, std::make_shared<JudgeCache>(tmp.path));
    gw.score_independent("q", make_trace("t1"), CostCategory::field);
    const PromptBundle b = render_independent_prompt("q", make_trace("t1"), TaskKind::math);
    original = *gw.cache().lookup(record_id_for("scripted", b, 0));
  }
  {
    // fresh process image: reload from disk, serve without any live call
    auto backend = std::make_shared<ScriptedBackend>();  // note: no replies scripted
    auto cache = std::make_shared<JudgeCache>(tmp.path);
    CHECK(cache->size() == 1);
    JudgeGateway gw(backend, JudgeConfig{}, cache);
    CHECK(gw.score_independent("q", make_trace("t1"), CostCategory::field) == 0.8);
    CHECK(gw.ledger().totals().calls == 0);
    const PromptBundle b = render_independent_prompt("q", make_trace("t1"), TaskKind::math);
    CHECK(*cache->lookup(record_id_for("scripted", b, 0)) == original);
  }
}

TEST_CASE("a torn final cache line is recoverable, earlier corruption is not", "[judge]") {
  TempFile tmp("jc_test_torn.jsonl");
  JudgeRecord r;
  r.record_id = "aaa";
  {
    std::ofstream out(tmp.path);
    out << record_to_json(r).dump() << "\n";
    out << R"({"record_id":"bbb","raw_ou)";  // interrupted write, no newline
  }
  JudgeCache cache(tmp.path);
  CHECK(cache.size() == 1);
  CHECK(cache.lookup("aaa").has_value());

  TempFile bad("jc_test_corrupt.jsonl");
  {
    std::ofstream out(bad.path);
    out << "garbage\n";
    out << record_to_json(r).dump() << "\n";
  }
  CHECK_THROWS_AS(JudgeCache(bad.path), Error);
}

TEST_CASE("cache compaction dedupes by record id", "[judge]") {
  TempFile tmp("jc_test_compact.jsonl");
  {
    std::ofstream out(tmp.path);
    JudgeRecord r;
    r.record_id = "aaa";
    r.raw_output = "old";
    out << record_to_json(r).dump() << "\n";
    r.raw_output = "new";
    out << record_to_json(r).dump() << "\n";
    r.record_id = "bbb";
    r.raw_output = "other";
    out << record_to_json(r).dump() << "\n";
  }
  auto [lines, kept] = JudgeCache::compact_file(tmp.path);
  CHECK(lines == 3);
  CHECK(kept == 2);
  JudgeCache reloaded(tmp.path);
  CHECK(reloaded.size() == 2);
  CHECK(reloaded.lookup("aaa")->raw_output == "new");  // last writer wins
}

TEST_CASE("concurrent batches match serial execution", "[judge]") {
  auto make_pool = [] {
    std::vector<Trace> pool;
    for (int i = 0; i < 12; ++i) pool.push_back(make_trace("t" + std::to_string(i)));
    return pool;
  };
  auto backend = std::make_shared<ScriptedBackend>();
  for (int i = 0; i < 12; ++i)
    backend->set_independent("t" + std::to_string(i), "0." + std::to_string(i % 10));

  auto run = [&](int threads) {
    JudgeGateway gw(backend, JudgeConfig{});
    std::vector<double> scores(12);
    auto pool = make_pool();
    JudgeGateway::parallel_for(pool.size(), threads, [&](std::size_t i) {
      scores[i] = gw.score_independent("q", pool[i], CostCategory::field);
    });
    return std::make_pair(scores, gw.ledger().totals());
  };
  auto [serial, serial_totals] = run(1);
  auto [parallel, parallel_totals] = run(4);
  CHECK(serial == parallel);
  CHECK(serial_totals == parallel_totals);
}
