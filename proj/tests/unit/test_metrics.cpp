// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles/caption_corpus.hpp"
#include "oracles/matching_oracle.hpp"
#include "oracles/text_oracle.hpp"
#include "scenemark/errors.hpp"
#include "scenemark/geometry.hpp"
#include "scenemark/metrics.hpp"
#include "support.hpp"

using namespace scenemark;
using testing::box;

namespace {

using Refs = std::vector<std::string>;

std::vector<CaptionSample> to_samples(const std::vector<oracle::Sample>& corpus) {
  std::vector<CaptionSample> out;
  for (const auto& s : corpus) out.push_back({s.cand, s.refs});
  return out;
}

// Unit-height boxes along x, so IoU is the 1-D interval IoU.
Aabb span(double x0, double x1) { return box(x0, 0, 0, x1, 1, 1); }

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("It's a 3-seat SOFA.") == Refs{"its", "a", "3seat", "sofa"});
  CHECK(tokenize("  ") == Refs{});
  CHECK(tokenize("a\tb\nc") == Refs{"a", "b", "c"});
}

TEST_CASE("exact match") {
  const Refs refs{"brown", "dark brown"};
  CHECK(em1("Brown.", refs));
  CHECK_FALSE(em1("brown chair", refs));
  CHECK(em_r1("brown chair", refs));
  CHECK(em_r1("dark", refs));
  CHECK_FALSE(em_r1("white", refs));
  CHECK_FALSE(em_r1("", refs));
  CHECK_FALSE(em1("", refs));
}

TEST_CASE("BLEU of a short exact prefix is the brevity penalty") {
  const Refs refs{"the cat sat on the mat"};
  CHECK(bleu("the cat sat", refs) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(bleu("the cat sat on the mat", refs) == doctest::Approx(1.0));
  CHECK(bleu("", refs) == 0.0);
}

TEST_CASE("sentence and corpus metrics agree with the reference implementation") {
  const auto corpus = oracle::caption_corpus();
  const auto samples = to_samples(corpus);
  for (const auto& s : corpus) {
    for (int n = 1; n <= 4; ++n) {
      CHECK(bleu(s.cand, s.refs, n) == doctest::Approx(oracle::bleu(s.cand, s.refs, n)).epsilon(1e-9));
    }
    CHECK(rouge_l(s.cand, s.refs) == doctest::Approx(oracle::rouge_l(s.cand, s.refs)).epsilon(1e-9));
  }
  const auto cb = corpus_bleu(samples);
  REQUIRE(cb.size() == 4);
  for (int n = 1; n <= 4; ++n) {
    CHECK(std::abs(cb[n - 1] - oracle::corpus_bleu(corpus, n)) < 1e-6);
  }
  const auto c = cider(samples);
  const auto expect = oracle::cider(corpus);
  REQUIRE(c.per_sample.size() == expect.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(std::abs(c.per_sample[i] - expect[i]) < 1e-6);
    mean += expect[i];
  }
  CHECK(std::abs(c.mean - mean / expect.size()) < 1e-6);
}

TEST_CASE("caption metrics are bounded and order independent") {
  const auto corpus = oracle::caption_corpus();
  for (const auto& s : corpus) {
    for (double v : {bleu(s.cand, s.refs), rouge_l(s.cand, s.refs), meteor_lite(s.cand, s.refs)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    auto refs = s.refs;
    std::reverse(refs.begin(), refs.end());
    CHECK(bleu(s.cand, refs) == doctest::Approx(bleu(s.cand, s.refs)));
    CHECK(rouge_l(s.cand, refs) == doctest::Approx(rouge_l(s.cand, s.refs)));
    CHECK(meteor_lite(s.cand, refs) == doctest::Approx(meteor_lite(s.cand, s.refs)));
    if (!tokenize(s.cand).empty()) {
      refs.push_back(s.cand);
      CHECK(bleu(s.cand, refs) == doctest::Approx(1.0));
      CHECK(rouge_l(s.cand, refs) == doctest::Approx(1.0));
    }
  }
  auto samples = to_samples(corpus);
  const auto before = cider(samples);
  std::reverse(samples.begin(), samples.end());
  const auto after = cider(samples);
  CHECK(after.mean == doctest::Approx(before.mean));
  for (double v : before.per_sample) {
    CHECK(v >= 0.0);
    CHECK(v <= 10.0);
  }
  CHECK_THROWS_AS(cider(std::span<const CaptionSample>{}), InvalidArgument);
}

TEST_CASE("meteor_lite") {
  CHECK(meteor_lite("the brown chair", Refs{"the brown chair"}) > 0.9);
  CHECK(meteor_lite("chairs", Refs{"chair"}) > 0.0);
  CHECK(meteor_lite("table", Refs{"chair"}) == 0.0);
  CHECK(light_stem("chairs") == light_stem("chair"));
}

TEST_CASE("caption IoU gate blanks low-overlap predictions") {
  const std::vector<CaptionRecord> records = {
      {"a", "a brown chair", {"a brown chair"}, span(0, 2), span(0, 2)},
      {"b", "a white sofa", {"a white sofa"}, span(0, 2), span(1, 3)},
      {"c", "a lamp", {"a lamp"}, std::nullopt, span(0, 1)},
  };
  const auto quarter = caption_iou_gate(records, 0.25);
  CHECK(quarter[0].prediction == "a brown chair");
  CHECK(quarter[1].prediction == "a white sofa");
  CHECK(quarter[2].prediction.empty());
  const auto half = caption_iou_gate(records, 0.5);
  CHECK(half[1].prediction.empty());
  CHECK(cider(quarter).mean >= cider(half).mean);
}

TEST_CASE("grounding accuracy") {
  const std::vector<GroundingRecord> records = {
      {"hit", span(0, 2), span(0, 2)},
      {"third", span(0, 2), span(1, 3)},
      {"none", std::nullopt, span(0, 1)},
      {"miss", span(5, 6), span(0, 1)},
  };
  const std::vector<double> t{0.25, 0.5, 0.75};
  const auto acc = grounding_acc(records, t);
  CHECK(acc.at(0.25) == doctest::Approx(0.5));
  CHECK(acc.at(0.5) == doctest::Approx(0.25));
  CHECK(acc.at(0.75) == doctest::Approx(0.25));
  CHECK(acc.at(0.25) >= acc.at(0.5));
  CHECK_THROWS_AS(grounding_acc(std::span<const GroundingRecord>{}, t), InvalidArgument);
}

TEST_CASE("multi-target F1") {
  SUBCASE("zero-target records") {
    MultiRefRecord empty{"z", {}, {}, false};
    CHECK(match_record(empty, 0.5).f1 == 1.0);
    empty.predicted.push_back({4, span(0, 1)});
    CHECK(match_record(empty, 0.5).f1 == 0.0);
  }
  SUBCASE("exact predictions of two targets") {
    MultiRefRecord r{"m", {{1, span(0, 1)}, {2, span(3, 4)}}, {span(0, 1), span(3, 4)}, false};
    CHECK(match_record(r, 0.5).f1 == doctest::Approx(1.0));
    CHECK(match_record(r, 0.5, MatchStrategy::optimal).f1 == doctest::Approx(1.0));
  }
  SUBCASE("one match out of three predictions and two targets") {
    MultiRefRecord r{"m",
                     {{1, span(0, 1)}, {2, span(10, 11)}, {3, std::nullopt}},
                     {span(0, 1), span(3, 4)},
                     false};
    const auto m = match_record(r, 0.5);
    CHECK(m.matches == 1);
    CHECK(m.precision == doctest::Approx(1.0 / 3.0));
    CHECK(m.recall == doctest::Approx(0.5));
    CHECK(m.f1 == doctest::Approx(0.4));
  }
  SUBCASE("repeated ids count once") {
    MultiRefRecord r{"m", {{1, span(0, 1)}, {1, span(0, 1)}}, {span(0, 1)}, false};
    CHECK(match_record(r, 0.5).f1 == doctest::Approx(1.0));
  }
  SUBCASE("subsets") {
    CHECK(multiref_subset({"a", {}, {}, false}) == "ZT w/o D");
    CHECK(multiref_subset({"a", {}, {}, true}) == "ZT w/ D");
    CHECK(multiref_subset({"a", {}, {span(0, 1)}, false}) == "ST w/o D");
    CHECK(multiref_subset({"a", {}, {span(0, 1)}, true}) == "ST w/ D");
    CHECK(multiref_subset({"a", {}, {span(0, 1), span(2, 3)}, true}) == "MT");
  }
  SUBCASE("breakdown averages each subset and ALL") {
    const std::vector<MultiRefRecord> rs = {
        {"z", {}, {}, false},
        {"s", {{1, span(5, 6)}}, {span(0, 1)}, false},
        {"m", {{1, span(0, 1)}, {2, span(3, 4)}}, {span(0, 1), span(3, 4)}, false},
    };
    const auto f = multi3dref_f1(rs, 0.5);
    CHECK(*f.get("ZT w/o D") == 1.0);
    CHECK(*f.get("ST w/o D") == 0.0);
    CHECK(*f.get("MT") == doctest::Approx(1.0));
    CHECK(*f.get("ALL") == doctest::Approx(2.0 / 3.0));
    CHECK_FALSE(f.get("ST w/ D"));
    CHECK(f.f1.back().first == "ALL");
    CHECK(f.counts.at("ALL") == 3);
  }
}

TEST_CASE("optimal matching equals exhaustive enumeration") {
  SplitRng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int np = 1 + static_cast<int>(rng.below(3));
    const int ng = 1 + static_cast<int>(rng.below(3));
    MultiRefRecord r;
    r.id = "r";
    std::vector<std::vector<double>> iou(np, std::vector<double>(ng));
    for (int g = 0; g < ng; ++g) {
      const double x = rng.uniform(0, 4);
      r.gt.push_back(span(x, x + rng.uniform(0.5, 2)));
    }
    for (int p = 0; p < np; ++p) {
      const double x = rng.uniform(0, 4);
      r.predicted.push_back({p, span(x, x + rng.uniform(0.5, 2))});
      for (int g = 0; g < ng; ++g) iou[p][g] = aabb_iou(*r.predicted.back().box, r.gt[g]);
    }
    const int best = oracle::best_matching(iou, 0.25);
    const auto m = match_record(r, 0.25, MatchStrategy::optimal);
    CHECK(m.matches == best);
    CHECK(m.f1 == doctest::Approx(oracle::f1_from(best, np, ng)));
    CHECK(match_record(r, 0.25).matches <= best);
  }
}

TEST_CASE("greedy matching can fall short of the maximum") {
  MultiRefRecord r{"r",
                   {{1, span(0.9, 2.9)}, {2, span(-1.5, 0.9)}},
                   {span(0, 2), span(2, 4)},
                   false};
  CHECK(match_record(r, 0.25).matches == 1);
  CHECK(match_record(r, 0.25, MatchStrategy::optimal).matches == 2);
}

TEST_CASE("GPT score") {
  CHECK(gpt_score(74, 243, 683) == 465);
  CHECK(gpt_score(543, 145, 312) == 1774);
  CHECK(gpt_score(0, 0, 0) == 0);
  CHECK(gpt_score(5, 2, 3, kGptWeightsNegativeLoss) == 14);
  CHECK(gpt_score(2 * 5, 2 * 2, 2 * 3) == 2 * gpt_score(5, 2, 3));
  CHECK(gpt_score(5 + 1, 2 + 4, 3 + 2) == gpt_score(5, 2, 3) + gpt_score(1, 4, 2));
  CHECK_THROWS_AS(gpt_score(-1, 0, 0), InvalidArgument);
}

TEST_CASE("judge verdict parsing") {
  CHECK(parse_judge_verdict("Answer: A") == "a");
  CHECK(parse_judge_verdict("B is closer.\nAnswer: b") == "b");
  CHECK(parse_judge_verdict("Answer: tie") == "tie");
  CHECK(parse_judge_verdict("They are equally good.") == "tie");
  CHECK_FALSE(parse_judge_verdict("no idea"));
}

TEST_CASE("gpt_judge counts verdicts and undoes the answer order") {
  std::vector<JudgePair> pairs;
  for (int i = 0; i < 10; ++i) {
    pairs.push_back({"p" + std::to_string(i), "What color?", "red", "red", "blue"});
  }
  SUBCASE("always A with fixed order is all wins") {
    MockServer server(MockServer::fixed("Answer: A"));
    JudgeConfig c;
    c.endpoint.base_url = server.base_url();
    c.randomize_order = false;
    const auto out = gpt_judge(pairs, c);
    CHECK(out.win == 10);
    CHECK(gpt_score(out.win, out.tie, out.lose) == 30);
  }
  SUBCASE("ties") {
    MockServer server(MockServer::fixed("Answer: tie"));
    JudgeConfig c;
    c.endpoint.base_url = server.base_url();
    const auto out = gpt_judge(pairs, c);
    CHECK(out.tie == 10);
  }
  SUBCASE("a judge that prefers the reference answer sees through swaps") {
    MockServer server([](const nlohmann::json& body, int) {
      const auto q = MockServer::question_of(body);
      const bool first_correct = q.find("Answer A: red") != std::string::npos;
      return MockReply{200, first_correct ? "Answer: A" : "Answer: B", 0};
    });
    JudgeConfig c;
    c.endpoint.base_url = server.base_url();
    c.seed = 3;
    const auto out = gpt_judge(pairs, c);
    CHECK(out.win == 10);
    CHECK(std::count(out.swapped.begin(), out.swapped.end(), true) > 0);
  }
  SUBCASE("scripted mix") {
    MockServer server([](const nlohmann::json& body, int) {
      const auto q = MockServer::question_of(body);
      const bool a = q.find("Answer A: red") != std::string::npos;
      const bool b = q.find("Answer B: red") != std::string::npos;
      return MockReply{200, a && b ? "Answer: tie" : (a ? "Answer: A" : "Answer: B"), 0};
    });
    std::vector<JudgePair> mix;
    for (int i = 0; i < 50; ++i) mix.push_back({"w", "q", "red", "red", "blue"});
    for (int i = 0; i < 30; ++i) mix.push_back({"t", "q", "red", "red", "red"});
    for (int i = 0; i < 20; ++i) mix.push_back({"l", "q", "red", "blue", "red"});
    JudgeConfig c;
    c.endpoint.base_url = server.base_url();
    c.randomize_order = false;
    c.endpoint.max_in_flight = 8;
    const auto out = gpt_judge(mix, c);
    CHECK(out.win == 50);
    CHECK(out.tie == 30);
    CHECK(out.lose == 20);
    CHECK(gpt_score(out.win, out.tie, out.lose) == 180);
  }
}

TEST_CASE("metric report") {
  MetricReport r;
  r.title = "scanqa";
  r.add("EM-1", 0.5);
  r.add("CIDEr", 1.25);
  r.samples = 4;
  CHECK_NOTHROW(r.validate());
  CHECK(*r.get("CIDEr") == 1.25);
  const auto j = r.to_json();
  CHECK(j.dump().find("EM-1") < j.dump().find("CIDEr"));
  CHECK(r.to_table().find("EM-1") != std::string::npos);
  r.add("bad", std::nan(""));
  CHECK_THROWS_AS(r.validate(), Error);
  MetricReport empty;
  empty.add("x", 1);
  CHECK_THROWS_AS(empty.validate(), Error);
}
