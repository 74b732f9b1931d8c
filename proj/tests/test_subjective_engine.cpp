#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "support/oracles.hpp"
#include "texmesh/errors.hpp"
#include "texmesh/evaluation_bench.hpp"
#include "texmesh/subjective_engine.hpp"

using namespace texmesh;
using doctest::Approx;

namespace {

const std::vector<std::string> kTypes{"Q", "S", "L", "J", "T"};

// Random total order in which every chain keeps its own order.
Ranking interleaved_truth(const StudyDesign& design, std::mt19937_64& rng) {
  std::vector<std::size_t> slots;
  for (std::size_t c = 0; c < design.chains.size(); ++c) slots.insert(slots.end(), design.chains[c].size(), c);
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<std::size_t> next(design.chains.size(), 0);
  Ranking out;
  for (auto c : slots) out.push_back(design.chains[c][next[c]++]);
  return out;
}

Ranking run_consistent(SortSession& session, const Ranking& truth) {
  SimulatedObserver observer(truth, 1.0, 0);
  run_session(session, observer);
  return session.ranking();
}

Ranking letters(std::size_t n) {
  Ranking out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('A' + i)));
  return out;
}

}  // namespace

TEST_CASE("grid design and validation") {
  const auto d = StudyDesign::grid(kTypes, 4);
  CHECK(d.stimuli.size() == 20);
  CHECK(d.chains[1] == std::vector<StimulusId>{"S1", "S2", "S3", "S4"});
  d.validate();
  auto broken = d;
  broken.chains[0].push_back("S1");
  CHECK_THROWS_AS(broken.validate(), ValidationError);
  broken = d;
  broken.chains.pop_back();
  CHECK_THROWS_AS(broken.validate(), ValidationError);
  CHECK(parse_sort_mode("bst") == SortMode::bst);
  CHECK_THROWS_AS(parse_sort_mode("quick"), ValidationError);
}

TEST_CASE("interleave sorting recovers any chain-consistent order") {
  const auto design = StudyDesign::grid(kTypes, 4);
  std::mt19937_64 rng(2024);
  std::size_t lo = 1000, hi = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto truth = interleaved_truth(design, rng);
    auto session = SortSession::interleave(design, 1000 + trial);
    CHECK(run_consistent(session, truth) == truth);
    lo = std::min(lo, session.comparisons());
    hi = std::max(hi, session.comparisons());
  }
  // four merges (4,4), (4,4), (8,4), (12,8): between 4+4+4+8 and 7+7+11+19 comparisons
  CHECK(lo >= 20);
  CHECK(hi <= 44);
}

TEST_CASE("interleave merge schedule for five chains of four") {
  auto session = SortSession::interleave(StudyDesign::grid(kTypes, 4), 9);
  const std::vector<std::pair<std::size_t, std::size_t>> expected{{4, 4}, {4, 4}, {8, 4}, {12, 8}};
  CHECK(session.merge_schedule() == expected);
  // uneven designs still merge to one list
  StudyDesign odd;
  odd.chains = {{"a1", "a2", "a3"}, {"b1"}, {"c1", "c2"}};
  for (const auto& c : odd.chains) odd.stimuli.insert(odd.stimuli.end(), c.begin(), c.end());
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto truth = interleaved_truth(odd, rng);
    auto s = SortSession::interleave(odd, trial);
    CHECK(run_consistent(s, truth) == truth);
  }
}

TEST_CASE("interleave merges compare the weakest ends first") {
  const auto design = StudyDesign::grid(kTypes, 4);
  auto session = SortSession::interleave(design, 3);
  const auto first = *session.next_pair();
  CHECK(first.first.back() == '4');
  CHECK(first.second.back() == '4');
}

TEST_CASE("BST sorting recovers the order from every insertion order of 8") {
  const auto truth = letters(8);
  auto order = truth;
  std::size_t worst = 0;
  int sessions = 0;
  do {
    auto session = SortSession::bst(order, 77);
    const auto got = run_consistent(session, truth);
    if (got != truth) FAIL("wrong ranking");
    worst = std::max(worst, session.comparisons());
    ++sessions;
  } while (std::next_permutation(order.begin(), order.end()));
  CHECK(sessions == 40320);
  // an AVL tree of 8 nodes has height at most 4
  CHECK(worst <= 7 * 4);
}

TEST_CASE("BST sorting at study scale") {
  Ranking truth;
  for (int i = 0; i < 36; ++i) truth.push_back("s" + std::to_string(i));
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 300; ++trial) {
    auto order = truth;
    std::shuffle(order.begin(), order.end(), rng);
    auto session = SortSession::bst(order, trial);
    CHECK(run_consistent(session, truth) == truth);
    CHECK(session.comparisons() <= 35 * 6);
  }
}

TEST_CASE("transcripts replay to the same ranking") {
  const auto design = StudyDesign::grid(kTypes, 4);
  for (auto mode : {SortMode::interleave, SortMode::bst}) {
    for (std::uint64_t seed : {1u, 5u, 99u}) {
      auto live = SortSession::create(mode, design, seed);
      SimulatedObserver noisy(design.stimuli, 0.7, seed * 31);
      run_session(live, noisy);
      const auto again = SortSession::replay(mode, design, seed, live.transcript());
      CHECK(again.done());
      CHECK(again.ranking() == live.ranking());
      CHECK(again.transcript() == live.transcript());

      auto tampered = live.transcript();
      std::swap(tampered.front().pair.first, tampered.front().pair.second);
      std::swap(tampered.front().pair.first, tampered.back().pair.second);
      CHECK_THROWS_AS(SortSession::replay(mode, design, seed, tampered), ProtocolError);
    }
  }
}

TEST_CASE("protocol errors") {
  auto session = SortSession::bst(letters(3), 1);
  CHECK_THROWS_AS(session.ranking(), ProtocolError);
  CHECK_THROWS_AS(session.report("Z"), ProtocolError);
  run_consistent(session, letters(3));
  CHECK(session.done());
  CHECK_THROWS_AS(session.report("A"), ProtocolError);
  CHECK_FALSE(session.next_pair().has_value());
}

TEST_CASE("preference matrix") {
  const std::vector<Ranking> one{{"A", "B", "C"}};
  const auto m = preference_matrix(one);
  CHECK(m.at(m.index_of("A"), m.index_of("B")) == 1);
  CHECK(m.at(m.index_of("A"), m.index_of("C")) == 1);
  CHECK(m.at(m.index_of("B"), m.index_of("C")) == 1);
  CHECK(m.at(m.index_of("B"), m.index_of("A")) == 0);
  CHECK(m.at(m.index_of("C"), m.index_of("A")) == 0);

  const std::vector<Ranking> opposite{{"A", "B"}, {"B", "A"}};
  const auto o = preference_matrix(opposite);
  CHECK(o.at(0, 1) == 1);
  CHECK(o.at(1, 0) == 1);

  const auto design = StudyDesign::grid(kTypes, 4);
  const std::vector<Ranking> unanimous(11, design.stimuli);
  const auto u = preference_matrix(unanimous, design.stimuli);
  for (std::size_t i = 0; i < 20; ++i) {
    std::uint32_t row = 0;
    for (std::size_t j = 0; j < 20; ++j) {
      CHECK((u.at(i, j) == 0 || u.at(i, j) == 11));
      row += u.at(i, j);
    }
    CHECK(row == 11 * (19 - i));
  }
  const std::vector<Ranking> mixed{{"A", "B", "C"}, {"A", "B", "D"}};
  CHECK_THROWS_AS(preference_matrix(mixed), ValidationError);
}

TEST_CASE("vote scores") {
  const auto design = StudyDesign::grid(kTypes, 4);
  std::mt19937_64 rng(15);
  std::vector<Ranking> rankings;
  for (int s = 0; s < 15; ++s) {
    auto r = design.stimuli;
    std::shuffle(r.begin() + 1, r.end(), rng);
    rankings.push_back(r);
  }
  const auto scores = vote_scores(preference_matrix(rankings, design.stimuli));
  CHECK(scores.scores[0] == 19.0);
  CHECK(std::accumulate(scores.scores.begin(), scores.scores.end(), 0.0) == Approx(190.0).epsilon(1e-12));

  const std::vector<Ranking> two{{"A", "B"}, {"A", "B"}, {"A", "B"}, {"B", "A"}};
  const auto s2 = vote_scores(preference_matrix(two));
  CHECK(s2.scores[0] == 0.75);
  CHECK(s2.scores[1] == 0.25);
  const auto csv = scores_csv(s2);
  CHECK(csv == "stimulus,rank,score\nA,1,0.75\nB,2,0.25\n");

  PreferenceMatrix empty;
  empty.stimuli = {"A", "B"};
  empty.counts.assign(4, 0);
  CHECK_THROWS_AS(vote_scores(empty), InsufficientDataError);
}

TEST_CASE("Kendall's W examples") {
  const std::vector<Ranking> same(4, Ranking{"A", "B", "C", "D"});
  CHECK(kendalls_w(same).w == Approx(1.0));
  const std::vector<Ranking> flip{{"A", "B", "C"}, {"C", "B", "A"}};
  CHECK(kendalls_w(flip).w == Approx(0.0).scale(1.0));
  const std::vector<Ranking> close{{"A", "B", "C"}, {"A", "B", "C"}, {"A", "C", "B"}};
  const auto r = kendalls_w(close);
  CHECK(r.w == Approx(7.0 / 9.0).epsilon(1e-12));
  CHECK(r.chi_square == Approx(3 * 2 * 7.0 / 9.0).epsilon(1e-12));
  CHECK(r.p_value == Approx(std::exp(-r.chi_square / 2)).epsilon(1e-9));  // 2 degrees of freedom

  CHECK_THROWS_AS(kendalls_w(std::vector<Ranking>{{"A", "B", "C"}}), InsufficientDataError);
  CHECK_THROWS_AS(kendalls_w(std::vector<Ranking>{{"A", "B"}, {"B", "A"}}), InsufficientDataError);
}

TEST_CASE("Kendall's W equals its definition on every small input") {
  for (std::size_t n = 3; n <= 5; ++n) {
    std::vector<Ranking> perms;
    auto p = letters(n);
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    const std::size_t k = perms.size();
    for (std::size_t subjects = 2; subjects <= 4; ++subjects) {
      // relabeling makes the first ranking arbitrary; the rest run over multisets
      std::vector<std::size_t> idx(subjects - 1, 0);
      std::size_t checked = 0;
      double worst = 0;
      while (true) {
        std::vector<Ranking> rankings{perms[0]};
        for (auto i : idx) rankings.push_back(perms[i]);
        worst = std::max(worst, std::abs(kendalls_w(rankings).w - testing::kendall_w_oracle(rankings)));
        ++checked;
        std::size_t pos = idx.size();
        while (pos > 0 && idx[pos - 1] == k - 1) --pos;
        if (pos == 0) break;
        ++idx[pos - 1];
        for (std::size_t q = pos; q < idx.size(); ++q) idx[q] = idx[pos - 1];
      }
      CAPTURE(n);
      CAPTURE(subjects);
      CHECK(checked > 0);
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("Kendall's W ignores labels and subject order") {
  std::mt19937_64 rng(6);
  auto base = letters(6);
  std::vector<Ranking> rankings;
  for (int s = 0; s < 5; ++s) {
    std::shuffle(base.begin(), base.end(), rng);
    rankings.push_back(base);
  }
  const double w = kendalls_w(rankings).w;
  auto reordered = rankings;
  std::reverse(reordered.begin(), reordered.end());
  CHECK(kendalls_w(reordered).w == Approx(w).epsilon(1e-12));
  auto relabeled = rankings;
  for (auto& r : relabeled)
    for (auto& id : r) id = "x" + id;
  CHECK(kendalls_w(relabeled).w == Approx(w).epsilon(1e-12));
}

TEST_CASE("Thurstone Case V") {
  const std::vector<Ranking> balanced{{"A", "B", "C"}, {"C", "B", "A"}, {"B", "A", "C"}, {"C", "A", "B"},
                                      {"A", "C", "B"}, {"B", "C", "A"}};
  for (double v : thurstone_case_v(preference_matrix(balanced))) CHECK(std::abs(v) < 1e-12);

  const std::vector<Ranking> two{{"A", "B"}, {"A", "B"}, {"A", "B"}, {"B", "A"}};
  const auto t = thurstone_case_v(preference_matrix(two));
  CHECK(t[0] - t[1] == Approx(0.6744897501960817).epsilon(1e-9));
  CHECK(t[0] + t[1] == Approx(0.0).scale(1.0));

  // latent quality plus per-subject noise
  const auto design = StudyDesign::grid(kTypes, 4);
  std::mt19937_64 rng(15);
  std::normal_distribution<double> noise(0.0, 3.0);
  std::vector<Ranking> rankings;
  for (int s = 0; s < 15; ++s) {
    std::vector<std::pair<double, StimulusId>> seen;
    for (std::size_t i = 0; i < design.stimuli.size(); ++i)
      seen.emplace_back(-static_cast<double>(i) + noise(rng), design.stimuli[i]);
    std::sort(seen.rbegin(), seen.rend());
    Ranking r;
    for (const auto& [q, id] : seen) r.push_back(id);
    rankings.push_back(r);
  }
  const auto matrix = preference_matrix(rankings, design.stimuli);
  CHECK(pearson(thurstone_case_v(matrix), vote_scores(matrix).scores) > 0.99);
}

TEST_CASE("seed derivation") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
}
