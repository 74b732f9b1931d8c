#include "texmesh/subjective_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "texmesh/errors.hpp"

namespace texmesh {

void StudyDesign::validate() const {
  if (stimuli.empty()) throw ValidationError("study has no stimuli");
  std::set<StimulusId> seen;
  for (const auto& s : stimuli)
    if (!seen.insert(s).second) throw ValidationError("duplicate stimulus '" + s + "'");
  std::set<StimulusId> covered;
  for (const auto& chain : chains) {
    if (chain.empty()) throw ValidationError("empty chain");
    for (const auto& s : chain) {
      if (!seen.count(s)) throw ValidationError("chain stimulus '" + s + "' is not in the study");
      if (!covered.insert(s).second) throw ValidationError("stimulus '" + s + "' appears in two chains");
    }
  }
  if (covered.size() != seen.size()) throw ValidationError("chains do not cover every stimulus");
}

StudyDesign StudyDesign::grid(std::span<const std::string> types, int levels) {
  if (types.empty() || levels < 1) throw ValidationError("grid design needs types and levels >= 1");
  StudyDesign d;
  for (const auto& t : types) {
    auto& chain = d.chains.emplace_back();
    for (int l = 1; l <= levels; ++l) {
      chain.push_back(fmt::format("{}{}", t, l));
      d.stimuli.push_back(chain.back());
    }
  }
  return d;
}

std::string_view to_string(SortMode mode) { return mode == SortMode::interleave ? "interleave" : "bst"; }

SortMode parse_sort_mode(std::string_view text) {
  if (text == "interleave") return SortMode::interleave;
  if (text == "bst") return SortMode::bst;
  throw ValidationError(fmt::format("unknown sort mode '{}'", text));
}

namespace detail {

InterleaveEngine::InterleaveEngine(std::size_t chain_count, const std::vector<std::vector<std::uint32_t>>& chains,
                                   std::mt19937_64& rng)
    : lists_(chains) {
  std::vector<std::size_t> current(chain_count);
  std::iota(current.begin(), current.end(), std::size_t{0});
  for (std::size_t i = current.size(); i > 1; --i) std::swap(current[i - 1], current[rng() % i]);

  std::vector<std::size_t> length;
  for (const auto& c : lists_) length.push_back(c.size());
  auto plan = [&](std::size_t a, std::size_t b) {
    ops_.push_back({a, b, length.size()});
    sizes_.emplace_back(length[a], length[b]);
    length.push_back(length[a] + length[b]);
    return length.size() - 1;
  };
  while (current.size() > 1) {
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i + 1 < current.size(); i += 2) next.push_back(plan(current[i], current[i + 1]));
    if (current.size() % 2 == 1) {
      const auto merged = plan(next.back(), current.back());
      next.pop_back();
      next.insert(next.begin(), merged);
    }
    current = std::move(next);
  }
  lists_.resize(length.size());
  if (!ops_.empty()) {
    remaining_a_ = lists_[ops_[0].a].size();
    remaining_b_ = lists_[ops_[0].b].size();
  }
}

std::optional<std::pair<std::uint32_t, std::uint32_t>> InterleaveEngine::pending() const {
  if (done()) return std::nullopt;
  const auto& op = ops_[op_];
  return std::pair{lists_[op.a][remaining_a_ - 1], lists_[op.b][remaining_b_ - 1]};
}

void InterleaveEngine::report(bool first_is_better) {
  const auto& op = ops_[op_];
  if (first_is_better) {
    worst_first_.push_back(lists_[op.b][--remaining_b_]);
  } else {
    worst_first_.push_back(lists_[op.a][--remaining_a_]);
  }
  settle();
}

void InterleaveEngine::settle() {
  if (remaining_a_ > 0 && remaining_b_ > 0) return;
  const auto& op = ops_[op_];
  while (remaining_a_ > 0) worst_first_.push_back(lists_[op.a][--remaining_a_]);
  while (remaining_b_ > 0) worst_first_.push_back(lists_[op.b][--remaining_b_]);
  lists_[op.out].assign(worst_first_.rbegin(), worst_first_.rend());
  worst_first_.clear();
  if (++op_ < ops_.size()) {
    remaining_a_ = lists_[ops_[op_].a].size();
    remaining_b_ = lists_[ops_[op_].b].size();
  }
}

std::vector<std::uint32_t> InterleaveEngine::ranking() const { return lists_.back(); }

std::vector<std::pair<std::size_t, std::size_t>> InterleaveEngine::schedule_sizes() const { return sizes_; }

BstEngine::BstEngine(std::size_t count) : count_(count) {
  if (count_ == 0) return;
  nodes_.push_back({0});
  root_ = 0;
  next_item_ = 1;
  path_ = {root_};
}

std::optional<std::pair<std::uint32_t, std::uint32_t>> BstEngine::pending() const {
  if (done()) return std::nullopt;
  return std::pair{static_cast<std::uint32_t>(next_item_), nodes_[path_.back()].item};
}

void BstEngine::report(bool first_is_better) {
  const auto& node = nodes_[path_.back()];
  const int child = first_is_better ? node.left : node.right;
  if (child < 0) {
    attach(first_is_better);
  } else {
    path_.push_back(child);
  }
}

void BstEngine::update(int n) { nodes_[n].height = 1 + std::max(h(nodes_[n].left), h(nodes_[n].right)); }

int BstEngine::rotate_left(int n) {
  const int r = nodes_[n].right;
  nodes_[n].right = nodes_[r].left;
  nodes_[r].left = n;
  update(n);
  update(r);
  return r;
}

int BstEngine::rotate_right(int n) {
  const int l = nodes_[n].left;
  nodes_[n].left = nodes_[l].right;
  nodes_[l].right = n;
  update(n);
  update(l);
  return l;
}

int BstEngine::rebalance(int n) {
  update(n);
  const int balance = h(nodes_[n].left) - h(nodes_[n].right);
  if (balance > 1) {
    const int l = nodes_[n].left;
    if (h(nodes_[l].left) < h(nodes_[l].right)) nodes_[n].left = rotate_left(l);
    return rotate_right(n);
  }
  if (balance < -1) {
    const int r = nodes_[n].right;
    if (h(nodes_[r].right) < h(nodes_[r].left)) nodes_[n].right = rotate_right(r);
    return rotate_left(n);
  }
  return n;
}

void BstEngine::attach(bool go_left) {
  const int fresh = static_cast<int>(nodes_.size());
  nodes_.push_back({static_cast<std::uint32_t>(next_item_)});
  (go_left ? nodes_[path_.back()].left : nodes_[path_.back()].right) = fresh;
  for (std::size_t i = path_.size(); i-- > 0;) {
    const int old = path_[i];
    const int top = rebalance(old);
    if (i == 0) {
      root_ = top;
    } else {
      auto& parent = nodes_[path_[i - 1]];
      (parent.left == old ? parent.left : parent.right) = top;
    }
  }
  ++next_item_;
  path_ = {root_};
}

std::vector<std::uint32_t> BstEngine::ranking() const {
  std::vector<std::uint32_t> out;
  std::vector<int> stack;
  int n = root_;
  while (n >= 0 || !stack.empty()) {
    while (n >= 0) {
      stack.push_back(n);
      n = nodes_[n].left;
    }
    n = stack.back();
    stack.pop_back();
    out.push_back(nodes_[n].item);
    n = nodes_[n].right;
  }
  return out;
}

int BstEngine::height() const { return h(root_); }

}  // namespace detail

SortSession::SortSession(SortMode mode, StudyDesign design, std::uint64_t seed)
    : mode_(mode), design_(std::move(design)), seed_(seed), rng_(seed), engine_(detail::BstEngine(0)) {}

SortSession SortSession::interleave(StudyDesign design, std::uint64_t seed) {
  design.validate();
  SortSession s(SortMode::interleave, std::move(design), seed);
  std::map<StimulusId, std::uint32_t> index;
  for (std::size_t i = 0; i < s.design_.stimuli.size(); ++i) index[s.design_.stimuli[i]] = static_cast<std::uint32_t>(i);
  std::vector<std::vector<std::uint32_t>> chains;
  for (const auto& chain : s.design_.chains) {
    auto& c = chains.emplace_back();
    for (const auto& id : chain) c.push_back(index.at(id));
  }
  s.engine_ = detail::InterleaveEngine(chains.size(), chains, s.rng_);
  s.refresh_pending();
  return s;
}

SortSession SortSession::bst(std::vector<StimulusId> stimuli, std::uint64_t seed) {
  StudyDesign design;
  design.stimuli = std::move(stimuli);
  design.chains.push_back(design.stimuli);
  design.validate();
  design.chains.clear();
  SortSession s(SortMode::bst, std::move(design), seed);
  s.engine_ = detail::BstEngine(s.design_.stimuli.size());
  s.refresh_pending();
  return s;
}

SortSession SortSession::create(SortMode mode, StudyDesign design, std::uint64_t seed) {
  if (mode == SortMode::interleave) return interleave(std::move(design), seed);
  return bst(std::move(design.stimuli), seed);
}

SortSession SortSession::replay(SortMode mode, StudyDesign design, std::uint64_t seed,
                                std::span<const Choice> choices) {
  auto s = create(mode, std::move(design), seed);
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (s.next_pair() != choices[i].pair)
      throw ProtocolError(fmt::format("replayed choice {} does not match the session's pair", i));
    s.report(choices[i].winner);
  }
  return s;
}

void SortSession::refresh_pending() {
  const auto p = std::visit([](const auto& e) { return e.pending(); }, engine_);
  if (!p) {
    pending_.reset();
    return;
  }
  swapped_ = (rng_() & 1u) != 0;
  const auto& a = design_.stimuli[p->first];
  const auto& b = design_.stimuli[p->second];
  pending_ = swapped_ ? StimulusPair{b, a} : StimulusPair{a, b};
}

void SortSession::report(const StimulusId& winner) {
  if (!pending_) throw ProtocolError("no pending pair: the session is complete");
  if (!pending_->contains(winner))
    throw ProtocolError(fmt::format("winner '{}' is not in the pending pair ({}, {})", winner, pending_->first,
                                    pending_->second));
  const auto& engine_first = swapped_ ? pending_->second : pending_->first;
  const bool first_is_better = winner == engine_first;
  std::visit([&](auto& e) { e.report(first_is_better); }, engine_);
  transcript_.push_back({*pending_, winner});
  refresh_pending();
}

std::vector<StimulusId> SortSession::ranking() const {
  if (!done()) throw ProtocolError("ranking requested before the session is complete");
  std::vector<StimulusId> out;
  for (auto i : std::visit([](const auto& e) { return e.ranking(); }, engine_)) out.push_back(design_.stimuli[i]);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> SortSession::merge_schedule() const {
  if (const auto* e = std::get_if<detail::InterleaveEngine>(&engine_)) return e->schedule_sizes();
  return {};
}

SimulatedObserver::SimulatedObserver(const std::vector<StimulusId>& truth, double p_correct, std::uint64_t seed)
    : p_correct_(p_correct), rng_(seed) {
  if (!(p_correct >= 0.0 && p_correct <= 1.0)) throw ValidationError("p_correct outside [0, 1]");
  for (std::size_t i = 0; i < truth.size(); ++i) rank_[truth[i]] = i;
}

StimulusId SimulatedObserver::choose(const StimulusPair& pair) {
  const auto a = rank_.at(pair.first), b = rank_.at(pair.second);
  const auto& better = a < b ? pair.first : pair.second;
  const auto& worse = a < b ? pair.second : pair.first;
  if (p_correct_ >= 1.0) return better;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p_correct_ ? better : worse;
}

void run_session(SortSession& session, SimulatedObserver& observer) {
  while (auto pair = session.next_pair()) session.report(observer.choose(*pair));
}

namespace {

std::vector<std::size_t> positions_in(const Ranking& ranking, const std::map<StimulusId, std::size_t>& index) {
  if (ranking.size() != index.size())
    throw ValidationError(fmt::format("ranking has {} items, expected {}", ranking.size(), index.size()));
  std::vector<std::size_t> pos(index.size(), index.size());
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    const auto it = index.find(ranking[r]);
    if (it == index.end()) throw ValidationError("ranking contains unknown stimulus '" + ranking[r] + "'");
    if (pos[it->second] != index.size()) throw ValidationError("ranking repeats stimulus '" + ranking[r] + "'");
    pos[it->second] = r;
  }
  return pos;
}

}  // namespace

std::size_t PreferenceMatrix::index_of(const StimulusId& id) const {
  const auto it = std::find(stimuli.begin(), stimuli.end(), id);
  if (it == stimuli.end()) throw ValidationError("unknown stimulus '" + id + "'");
  return static_cast<std::size_t>(it - stimuli.begin());
}

void PreferenceMatrix::validate() const {
  const auto n = stimuli.size();
  if (counts.size() != n * n) throw ValidationError("preference matrix has the wrong number of entries");
  for (std::size_t i = 0; i < n; ++i) {
    if (at(i, i) != 0) throw ValidationError("preference matrix diagonal must be 0");
    for (std::size_t j = i + 1; j < n; ++j)
      if (at(i, j) + at(j, i) != subjects)
        throw ValidationError(fmt::format("counts for ({}, {}) do not sum to {}", stimuli[i], stimuli[j], subjects));
  }
}

PreferenceMatrix preference_matrix(std::span<const Ranking> rankings, std::span<const StimulusId> stimuli) {
  if (rankings.empty()) throw InsufficientDataError("no rankings");
  PreferenceMatrix m;
  if (stimuli.empty()) {
    m.stimuli = rankings.front();
    std::sort(m.stimuli.begin(), m.stimuli.end());
  } else {
    m.stimuli.assign(stimuli.begin(), stimuli.end());
  }
  std::map<StimulusId, std::size_t> index;
  for (std::size_t i = 0; i < m.stimuli.size(); ++i) index[m.stimuli[i]] = i;
  if (index.size() != m.stimuli.size()) throw ValidationError("duplicate stimulus ids");
  const auto n = m.stimuli.size();
  m.subjects = rankings.size();
  m.counts.assign(n * n, 0);
  for (const auto& r : rankings) {
    const auto pos = positions_in(r, index);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (pos[i] < pos[j]) ++m.at(i, j);
  }
  return m;
}

SubjectiveScores vote_scores(const PreferenceMatrix& matrix) {
  if (matrix.subjects == 0) throw InsufficientDataError("preference matrix has no subjects");
  SubjectiveScores s{matrix.stimuli, std::vector<double>(matrix.size(), 0.0)};
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    std::uint64_t votes = 0;
    for (std::size_t j = 0; j < matrix.size(); ++j) votes += matrix.at(i, j);
    s.scores[i] = static_cast<double>(votes) / static_cast<double>(matrix.subjects);
  }
  return s;
}

std::string scores_csv(const SubjectiveScores& scores) {
  std::vector<std::size_t> order(scores.stimuli.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores.scores[a] > scores.scores[b]; });
  std::string out = "stimulus,rank,score\n";
  for (std::size_t r = 0; r < order.size(); ++r)
    out += fmt::format("{},{},{}\n", scores.stimuli[order[r]], r + 1, scores.scores[order[r]]);
  return out;
}

ConcordanceResult kendalls_w(std::span<const Ranking> rankings) {
  if (rankings.size() < 2) throw InsufficientDataError("Kendall's W needs at least 2 rankings");
  const auto n = rankings.front().size();
  if (n < 3) throw InsufficientDataError("Kendall's W needs at least 3 items");
  std::map<StimulusId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[rankings.front()[i]] = i;
  if (index.size() != n) throw ValidationError("ranking repeats a stimulus");

  std::vector<double> rank_sum(n, 0.0);
  for (const auto& r : rankings) {
    const auto pos = positions_in(r, index);
    for (std::size_t i = 0; i < n; ++i) rank_sum[i] += static_cast<double>(pos[i] + 1);
  }
  const double ns = static_cast<double>(rankings.size()), nm = static_cast<double>(n);
  const double mean = ns * (nm + 1.0) / 2.0;
  double s = 0.0;
  for (double r : rank_sum) s += (r - mean) * (r - mean);

  ConcordanceResult out;
  out.w = 12.0 * s / (ns * ns * (nm * nm * nm - nm));
  out.chi_square = ns * (nm - 1.0) * out.w;
  const boost::math::chi_squared dist(nm - 1.0);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.chi_square));
  return out;
}

std::vector<double> thurstone_case_v(const PreferenceMatrix& matrix) {
  if (matrix.subjects == 0) throw InsufficientDataError("preference matrix has no subjects");
  const auto n = matrix.size();
  const double ns = static_cast<double>(matrix.subjects);
  const double lo = 1.0 / (2.0 * ns), hi = 1.0 - lo;
  const boost::math::normal standard;
  std::vector<double> values(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double p = std::clamp(static_cast<double>(matrix.at(i, j)) / ns, lo, hi);
      row += boost::math::quantile(standard, p);
    }
    values[i] = row / static_cast<double>(n);
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  for (auto& v : values) v -= mean;
  return values;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace texmesh
