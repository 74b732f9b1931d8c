#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace texmesh {

using StimulusId = std::string;

/// Stimuli of one study and their monotone chains (one per distortion type,
/// ordered weakest to strongest distortion; i.e. best to worst quality).
struct StudyDesign {
  std::vector<StimulusId> stimuli;
  std::vector<std::vector<StimulusId>> chains;

  /// Chains must partition the stimuli and be non-empty.
  void validate() const;

  /// `types` chains of `levels` stimuli named "<type><level>", e.g. the
  /// 5 x 4 layout Q1..Q4, S1..S4, ...
  static StudyDesign grid(std::span<const std::string> types, int levels);
};

enum class SortMode { interleave, bst };

std::string_view to_string(SortMode mode);
SortMode parse_sort_mode(std::string_view text);

struct StimulusPair {
  StimulusId first;
  StimulusId second;
  bool contains(const StimulusId& id) const { return id == first || id == second; }
  bool operator==(const StimulusPair&) const = default;
};

struct Choice {
  StimulusPair pair;
  StimulusId winner;
  bool operator==(const Choice&) const = default;
};

namespace detail {

// Cascade of two-list merges that starts from the worst end of each list.
class InterleaveEngine {
 public:
  InterleaveEngine(std::size_t chain_count, const std::vector<std::vector<std::uint32_t>>& chains,
                   std::mt19937_64& rng);
  std::optional<std::pair<std::uint32_t, std::uint32_t>> pending() const;
  void report(bool first_is_better);
  bool done() const { return op_ >= ops_.size(); }
  std::vector<std::uint32_t> ranking() const;
  std::vector<std::pair<std::size_t, std::size_t>> schedule_sizes() const;

 private:
  struct MergeOp {
    std::size_t a, b, out;
  };
  void settle();

  std::vector<std::vector<std::uint32_t>> lists_;  // best to worst
  std::vector<MergeOp> ops_;
  std::size_t op_ = 0;
  std::size_t remaining_a_ = 0, remaining_b_ = 0;
  std::vector<std::uint32_t> worst_first_;
  std::vector<std::pair<std::size_t, std::size_t>> sizes_;
};

// Height-balanced (AVL) binary insertion; better stimuli go left.
class BstEngine {
 public:
  explicit BstEngine(std::size_t count);
  std::optional<std::pair<std::uint32_t, std::uint32_t>> pending() const;
  void report(bool first_is_better);
  bool done() const { return next_item_ >= count_; }
  std::vector<std::uint32_t> ranking() const;
  int height() const;

 private:
  struct Node {
    std::uint32_t item;
    int left = -1, right = -1, height = 1;
  };
  int h(int n) const { return n < 0 ? 0 : nodes_[n].height; }
  void update(int n);
  int rotate_left(int n);
  int rotate_right(int n);
  int rebalance(int n);
  void attach(bool go_left);

  std::size_t count_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::size_t next_item_ = 0;
  std::vector<int> path_;
};

}  // namespace detail

/// Resumable comparison-driven sorter. `next_pair()` is the comparison to
/// show; `report()` absorbs the observer's forced choice. Display order of
/// each pair, and for the interleave mode the chain pairing, come from a
/// generator seeded with `seed`, so a session is a pure function of
/// (design, mode, seed, winners).
class SortSession {
 public:
  static SortSession interleave(StudyDesign design, std::uint64_t seed);
  static SortSession bst(std::vector<StimulusId> stimuli, std::uint64_t seed);
  static SortSession create(SortMode mode, StudyDesign design, std::uint64_t seed);

  /// Feeds recorded choices into a fresh session, checking each pair.
  static SortSession replay(SortMode mode, StudyDesign design, std::uint64_t seed, std::span<const Choice> choices);

  std::optional<StimulusPair> next_pair() const { return pending_; }
  bool done() const { return !pending_.has_value(); }

  /// Throws ProtocolError with no pending pair or a winner outside it.
  void report(const StimulusId& winner);

  /// Best first. Throws ProtocolError before the session is done.
  std::vector<StimulusId> ranking() const;

  const std::vector<Choice>& transcript() const { return transcript_; }
  std::size_t comparisons() const { return transcript_.size(); }
  SortMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  const StudyDesign& design() const { return design_; }

  /// Interleave mode only: (size, size) of each merge in execution order.
  std::vector<std::pair<std::size_t, std::size_t>> merge_schedule() const;

 private:
  SortSession(SortMode mode, StudyDesign design, std::uint64_t seed);
  void refresh_pending();

  SortMode mode_;
  StudyDesign design_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::variant<detail::InterleaveEngine, detail::BstEngine> engine_;
  std::optional<StimulusPair> pending_;
  bool swapped_ = false;  // pending pair shown in reverse of the engine's order
  std::vector<Choice> transcript_;
};

/// Simulated observer: picks the truly better stimulus (earlier in
/// `truth`, best first) with probability `p_correct`.
class SimulatedObserver {
 public:
  SimulatedObserver(const std::vector<StimulusId>& truth, double p_correct, std::uint64_t seed);
  StimulusId choose(const StimulusPair& pair);

 private:
  std::unordered_map<StimulusId, std::size_t> rank_;
  double p_correct_;
  std::mt19937_64 rng_;
};

/// Drives `session` to completion with `observer`.
void run_session(SortSession& session, SimulatedObserver& observer);

using Ranking = std::vector<StimulusId>;  // best first

struct PreferenceMatrix {
  std::vector<StimulusId> stimuli;
  std::size_t subjects = 0;
  std::vector<std::uint32_t> counts;  // row-major; (i, j) = subjects preferring i over j

  std::size_t size() const { return stimuli.size(); }
  std::uint32_t at(std::size_t i, std::size_t j) const { return counts[i * stimuli.size() + j]; }
  std::uint32_t& at(std::size_t i, std::size_t j) { return counts[i * stimuli.size() + j]; }
  std::size_t index_of(const StimulusId& id) const;
  void validate() const;
};

/// Sum over subjects of the transitive closure of each total order. Rows
/// follow `stimuli` when given, otherwise the sorted ids.
PreferenceMatrix preference_matrix(std::span<const Ranking> rankings, std::span<const StimulusId> stimuli = {});

struct SubjectiveScores {
  std::vector<StimulusId> stimuli;
  std::vector<double> scores;
};

/// s_i = sum_j P(i, j) / n_s.
SubjectiveScores vote_scores(const PreferenceMatrix& matrix);

struct ConcordanceResult {
  double w = 0.0;
  double chi_square = 0.0;
  double p_value = 1.0;
};

/// CSV with columns stimulus, rank, score; rank 1 = highest score.
std::string scores_csv(const SubjectiveScores& scores);

/// Kendall's coefficient of concordance with the chi-square approximation
/// chi2 = n_s (n_m - 1) W on n_m - 1 degrees of freedom.
ConcordanceResult kendalls_w(std::span<const Ranking> rankings);

/// Thurstone Case V: z(i, j) = inverse normal CDF of the clamped choice
/// proportion, scale value = mean of row i (diagonal counted as 0),
/// shifted to zero mean.
std::vector<double> thurstone_case_v(const PreferenceMatrix& matrix);

/// 64-bit FNV-1a, for deriving seeds from identifiers.
std::uint64_t fnv1a(std::string_view text);

}  // namespace texmesh
