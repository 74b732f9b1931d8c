#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace texmesh {

struct QualityPair {
  double q_g = 1.0;  // geometry similarity
  double q_t = 1.0;  // texture similarity
  std::string source_model;
  std::string stimulus;
};

struct ScoredPair {
  QualityPair pair;
  double subjective = 0.0;
};

struct AlphaFit {
  double alpha = 0.0;
  std::string heldout_model;
  double training_spearman = 0.0;
};

/// alpha * q_g + (1 - alpha) * q_t.
double combine(const QualityPair& pair, double alpha);
double combine(double q_g, double q_t, double alpha);

/// Mean per-model Spearman correlation between CM(alpha) and the subjective
/// scores over every model except `heldout_model`. A model whose CM values
/// are all equal contributes 0.
double alpha_objective(std::span<const ScoredPair> dataset, const std::string& heldout_model, double alpha);

/// Exhaustive search over alpha = 0, 0.001, ..., 1; ties resolve to the
/// smaller alpha.
AlphaFit fit_alpha(std::span<const ScoredPair> dataset, const std::string& heldout_model);

/// One fit per model, each holding that model out.
std::vector<AlphaFit> cross_validate_alpha(std::span<const ScoredPair> dataset);

/// CSV with header columns model, stimulus, q_g, q_t, subjective (any
/// order, extra columns ignored).
std::vector<ScoredPair> parse_score_csv(const std::string& text);
std::vector<ScoredPair> load_score_csv(const std::filesystem::path& path);

}  // namespace texmesh
