#include "texmesh/quality_fusion.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "texmesh/csv.hpp"
#include "texmesh/errors.hpp"
#include "texmesh/evaluation_bench.hpp"

namespace texmesh {
namespace {

constexpr int kAlphaSteps = 1000;

struct ModelGroup {
  std::string name;
  std::vector<double> q_g, q_t, subjective;
};

std::vector<ModelGroup> group_by_model(std::span<const ScoredPair> dataset, const std::string& heldout) {
  std::vector<ModelGroup> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& s : dataset) {
    if (s.pair.source_model == heldout) continue;
    auto [it, inserted] = index.emplace(s.pair.source_model, groups.size());
    if (inserted) groups.push_back({s.pair.source_model, {}, {}, {}});
    auto& g = groups[it->second];
    g.q_g.push_back(s.pair.q_g);
    g.q_t.push_back(s.pair.q_t);
    g.subjective.push_back(s.subjective);
  }
  return groups;
}

double objective_for(const std::vector<ModelGroup>& groups, double alpha) {
  double total = 0.0;
  std::vector<double> cm;
  for (const auto& g : groups) {
    cm.resize(g.q_g.size());
    for (std::size_t i = 0; i < cm.size(); ++i) cm[i] = combine(g.q_g[i], g.q_t[i], alpha);
    try {
      total += spearman(cm, g.subjective);
    } catch (const UndefinedCorrelationError&) {
      // constant CM carries no ranking information
    }
  }
  return total / static_cast<double>(groups.size());
}

}  // namespace

double combine(double q_g, double q_t, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError(fmt::format("alpha {} outside [0, 1]", alpha));
  return alpha * q_g + (1.0 - alpha) * q_t;
}

double combine(const QualityPair& pair, double alpha) { return combine(pair.q_g, pair.q_t, alpha); }

double alpha_objective(std::span<const ScoredPair> dataset, const std::string& heldout_model, double alpha) {
  const auto groups = group_by_model(dataset, heldout_model);
  if (groups.empty()) throw InsufficientDataError("no training models");
  return objective_for(groups, alpha);
}

AlphaFit fit_alpha(std::span<const ScoredPair> dataset, const std::string& heldout_model) {
  const auto groups = group_by_model(dataset, heldout_model);
  if (groups.size() < 2)
    throw InsufficientDataError(fmt::format("fitting alpha needs at least 2 training models besides '{}', got {}",
                                            heldout_model, groups.size()));
  for (const auto& g : groups)
    if (g.q_g.size() < 3)
      throw InsufficientDataError(fmt::format("training model '{}' has fewer than 3 stimuli", g.name));

  AlphaFit best{0.0, heldout_model, objective_for(groups, 0.0)};
  for (int i = 1; i <= kAlphaSteps; ++i) {
    const double alpha = static_cast<double>(i) / kAlphaSteps;
    const double value = objective_for(groups, alpha);
    if (value > best.training_spearman) {
      best.alpha = alpha;
      best.training_spearman = value;
    }
  }
  return best;
}

std::vector<AlphaFit> cross_validate_alpha(std::span<const ScoredPair> dataset) {
  std::vector<std::string> models;
  for (const auto& s : dataset)
    if (std::find(models.begin(), models.end(), s.pair.source_model) == models.end())
      models.push_back(s.pair.source_model);
  std::vector<AlphaFit> fits;
  for (const auto& m : models) fits.push_back(fit_alpha(dataset, m));
  return fits;
}

std::vector<ScoredPair> parse_score_csv(const std::string& text) {
  const CsvTable table(text);
  std::vector<ScoredPair> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    ScoredPair s;
    s.pair.source_model = table.at(r, "model");
    s.pair.stimulus = table.at(r, "stimulus");
    s.pair.q_g = table.number(r, "q_g");
    s.pair.q_t = table.number(r, "q_t");
    s.subjective = table.number(r, "subjective");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScoredPair> load_score_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResolutionError(path.string(), "cannot open score file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_score_csv(ss.str());
}

}  // namespace texmesh
