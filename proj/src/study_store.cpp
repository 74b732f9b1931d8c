#include "texmesh/study_store.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "texmesh/errors.hpp"

namespace texmesh {

using nlohmann::json;

namespace {

template <typename T>
T required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(fmt::format("missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(fmt::format("field '{}' has the wrong type", key));
  }
}

void check_media_name(const std::string& name) {
  if (name.empty()) throw ValidationError("empty media reference");
  const std::filesystem::path p(name);
  if (p.is_absolute()) throw ValidationError("media reference '" + name + "' must be relative");
  for (const auto& part : p)
    if (part == "..") throw ValidationError("media reference '" + name + "' leaves the media directory");
}

}  // namespace

StudyManifest StudyManifest::from_json(const json& j) {
  StudyManifest m;
  m.id = required<std::string>(j, "id");
  m.reference_media = required<std::string>(j, "reference");
  const auto stimuli = required<json>(j, "stimuli");
  if (!stimuli.is_array()) throw ValidationError("'stimuli' must be an array");
  for (const auto& s : stimuli) {
    m.stimuli.push_back({required<std::string>(s, "id"), required<std::string>(s, "media")});
    m.design.stimuli.push_back(m.stimuli.back().id);
  }
  if (j.contains("chains")) {
    m.design.chains = required<std::vector<std::vector<std::string>>>(j, "chains");
  }
  if (j.contains("mode")) m.mode = parse_sort_mode(required<std::string>(j, "mode"));
  if (j.contains("condition")) m.condition = required<std::string>(j, "condition");
  if (j.contains("metadata")) m.metadata = j.at("metadata");
  return m;
}

json StudyManifest::to_json() const {
  json stim = json::array();
  for (const auto& s : stimuli) stim.push_back({{"id", s.id}, {"media", s.media}});
  return {{"id", id},          {"reference", reference_media},     {"stimuli", stim},
          {"chains", design.chains}, {"mode", std::string(texmesh::to_string(mode))}, {"condition", condition},
          {"metadata", metadata}};
}

void StudyManifest::validate(const std::optional<std::filesystem::path>& media_root) const {
  if (id.empty() || id.find('/') != std::string::npos) throw ValidationError("study id must be non-empty without '/'");
  if (condition.empty()) throw ValidationError("condition tag must be non-empty");
  if (mode == SortMode::interleave) {
    design.validate();
  } else {
    StudyDesign flat{design.stimuli, {design.stimuli}};
    flat.validate();
    if (!design.chains.empty()) design.validate();
  }
  std::vector<std::string> media{reference_media};
  for (const auto& s : stimuli) media.push_back(s.media);
  for (const auto& name : media) {
    check_media_name(name);
    if (media_root && !std::filesystem::is_regular_file(*media_root / name))
      throw ResolutionError(name, "media file '" + name + "' not found");
  }
}

const std::string& StudyManifest::media_of(const StimulusId& sid) const {
  for (const auto& s : stimuli)
    if (s.id == sid) return s.media;
  throw NotFoundError("unknown stimulus '" + sid + "'");
}

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::active: return "active";
    case SessionStatus::complete: return "complete";
    case SessionStatus::abandoned: return "abandoned";
  }
  return "active";
}

StudyStore::StudyStore(Options options) : options_(std::move(options)) {
  log_ = std::make_unique<EventLog>(options_.log_path, options_.sync);
  const auto& scan = log_->recovered();
  if (scan.dropped_bytes > 0)
    warnings_.push_back(fmt::format("discarded {} bytes of torn or corrupt log tail after {} records",
                                    scan.dropped_bytes, scan.records.size()));
  for (std::size_t i = 0; i < scan.records.size(); ++i) {
    try {
      apply(json::parse(scan.records[i]), true);
    } catch (const std::exception& e) {
      warnings_.push_back(fmt::format("skipped log record {}: {}", i, e.what()));
    }
  }
}

void StudyStore::apply(const json& event, bool replaying) {
  const auto kind = required<std::string>(event, "event");
  if (kind == "study") {
    auto m = StudyManifest::from_json(event.at("manifest"));
    m.validate(replaying ? std::nullopt : options_.media_root);
    const auto id = m.id;
    if (!studies_.emplace(id, std::move(m)).second) throw ConflictError("study '" + id + "' already exists");
  } else if (kind == "session") {
    const auto id = required<std::string>(event, "id");
    const auto& m = study_ref(required<std::string>(event, "study"));
    if (sessions_.count(id)) throw ConflictError("session '" + id + "' already exists");
    const auto seed = fnv1a(id);
    SessionRecord rec{id,   m.id, required<std::string>(event, "subject"), required<std::string>(event, "condition"),
                      seed, SessionStatus::active, SortSession::create(m.mode, m.design, seed), json()};
    if (rec.sorter.done()) rec.status = SessionStatus::complete;
    sessions_.emplace(id, std::move(rec));
    session_order_.push_back(id);
    ++sessions_per_study_[m.id];
  } else if (kind == "choice") {
    auto& s = session_ref(required<std::string>(event, "session"));
    if (s.status != SessionStatus::active) throw ConflictError("session '" + s.id + "' is not active");
    const auto token = required<std::uint64_t>(event, "token");
    if (token != s.sorter.comparisons()) throw ConflictError("choice token out of sequence");
    const auto pair = required<std::vector<std::string>>(event, "pair");
    const auto pending = s.sorter.next_pair();
    if (pair.size() != 2 || !pending || pending->first != pair[0] || pending->second != pair[1])
      throw ConflictError("logged pair does not match the session's pending pair");
    s.sorter.report(required<std::string>(event, "winner"));
    if (s.sorter.done()) s.status = SessionStatus::complete;
    s.last_response = pair_view(s);
  } else if (kind == "abandon") {
    auto& s = session_ref(required<std::string>(event, "session"));
    if (s.status != SessionStatus::active) throw ConflictError("session '" + s.id + "' is not active");
    s.status = SessionStatus::abandoned;
  } else {
    throw ValidationError("unknown event '" + kind + "'");
  }
}

SessionRecord& StudyStore::session_ref(const std::string& id) {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

const SessionRecord& StudyStore::session_ref(const std::string& id) const {
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

const StudyManifest& StudyStore::study_ref(const std::string& id) const {
  const auto it = studies_.find(id);
  if (it == studies_.end()) throw NotFoundError("unknown study '" + id + "'");
  return it->second;
}

std::string StudyStore::media_url(const std::string& file) const { return "/media/" + file; }

json StudyStore::pair_view(const SessionRecord& s) const {
  json out = {{"session", s.id}, {"status", std::string(to_string(s.status))}, {"choices", s.sorter.comparisons()}};
  if (s.status == SessionStatus::active) {
    const auto& m = study_ref(s.study);
    const auto p = *s.sorter.next_pair();
    out["token"] = s.sorter.comparisons();
    out["pair"] = {{"first", {{"id", p.first}, {"media", media_url(m.media_of(p.first))}}},
                   {"second", {{"id", p.second}, {"media", media_url(m.media_of(p.second))}}}};
    out["reference"] = media_url(m.reference_media);
  } else if (s.status == SessionStatus::complete) {
    out["ranking"] = s.sorter.ranking();
  }
  return out;
}

json StudyStore::state_view(const SessionRecord& s) const {
  json transcript = json::array();
  for (std::size_t i = 0; i < s.sorter.transcript().size(); ++i) {
    const auto& c = s.sorter.transcript()[i];
    transcript.push_back({{"token", i}, {"pair", json::array({c.pair.first, c.pair.second})}, {"winner", c.winner}});
  }
  json out = pair_view(s);
  out["study"] = s.study;
  out["subject"] = s.subject;
  out["condition"] = s.condition;
  out["mode"] = std::string(to_string(s.sorter.mode()));
  out["seed"] = s.seed;
  out["transcript"] = std::move(transcript);
  return out;
}

json StudyStore::create_study(const json& manifest) {
  std::lock_guard lock(mutex_);
  const auto m = StudyManifest::from_json(manifest);
  m.validate(options_.media_root);
  if (studies_.count(m.id)) throw ConflictError("study '" + m.id + "' already exists");
  const json event = {{"event", "study"}, {"manifest", m.to_json()}};
  log_->append(event.dump());
  apply(event, false);
  return {{"study", m.id}, {"stimuli", m.stimuli.size()}, {"mode", std::string(to_string(m.mode))}};
}

json StudyStore::study(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return study_ref(id).to_json();
}

json StudyStore::create_session(const std::string& study_id, const std::string& subject,
                                const std::optional<std::string>& condition) {
  std::lock_guard lock(mutex_);
  const auto& m = study_ref(study_id);
  if (condition && condition->empty()) throw ValidationError("condition tag must be non-empty");
  const auto id = fmt::format("{}-{}", study_id, sessions_per_study_[study_id] + 1);
  const json event = {
      {"event", "session"}, {"id", id}, {"study", study_id}, {"subject", subject}, {"condition", condition.value_or(m.condition)}};
  log_->append(event.dump());
  apply(event, false);
  return pair_view(sessions_.at(id));
}

json StudyStore::pending_pair(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return pair_view(session_ref(session_id));
}

json StudyStore::submit_choice(const std::string& session_id, std::uint64_t token, const StimulusId& winner) {
  std::lock_guard lock(mutex_);
  auto& s = session_ref(session_id);
  if (s.status == SessionStatus::abandoned) throw ConflictError(fmt::format("session '{}' is abandoned", s.id));
  const auto& transcript = s.sorter.transcript();
  if (!transcript.empty() && token + 1 == transcript.size()) {
    if (transcript.back().winner == winner) return s.last_response;
    throw ConflictError(fmt::format("pair {} was already answered with '{}'", token, transcript.back().winner));
  }
  if (s.status != SessionStatus::active)
    throw ConflictError(fmt::format("session '{}' is {}", s.id, to_string(s.status)));
  if (token != transcript.size())
    throw ConflictError(fmt::format("stale pair token {}; the pending pair is {}", token, transcript.size()));
  const auto pair = *s.sorter.next_pair();
  if (!pair.contains(winner))
    throw ValidationError(fmt::format("winner '{}' is not in the pending pair ({}, {})", winner, pair.first, pair.second));
  const json event = {{"event", "choice"},
                      {"session", s.id},
                      {"token", token},
                      {"pair", json::array({pair.first, pair.second})},
                      {"winner", winner}};
  log_->append(event.dump());
  apply(event, false);
  return s.last_response;
}

json StudyStore::session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return state_view(session_ref(session_id));
}

json StudyStore::abandon(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  auto& s = session_ref(session_id);
  if (s.status != SessionStatus::active)
    throw ConflictError(fmt::format("session '{}' is {}", s.id, to_string(s.status)));
  const json event = {{"event", "abandon"}, {"session", s.id}};
  log_->append(event.dump());
  apply(event, false);
  return pair_view(s);
}

json StudyStore::results(const std::string& study_id) const {
  std::lock_guard lock(mutex_);
  const auto& m = study_ref(study_id);
  std::map<std::string, std::vector<Ranking>> by_condition;
  std::vector<Ranking> all;
  std::size_t abandoned = 0, active = 0;
  for (const auto& id : session_order_) {
    const auto& s = sessions_.at(id);
    if (s.study != study_id) continue;
    if (s.status == SessionStatus::complete) {
      by_condition[s.condition].push_back(s.sorter.ranking());
      all.push_back(s.sorter.ranking());
    } else if (s.status == SessionStatus::abandoned) {
      ++abandoned;
    } else {
      ++active;
    }
  }
  json out = {{"study", study_id},
              {"complete_sessions", all.size()},
              {"active_sessions", active},
              {"abandoned_sessions", abandoned},
              {"empty", all.empty()}};
  json conditions = json::object();
  for (const auto& [cond, rankings] : by_condition) conditions[cond] = aggregate_rankings(rankings, m.design.stimuli);
  out["conditions"] = std::move(conditions);
  out["overall"] = all.empty() ? json() : aggregate_rankings(all, m.design.stimuli);
  return out;
}

std::vector<std::string> StudyStore::session_ids() const {
  std::lock_guard lock(mutex_);
  return session_order_;
}

json aggregate_rankings(const std::vector<Ranking>& rankings, const std::vector<StimulusId>& stimuli) {
  const auto matrix = preference_matrix(rankings, stimuli);
  const auto scores = vote_scores(matrix);
  const auto thurstone = thurstone_case_v(matrix);
  json rows = json::array();
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < matrix.size(); ++j) row.push_back(matrix.at(i, j));
    rows.push_back(std::move(row));
  }
  json score_map = json::object(), scale_map = json::object();
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    score_map[matrix.stimuli[i]] = scores.scores[i];
    scale_map[matrix.stimuli[i]] = thurstone[i];
  }
  std::vector<std::size_t> order(matrix.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores.scores[a] > scores.scores[b]; });
  json ranking = json::array();
  for (auto i : order) ranking.push_back(matrix.stimuli[i]);

  json kendall;
  if (rankings.size() >= 2 && matrix.size() >= 3) {
    const auto w = kendalls_w(rankings);
    kendall = {{"w", w.w}, {"chi_square", w.chi_square}, {"p_value", w.p_value}};
  }
  return {{"sessions", rankings.size()}, {"stimuli", matrix.stimuli}, {"matrix", std::move(rows)},
          {"scores", std::move(score_map)}, {"ranking", std::move(ranking)}, {"kendall", std::move(kendall)},
          {"thurstone", std::move(scale_map)}};
}

}  // namespace texmesh
