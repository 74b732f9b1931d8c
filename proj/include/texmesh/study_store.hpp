#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "texmesh/event_log.hpp"
#include "texmesh/subjective_engine.hpp"

namespace texmesh {

struct StimulusMedia {
  StimulusId id;
  std::string media;
};

/// Study definition as posted by an operator. `metadata` carries rendering
/// notes (light placement, clip length) that the service stores verbatim.
struct StudyManifest {
  std::string id;
  std::vector<StimulusMedia> stimuli;
  std::string reference_media;
  StudyDesign design;
  SortMode mode = SortMode::interleave;
  std::string condition = "shaded";
  nlohmann::json metadata = nlohmann::json::object();

  static StudyManifest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Ids, chains and media names. With `media_root`, every file must exist.
  void validate(const std::optional<std::filesystem::path>& media_root) const;
  const std::string& media_of(const StimulusId& id) const;
};

enum class SessionStatus { active, complete, abandoned };
std::string_view to_string(SessionStatus status);

struct SessionRecord {
  std::string id;
  std::string study;
  std::string subject;
  std::string condition;
  std::uint64_t seed = 0;
  SessionStatus status = SessionStatus::active;
  SortSession sorter;
  nlohmann::json last_response;  // response to the last accepted choice, for retries
};

/// All studies and sessions, backed by an EventLog. Constructing a store
/// replays the log; every mutation is logged and synced before the method
/// returns. Methods are safe to call from several threads.
class StudyStore {
 public:
  struct Options {
    std::filesystem::path log_path;
    std::optional<std::filesystem::path> media_root;
    bool sync = true;
  };

  explicit StudyStore(Options options);

  /// Warnings produced while replaying the log (torn tail, bad records).
  const std::vector<std::string>& recovery_warnings() const { return warnings_; }

  nlohmann::json create_study(const nlohmann::json& manifest);
  nlohmann::json study(const std::string& id) const;

  /// `condition` overrides the manifest's rendering tag for this session.
  nlohmann::json create_session(const std::string& study_id, const std::string& subject,
                                const std::optional<std::string>& condition = std::nullopt);
  nlohmann::json pending_pair(const std::string& session_id) const;
  nlohmann::json submit_choice(const std::string& session_id, std::uint64_t token, const StimulusId& winner);
  nlohmann::json session(const std::string& session_id) const;
  nlohmann::json abandon(const std::string& session_id);
  nlohmann::json results(const std::string& study_id) const;

  std::vector<std::string> session_ids() const;

 private:
  void apply(const nlohmann::json& event, bool replaying);
  nlohmann::json pair_view(const SessionRecord& s) const;
  nlohmann::json state_view(const SessionRecord& s) const;
  SessionRecord& session_ref(const std::string& id);
  const SessionRecord& session_ref(const std::string& id) const;
  const StudyManifest& study_ref(const std::string& id) const;
  std::string media_url(const std::string& file) const;

  Options options_;
  mutable std::mutex mutex_;
  std::unique_ptr<EventLog> log_;
  std::map<std::string, StudyManifest> studies_;
  std::map<std::string, SessionRecord> sessions_;
  std::vector<std::string> session_order_;
  std::map<std::string, std::size_t> sessions_per_study_;
  std::vector<std::string> warnings_;
};

/// Aggregate of completed rankings: matrix, vote scores, W (null when
/// fewer than 2 rankings or 3 stimuli) and Thurstone values.
nlohmann::json aggregate_rankings(const std::vector<Ranking>& rankings, const std::vector<StimulusId>& stimuli);

}  // namespace texmesh
