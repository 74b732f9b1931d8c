#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "texmesh/study_store.hpp"

namespace texmesh {

/// HTTP+JSON front end over a StudyStore.
///
///   POST   /studies                 manifest -> {study}
///   GET    /studies/{id}            manifest
///   POST   /studies/{id}/sessions   {subject, condition?} -> session id + first pair
///   GET    /sessions/{id}/pair      pending pair or completion
///   POST   /sessions/{id}/choice    {token, winner} -> next pair or completion
///   GET    /sessions/{id}           full session state with transcript
///   DELETE /sessions/{id}           abandon
///   GET    /studies/{id}/results    aggregates over completed sessions
///   GET    /media/{file}            static files, byte ranges supported
///
/// Errors are {"error": message} with 400, 401, 404, 409 or 500.
class StudyServer {
 public:
  struct Options {
    std::optional<std::filesystem::path> media_root;
    std::string access_token;  // when set, requests need "Authorization: Bearer <token>"
  };

  StudyServer(StudyStore& store, Options options);
  ~StudyServer();
  StudyServer(const StudyServer&) = delete;
  StudyServer& operator=(const StudyServer&) = delete;

  /// Binds `host`; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace texmesh
