#include "texmesh/study_server.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "texmesh/errors.hpp"

namespace texmesh {

using nlohmann::json;

struct StudyServer::Impl {
  StudyStore& store;
  Options options;
  httplib::Server http;

  Impl(StudyStore& s, Options o) : store(s), options(std::move(o)) {}
};

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("request body is not valid JSON: {}", e.what()));
  }
}

template <typename Handler>
httplib::Server::Handler guarded(Handler h) {
  return [h](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const NotFoundError& e) {
      send(res, 404, {{"error", e.what()}});
    } catch (const ConflictError& e) {
      send(res, 409, {{"error", e.what()}});
    } catch (const ProtocolError& e) {
      send(res, 409, {{"error", e.what()}});
    } catch (const ValidationError& e) {
      send(res, 400, {{"error", e.what()}});
    } catch (const ResolutionError& e) {
      send(res, 400, {{"error", e.what()}});
    } catch (const ParseError& e) {
      send(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

StudyServer::StudyServer(StudyStore& store, Options options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
  auto& http = impl_->http;
  auto* self = impl_.get();

  if (!self->options.access_token.empty()) {
    http.set_pre_routing_handler([self](const httplib::Request& req, httplib::Response& res) {
      // media elements cannot send headers, so stimuli stay readable
      if (req.path.rfind("/media/", 0) == 0 ||
          req.get_header_value("Authorization") == "Bearer " + self->options.access_token)
        return httplib::Server::HandlerResponse::Unhandled;
      send(res, 401, {{"error", "missing or wrong study token"}});
      return httplib::Server::HandlerResponse::Handled;
    });
  }

  http.Post("/studies", guarded([self](const httplib::Request& req, httplib::Response& res) {
              send(res, 201, self->store.create_study(body_of(req)));
            }));
  http.Get(R"(/studies/([^/]+))", guarded([self](const httplib::Request& req, httplib::Response& res) {
             send(res, 200, self->store.study(req.matches[1]));
           }));
  http.Post(R"(/studies/([^/]+)/sessions)", guarded([self](const httplib::Request& req, httplib::Response& res) {
              const auto body = body_of(req);
              const auto subject = body.value("subject", std::string("anonymous"));
              std::optional<std::string> condition;
              if (body.contains("condition")) condition = body.at("condition").get<std::string>();
              send(res, 201, self->store.create_session(req.matches[1], subject, condition));
            }));
  http.Get(R"(/studies/([^/]+)/results)", guarded([self](const httplib::Request& req, httplib::Response& res) {
             send(res, 200, self->store.results(req.matches[1]));
           }));
  http.Get(R"(/sessions/([^/]+)/pair)", guarded([self](const httplib::Request& req, httplib::Response& res) {
             send(res, 200, self->store.pending_pair(req.matches[1]));
           }));
  http.Post(R"(/sessions/([^/]+)/choice)", guarded([self](const httplib::Request& req, httplib::Response& res) {
              const auto body = body_of(req);
              if (!body.contains("token") || !body.at("token").is_number_unsigned())
                throw ValidationError("'token' must be a non-negative integer");
              if (!body.contains("winner") || !body.at("winner").is_string())
                throw ValidationError("'winner' must be a stimulus id");
              send(res, 200,
                   self->store.submit_choice(req.matches[1], body.at("token").get<std::uint64_t>(),
                                             body.at("winner").get<std::string>()));
            }));
  http.Get(R"(/sessions/([^/]+))", guarded([self](const httplib::Request& req, httplib::Response& res) {
             send(res, 200, self->store.session(req.matches[1]));
           }));
  http.Delete(R"(/sessions/([^/]+))", guarded([self](const httplib::Request& req, httplib::Response& res) {
                send(res, 200, self->store.abandon(req.matches[1]));
              }));

  if (self->options.media_root) {
    if (!http.set_mount_point("/media", self->options.media_root->string()))
      throw ResolutionError(self->options.media_root->string(), "media directory does not exist");
  }
}

StudyServer::~StudyServer() { stop(); }

int StudyServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port)) throw Error(fmt::format("cannot bind {}:{}", host, port));
  return port;
}

void StudyServer::run() { impl_->http.listen_after_bind(); }

void StudyServer::stop() {
  if (impl_) impl_->http.stop();
}

bool StudyServer::running() const { return impl_->http.is_running(); }

}  // namespace texmesh
