#pragma once

#include "axmc/engine.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace axmc::service {

class NotFound : public std::runtime_error {
public:
    explicit NotFound(const std::string& id) : std::runtime_error("unknown session '" + id + "'") {}
};

/// Builds a session config from a create request body. Throws Error(io) when
/// the dataset cannot be read and configuration errors (with a field) otherwise.
engine::SessionConfig config_from_request(const nlohmann::json& body);

/// Owns every session of a server. One worker thread per running session;
/// readers only ever see immutable published copies.
class SessionManager {
public:
    explicit SessionManager(std::optional<std::filesystem::path> state_dir = std::nullopt);
    ~SessionManager();
    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    /// Loads every snapshot in the state directory. Returns the number restored.
    std::size_t restore_all();

    nlohmann::json create(const nlohmann::json& body);
    nlohmann::json create(engine::SessionConfig config);
    /// Launches a background run. Throws Error(status) if already running.
    nlohmann::json start(const std::string& id, const engine::RunRequest& request);
    nlohmann::json pause(const std::string& id);
    nlohmann::json status(const std::string& id) const;
    nlohmann::json list() const;
    engine::FrontTable front(const std::string& id, engine::Split split) const;
    nlohmann::json path(const std::string& id) const;
    nlohmann::json set_weights(const std::string& id, const nlohmann::json& box);

    /// Latest published state of a session.
    std::shared_ptr<const engine::SessionState> published(const std::string& id) const;
    /// Blocks until the session's worker (if any) has finished.
    void wait(const std::string& id);

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;
    std::shared_ptr<Session> add(engine::SessionState state, std::string created);
    std::string next_id();
    void persist(const Session& s, const engine::SessionState& state) const;
    void launch(const std::shared_ptr<Session>& s, engine::RunRequest request);

    std::optional<std::filesystem::path> dir_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::size_t counter_ = 0;
};

/// Registers the REST routes and static hosting of `ui_dir` (if given) at `/`.
void mount(httplib::Server& server, SessionManager& manager,
           const std::optional<std::filesystem::path>& ui_dir = std::nullopt);

/// HTTP status for a library error.
int http_status(const std::exception& e);
nlohmann::json error_body(const std::exception& e);

}  // namespace axmc::service
