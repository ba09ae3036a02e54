#include "axmc/service.hpp"

#include "axmc/error.hpp"
#include "axmc/io.hpp"
#include "axmc/logging.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <thread>

namespace axmc::service {

namespace fs = std::filesystem;
using engine::SessionState;
using engine::Status;
using nlohmann::json;

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Runs `f`, rethrowing JSON type errors and field-less library errors with `field` attached.
template <class F>
auto with_field(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::configuration, "invalid '" + field + "': " + e.what(), field);
    } catch (const Error& e) {
        if (!e.field().empty()) throw;
        fail(e.code(), e.what(), field);
    }
}

const char* placeholder_page = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>axmc</title></head>
<body><h1>axmc</h1><p>No UI bundle is being served. REST endpoints live under <code>/sessions</code>.</p></body></html>
)";

}  // namespace

engine::SessionConfig config_from_request(const json& body) {
    if (!body.is_object()) fail(ErrorCode::configuration, "request body must be a JSON object");
    engine::SessionConfig c;
    if (body.contains("csv")) {
        c.csv = with_field("csv", [&] { return body.at("csv").get<std::string>(); });
    } else if (body.contains("data")) {
        const auto p = with_field("data", [&] { return body.at("data").get<std::string>(); });
        c.csv = read_file(p);
    } else {
        fail(ErrorCode::configuration, "one of 'data' (path) or 'csv' (inline text) is required", "data");
    }
    if (!body.contains("schema")) fail(ErrorCode::configuration, "'schema' is required", "schema");
    c.schema = with_field("schema", [&] {
        const auto& s = body.at("schema");
        return Schema::from_json(s.is_string() ? json::parse(read_file(s.get<std::string>())) : s);
    });
    if (!body.contains("measures")) fail(ErrorCode::configuration, "'measures' is required", "measures");
    c.measures = with_field("measures", [&] {
        const auto& m = body.at("measures");
        if (m.is_string()) return measures::parse_measure_list(m.get<std::string>());
        std::vector<measures::MeasureSpec> out;
        for (const auto& s : m) out.push_back(measures::MeasureSpec::from_json(s));
        return out;
    });
    if (body.contains("split")) c.split = with_field("split", [&] { return SplitSpec::from_json(body.at("split")); });
    if (body.contains("seed")) c.seed = with_field("seed", [&] { return body.at("seed").get<std::uint64_t>(); });
    if (body.contains("m")) c.m = with_field("m", [&] { return body.at("m").get<std::size_t>(); });
    if (body.contains("budget") && !body.at("budget").is_null())
        c.budget = with_field("budget", [&] { return body.at("budget").get<std::size_t>(); });
    if (body.contains("rho")) c.rho = with_field("rho", [&] { return body.at("rho").get<double>(); });
    if (body.contains("n_candidates"))
        c.n_candidates = with_field("n_candidates", [&] { return body.at("n_candidates").get<std::size_t>(); });
    if (body.contains("forest"))
        c.forest = with_field("forest", [&] { return mobo::ForestParams::from_json(body.at("forest")); });
    if (body.contains("allow_inference_time"))
        c.allow_inference_time =
            with_field("allow_inference_time", [&] { return body.at("allow_inference_time").get<bool>(); });
    if (body.contains("box") && !body.at("box").is_null())
        c.box = with_field("box", [&] { return mobo::WeightBox::from_json(body.at("box"), c.measures.size()); });
    return c;
}

struct SessionManager::Session {
    std::string id;
    std::string created;
    std::mutex mu;  // guards everything below
    SessionState state;  // owned by the worker while `running`
    std::shared_ptr<const SessionState> published;
    bool running = false;
    std::optional<std::string> last_error;
    std::atomic<bool> pause{false};
    std::thread worker;
};

SessionManager::SessionManager(std::optional<fs::path> state_dir) : dir_(std::move(state_dir)) {
    if (dir_) fs::create_directories(*dir_);
}

SessionManager::~SessionManager() {
    std::vector<std::shared_ptr<Session>> all;
    {
        std::lock_guard lock(mu_);
        for (auto& [_, s] : sessions_) all.push_back(s);
    }
    for (auto& s : all) s->pause = true;
    for (auto& s : all)
        if (s->worker.joinable()) s->worker.join();
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound(id);
    return it->second;
}

std::string SessionManager::next_id() {
    std::string id;
    do id = "s" + std::to_string(++counter_);
    while (sessions_.contains(id));
    return id;
}

std::shared_ptr<SessionManager::Session> SessionManager::add(SessionState state, std::string created) {
    auto s = std::make_shared<Session>();
    s->id = state.id;
    s->created = std::move(created);
    s->published = std::make_shared<const SessionState>(state);
    s->state = std::move(state);
    std::lock_guard lock(mu_);
    sessions_.emplace(s->id, s);
    return s;
}

void SessionManager::persist(const Session& s, const SessionState& state) const {
    if (!dir_) return;
    auto doc = json::parse(engine::snapshot(state));
    doc["created"] = s.created;
    write_file_atomic(*dir_ / (s.id + ".json"), doc.dump());
}

std::size_t SessionManager::restore_all() {
    if (!dir_) return 0;
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(*dir_)) {
        if (entry.path().extension() != ".json") continue;
        try {
            const auto text = read_file(entry.path());
            auto state = engine::restore(text);
            const auto created = json::parse(text).value("created", utc_now());
            {
                std::lock_guard lock(mu_);
                if (sessions_.contains(state.id)) continue;
            }
            add(std::move(state), created);
            ++n;
        } catch (const std::exception& e) {
            log::warn("skipping " + entry.path().string() + ": " + e.what());
        }
    }
    return n;
}

json SessionManager::create(const json& body) { return create(config_from_request(body)); }

json SessionManager::create(engine::SessionConfig config) {
    std::string id;
    {
        std::lock_guard lock(mu_);
        id = next_id();
        sessions_.emplace(id, nullptr);  // reserve
    }
    try {
        auto s = std::make_shared<Session>();
        s->id = id;
        s->created = utc_now();
        const fs::path log_path = dir_ ? *dir_ / (id + ".log.jsonl") : fs::path{};
        engine::Hooks hooks;
        if (dir_)
            hooks.on_record = [&](const pareto::EvalRecord& r, std::size_t index) {
                auto line = r.to_json();
                line["index"] = index;
                append_line(log_path, line.dump());
            };
        auto state = engine::init_session(std::move(config), id, hooks);
        persist(*s, state);
        s->published = std::make_shared<const SessionState>(state);
        s->state = std::move(state);
        std::lock_guard lock(mu_);
        sessions_[id] = s;
    } catch (...) {
        std::lock_guard lock(mu_);
        sessions_.erase(id);
        throw;
    }
    return {{"id", id}, {"status", "idle"}, {"created", find(id)->created}};
}

void SessionManager::launch(const std::shared_ptr<Session>& s, engine::RunRequest request) {
    s->worker = std::thread([this, s, request] {
        const fs::path log_path = dir_ ? *dir_ / (s->id + ".log.jsonl") : fs::path{};
        engine::Hooks hooks;
        hooks.pause = &s->pause;
        if (dir_)
            hooks.on_record = [&](const pareto::EvalRecord& r, std::size_t index) {
                auto line = r.to_json();
                line["index"] = index;
                append_line(log_path, line.dump());
            };
        hooks.after_iteration = [&](const SessionState& st) {
            persist(*s, st);
            auto copy = std::make_shared<const SessionState>(st);
            std::lock_guard lock(s->mu);
            s->published = std::move(copy);
        };
        std::optional<std::string> error;
        try {
            engine::run(s->state, request, hooks);
        } catch (const std::exception& e) {
            error = e.what();
            log::warn("session " + s->id + " stopped: " + e.what());
        }
        try {
            persist(*s, s->state);
        } catch (const std::exception& e) {
            log::warn("session " + s->id + " could not be saved: " + e.what());
        }
        auto copy = std::make_shared<const SessionState>(s->state);
        std::lock_guard lock(s->mu);
        s->published = std::move(copy);
        s->last_error = std::move(error);
        s->running = false;
    });
}

json SessionManager::start(const std::string& id, const engine::RunRequest& request) {
    auto s = find(id);
    if (!s) throw NotFound(id);
    if (request.seconds && !(*request.seconds > 0.0)) fail(ErrorCode::argument, "seconds must be positive", "seconds");
    std::lock_guard lock(s->mu);
    if (s->running) fail(ErrorCode::status, "session is already running", "status");
    if (s->worker.joinable()) s->worker.join();
    s->running = true;
    s->pause = false;
    s->last_error.reset();
    auto shown = std::make_shared<SessionState>(*s->published);
    shown->status = Status::running;
    s->published = std::move(shown);
    launch(s, request);
    return {{"id", id}, {"status", "running"}};
}

json SessionManager::pause(const std::string& id) {
    auto s = find(id);
    if (!s) throw NotFound(id);
    std::lock_guard lock(s->mu);
    if (s->running) s->pause = true;
    auto j = engine::status_json(*s->published);
    j["pause_requested"] = s->running;
    return j;
}

std::shared_ptr<const SessionState> SessionManager::published(const std::string& id) const {
    auto s = find(id);
    if (!s) throw NotFound(id);
    std::lock_guard lock(s->mu);
    return s->published;
}

json SessionManager::status(const std::string& id) const {
    auto s = find(id);
    if (!s) throw NotFound(id);
    std::shared_ptr<const SessionState> st;
    std::optional<std::string> error;
    {
        std::lock_guard lock(s->mu);
        st = s->published;
        error = s->last_error;
    }
    auto j = engine::status_json(*st);
    j["created"] = s->created;
    j["last_error"] = error ? json(*error) : json(nullptr);
    return j;
}

json SessionManager::list() const {
    std::vector<std::string> ids;
    {
        std::lock_guard lock(mu_);
        for (const auto& [id, s] : sessions_)
            if (s) ids.push_back(id);
    }
    json out = json::array();
    for (const auto& id : ids) {
        auto s = find(id);
        std::lock_guard lock(s->mu);
        out.push_back({{"id", id},
                       {"created", s->created},
                       {"status", engine::to_string(s->published->status)},
                       {"iterations_done", s->published->budget.iterations_done}});
    }
    return out;
}

engine::FrontTable SessionManager::front(const std::string& id, engine::Split split) const {
    const auto st = published(id);
    if (st->archive.empty()) fail(ErrorCode::insufficient_data, "archive is empty");
    return engine::report(*st, split);
}

json SessionManager::path(const std::string& id) const { return engine::path_to_json(*published(id)); }

json SessionManager::set_weights(const std::string& id, const json& body) {
    auto s = find(id);
    if (!s) throw NotFound(id);
    std::lock_guard lock(s->mu);
    if (s->running) fail(ErrorCode::status, "cannot change the weight box while running", "status");
    const auto& box_json = body.is_object() && body.contains("box") ? body.at("box") : body;
    auto box = with_field("box", [&] { return mobo::WeightBox::from_json(box_json, s->state.k()); });
    try {
        engine::set_weight_box(s->state, std::move(box));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::argument || e.code() == ErrorCode::infeasible_box)
            fail(ErrorCode::infeasible_box, e.what(), "box");
        throw;
    }
    persist(*s, s->state);
    s->published = std::make_shared<const SessionState>(s->state);
    return engine::status_json(s->state);
}

void SessionManager::wait(const std::string& id) {
    auto s = find(id);
    if (!s) throw NotFound(id);
    std::thread t;
    {
        std::lock_guard lock(s->mu);
        if (s->worker.joinable()) t = std::move(s->worker);
    }
    if (t.joinable()) t.join();
}

int http_status(const std::exception& e) {
    if (dynamic_cast<const NotFound*>(&e)) return 404;
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 400;
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->code()) {
            case ErrorCode::status: return 409;
            case ErrorCode::io: return 400;
            default: return 422;
        }
    }
    return 500;
}

json error_body(const std::exception& e) {
    json j;
    if (dynamic_cast<const NotFound*>(&e)) j["code"] = "not_found";
    else if (dynamic_cast<const nlohmann::json::exception*>(&e)) j["code"] = "bad_request";
    else if (const auto* err = dynamic_cast<const Error*>(&e)) j["code"] = std::string(to_string(err->code()));
    else j["code"] = "internal";
    j["message"] = e.what();
    if (const auto* err = dynamic_cast<const Error*>(&e); err && !err->field().empty()) j["field"] = err->field();
    return j;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    return json::parse(req.body);
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const std::exception& e) {
            send_json(res, http_status(e), error_body(e));
        }
    };
}

}  // namespace

void mount(httplib::Server& server, SessionManager& m, const std::optional<fs::path>& ui_dir) {
    server.Post("/sessions", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 201, m.create(parse_body(req)));
    }));
    server.Get("/sessions", guarded([&m](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, m.list());
    }));
    server.Get(R"(/sessions/([^/]+))", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, m.status(req.matches[1]));
    }));
    server.Post(R"(/sessions/([^/]+)/run)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        engine::RunRequest r;
        if (body.contains("iterations"))
            r.iterations = with_field("iterations", [&] { return body.at("iterations").get<std::size_t>(); });
        if (body.contains("seconds"))
            r.seconds = with_field("seconds", [&] { return body.at("seconds").get<double>(); });
        send_json(res, 202, m.start(req.matches[1], r));
    }));
    server.Post(R"(/sessions/([^/]+)/pause)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        auto j = m.pause(req.matches[1]);
        send_json(res, j["pause_requested"].get<bool>() ? 202 : 200, j);
    }));
    server.Get(R"(/sessions/([^/]+)/front)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        const auto split = engine::split_from_string(req.has_param("split") ? req.get_param_value("split") : "valid");
        const auto format = req.has_param("format") ? req.get_param_value("format") : "json";
        if (format != "json" && format != "csv") fail(ErrorCode::argument, "format must be 'json' or 'csv'", "format");
        const auto table = m.front(req.matches[1], split);
        if (format == "csv") {
            res.status = 200;
            res.set_content(table.to_csv(), "text/csv");
        } else {
            send_json(res, 200, table.to_json());
        }
    }));
    server.Get(R"(/sessions/([^/]+)/path)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, m.path(req.matches[1]));
    }));
    server.Patch(R"(/sessions/([^/]+)/weights)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, m.set_weights(req.matches[1], parse_body(req)));
    }));
    if (ui_dir && fs::is_directory(*ui_dir)) {
        server.set_mount_point("/", ui_dir->string());
    } else {
        server.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(placeholder_page, "text/html");
        });
    }
}

}  // namespace axmc::service
