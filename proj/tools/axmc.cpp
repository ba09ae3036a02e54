#include "axmc/engine.hpp"
#include "axmc/error.hpp"
#include "axmc/io.hpp"
#include "axmc/service.hpp"
#include "axmc/synthetic.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace axmc;
using nlohmann::json;

namespace {

constexpr const char* snapshot_name = "session.json";
constexpr const char* log_name = "iterations.jsonl";

struct Flags {
    std::string data, schema, measures, session, out, box_file, split = "valid", format = "csv", output, ui, host = "127.0.0.1";
    std::size_t budget = 0;
    std::uint64_t seed = 1;
    std::size_t m = 0;
    std::optional<double> seconds, wmin, wmax;
    int port = 8080;
    std::string state_dir = "axmc-sessions";
    std::size_t rows = 5000;
    double label_bias = 0.8;
};

fs::path snapshot_path(const std::string& session) {
    const fs::path p(session);
    return fs::is_directory(p) ? p / snapshot_name : p;
}

std::uint64_t effective_seed(std::uint64_t flag) {
    const char* env = std::getenv("AXMC_SEED");
    if (!env || !*env) return flag;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used != std::string_view(env).size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::argument, std::string("AXMC_SEED is not an unsigned integer: ") + env, "AXMC_SEED");
    }
}

std::optional<mobo::WeightBox> box_override(const Flags& f, std::size_t k) {
    if (!f.box_file.empty()) {
        if (f.wmin || f.wmax) fail(ErrorCode::argument, "--box cannot be combined with --wmin/--wmax", "box");
        try {
            return mobo::WeightBox::from_json(json::parse(read_file(f.box_file)), k);
        } catch (const json::exception& e) {
            fail(ErrorCode::argument, std::string("malformed box file: ") + e.what(), "box");
        }
    }
    if (!f.wmin && !f.wmax) return std::nullopt;
    if (k != 2) fail(ErrorCode::argument, "--wmin/--wmax apply to two objectives; use --box for k > 2", "box");
    return mobo::WeightBox::first(f.wmin.value_or(0.0), f.wmax.value_or(1.0));
}

void print_front(const engine::FrontTable& t) {
    std::printf("%-6s %-10s", "index", "provenance");
    for (const auto& id : t.measure_ids) std::printf(" %12s", id.c_str());
    std::printf(" %8s %6s\n", "nrounds", "thr");
    for (const auto& r : t.rows) {
        std::printf("%-6zu %-10s", r.index, std::string(pareto::to_string(r.provenance)).c_str());
        for (double v : r.measures) std::printf(" %12.6f", v);
        std::printf(" %8d %6.2f\n", r.config.nrounds, r.config.thr);
    }
}

engine::Hooks logging_hooks(const fs::path& log) {
    engine::Hooks h;
    h.on_record = [log](const pareto::EvalRecord& r, std::size_t index) {
        auto line = r.to_json();
        line["index"] = index;
        append_line(log, line.dump());
    };
    return h;
}

void save(const fs::path& dir, const engine::SessionState& st) {
    write_file_atomic(dir / snapshot_name, engine::snapshot(st));
    write_file_atomic(dir / "front.csv", engine::report(st, engine::Split::valid).to_csv());
}

int cmd_run(const Flags& f) {
    engine::SessionConfig c;
    c.csv = read_file(f.data);
    try {
        c.schema = Schema::from_json(json::parse(read_file(f.schema)));
    } catch (const json::exception& e) {
        fail(ErrorCode::schema, std::string("malformed schema file: ") + e.what(), "schema");
    }
    c.measures = measures::parse_measure_list(f.measures);
    c.seed = effective_seed(f.seed);
    c.m = f.m;
    c.budget = f.seconds ? std::nullopt : std::optional<std::size_t>(f.budget);
    c.box = box_override(f, c.measures.size());
    if (c.box) c.box->validate();

    const fs::path out(f.out);
    fs::create_directories(out);
    fs::remove(out / log_name);
    const auto hooks = logging_hooks(out / log_name);
    auto st = engine::init_session(std::move(c), out.filename().empty() ? out.parent_path().filename().string()
                                                                         : out.filename().string(),
                                   hooks);
    if (f.seconds) engine::run(st, {std::nullopt, *f.seconds}, hooks);
    else engine::run(st, {}, hooks);
    save(out, st);
    print_front(engine::report(st, engine::Split::valid));
    return 0;
}

int cmd_continue(const Flags& f) {
    const auto snap = snapshot_path(f.session);
    auto st = engine::restore(read_file(snap));
    if (auto box = box_override(f, st.k())) engine::set_weight_box(st, *box);
    const auto dir = snap.parent_path().empty() ? fs::path(".") : snap.parent_path();
    const auto hooks = logging_hooks(dir / log_name);
    engine::RunRequest req;
    if (f.seconds) req.seconds = f.seconds;
    else req.iterations = f.budget;
    engine::run(st, req, hooks);
    write_file_atomic(snap, engine::snapshot(st));
    write_file_atomic(dir / "front.csv", engine::report(st, engine::Split::valid).to_csv());
    print_front(engine::report(st, engine::Split::valid));
    return 0;
}

int cmd_front(const Flags& f) {
    const auto st = engine::restore(read_file(snapshot_path(f.session)));
    if (st.archive.empty()) fail(ErrorCode::insufficient_data, "session archive is empty");
    const auto table = engine::report(st, engine::split_from_string(f.split));
    std::string text;
    if (f.format == "csv") text = table.to_csv();
    else if (f.format == "json") text = table.to_json().dump(2) + "\n";
    else fail(ErrorCode::argument, "--format must be csv or json", "format");
    if (f.output.empty()) std::cout << text;
    else write_file_atomic(f.output, text);
    return 0;
}

int cmd_synth(const Flags& f) {
    const auto task = synthetic::income_like(f.rows, effective_seed(f.seed), f.label_bias);
    const fs::path out(f.out);
    fs::create_directories(out);
    write_file_atomic(out / "data.csv", task.csv);
    write_file_atomic(out / "schema.json", task.schema.to_json().dump(2) + "\n");
    std::cerr << "wrote " << (out / "data.csv").string() << " and " << (out / "schema.json").string() << "\n";
    return 0;
}

httplib::Server* active_server = nullptr;

int cmd_serve(const Flags& f) {
    service::SessionManager manager{fs::path(f.state_dir)};
    const auto restored = manager.restore_all();
    httplib::Server server;
    service::mount(server, manager, f.ui.empty() ? std::nullopt : std::optional<fs::path>(f.ui));
    // The library default also sets SO_REUSEPORT, which would let a second server share the port.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    if (!server.bind_to_port(f.host, f.port)) {
        std::cerr << "error: cannot bind " << f.host << ":" << f.port << "\n";
        return 1;
    }
    active_server = &server;
    std::signal(SIGINT, [](int) { if (active_server) active_server->stop(); });
    std::signal(SIGTERM, [](int) { if (active_server) active_server->stop(); });
    std::cerr << "serving on http://" << f.host << ":" << f.port << " (" << restored << " sessions restored)\n";
    server.listen_after_bind();
    active_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-criteria tuning of boosted-tree pipelines"};
    app.require_subcommand(1);
    Flags f;

    auto add_budget = [&](CLI::App* sub) {
        auto* it = sub->add_option("--budget", f.budget, "Optimizer iterations")->check(CLI::NonNegativeNumber);
        auto* sec = sub->add_option("--seconds", f.seconds, "Wall-clock budget in seconds")->check(CLI::PositiveNumber);
        it->excludes(sec);
        return it;
    };
    auto add_box = [&](CLI::App* sub) {
        sub->add_option("--wmin", f.wmin, "Lower bound on the first weight (k = 2)")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--wmax", f.wmax, "Upper bound on the first weight (k = 2)")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--box", f.box_file, "JSON weight box {lower, upper}")->check(CLI::ExistingFile);
    };

    auto* run = app.add_subcommand("run", "Start a session and run it");
    run->add_option("--data", f.data, "CSV dataset")->required()->check(CLI::ExistingFile);
    run->add_option("--schema", f.schema, "JSON schema sidecar")->required()->check(CLI::ExistingFile);
    run->add_option("--measures", f.measures, "Comma-separated measure ids")->required();
    add_budget(run)->default_val(20);
    run->add_option("--seed", f.seed, "Random seed (AXMC_SEED overrides)");
    run->add_option("--m", f.m, "Initial design size (default max(8, 4 + 2k))");
    run->add_option("--out", f.out, "Output directory")->required();
    add_box(run);

    auto* cont = app.add_subcommand("continue", "Resume a saved session with more budget");
    cont->add_option("--session", f.session, "Session directory or snapshot file")->required()->check(CLI::ExistingPath);
    add_budget(cont)->default_val(50);
    add_box(cont);

    auto* front = app.add_subcommand("front", "Export the Pareto front");
    front->add_option("--session", f.session, "Session directory or snapshot file")->required()->check(CLI::ExistingPath);
    front->add_option("--split", f.split, "valid or test")->check(CLI::IsMember({"valid", "test"}));
    front->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    front->add_option("--output", f.output, "Write to this file instead of stdout");

    auto* serve = app.add_subcommand("serve", "Serve the REST API and UI");
    serve->add_option("--port", f.port, "TCP port")->check(CLI::Range(1, 65535));
    serve->add_option("--host", f.host, "Bind address");
    serve->add_option("--state-dir", f.state_dir, "Snapshot directory");
    serve->add_option("--ui", f.ui, "Static UI bundle directory");

    auto* synth = app.add_subcommand("synth", "Write the synthetic income-like dataset and its schema");
    synth->add_option("--rows", f.rows, "Number of rows")->check(CLI::Range(100, 10000000));
    synth->add_option("--seed", f.seed, "Generator seed (AXMC_SEED overrides)");
    synth->add_option("--label-bias", f.label_bias, "Log-odds shift added for the privileged group");
    synth->add_option("--out", f.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return cmd_run(f);
        if (*cont) return cmd_continue(f);
        if (*front) return cmd_front(f);
        if (*serve) return cmd_serve(f);
        if (*synth) return cmd_synth(f);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]" << (e.field().empty() ? "" : " (" + e.field() + ")")
                  << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
