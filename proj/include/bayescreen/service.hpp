#pragma once
// JSON-over-HTTP front end. Api is the transport-independent dispatcher
// (method, path, body) -> (status, JSON); Server binds it to cpp-httplib.
//
// Status codes: 200 ok, 201 session created, 400 malformed request,
// 404 unknown route or session, 422 typed domain error.

#include "bayescreen/core.hpp"
#include "bayescreen/emit.hpp"
#include "bayescreen/session.hpp"
#include "bayescreen/tables.hpp"

#include "httplib.h"
#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bayescreen {

struct ServiceConfig {
    std::string host = "0.0.0.0";
    int port = 8080;
    std::string cors_origin = "*";
    std::chrono::seconds session_ttl{24 * 3600};
    std::string journal_path;
    std::string static_dir;  // built web UI assets; empty = not served
};

// Reads a JSON config file (keys: host, port, cors_origin, session_ttl_seconds,
// journal_path, static_dir), then applies BAYESCREEN_* environment overrides.
inline ServiceConfig load_service_config(const std::string& path = {}) {
    ServiceConfig config;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file " + path);
        const auto j = nlohmann::json::parse(in);
        config.host = j.value("host", config.host);
        config.port = j.value("port", config.port);
        config.cors_origin = j.value("cors_origin", config.cors_origin);
        config.session_ttl = std::chrono::seconds(j.value("session_ttl_seconds", config.session_ttl.count()));
        config.journal_path = j.value("journal_path", config.journal_path);
        config.static_dir = j.value("static_dir", config.static_dir);
    }
    if (const char* v = std::getenv("BAYESCREEN_PORT")) config.port = std::stoi(v);
    if (const char* v = std::getenv("BAYESCREEN_CORS_ORIGIN")) config.cors_origin = v;
    if (const char* v = std::getenv("BAYESCREEN_SESSION_TTL")) config.session_ttl = std::chrono::seconds(std::stoll(v));
    if (const char* v = std::getenv("BAYESCREEN_JOURNAL")) config.journal_path = v;
    if (const char* v = std::getenv("BAYESCREEN_STATIC_DIR")) config.static_dir = v;
    return config;
}

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

class BadRequest : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline const nlohmann::json* lookup(const nlohmann::json& body, std::initializer_list<const char*> names) {
    for (const char* name : names) {
        if (auto it = body.find(name); it != body.end()) return &*it;
        if (auto t = body.find("test"); t != body.end() && t->is_object()) {
            if (auto it = t->find(name); it != t->end()) return &*it;
        }
    }
    return nullptr;
}

inline std::optional<double> optional_number(const nlohmann::json& body, std::initializer_list<const char*> names) {
    const auto* v = lookup(body, names);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_number()) throw BadRequest(std::string("field '") + *names.begin() + "' must be a number");
    return v->get<double>();
}

inline double number(const nlohmann::json& body, std::initializer_list<const char*> names) {
    auto v = optional_number(body, names);
    if (!v) throw BadRequest(std::string("missing numeric field '") + *names.begin() + "'");
    return *v;
}

inline TestProfile read_test(const nlohmann::json& body) {
    return TestProfile(number(body, {"sensitivity", "sens", "a"}), number(body, {"specificity", "spec", "b"}));
}

inline Prior read_prior(const nlohmann::json& body) {
    return Prior(number(body, {"prior", "prev", "phi", "prevalence"}));
}

inline std::vector<double> number_list(const nlohmann::json& body, const char* name) {
    const auto& v = body.at(name);
    if (!v.is_array()) throw BadRequest(std::string("field '") + name + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw BadRequest(std::string("field '") + name + "' must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline AxisRange read_range(const nlohmann::json& body, const char* name, AxisRange fallback) {
    if (!body.contains(name)) return fallback;
    const auto& r = body.at(name);
    if (!r.is_object()) throw BadRequest(std::string("field '") + name + "' must be {lo, hi, step}");
    return {number(r, {"lo"}), number(r, {"hi"}), number(r, {"step"})};
}

inline nlohmann::json error_body(std::string_view type, std::string_view message) {
    return {{"error", {{"type", type}, {"message", message}}}};
}

inline std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos < path.size()) {
        auto next = path.find('/', pos);
        if (next == std::string_view::npos) next = path.size();
        if (next > pos) parts.emplace_back(path.substr(pos, next - pos));
        pos = next + 1;
    }
    return parts;
}

} // namespace detail

// Default number of points for /api/curve when no grid is given.
inline constexpr std::size_t kDefaultCurvePoints = 200;

inline nlohmann::json api_description();

class Api {
public:
    explicit Api(SessionStore& store) : store_(store) {}

    ApiResponse handle(std::string_view method, std::string_view path, std::string_view body_text) {
        try {
            return dispatch(method, path, body_text);
        } catch (const DomainError& e) {
            return {422, detail::error_body(e.name(), e.what())};
        } catch (const SessionNotFound& e) {
            return {404, detail::error_body("SessionNotFound", e.what())};
        } catch (const BadRequest& e) {
            return {400, detail::error_body("BadRequest", e.what())};
        } catch (const nlohmann::json::exception& e) {
            return {400, detail::error_body("BadRequest", e.what())};
        }
    }

    // The session view returned by every session endpoint.
    static nlohmann::json session_json(const SessionState& s) {
        nlohmann::json results = nlohmann::json::array();
        for (auto r : s.results) results.push_back(result_symbol(r));
        nlohmann::json out = {
            {"id", s.id},
            {"sensitivity", s.test.sensitivity()},
            {"specificity", s.test.specificity()},
            {"initial_prior", s.initial_prior.phi()},
            {"results", results},
            {"trajectory", s.trajectory},
            {"current", s.current()},
            {"target_rho", s.target_rho ? nlohmann::json(*s.target_rho) : nlohmann::json(nullptr)},
            {"created_at", std::chrono::duration_cast<std::chrono::milliseconds>(s.created_at.time_since_epoch()).count()},
        };
        out["remaining"] = nullptr;
        if (s.target_rho) {
            try {
                out["remaining"] = plan_to_json(iterations_needed(s.test, Prior(s.current()), *s.target_rho));
            } catch (const DomainError& e) {
                out["remaining"] = detail::error_body(e.name(), e.what());
            }
        }
        return out;
    }

private:
    ApiResponse dispatch(std::string_view method, std::string_view path, std::string_view body_text) {
        const auto parts = detail::split_path(path);
        if (parts.size() < 2 || parts[0] != "api") return not_found(path);
        const std::string& route = parts[1];

        if (method == "GET" && parts.size() == 2 && route == "spec") return {200, api_description()};

        if (route == "session") return session_route(method, parts, body_text);

        if (method != "POST" || parts.size() != 2) return not_found(path);
        const auto body = parse_body(body_text);

        if (route == "ppv") return {200, predictive(body, true)};
        if (route == "npv") return {200, predictive(body, false)};
        if (route == "threshold") return {200, threshold(body)};
        if (route == "iterations") return {200, iterations(body)};
        if (route == "sequential-ppv") return {200, sequential(body)};
        if (route == "curve") return {200, curve(body)};
        if (route == "table") return {200, table(body)};
        if (route == "surface") return {200, surface(body)};
        return not_found(path);
    }

    static ApiResponse not_found(std::string_view path) {
        return {404, detail::error_body("NotFound", "no route for " + std::string(path))};
    }

    static nlohmann::json parse_body(std::string_view text) {
        if (text.empty()) return nlohmann::json::object();
        auto body = nlohmann::json::parse(text, nullptr, false);
        if (body.is_discarded() || !body.is_object()) throw BadRequest("request body must be a JSON object");
        return body;
    }

    static nlohmann::json test_echo(const TestProfile& t) {
        return {{"sensitivity", t.sensitivity()}, {"specificity", t.specificity()}};
    }

    static nlohmann::json predictive(const nlohmann::json& body, bool positive) {
        const auto test = detail::read_test(body);
        const auto prior = detail::read_prior(body);
        const auto pv = positive ? ppv(test, prior) : npv(test, prior);
        auto input = test_echo(test);
        input["prior"] = prior.phi();
        return {{"input", input}, {"kind", positive ? "positive" : "negative"}, {"value", pv.value}};
    }

    static nlohmann::json threshold(const nlohmann::json& body) {
        const auto test = detail::read_test(body);
        return {{"input", test_echo(test)},
                {"epsilon", epsilon(test)},
                {"threshold", prevalence_threshold(test)}};
    }

    static nlohmann::json iterations(const nlohmann::json& body) {
        const auto prior = detail::read_prior(body);
        const double target = detail::number(body, {"target", "target_rho", "rho"});
        nlohmann::json input = {{"prior", prior.phi()}, {"target", target}};
        IterationPlan plan;
        if (auto log_lr = detail::optional_number(body, {"log_lr"})) {
            input["log_lr"] = *log_lr;
            plan = iterations_needed(LogLikelihoodRatio{*log_lr}, prior, target);
        } else {
            const auto test = detail::read_test(body);
            input.update(test_echo(test));
            plan = iterations_needed(test, prior, target);
        }
        auto out = plan_to_json(plan);
        out["input"] = input;
        return out;
    }

    static nlohmann::json sequential(const nlohmann::json& body) {
        const auto test = detail::read_test(body);
        const auto prior = detail::read_prior(body);
        const auto* n = detail::lookup(body, {"n"});
        if (!n || !n->is_number_unsigned()) throw BadRequest("field 'n' must be a non-negative integer");
        const auto count = n->get<std::uint64_t>();
        auto input = test_echo(test);
        input["prior"] = prior.phi();
        input["n"] = count;
        return {{"input", input}, {"value", sequential_ppv(test, prior, count).value}};
    }

    static nlohmann::json curve(const nlohmann::json& body) {
        const auto test = detail::read_test(body);
        const std::string kind = body.value("kind", std::string("ppv"));
        if (kind != "ppv" && kind != "npv") throw BadRequest("kind must be 'ppv' or 'npv'");
        std::vector<double> grid;
        if (body.contains("grid")) {
            grid = detail::number_list(body, "grid");
        } else {
            const auto* p = detail::lookup(body, {"points"});
            std::size_t points = kDefaultCurvePoints;
            if (p) {
                if (!p->is_number_unsigned()) throw BadRequest("field 'points' must be a positive integer");
                points = p->get<std::size_t>();
            }
            grid = evenly_spaced(0.0, 1.0, points);
        }
        const auto pts = kind == "ppv" ? ppv_curve(test, grid) : npv_curve(test, grid);
        auto out = curve_to_json(kind, pts);
        out["input"] = test_echo(test);
        if (test.specificity() + test.sensitivity() != 1.0) out["threshold"] = prevalence_threshold(test);
        return out;
    }

    static nlohmann::json table(const nlohmann::json& body) {
        ReferenceTableSpec spec = paper_table_spec(detail::number(body, {"target", "target_rho", "rho"}));
        if (body.contains("log_lr_values")) spec.log_lr_values = detail::number_list(body, "log_lr_values");
        if (body.contains("phi_values")) spec.phi_values = detail::number_list(body, "phi_values");
        return table_to_json(generate_reference_table(spec));
    }

    static nlohmann::json surface(const nlohmann::json& body) {
        const double target = detail::number(body, {"target", "target_rho", "rho"});
        const auto lr = detail::read_range(body, "log_lr", {0.5, 5.0, 0.25});
        const auto phi = detail::read_range(body, "phi", {0.01, 0.2, 0.01});
        const auto points = surface_grid(target, lr, phi);
        return surface_to_json(target, points);
    }

    ApiResponse session_route(std::string_view method, const std::vector<std::string>& parts,
                              std::string_view body_text) {
        store_.evict_expired();
        if (parts.size() == 2 && method == "POST") {
            const auto body = parse_body(body_text);
            const auto test = detail::read_test(body);
            const auto prior = detail::read_prior(body);
            const auto target = detail::optional_number(body, {"target", "target_rho", "rho"});
            if (target) detail::check_target(*target);
            return {201, session_json(store_.create(test, prior, target))};
        }
        if (parts.size() == 3 && method == "GET") return {200, session_json(store_.get(parts[2]))};
        if (parts.size() == 4 && parts[3] == "result") {
            if (method == "POST") {
                const auto body = parse_body(body_text);
                const auto* r = detail::lookup(body, {"result"});
                if (!r || !r->is_string()) throw BadRequest("field 'result' must be \"+\" or \"-\"");
                const auto parsed = parse_result(r->get<std::string>());
                if (!parsed) throw BadRequest("field 'result' must be \"+\" or \"-\"");
                return {200, session_json(store_.append(parts[2], *parsed))};
            }
            if (method == "DELETE") return {200, session_json(store_.undo(parts[2]))};
        }
        return not_found("/api/session");
    }

    SessionStore& store_;
};

inline nlohmann::json api_description() {
    auto post = [](const char* summary) {
        return nlohmann::json{{"post", {{"summary", summary},
                                        {"requestBody", {{"content", {{"application/json", nlohmann::json::object()}}}}},
                                        {"responses", {{"200", {{"description", "ok"}}},
                                                       {"400", {{"description", "malformed body"}}},
                                                       {"422", {{"description", "typed domain error"}}}}}}}};
    };
    nlohmann::json paths = {
        {"/api/ppv", post("Positive predictive value {sensitivity, specificity, prior}")},
        {"/api/npv", post("Negative predictive value {sensitivity, specificity, prior}")},
        {"/api/threshold", post("Prevalence threshold and epsilon {sensitivity, specificity}")},
        {"/api/iterations", post("Iteration plan {sensitivity, specificity | log_lr, prior, target}")},
        {"/api/sequential-ppv", post("PPV after n positives {sensitivity, specificity, prior, n}")},
        {"/api/curve", post("PPV or NPV curve {sensitivity, specificity, kind, points | grid}")},
        {"/api/table", post("Reference table {target, log_lr_values?, phi_values?}")},
        {"/api/surface", post("Surface grid {target, log_lr?: {lo,hi,step}, phi?: {lo,hi,step}}")},
        {"/api/session", post("Create session {sensitivity, specificity, prior, target?}")},
        {"/api/session/{id}", {{"get", {{"summary", "Session state"}}}}},
        {"/api/session/{id}/result",
         {{"post", {{"summary", "Append a result {result: \"+\" | \"-\"}"}}},
          {"delete", {{"summary", "Undo the last result"}}}}},
    };
    return {{"openapi", "3.0.3"},
            {"info", {{"title", "bayescreen"}, {"version", "1"}}},
            {"paths", paths}};
}

// cpp-httplib binding of Api plus CORS headers and optional static assets.
class Server {
public:
    explicit Server(ServiceConfig config)
        : config_(std::move(config)),
          store_(SessionStoreOptions{config_.session_ttl, config_.journal_path}),
          api_(store_) {
        http_.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                                   {"Access-Control-Allow-Headers", "Content-Type"},
                                   {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
        auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            const auto out = api_.handle(req.method, req.path, req.body);
            res.status = out.status;
            res.set_content(out.body.dump(), "application/json");
        };
        const char* pattern = R"(/api/.*)";
        http_.Get(pattern, forward);
        http_.Post(pattern, forward);
        http_.Delete(pattern, forward);
        http_.Options(pattern, [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        if (!config_.static_dir.empty()) http_.set_mount_point("/", config_.static_dir);
    }

    // Blocks until stop().
    bool listen() { return http_.listen(config_.host, config_.port); }

    // Binds an ephemeral port and returns it; follow with listen_after_bind().
    int bind_any_port() { return http_.bind_to_any_port(config_.host); }
    bool listen_after_bind() { return http_.listen_after_bind(); }

    void stop() { http_.stop(); }
    void wait_until_ready() { http_.wait_until_ready(); }

    SessionStore& store() { return store_; }

private:
    ServiceConfig config_;
    SessionStore store_;
    Api api_;
    httplib::Server http_;
};

} // namespace bayescreen
