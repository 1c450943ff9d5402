#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "scr/error.hpp"
#include "scr/llm.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

namespace scr {

HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const std::map<std::string, std::string>& headers, int timeout_seconds) {
    static const std::regex url_re(R"(^(https?)://([^/:]+)(:(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, url_re)) throw Error(ErrorCode::ConfigError, "unsupported endpoint URL: " + url);
    std::string origin = m[1].str() + "://" + m[2].str() + (m[4].matched ? ":" + m[4].str() : "");
    std::string path = m[5].matched ? m[5].str() : "/";

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_write_timeout(timeout_seconds, 0);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    HttpResponse out;
    auto res = client.Post(path, h, body, "application/json");
    if (!res) {
        out.transport_error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

ChatCompletionsBackend::ChatCompletionsBackend(RemoteConfig config) : config_(std::move(config)) {}

json ChatCompletionsBackend::build_body(const CompletionRequest& request) const {
    json messages = json::array();
    for (const auto& m : request.messages) {
        json j{{"role", std::string(to_string(m.role))}, {"content", m.content}};
        if (m.role == Role::Tool) j["tool_call_id"] = m.call_id;
        if (m.role == Role::Assistant && !m.tool_calls.empty()) {
            json calls = json::array();
            for (const auto& c : m.tool_calls)
                calls.push_back({{"id", c.call_id},
                                 {"type", "function"},
                                 {"function", {{"name", c.tool}, {"arguments", c.arguments.dump()}}}});
            j["tool_calls"] = calls;
            if (m.content.empty()) j["content"] = nullptr;
        }
        messages.push_back(std::move(j));
    }
    json body{{"model", config_.model}, {"messages", messages}, {"temperature", config_.temperature}};
    if (!request.tools.empty()) {
        json tools = json::array();
        for (const auto& t : request.tools)
            tools.push_back({{"type", "function"},
                             {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
        body["tools"] = tools;
    }
    return body;
}

AssistantTurn ChatCompletionsBackend::parse_response(const std::string& body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::BackendError, "response is not a JSON object");
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
        throw Error(ErrorCode::BackendError, "response has no choices");
    const json& msg = doc["choices"][0].value("message", json::object());
    AssistantTurn turn;
    if (msg.contains("content") && msg["content"].is_string()) turn.content = msg["content"].get<std::string>();
    if (msg.contains("tool_calls") && msg["tool_calls"].is_array()) {
        for (const auto& c : msg["tool_calls"]) {
            if (!c.contains("function") || !c["function"].contains("name"))
                throw Error(ErrorCode::BackendError, "tool call without a function name");
            ToolCall call;
            call.call_id = c.value("id", "");
            call.tool = c["function"]["name"].get<std::string>();
            json args = c["function"].value("arguments", json("{}"));
            if (args.is_string()) {
                args = json::parse(args.get<std::string>(), nullptr, false);
                if (args.is_discarded()) throw Error(ErrorCode::BackendError, "tool call arguments are not JSON");
            }
            call.arguments = args.is_object() ? args : json::object();
            turn.tool_calls.push_back(std::move(call));
        }
    }
    if (turn.tool_calls.empty() && turn.content.empty()) throw Error(ErrorCode::BackendError, "empty assistant turn");
    return turn;
}

AssistantTurn ChatCompletionsBackend::complete(const CompletionRequest& request) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw Error(ErrorCode::BackendError, "environment variable " + config_.api_key_env + " is not set");
    std::string body = build_body(request).dump();
    std::map<std::string, std::string> headers{{"Authorization", std::string("Bearer ") + key}};

    auto delay = config_.backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        {
            std::lock_guard lock(mu_);
            ++attempts_;
        }
        auto res = http_post_json(config_.endpoint, body, headers, config_.timeout_seconds);
        if (!res.transport_error.empty()) {
            last_error = "transport: " + res.transport_error;
            continue;
        }
        if (res.status == 429 || res.status >= 500) {
            last_error = "HTTP " + std::to_string(res.status);
            continue;
        }
        if (res.status != 200)
            throw Error(ErrorCode::BackendError, "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 500));
        return parse_response(res.body);
    }
    throw Error(ErrorCode::BackendError, "giving up after " + std::to_string(config_.max_retries + 1) +
                                             " attempts: " + last_error);
}

}  // namespace scr
