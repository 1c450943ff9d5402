#include "scr/llm.hpp"

#include "scr/error.hpp"

#include <fstream>
#include <sstream>

namespace scr {

std::string_view to_string(ToolStatus s) {
    switch (s) {
        case ToolStatus::Ok: return "ok";
        case ToolStatus::Error: return "error";
        case ToolStatus::Denied: return "denied";
    }
    return "error";
}

std::string_view to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "user";
}

ScriptedBackend::ScriptedBackend(json script) : script_(std::move(script)) {
    if (!script_.is_object()) throw Error(ErrorCode::SchemaError, "scripted transcript must be a JSON object keyed by agent");
    for (auto& [agent, entry] : script_.items()) {
        if (entry.is_array()) entry = json{{"turns", entry}};
        if (!entry.is_object() || !entry.contains("turns") || !entry["turns"].is_array())
            throw Error(ErrorCode::SchemaError, "scripted transcript for '" + agent + "' needs a turns array");
    }
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read transcript " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ScriptedBackend(parse_json_document(ss.str(), path.string()));
}

AssistantTurn ScriptedBackend::complete(const CompletionRequest& request) {
    auto it = script_.find(request.agent);
    if (it == script_.end()) throw Error(ErrorCode::BackendError, "no scripted turns for agent '" + request.agent + "'");
    const json& turns = (*it)["turns"];
    std::size_t index = 0;
    for (const auto& m : request.messages)
        if (m.role == Role::Assistant) ++index;
    if (index >= turns.size()) {
        if (it->value("repeat_last", false) && !turns.empty()) index = turns.size() - 1;
        else throw Error(ErrorCode::BackendError, "scripted transcript for '" + request.agent + "' exhausted at turn " +
                                                      std::to_string(index + 1));
    }
    const json& t = turns[index];
    AssistantTurn turn;
    if (t.contains("error")) throw Error(ErrorCode::BackendError, t["error"].get<std::string>());
    if (t.contains("tool_calls")) {
        std::size_t k = 0;
        for (const auto& c : t["tool_calls"]) {
            ToolCall call;
            call.tool = c.at("tool").get<std::string>();
            call.arguments = c.value("arguments", json::object());
            call.call_id = c.contains("id") ? c["id"].get<std::string>()
                                            : "call_" + std::to_string(index + 1) + "_" + std::to_string(++k);
            turn.tool_calls.push_back(std::move(call));
        }
        if (turn.tool_calls.empty()) throw Error(ErrorCode::BackendError, "scripted turn has an empty tool_calls list");
    } else if (t.contains("final")) {
        turn.content = t["final"].dump(2);
    } else if (t.contains("content")) {
        turn.content = t["content"].get<std::string>();
    } else {
        throw Error(ErrorCode::BackendError, "scripted turn " + std::to_string(index + 1) + " is malformed");
    }
    return turn;
}

json extract_json_payload(std::string_view text) {
    auto try_parse = [](std::string_view s) -> std::optional<json> {
        json j = json::parse(s.begin(), s.end(), nullptr, false);
        if (j.is_discarded()) return std::nullopt;
        return j;
    };
    if (auto j = try_parse(text)) return *j;
    if (auto fence = text.find("```"); fence != std::string_view::npos) {
        auto body = text.find('\n', fence);
        auto close = body == std::string_view::npos ? body : text.find("```", body);
        if (close != std::string_view::npos)
            if (auto j = try_parse(text.substr(body + 1, close - body - 1))) return *j;
    }
    auto open = text.find_first_of("{[");
    if (open != std::string_view::npos) {
        char closer = text[open] == '{' ? '}' : ']';
        auto close = text.find_last_of(closer);
        if (close != std::string_view::npos && close > open)
            if (auto j = try_parse(text.substr(open, close - open + 1))) return *j;
    }
    throw Error(ErrorCode::SchemaError, "final answer does not contain a JSON document");
}

}  // namespace scr
