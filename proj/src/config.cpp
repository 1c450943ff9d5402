#include "scr/config.hpp"

#include "scr/error.hpp"
#include "scr/repo.hpp"

#include <cstdlib>

namespace fs = std::filesystem;

namespace scr {

json default_config_tree() {
    return {
        {"backend",
         {{"kind", "remote"},
          {"transcript", ""},
          {"endpoint", "https://api.openai.com/v1/chat/completions"},
          {"model", "gpt-4o"},
          {"api_key_env", "SCR_API_KEY"},
          {"temperature", 0.0},
          {"timeout_seconds", 120},
          {"max_retries", 3}}},
        {"memory", {{"data_dir", ""}, {"sast_rules", ""}, {"cwe_tree", ""}, {"guidelines", ""}}},
        {"budget",
         {{"max_tool_calls", 25},
          {"max_prompt_bytes", 400 * 1024},
          {"bash_timeout_ms", 30000},
          {"slice_budget_bytes", static_cast<long long>(kDefaultSliceBudget)}}},
        {"review", {{"use_guidelines", false}, {"use_validator", true}, {"include_unstaged", false}, {"work_dir", ".scr"}}},
        {"eval", {{"tolerance", 5}, {"jobs", 1}, {"judge", ""}, {"strict_overlap", false}}},
    };
}

namespace {

bool is_path_key(const std::string& section, const std::string& key) {
    return (section == "memory") || (section == "backend" && key == "transcript") ||
           (section == "review" && key == "work_dir");
}

json coerce(const json& def, const std::string& where, const std::string& raw) {
    try {
        std::size_t used = 0;
        if (def.is_boolean()) {
            std::string l = to_lower(raw);
            if (l == "true" || l == "1" || l == "yes") return true;
            if (l == "false" || l == "0" || l == "no") return false;
        } else if (def.is_number_integer()) {
            long long v = std::stoll(raw, &used);
            if (used == raw.size()) return v;
        } else if (def.is_number()) {
            double v = std::stod(raw, &used);
            if (used == raw.size()) return v;
        } else {
            return raw;
        }
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::ConfigError, where + ": cannot parse '" + raw + "' as " + std::string(def.type_name()));
}

const json& lookup(const json& tree, const std::string& section, const std::string& key) {
    auto s = tree.find(section);
    if (s == tree.end() || !s->contains(key)) throw Error(ErrorCode::ConfigError, "unknown setting " + section + "." + key);
    return (*s)[key];
}

}  // namespace

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v) return std::nullopt;
        return std::string(v);
    };
}

Config parse_config(std::string_view text, const fs::path& base_dir, const EnvLookup& env) {
    Config cfg;
    cfg.tree = default_config_tree();
    cfg.base_dir = base_dir;
    if (!text.empty()) {
        json doc;
        try {
            doc = parse_json_document(text, "config");
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigError, e.what());
        }
        if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
        for (const auto& [section, values] : doc.items()) {
            if (!cfg.tree.contains(section)) throw Error(ErrorCode::ConfigError, "unknown config section '" + section + "'");
            if (!values.is_object()) throw Error(ErrorCode::ConfigError, "config section '" + section + "' must be an object");
            for (const auto& [key, v] : values.items()) {
                if (!cfg.tree[section].contains(key))
                    throw Error(ErrorCode::ConfigError, "unknown config key '" + section + "." + key + "'");
                const json& def = cfg.tree[section][key];
                bool ok = (def.is_boolean() && v.is_boolean()) || (def.is_number_integer() && v.is_number_integer()) ||
                          (def.is_number_float() && v.is_number()) || (def.is_string() && v.is_string());
                if (!ok)
                    throw Error(ErrorCode::ConfigError, section + "." + key + ": expected " + std::string(def.type_name()));
                json val = v;
                if (is_path_key(section, key) && !v.get<std::string>().empty()) {
                    fs::path p(v.get<std::string>());
                    if (p.is_relative()) p = base_dir / p;
                    val = p.lexically_normal().string();
                }
                cfg.tree[section][key] = val;
            }
        }
    }
    for (auto& [section, values] : cfg.tree.items()) {
        for (auto& [key, v] : values.items()) {
            std::string name = "SCR_" + section + "_" + key;
            for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            if (auto raw = env(name)) v = coerce(v, name, *raw);
        }
    }
    for (const char* key : {"data_dir", "sast_rules", "cwe_tree", "guidelines"}) {
        std::string p = cfg.tree["memory"][key].get<std::string>();
        std::error_code ec;
        if (!p.empty() && !fs::exists(p, ec))
            throw Error(ErrorCode::ConfigError, std::string("memory.") + key + ": " + p + " does not exist");
    }
    if (cfg.integer("budget", "max_tool_calls") < 0 || cfg.integer("budget", "max_prompt_bytes") <= 0)
        throw Error(ErrorCode::ConfigError, "budgets must be positive");
    if (cfg.integer("eval", "tolerance") < 0) throw Error(ErrorCode::ConfigError, "eval.tolerance must be >= 0");
    return cfg;
}

Config load_config(const std::optional<fs::path>& file, const EnvLookup& env) {
    if (!file) return parse_config("", fs::current_path(), env);
    std::error_code ec;
    if (!fs::is_regular_file(*file, ec)) throw Error(ErrorCode::ConfigError, "config file " + file->string() + " not found");
    return parse_config(read_file(*file), fs::absolute(*file).parent_path(), env);
}

std::string Config::str(const std::string& section, const std::string& key) const {
    return lookup(tree, section, key).get<std::string>();
}
long long Config::integer(const std::string& section, const std::string& key) const {
    return lookup(tree, section, key).get<long long>();
}
double Config::number(const std::string& section, const std::string& key) const {
    return lookup(tree, section, key).get<double>();
}
bool Config::boolean(const std::string& section, const std::string& key) const {
    return lookup(tree, section, key).get<bool>();
}
fs::path Config::path(const std::string& section, const std::string& key) const {
    return fs::path(str(section, key));
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    const json& def = lookup(tree, section, key);
    tree[section][key] = coerce(def, section + "." + key, value);
}

RemoteConfig Config::remote() const {
    RemoteConfig r;
    r.endpoint = str("backend", "endpoint");
    r.model = str("backend", "model");
    r.api_key_env = str("backend", "api_key_env");
    r.temperature = number("backend", "temperature");
    r.timeout_seconds = static_cast<int>(integer("backend", "timeout_seconds"));
    r.max_retries = static_cast<int>(integer("backend", "max_retries"));
    return r;
}

Budget Config::budget() const {
    Budget b;
    b.max_tool_calls = static_cast<int>(integer("budget", "max_tool_calls"));
    b.max_prompt_bytes = static_cast<std::size_t>(integer("budget", "max_prompt_bytes"));
    return b;
}

fs::path Config::data_dir() const {
    fs::path p = path("memory", "data_dir");
    return p.empty() ? default_data_dir() : p;
}

}  // namespace scr
