#pragma once

#include "scr/agent.hpp"
#include "scr/json_util.hpp"
#include "scr/llm.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace scr {

// Settings tree:
//   backend.{kind, transcript, endpoint, model, api_key_env, temperature, timeout_seconds, max_retries}
//   memory.{data_dir, sast_rules, cwe_tree, guidelines}
//   budget.{max_tool_calls, max_prompt_bytes, bash_timeout_ms, slice_budget_bytes}
//   review.{use_guidelines, use_validator, include_unstaged, work_dir}
//   eval.{tolerance, jobs, judge, strict_overlap}
// Each key can be overridden by SCR_<SECTION>_<KEY> (upper case).
// Precedence: command-line flags > environment > file > defaults.
struct Config {
    json tree;
    std::filesystem::path base_dir;  // relative paths in the file resolve against it

    std::string str(const std::string& section, const std::string& key) const;
    long long integer(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key) const;
    bool boolean(const std::string& section, const std::string& key) const;
    std::filesystem::path path(const std::string& section, const std::string& key) const;  // empty when unset

    // Flag override; value is parsed per the key's type. Throws ConfigError.
    void set(const std::string& section, const std::string& key, const std::string& value);

    RemoteConfig remote() const;
    Budget budget() const;
    std::filesystem::path data_dir() const;
};

json default_config_tree();

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Unknown sections/keys and mistyped values raise ConfigError, as do
// configured memory paths that do not exist.
Config load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env());
Config parse_config(std::string_view text, const std::filesystem::path& base_dir, const EnvLookup& env = process_env());

}  // namespace scr
