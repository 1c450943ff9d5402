#include "support.hpp"

#include "scr/config.hpp"
#include "scr/error.hpp"
#include "scr/repo.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace scr;
using namespace scr::test;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

EnvLookup no_env() { return env_of({}); }

ErrorCode config_error(const std::string& text, const EnvLookup& env = no_env(), const fs::path& base = "/") {
    try {
        parse_config(text, base, env);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

}  // namespace

TEST(Config, DefaultsWithoutFile) {
    Config c = parse_config("", "/tmp", no_env());
    EXPECT_EQ(c.tree, default_config_tree());
    EXPECT_EQ(c.str("backend", "kind"), "remote");
    EXPECT_EQ(c.str("backend", "api_key_env"), "SCR_API_KEY");
    EXPECT_EQ(c.integer("budget", "max_tool_calls"), 25);
    EXPECT_EQ(c.integer("eval", "tolerance"), 5);
    EXPECT_FALSE(c.boolean("review", "use_guidelines"));
    EXPECT_TRUE(c.boolean("review", "use_validator"));
    EXPECT_TRUE(c.path("memory", "cwe_tree").empty());
    EXPECT_EQ(c.data_dir(), default_data_dir());
    EXPECT_TRUE(fs::exists(c.data_dir() / "cwe_tree.json"));
}

TEST(Config, FileValuesAndRelativePaths) {
    TempDir d;
    write_text_file(d / "conf/rules.json", "{}");
    write_text_file(d / "conf/scr.json", R"({
      "backend": {"model": "m2", "temperature": 0.5, "max_retries": 1},
      "memory": {"sast_rules": "rules.json"},
      "budget": {"max_tool_calls": 7},
      "review": {"use_guidelines": true, "work_dir": "out"},
      "eval": {"tolerance": 3}
    })");
    Config c = load_config(d / "conf/scr.json", no_env());
    EXPECT_EQ(c.str("backend", "model"), "m2");
    EXPECT_DOUBLE_EQ(c.number("backend", "temperature"), 0.5);
    EXPECT_EQ(c.path("memory", "sast_rules"), (d.path() / "conf/rules.json").lexically_normal());
    EXPECT_EQ(c.path("review", "work_dir"), (d.path() / "conf/out").lexically_normal());
    EXPECT_TRUE(c.boolean("review", "use_guidelines"));
    EXPECT_EQ(c.integer("eval", "tolerance"), 3);

    RemoteConfig r = c.remote();
    EXPECT_EQ(r.model, "m2");
    EXPECT_EQ(r.max_retries, 1);
    EXPECT_EQ(r.endpoint, "https://api.openai.com/v1/chat/completions");
    Budget b = c.budget();
    EXPECT_EQ(b.max_tool_calls, 7);
    EXPECT_EQ(b.max_prompt_bytes, 400u * 1024u);
}

TEST(Config, IntegerAcceptedWhereNumberExpected) {
    Config c = parse_config(R"({"backend": {"temperature": 1}})", "/", no_env());
    EXPECT_DOUBLE_EQ(c.number("backend", "temperature"), 1.0);
}

TEST(Config, RejectsUnknownAndMistyped) {
    EXPECT_EQ(config_error(R"({"nope": {}})"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"({"backend": {"modle": "x"}})"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"({"backend": "x"})"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"([1, 2])"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"({"budget": {"max_tool_calls": "many"}})"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"({"budget": {"max_tool_calls": 2.5}})"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"({"review": {"use_validator": "yes"}})"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"({"backend": {"model": 4}})"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error("{ not json"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"({"eval": {"tolerance": -1}})"), ErrorCode::ConfigError);
    EXPECT_EQ(config_error(R"({"budget": {"max_prompt_bytes": 0}})"), ErrorCode::ConfigError);
}

TEST(Config, MemoryPathsMustExist) {
    TempDir d;
    EXPECT_EQ(config_error(R"({"memory": {"cwe_tree": "missing.json"}})", no_env(), d.path()), ErrorCode::ConfigError);
    EXPECT_EQ(config_error("", env_of({{"SCR_MEMORY_DATA_DIR", (d / "nope").string()}})), ErrorCode::ConfigError);
    Config c = parse_config("", "/", env_of({{"SCR_MEMORY_DATA_DIR", d.path().string()}}));
    EXPECT_EQ(c.data_dir(), d.path());
}

TEST(Config, MissingFileIsConfigError) {
    try {
        load_config(fs::path("/nonexistent/scr.json"), no_env());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

TEST(Config, EnvironmentOverridesAreTyped) {
    Config c = parse_config("", "/", env_of({{"SCR_BUDGET_MAX_TOOL_CALLS", "9"},
                                             {"SCR_REVIEW_USE_VALIDATOR", "no"},
                                             {"SCR_BACKEND_TEMPERATURE", "0.25"},
                                             {"SCR_BACKEND_API_KEY_ENV", "OTHER_KEY"},
                                             {"SCR_EVAL_STRICT_OVERLAP", "1"}}));
    EXPECT_EQ(c.integer("budget", "max_tool_calls"), 9);
    EXPECT_FALSE(c.boolean("review", "use_validator"));
    EXPECT_DOUBLE_EQ(c.number("backend", "temperature"), 0.25);
    EXPECT_EQ(c.remote().api_key_env, "OTHER_KEY");
    EXPECT_TRUE(c.boolean("eval", "strict_overlap"));

    EXPECT_EQ(config_error("", env_of({{"SCR_BUDGET_MAX_TOOL_CALLS", "9x"}})), ErrorCode::ConfigError);
    EXPECT_EQ(config_error("", env_of({{"SCR_REVIEW_USE_VALIDATOR", "maybe"}})), ErrorCode::ConfigError);
    // Names outside the tree are ignored, not errors.
    EXPECT_NO_THROW(parse_config("", "/", env_of({{"SCR_BUDGET_UNKNOWN", "1"}})));
}

TEST(Config, SetParsesPerKeyType) {
    Config c = parse_config("", "/", no_env());
    c.set("eval", "tolerance", "0");
    EXPECT_EQ(c.integer("eval", "tolerance"), 0);
    c.set("review", "use_guidelines", "TRUE");
    EXPECT_TRUE(c.boolean("review", "use_guidelines"));
    c.set("backend", "kind", "scripted");
    EXPECT_EQ(c.str("backend", "kind"), "scripted");
    EXPECT_THROW(c.set("eval", "tolerance", "five"), Error);
    EXPECT_THROW(c.set("eval", "nope", "1"), Error);
    EXPECT_THROW(c.set("nope", "tolerance", "1"), Error);
    EXPECT_THROW(c.str("eval", "nope"), Error);
}

// Every combination of file / environment / flag layers for one key: the
// highest layer present wins.
TEST(Config, PrecedenceFlagsOverEnvOverFile) {
    for (int mask = 0; mask < 8; ++mask) {
        bool in_file = mask & 1, in_env = mask & 2, in_flag = mask & 4;
        std::string text = in_file ? R"({"eval": {"tolerance": 11}})" : "";
        std::map<std::string, std::string> vars;
        if (in_env) vars["SCR_EVAL_TOLERANCE"] = "22";
        Config c = parse_config(text, "/", env_of(vars));
        if (in_flag) c.set("eval", "tolerance", "33");
        long long expected = in_flag ? 33 : in_env ? 22 : in_file ? 11 : 5;
        EXPECT_EQ(c.integer("eval", "tolerance"), expected) << "mask " << mask;
    }
}
