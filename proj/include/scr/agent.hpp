#pragma once

#include "scr/comments.hpp"
#include "scr/error.hpp"
#include "scr/llm.hpp"
#include "scr/memory.hpp"
#include "scr/tools.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scr {

struct Budget {
    int max_tool_calls = 25;
    std::size_t max_prompt_bytes = 400 * 1024;
};

enum class OutputSchema { Comments, Verdicts };

struct SubagentSpec {
    std::string name;           // "detector" or "validator"
    std::string goal;
    std::string system_prompt;  // may contain <target_warning_path>
    std::vector<std::string> resources;  // "@resources/..." aliases the agent is told to load
    std::set<std::string> allowed_tools;
    OutputSchema output_schema = OutputSchema::Comments;
};

inline constexpr std::string_view kOrchestrationInstruction =
    "/agents Use the detector-subagent to find security issues, then use the validator-subagent to validate the "
    "code review comments";

SubagentSpec detector_spec(bool with_guidelines = false);
SubagentSpec validator_spec();

struct PipelinePolicy {
    std::vector<SubagentSpec> stages;  // detector, then validator
    std::string instruction{kOrchestrationInstruction};
};

// use_validator=false drops the second stage (ablation).
PipelinePolicy default_policy(bool with_guidelines = false, bool use_validator = true);

using Clock = std::function<std::string()>;                        // timestamp text
using IdGenerator = std::function<std::string(const std::string&)>;  // agent name -> session id

Clock system_clock();
IdGenerator random_ids();
// "<agent>-1", "<agent>-2", ... per agent name.
IdGenerator sequential_ids();

// Append-only JSON-lines transcript; each event is flushed to disk as it
// is recorded, so the file is complete whatever state the session ends in.
class EpisodicLog {
public:
    EpisodicLog(std::string session_id, std::filesystem::path file, Clock clock);

    void record(std::string type, json fields);

    const std::string& session_id() const { return session_id_; }
    const std::filesystem::path& file() const { return file_; }
    const std::vector<json>& events() const { return events_; }

private:
    std::string session_id_;
    std::filesystem::path file_;
    Clock clock_;
    std::vector<json> events_;
};

std::vector<json> read_episodic_log(const std::filesystem::path& file);

enum class SessionStatus { Running, Done, BudgetExhausted, Failed };
std::string_view to_string(SessionStatus s);

struct SessionResult {
    std::string session_id;
    SessionStatus status = SessionStatus::Running;
    json output;  // final structured output; null when none was produced
    std::optional<ErrorCode> error;
    std::string error_message;
    int tool_calls = 0;
    std::filesystem::path log_file;
    std::vector<Message> messages;
};

struct SessionEnv {
    Budget budget;
    std::filesystem::path log_dir;
    Clock clock = system_clock();
    IdGenerator ids = random_ids();
};

// Turn loop between the backend and the tools. Never throws for backend or
// schema failures: those end the session with status=failed and `error` set.
SessionResult run_subagent(const SubagentSpec& spec, const std::string& input, LlmBackend& backend,
                           ToolExecutor& tools, WorkingMemory& working, const SessionEnv& env);

// Validates a final answer against the schema; throws SchemaError.
std::vector<SecurityComment> comments_from_output(const json& output);
std::vector<ValidationVerdict> verdicts_from_output(const json& output);

struct SemanticStores {
    std::filesystem::path rules_path;
    std::filesystem::path cwe_tree_path;
    std::filesystem::path guidelines_path;  // empty when not used
    SastRuleStore rules;
    CweTree cwe_tree;
    GuidelineStore guidelines;
};

// Loads sast_rules.json, cwe_tree.json and (if present) guidelines.json.
SemanticStores load_stores(const std::filesystem::path& data_dir);
// Explicit documents; an empty guidelines path skips the guideline store.
SemanticStores load_stores(const std::filesystem::path& rules, const std::filesystem::path& cwe_tree,
                           const std::filesystem::path& guidelines);

struct PipelineEnv {
    SessionEnv session;
    std::filesystem::path work_dir;  // comment file and logs/ live here
    ToolLimits limits;
    process::Runner* runner = nullptr;  // defaults to the subprocess runner
    std::string repo_id;                // defaults to the worktree directory name
};

ReviewReport run_pipeline(const PipelinePolicy& policy, const RepoContext& repo, const ChangeSet& changes,
                          const SemanticStores& stores, LlmBackend& backend, const PipelineEnv& env);

}  // namespace scr
