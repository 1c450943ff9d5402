#pragma once

#include "scr/llm.hpp"
#include "scr/repo.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scr {

// Transient per-session context, discarded when the pipeline completes.
struct WorkingMemory {
    ChangeSet current_diff;
    std::vector<CodeSlice> expanded_slices;
    std::vector<ToolResult> tool_results;
    std::vector<std::string> hypotheses;
};

struct ToolLimits {
    std::size_t max_output_bytes = 64 * 1024;
    std::size_t slice_budget = kDefaultSliceBudget;
    std::size_t max_grep_matches = 500;
    std::chrono::milliseconds bash_timeout{30000};
};

inline const std::set<std::string>& registered_tools() {
    static const std::set<std::string> names{"open_files", "expand_code_chunks", "grep", "expand_folder", "bash"};
    return names;
}

// Catalog entries offered to the model.
std::vector<ToolSpec> tool_catalog(const std::set<std::string>& allowed);

// Splits a command line into words (quotes and backslashes as in sh).
// Returns nullopt together with a reason when the line uses shell syntax
// (pipes, redirection, substitution, separators) outside quotes.
std::optional<std::vector<std::string>> tokenize_command(std::string_view line, std::string* reason = nullptr);

// nullopt when argv is allowlisted, otherwise the denial reason.
std::optional<std::string> bash_denial(const std::vector<std::string>& argv);

class ToolExecutor {
public:
    ToolExecutor(const RepoContext& repo, process::Runner& runner, ToolLimits limits = {});

    // Makes a file outside the worktree readable through open_files under
    // `alias` (e.g. "@resources/sast_rules.json" or the comment file path).
    void register_resource(const std::string& alias, const std::filesystem::path& path);

    // Runs one call and appends the result to working.tool_results. Never
    // throws for tool-level failures; those become status=error.
    ToolResult execute(const ToolCall& call, WorkingMemory& working);

    const ToolLimits& limits() const { return limits_; }

private:
    ToolResult open_files(const ToolCall& call);
    ToolResult expand_code_chunks(const ToolCall& call, WorkingMemory& working);
    ToolResult grep(const ToolCall& call);
    ToolResult expand_folder(const ToolCall& call);
    ToolResult bash(const ToolCall& call);

    void clip(ToolResult& r) const;

    const RepoContext& repo_;
    process::Runner& runner_;
    ToolLimits limits_;
    std::map<std::string, std::filesystem::path> resources_;
};

// Line-oriented search of the worktree (skipping .git and binary files).
// Results are "path:line:text", ordered by path then line.
std::vector<std::string> grep_worktree(const std::filesystem::path& root, const std::string& pattern, bool regex,
                                       bool ignore_case, const std::string& subdir = "",
                                       std::size_t max_matches = 0);

}  // namespace scr
