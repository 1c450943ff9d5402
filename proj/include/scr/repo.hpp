#pragma once

#include "scr/diff.hpp"
#include "scr/process.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace scr {

// A git working tree under review. Nothing in this module writes to it.
struct RepoContext {
    std::filesystem::path root_path;
    std::string head_commit;  // empty before the first commit
    bool staged = false;

    // Throws Error{NotARepository}.
    static RepoContext open(const std::filesystem::path& path,
                            process::Runner& runner = process::default_runner());
};

// argv for a read-only git invocation with pager, colour, fsmonitor and
// external diff drivers disabled.
std::vector<std::string> git_argv(std::vector<std::string> args);

process::Result run_git(const std::filesystem::path& root, std::vector<std::string> args,
                        process::Runner& runner = process::default_runner());

// Like run_git but throws Error{ProcessError} with stderr on non-zero exit.
std::string git_output(const std::filesystem::path& root, std::vector<std::string> args,
                       process::Runner& runner = process::default_runner());

// Flags shared by every diff the tool reads, so staged and commit diffs are
// structurally comparable.
std::vector<std::string> diff_flags();

struct CollectOptions {
    bool include_unstaged = false;  // diff HEAD instead of the index
};

// Staged changes of the repository. Throws EmptyChangeSet when the staged
// diff is empty and DiffParseError when git output cannot be parsed.
ChangeSet collect_staged_changes(const RepoContext& repo, const CollectOptions& opts = {},
                                 process::Runner& runner = process::default_runner());

struct LineRange {
    int start = 1;
    int end = 1;
};

struct CodeSlice {
    std::string path;
    int start_line = 1;
    int end_line = 0;
    std::string text;
    bool truncated = false;
};

inline constexpr std::size_t kDefaultSliceBudget = 16 * 1024;

// Resolves a repo-relative path, rejecting anything that escapes the root.
std::filesystem::path resolve_in_repo(const RepoContext& repo, const std::string& rel_path);

// Lines [max(1, start-radius), min(len, end+radius)] of a worktree file.
// Throws FileNotFound or BinaryFile.
CodeSlice expand_context(const RepoContext& repo, const std::string& path, LineRange center, int radius,
                         std::size_t byte_budget = kDefaultSliceBudget);

bool looks_binary(std::string_view content);

std::vector<std::string> split_lines(std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace scr
