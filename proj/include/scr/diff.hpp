#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scr {

enum class LineMarker { Context, Add, Del };

struct DiffLine {
    LineMarker marker = LineMarker::Context;
    std::string text;
    bool no_newline_at_eof = false;

    bool operator==(const DiffLine&) const = default;
};

struct Hunk {
    int old_start = 0;
    int old_len = 0;
    int new_start = 0;
    int new_len = 0;
    std::string section;  // trailing text after the closing "@@"
    std::vector<DiffLine> lines;

    bool operator==(const Hunk&) const = default;
};

enum class ChangeType { Added, Modified, Deleted, Renamed };

std::string_view to_string(ChangeType t);

struct FileDiff {
    std::string path;      // post-change path (pre-change path for deletions)
    std::string old_path;  // pre-change path; equals path unless renamed
    ChangeType change_type = ChangeType::Modified;
    std::string old_mode;  // as printed by git, empty when absent
    std::string new_mode;
    bool binary = false;
    std::vector<Hunk> hunks;

    bool operator==(const FileDiff&) const = default;
};

enum class LineChange { Added, Modified };

struct LineKey {
    std::string path;
    int line = 0;

    auto operator<=>(const LineKey&) const = default;
    bool operator==(const LineKey&) const = default;
};

struct SkippedFile {
    std::string path;
    std::string reason;
};

// The staged pre-commit change: parsed per-file hunks plus an index of every
// added or modified line in post-change coordinates.
struct ChangeSet {
    std::vector<FileDiff> files;
    std::map<LineKey, LineChange> changed_lines;
    std::vector<SkippedFile> skipped;
    std::string raw_diff;

    bool contains(const std::string& path, int line) const {
        return changed_lines.contains(LineKey{path, line});
    }
    const FileDiff* find_file(std::string_view path) const;

    std::size_t added_count() const;
    std::size_t modified_count() const;
    // added + modified lines, the size measure used by case selection
    std::size_t changed_line_count() const { return changed_lines.size(); }
    // every line of every hunk including context and deletions
    std::size_t total_hunk_lines() const;
};

// Parses the output of `git diff` (or any unified diff). Throws
// Error{DiffParseError} with a byte offset on malformed hunk headers or when
// a hunk body does not match its header counts.
std::vector<FileDiff> parse_unified_diff(std::string_view text);

// Canonical git-style rendering of parsed file diffs.
std::string serialize_unified_diff(std::span<const FileDiff> files);

std::string format_hunk_header(const Hunk& h);

// Post-change line number -> change kind for one file. Within each run of
// deletions followed by additions, the first min(dels, adds) additions are
// modifications; the rest are pure additions.
std::map<int, LineChange> changed_lines_of(const FileDiff& file);

// Old-side line numbers removed (deleted or rewritten) by a file diff.
std::vector<int> removed_old_lines(const FileDiff& file);

// Builds the changed-line index. Files are ordered by path; binary and
// generated files are moved to `skipped`. Duplicate paths are rejected.
ChangeSet make_change_set(std::vector<FileDiff> files);

bool is_generated_path(std::string_view path);

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view in);

}  // namespace scr
