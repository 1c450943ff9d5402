#pragma once

#include "scr/json_util.hpp"
#include "scr/memory.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace scr {

enum class Producer { Agentic, StaticLlm, Codeql, Semgrep, Snyk, Other };
enum class CommentStatus { Proposed, Validated, Filtered };

std::string_view to_string(Producer p);
std::string_view to_string(CommentStatus s);
Producer parse_producer(std::string_view s);  // unknown -> Other

struct SecurityComment {
    std::string comment_id;
    std::string file;
    int start_line = 1;
    int end_line = 1;
    std::string comment;
    std::optional<int> cwe_id;
    std::optional<std::string> cwe_name;
    Severity severity = Severity::Medium;
    std::vector<std::string> evidence;
    std::optional<std::string> rule_id;
    Producer producer = Producer::Other;
    CommentStatus status = CommentStatus::Proposed;

    bool operator==(const SecurityComment&) const = default;
};

enum class Decision { Keep, Filter };

struct ValidationVerdict {
    std::string comment_id;
    Decision decision = Decision::Filter;
    std::vector<int> matched_cwes;
    std::string criteria_notes;

    bool operator==(const ValidationVerdict&) const = default;
};

struct FileSummary {
    std::string path;
    std::string change_type;
    int added = 0;
    int modified = 0;
    bool operator==(const FileSummary&) const = default;
};

struct SessionRef {
    std::string agent;
    std::string session_id;
    std::string log_file;
    std::string status;
    bool operator==(const SessionRef&) const = default;
};

struct ReviewReport {
    std::string repo;
    std::string head_commit;
    std::vector<FileSummary> files;
    std::vector<std::string> skipped_files;
    std::vector<SecurityComment> comments;
    std::vector<ValidationVerdict> verdicts;
    std::vector<SessionRef> sessions;
    std::map<std::string, std::string> metadata;

    bool operator==(const ReviewReport&) const = default;

    std::size_t count(CommentStatus s) const;
};

json to_json(const SecurityComment& c);
json to_json(const ValidationVerdict& v);
json to_json(const ReviewReport& r);

// Strict parse of a SecurityComment record. `path` prefixes schema errors.
SecurityComment comment_from_json(const json& j, const std::string& path);
ValidationVerdict verdict_from_json(const json& j, const std::string& path);
ReviewReport report_from_json(const json& j);

// The comment-file wire format: a JSON array of SecurityComment records.
std::string serialize_comment_file(const std::vector<SecurityComment>& comments);
std::vector<SecurityComment> parse_comment_file(std::string_view text);

// Merges comments on the same file and CWE whose line ranges overlap,
// keeping the longest text and the union of evidence. Output is ordered by
// (file, start_line) and is a fixed point: dedupe(dedupe(x)) == dedupe(x).
std::vector<SecurityComment> dedupe(std::vector<SecurityComment> comments);

// keep -> validated, filter -> filtered; uncovered comments stay proposed.
// A kept comment without a CWE takes the first matched CWE; if it still has
// none it is filtered. Throws UnknownCommentId.
std::vector<SecurityComment> apply_verdicts(std::vector<SecurityComment> comments,
                                            const std::vector<ValidationVerdict>& verdicts,
                                            const CweTree* tree = nullptr);

void emit_report(const ReviewReport& report, const std::filesystem::path& destination);
std::string render_report(const ReviewReport& report);
ReviewReport parse_report(std::string_view text);
ReviewReport load_report_file(const std::filesystem::path& path);

}  // namespace scr
