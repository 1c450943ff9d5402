#pragma once

#include "scr/comments.hpp"
#include "scr/diff.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace scr {

enum class SastTool { Codeql, Semgrep, Snyk };

std::string_view to_string(SastTool t);
SastTool parse_sast_tool(std::string_view name);  // throws UnsupportedFormat

struct SarifOptions {
    std::filesystem::path repo_root;  // absolute result URIs are made relative to it
    std::string id_prefix;            // comment ids become <prefix>-<n>; default: producer name
};

struct NormalizedRun {
    std::vector<SecurityComment> comments;
    std::size_t dropped = 0;  // results without a usable physical location
    std::string format;       // "sarif", "semgrep-json", "codeql-csv"
    std::string tool_name;
    std::string tool_version;
};

// One comment per SARIF 2.1.0 result located by its first physical location.
// Throws SarifParseError.
NormalizedRun parse_sarif(std::string_view payload, const SarifOptions& opts = {});

struct RawToolRun {
    SastTool tool = SastTool::Codeql;
    std::string version;
    std::string payload;
    std::string repo;
};

// SARIF when the payload carries `runs`, otherwise the tool-native format
// (semgrep JSON, CodeQL CSV). Throws UnsupportedFormat.
NormalizedRun normalize_tool_output(const RawToolRun& run, const SarifOptions& opts = {});

// Keeps comments with some line of [start-radius, end+radius] among the
// changed lines of the same file.
std::vector<SecurityComment> filter_to_changeset(const std::vector<SecurityComment>& comments,
                                                 const ChangeSet& change_set, int radius = 0);

}  // namespace scr
