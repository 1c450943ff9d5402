#pragma once

#include "scr/diff.hpp"
#include "scr/json_util.hpp"
#include "scr/memory.hpp"
#include "scr/repo.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scr {

struct CveRecord {
    std::string cve_id;
    std::string description;
    std::string repo_url;
    std::string fix_commit;
    std::vector<std::string> introducing_commits;
    std::vector<int> cwe_ids;
    std::string language;

    bool operator==(const CveRecord&) const = default;
};

CveRecord cve_record_from_json(const json& j, const std::string& path);
json to_json(const CveRecord& r);
// JSON lines, one record per line; blank lines ignored. Throws SchemaError.
std::vector<CveRecord> parse_cve_corpus(std::string_view text);
std::vector<CveRecord> load_cve_corpus(const std::filesystem::path& path);

struct GroundTruth {
    std::set<LineKey> vulnerable_lines;
    std::vector<int> cwe_ids;
    std::string cve_description;
    bool verified = false;
    std::string notes;

    bool operator==(const GroundTruth&) const = default;
};

json to_json(const GroundTruth& g);
GroundTruth ground_truth_from_json(const json& j, const std::string& path);

struct BenchCase {
    std::string case_id;  // "<CVE>-<sha7>"
    CveRecord cve;
    std::string sandbox_commit;     // earliest introducing commit
    std::string pre_commit_parent;  // its parent
    int changed_line_count = 0;     // added + modified lines of the staged diff
    std::map<std::string, std::vector<int>> staged_changed_lines;
    std::optional<GroundTruth> ground_truth;

    bool operator==(const BenchCase&) const = default;
};

json to_json(const BenchCase& c);
BenchCase bench_case_from_json(const json& j, const std::string& path);

std::string make_case_id(const std::string& cve_id, const std::string& commit);

// Bare clones keyed by repository URL; local paths are accepted as URLs.
class CloneCache {
public:
    CloneCache(std::filesystem::path dir, process::Runner& runner = process::default_runner());

    // Path of the cached bare clone. Throws RepoUnavailable.
    std::filesystem::path ensure(const std::string& url);

    process::Runner& runner() { return runner_; }

private:
    std::filesystem::path dir_;
    process::Runner& runner_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<std::mutex>> per_url_;
};

struct SelectionCriteria {
    int max_chain = 3;
    int max_changed_lines = 112;
    std::set<std::string> languages{"python", "javascript", "typescript"};
};

// Accepts py/js/ts and full names; returns the canonical lowercase name.
std::string canonical_language(std::string_view lang);

struct Rejection {
    std::string cve_id;
    std::string reason;  // chain_too_long, no_introducing_commit, language, repo_unavailable,
                         // commit_not_found, root_commit, too_many_changed_lines, empty_change
    std::string detail;
};

struct SelectionReport {
    std::vector<BenchCase> cases;
    std::vector<Rejection> rejections;
    std::map<std::string, int> rejection_counts;
    int total = 0;

    json summary() const;
};

// Cheap criteria are checked before any clone: chain length, then language,
// then repository availability, commit resolution and diff size.
SelectionReport select_cases(const std::vector<CveRecord>& records, const SelectionCriteria& criteria,
                             CloneCache& cache);

// Resolves the earliest introducing commit and its parent inside a clone.
// Throws CommitNotFound.
std::pair<std::string, std::string> resolve_sandbox_commits(const std::filesystem::path& clone,
                                                            const CveRecord& record, process::Runner& runner);

// Clones into <workdir>/<case_id>, checks out the sandbox commit, then runs
// `git reset HEAD~1` and `git add .` so the commit's changes are staged on
// top of its parent. Throws CloneFailed, CommitNotFound, StagedDiffMismatch.
RepoContext build_sandbox(const BenchCase& bench_case, const std::filesystem::path& workdir, CloneCache& cache);

struct Candidate {
    std::string file;
    int line = 0;  // post-change line at the sandbox commit
    std::string text;
    std::string rationale;

    bool operator==(const Candidate&) const = default;
};

struct CandidateSet {
    std::vector<Candidate> candidates;
    std::vector<Candidate> ambiguous;  // traces that only survive through a content match
};

// Maps an old-side line through a file diff: the new line number when the
// line is kept, nullopt when it is deleted or rewritten.
std::optional<int> map_line_through(const FileDiff& diff, int old_line);

// Staged added/modified lines of the sandbox commit that the fix commit
// rewrites or deletes, traced through every commit in between.
CandidateSet derive_candidate_lines(const std::filesystem::path& repo, const BenchCase& bench_case,
                                    process::Runner& runner = process::default_runner());

// Annotation sheets: candidates with code context for a human verifier.
json export_annotation_sheet(const BenchCase& bench_case, const CandidateSet& candidates,
                             const std::filesystem::path& sandbox, const CweTree* tree = nullptr);
// Throws SheetSchemaError or EmptyVerifiedSet.
GroundTruth import_ground_truth(const json& sheet);

// Ground-truth bundle: one <case_id>.json per case.
void write_bundle_case(const std::filesystem::path& dir, const BenchCase& bench_case);
std::vector<BenchCase> load_bundle(const std::filesystem::path& dir);

// Ground-truth invariants: verified, non-empty, every line staged.
// Returns one message per violation.
std::vector<std::string> verify_case(const BenchCase& bench_case);

}  // namespace scr
