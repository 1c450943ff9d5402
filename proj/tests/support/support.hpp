#pragma once

#include "scr/bench.hpp"
#include "scr/comments.hpp"
#include "scr/diff.hpp"
#include "scr/eval.hpp"
#include "scr/memory.hpp"
#include "scr/process.hpp"

#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace scr::test {

namespace fs = std::filesystem;

fs::path fixtures_dir();
fs::path data_dir();
fs::path golden_dir();
fs::path scr_binary();

class TempDir {
public:
    explicit TempDir(const std::string& prefix = "scr-test");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

// Git working tree with a fixed identity and clock so commit ids are
// reproducible.
class GitRepo {
public:
    explicit GitRepo(fs::path root, bool init = true);
    const fs::path& root() const { return root_; }

    void write(const std::string& rel, const std::string& content) const;
    void remove(const std::string& rel) const;
    std::string read(const std::string& rel) const;
    process::Result git(std::vector<std::string> args) const;
    std::string git_ok(std::vector<std::string> args) const;
    void stage_all() const;
    std::string commit(const std::string& message);
    std::string head() const;

private:
    fs::path root_;
    int tick_ = 0;
};

void copy_tree(const fs::path& from, const fs::path& to);

// Fixture repository for the ECB walkthrough: base commit plus staged change.
GitRepo make_beaker_repo(const fs::path& dir);
inline const char* kBeakerRepoId = "CVE-2012-3458-beaker";
BenchCase beaker_case();

// ---- oracles

// Applies parsed hunks to the old text; returns the reconstructed new lines.
std::vector<std::string> apply_hunks(const std::vector<std::string>& old_lines, const FileDiff& diff);

// Reflexive ancestor set by explicit stack DFS over parent edges.
std::set<int> dfs_ancestors(const CweTree& tree, int id);
bool oracle_same_category(const CweTree& tree, int a, int b);

// Nearest truth line in the same file within tolerance, ties to the smaller.
std::optional<int> oracle_localize(const std::string& file, int line, const std::set<LineKey>& truth, int tol);

// Straight line scan of the worktree, as grep -rn would print it.
std::vector<std::string> oracle_grep(const fs::path& root, const std::string& needle, bool icase);

std::string random_line(std::mt19937& rng, int id);

// Brute force: ids of comments whose range, widened by radius, touches a
// changed line.
std::vector<std::string> oracle_filter(const std::vector<SecurityComment>& in, const ChangeSet& cs, int radius);

// ---- synthetic histories

using Lines = std::vector<std::string>;
using Snapshot = std::map<std::string, Lines>;

std::string join_lines(const Lines& v);
bool contains_line(const Lines& v, const std::string& s);

// Random insert/rewrite/delete pass. Every new line is globally unique, so
// a line's content identifies it across history.
Lines mutate_lines(const Lines& in, std::mt19937& rng, int& id, int rate = 5);
Lines fresh_lines(std::mt19937& rng, int& id, int lo, int hi);
void write_snapshot(const GitRepo& repo, const Snapshot& prev, const Snapshot& next);

// Content-tracking candidate oracle over unique lines: a line added by the
// introducing commit (base -> introduced) is a candidate iff its text is
// still in the file at the fix parent and gone after the fix.
std::set<std::pair<std::string, int>> oracle_candidates(const Snapshot& base, const Snapshot& introduced,
                                                        const Snapshot& fix_parent, const Snapshot& fixed);

}  // namespace scr::test
