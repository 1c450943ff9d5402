#include "support.hpp"

#include "scr/error.hpp"
#include "scr/repo.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace scr::test {

fs::path fixtures_dir() { return SCR_TEST_FIXTURES; }
fs::path data_dir() { return SCR_TEST_DATA; }
fs::path golden_dir() { return SCR_TEST_GOLDEN; }
fs::path scr_binary() { return SCR_TEST_BINARY; }

TempDir::TempDir(const std::string& prefix) {
    std::string tmpl = (fs::temp_directory_path() / (prefix + "-XXXXXX")).string();
    if (!::mkdtemp(tmpl.data())) throw Error(ErrorCode::IoError, "mkdtemp failed");
    path_ = fs::canonical(tmpl);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

GitRepo::GitRepo(fs::path root, bool init) : root_(std::move(root)) {
    fs::create_directories(root_);
    if (init) git_ok({"init", "--quiet", "--initial-branch=main", "."});
}

void GitRepo::write(const std::string& rel, const std::string& content) const {
    fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
}

void GitRepo::remove(const std::string& rel) const { fs::remove(root_ / rel); }

std::string GitRepo::read(const std::string& rel) const { return read_file(root_ / rel); }

process::Result GitRepo::git(std::vector<std::string> args) const {
    process::Command cmd;
    cmd.argv = {"git", "-c", "user.name=Fixture", "-c", "user.email=fixture@example.com", "-c", "commit.gpgsign=false",
                "-c", "core.autocrlf=false", "-c", "init.defaultBranch=main"};
    cmd.argv.insert(cmd.argv.end(), args.begin(), args.end());
    cmd.cwd = root_;
    std::string date = "2012-08-0" + std::to_string(1 + tick_ % 9) + "T12:" + std::to_string(10 + tick_ % 50) + ":00Z";
    cmd.env = {{"GIT_AUTHOR_DATE", date}, {"GIT_COMMITTER_DATE", date}, {"GIT_CONFIG_NOSYSTEM", "1"},
               {"LC_ALL", "C"}};
    return process::default_runner().run(cmd);
}

std::string GitRepo::git_ok(std::vector<std::string> args) const {
    auto r = git(args);
    if (!r.ok()) {
        std::string line;
        for (const auto& a : args) line += " " + a;
        throw Error(ErrorCode::ProcessError, "git" + line + " failed: " + r.err);
    }
    return r.out;
}

void GitRepo::stage_all() const { git_ok({"add", "-A", "."}); }

std::string GitRepo::commit(const std::string& message) {
    stage_all();
    ++tick_;
    git_ok({"commit", "--quiet", "--allow-empty", "-m", message});
    return head();
}

std::string GitRepo::head() const {
    std::string out = git_ok({"rev-parse", "HEAD"});
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
}

void copy_tree(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

GitRepo make_beaker_repo(const fs::path& dir) {
    GitRepo repo(dir);
    copy_tree(fixtures_dir() / "beaker" / "base", dir);
    repo.commit("initial import");
    copy_tree(fixtures_dir() / "beaker" / "staged", dir);
    repo.stage_all();
    return repo;
}

BenchCase beaker_case() {
    BenchCase c;
    c.case_id = kBeakerRepoId;
    c.cve.cve_id = "CVE-2012-3458";
    c.cve.description =
        "Beaker before 1.6.4, when using PyCrypto to encrypt sessions, uses AES in ECB cipher mode, which might allow "
        "remote attackers to obtain portions of sensitive session information via unspecified vectors.";
    c.cve.repo_url = "https://github.com/bbangert/beaker";
    c.cve.fix_commit = "c52d7b6ed1558d44acc96bd4f3468ffc4a8e5219";
    c.cve.cwe_ids = {310};
    c.cve.language = "python";
    c.changed_line_count = 25;
    GroundTruth g;
    g.vulnerable_lines = {{"beaker/crypto/pycrypto.py", 21}};
    g.cwe_ids = {310};
    g.cve_description = c.cve.description;
    g.verified = true;
    c.ground_truth = g;
    c.staged_changed_lines["beaker/crypto/pycrypto.py"] = {12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28};
    c.staged_changed_lines["beaker/session.py"] = {1, 2, 3, 6, 7, 17, 18, 19};
    return c;
}

std::vector<std::string> apply_hunks(const std::vector<std::string>& old_lines, const FileDiff& diff) {
    std::vector<std::string> out;
    std::size_t pos = 0;  // 0-based index into old_lines
    for (const auto& h : diff.hunks) {
        std::size_t start = h.old_len == 0 ? static_cast<std::size_t>(h.old_start) : static_cast<std::size_t>(h.old_start - 1);
        while (pos < start && pos < old_lines.size()) out.push_back(old_lines[pos++]);
        for (const auto& l : h.lines) {
            if (l.marker == LineMarker::Context) {
                out.push_back(old_lines.at(pos++));
            } else if (l.marker == LineMarker::Del) {
                ++pos;
            } else {
                out.push_back(l.text);
            }
        }
    }
    while (pos < old_lines.size()) out.push_back(old_lines[pos++]);
    return out;
}

std::set<int> dfs_ancestors(const CweTree& tree, int id) {
    std::set<int> seen;
    if (!tree.contains(id)) return seen;
    std::vector<int> stack{id};
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        if (!seen.insert(cur).second) continue;
        for (int p : tree.find(cur)->parent_ids) stack.push_back(p);
    }
    return seen;
}

bool oracle_same_category(const CweTree& tree, int a, int b) {
    if (!tree.contains(a) || !tree.contains(b)) return false;
    auto pa = dfs_ancestors(tree, a), pb = dfs_ancestors(tree, b);
    for (int x : pa)
        if (tree.find(x)->parent_ids.empty() && pb.count(x)) return true;
    return false;
}

std::optional<int> oracle_localize(const std::string& file, int line, const std::set<LineKey>& truth, int tol) {
    std::optional<int> best;
    for (int d = 0; d <= tol; ++d) {
        for (int cand : {line - d, line + d}) {
            if (truth.count({file, cand})) {
                if (!best || cand < *best) best = cand;
            }
        }
        if (best) return best;
    }
    return std::nullopt;
}

std::vector<std::string> oracle_grep(const fs::path& root, const std::string& needle, bool icase) {
    std::vector<std::string> out;
    auto lower = [](std::string s) {
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    std::string n = icase ? lower(needle) : needle;
    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
        if (it->is_directory() && it->path().filename() == ".git") {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file()) files.push_back(it->path());
    }
    std::vector<std::pair<std::string, fs::path>> rel;
    for (const auto& f : files) rel.emplace_back(fs::relative(f, root).generic_string(), f);
    std::sort(rel.begin(), rel.end());
    for (const auto& [name, f] : rel) {
        std::ifstream in(f, std::ios::binary);
        std::string line;
        int no = 0;
        while (std::getline(in, line)) {
            ++no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string hay = icase ? lower(line) : line;
            if (hay.find(n) != std::string::npos) out.push_back(name + ":" + std::to_string(no) + ":" + line);
        }
    }
    return out;
}

std::string random_line(std::mt19937& rng, int id) {
    static const char* words[] = {"value", "total", "user", "token", "request", "item", "count", "path", "key", "data"};
    std::uniform_int_distribution<int> w(0, 9);
    std::ostringstream s;
    s << words[w(rng)] << "_" << id << " = " << words[w(rng)] << "(" << id * 7 % 13 << ")";
    return s.str();
}

std::vector<std::string> oracle_filter(const std::vector<SecurityComment>& in, const ChangeSet& cs, int radius) {
    std::vector<std::string> ids;
    for (const auto& c : in) {
        bool hit = false;
        for (int l = c.start_line - radius; l <= c.end_line + radius; ++l) hit |= cs.contains(c.file, l);
        if (hit) ids.push_back(c.comment_id);
    }
    return ids;
}

std::string join_lines(const Lines& v) {
    std::string s;
    for (const auto& l : v) s += l + "\n";
    return s;
}

bool contains_line(const Lines& v, const std::string& s) { return std::find(v.begin(), v.end(), s) != v.end(); }

Lines mutate_lines(const Lines& in, std::mt19937& rng, int& id, int rate) {
    std::uniform_int_distribution<int> op(0, 3 * rate);
    Lines out;
    for (const auto& l : in) {
        int o = op(rng);
        if (o == 0) continue;
        if (o == 1) {
            out.push_back(random_line(rng, ++id));
            continue;
        }
        if (o == 2) out.push_back(random_line(rng, ++id));
        out.push_back(l);
    }
    if (op(rng) < 3) out.push_back(random_line(rng, ++id));
    if (out == in) out.push_back(random_line(rng, ++id));
    return out;
}

Lines fresh_lines(std::mt19937& rng, int& id, int lo, int hi) {
    std::uniform_int_distribution<int> n(lo, hi);
    Lines v;
    for (int i = n(rng); i > 0; --i) v.push_back(random_line(rng, ++id));
    return v;
}

void write_snapshot(const GitRepo& repo, const Snapshot& prev, const Snapshot& next) {
    for (const auto& [f, _] : prev)
        if (!next.count(f)) repo.remove(f);
    for (const auto& [f, lines] : next) repo.write(f, join_lines(lines));
}

std::set<std::pair<std::string, int>> oracle_candidates(const Snapshot& base, const Snapshot& introduced,
                                                        const Snapshot& fix_parent, const Snapshot& fixed) {
    std::set<std::pair<std::string, int>> want;
    for (const auto& [f, lines] : introduced) {
        auto fp = fix_parent.find(f);
        if (fp == fix_parent.end()) continue;
        const Lines none;
        const Lines& before = base.count(f) ? base.at(f) : none;
        const Lines& after = fixed.count(f) ? fixed.at(f) : none;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto& t = lines[i];
            if (contains_line(before, t)) continue;
            if (contains_line(fp->second, t) && !contains_line(after, t)) want.insert({f, static_cast<int>(i) + 1});
        }
    }
    return want;
}

}  // namespace scr::test
