#include "support.hpp"

#include "scr/error.hpp"
#include "scr/repo.hpp"

#include <gtest/gtest.h>

using namespace scr;
using namespace scr::test;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no scr::Error thrown";
    return ErrorCode::IoError;
}

std::string numbered(int n) {
    std::string s;
    for (int i = 1; i <= n; ++i) s += "line " + std::to_string(i) + "\n";
    return s;
}

}  // namespace

TEST(Repo, OpenRejectsPlainDirectory) {
    TempDir tmp;
    EXPECT_EQ(code_of([&] { RepoContext::open(tmp.path()); }), ErrorCode::NotARepository);
    EXPECT_EQ(code_of([&] { RepoContext::open(tmp / "missing"); }), ErrorCode::NotARepository);
}

TEST(Repo, OpenBeforeFirstCommit) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    repo.write("a.py", "print(1)\n");
    repo.stage_all();
    RepoContext ctx = RepoContext::open(tmp.path());
    EXPECT_TRUE(ctx.head_commit.empty());
    ChangeSet cs = collect_staged_changes(ctx);
    ASSERT_EQ(cs.files.size(), 1u);
    EXPECT_EQ(cs.files[0].change_type, ChangeType::Added);
    EXPECT_TRUE(cs.contains("a.py", 1));
}

TEST(Repo, OpenFromSubdirectoryFindsRoot) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    repo.write("pkg/a.py", "x\n");
    repo.commit("c");
    RepoContext ctx = RepoContext::open(tmp / "pkg");
    EXPECT_EQ(ctx.root_path, tmp.path());
    EXPECT_EQ(ctx.head_commit, repo.head());
}

TEST(Repo, CleanIndexIsEmptyChangeSet) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    repo.write("a.py", "x\n");
    repo.commit("c");
    RepoContext ctx = RepoContext::open(tmp.path());
    EXPECT_EQ(code_of([&] { collect_staged_changes(ctx); }), ErrorCode::EmptyChangeSet);
    repo.write("a.py", "y\n");  // unstaged only
    EXPECT_EQ(code_of([&] { collect_staged_changes(ctx); }), ErrorCode::EmptyChangeSet);
    CollectOptions all;
    all.include_unstaged = true;
    ChangeSet cs = collect_staged_changes(ctx, all);
    EXPECT_TRUE(cs.contains("a.py", 1));
}

TEST(Repo, StagedDiffIgnoresUserDiffConfiguration) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    repo.write("a.py", numbered(10));
    repo.commit("c");
    // Hostile repository configuration must not change what we parse.
    repo.git_ok({"config", "diff.external", "false"});
    repo.git_ok({"config", "diff.noprefix", "true"});
    repo.git_ok({"config", "color.diff", "always"});
    repo.git_ok({"config", "diff.context", "0"});
    repo.write(".gitattributes", "*.py diff=weird\n");
    repo.git_ok({"config", "diff.weird.textconv", "false"});
    std::string text = numbered(10);
    text.replace(text.find("line 5"), 6, "LINE 5");
    repo.write("a.py", text);
    repo.stage_all();
    ChangeSet cs = collect_staged_changes(RepoContext::open(tmp.path()));
    const FileDiff* f = cs.find_file("a.py");
    ASSERT_NE(f, nullptr);
    ASSERT_EQ(f->hunks.size(), 1u);
    EXPECT_EQ(f->hunks[0].new_start, 2);  // three lines of context
    EXPECT_EQ(cs.changed_lines.at({"a.py", 5}), LineChange::Modified);
    EXPECT_EQ(cs.raw_diff.find("\x1b["), std::string::npos);
}

TEST(Repo, NonAsciiPathsAreNotQuoted) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    repo.write("caf\xc3\xa9.py", "a\n");
    repo.stage_all();
    ChangeSet cs = collect_staged_changes(RepoContext::open(tmp.path()));
    ASSERT_EQ(cs.files.size(), 1u);
    EXPECT_EQ(cs.files[0].path, "caf\xc3\xa9.py");
}

TEST(Repo, ExpandContextClampsAtFileEdges) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    repo.write("a.py", numbered(20));
    repo.commit("c");
    RepoContext ctx = RepoContext::open(tmp.path());
    CodeSlice s = expand_context(ctx, "a.py", {2, 3}, 5);
    EXPECT_EQ(s.start_line, 1);
    EXPECT_EQ(s.end_line, 8);
    EXPECT_EQ(split_lines(s.text).front(), "line 1");
    CodeSlice t = expand_context(ctx, "a.py", {19, 19}, 5);
    EXPECT_EQ(t.start_line, 14);
    EXPECT_EQ(t.end_line, 20);
    EXPECT_FALSE(t.truncated);
}

TEST(Repo, ExpandContextRespectsByteBudget) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    repo.write("a.py", numbered(200));
    repo.commit("c");
    CodeSlice s = expand_context(RepoContext::open(tmp.path()), "a.py", {100, 100}, 100, 64);
    EXPECT_TRUE(s.truncated);
    EXPECT_LE(s.text.size(), 64u);
}

TEST(Repo, ExpandContextErrors) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    repo.write("bin.dat", std::string("\x00\x01\x02", 3));
    repo.write("a.py", "x\n");
    repo.commit("c");
    RepoContext ctx = RepoContext::open(tmp.path());
    EXPECT_EQ(code_of([&] { expand_context(ctx, "nope.py", {1, 1}, 2); }), ErrorCode::FileNotFound);
    EXPECT_EQ(code_of([&] { expand_context(ctx, "bin.dat", {1, 1}, 2); }), ErrorCode::BinaryFile);
    EXPECT_EQ(code_of([&] { expand_context(ctx, "../etc/passwd", {1, 1}, 2); }), ErrorCode::FileNotFound);
    EXPECT_EQ(code_of([&] { resolve_in_repo(ctx, "/etc/passwd"); }), ErrorCode::FileNotFound);
}

TEST(Repo, ReviewDoesNotTouchTheRepository) {
    TempDir tmp;
    GitRepo repo = make_beaker_repo(tmp.path());
    std::string before = repo.git_ok({"status", "--porcelain=v1"});
    std::string index_before = read_file(tmp / ".git/index");
    RepoContext ctx = RepoContext::open(tmp.path());
    collect_staged_changes(ctx);
    expand_context(ctx, "beaker/session.py", {17, 18}, 3);
    EXPECT_EQ(repo.git_ok({"status", "--porcelain=v1"}), before);
    EXPECT_EQ(read_file(tmp / ".git/index"), index_before);
}

TEST(Repo, BeakerFixtureChangedLines) {
    TempDir tmp;
    make_beaker_repo(tmp.path());
    ChangeSet cs = collect_staged_changes(RepoContext::open(tmp.path()));
    BenchCase c = beaker_case();
    std::map<std::string, std::vector<int>> got;
    for (const auto& [k, v] : cs.changed_lines) got[k.path].push_back(k.line);
    EXPECT_EQ(got, c.staged_changed_lines);
    EXPECT_TRUE(cs.contains("beaker/crypto/pycrypto.py", 21));
}
