#include "support.hpp"

#include "scr/error.hpp"
#include "scr/repo.hpp"

#include <gtest/gtest.h>

using namespace scr;
using namespace scr::test;

namespace {

const char* kTwoFiles =
    "diff --git a/app.py b/app.py\n"
    "index 1111111..2222222 100644\n"
    "--- a/app.py\n"
    "+++ b/app.py\n"
    "@@ -1,4 +1,5 @@ def main():\n"
    " import os\n"
    "-x = 1\n"
    "+x = 2\n"
    "+y = 3\n"
    " z = 4\n"
    " w = 5\n"
    "diff --git a/new.js b/new.js\n"
    "new file mode 100644\n"
    "index 0000000..3333333\n"
    "--- /dev/null\n"
    "+++ b/new.js\n"
    "@@ -0,0 +1,2 @@\n"
    "+const a = 1;\n"
    "+const b = 2;\n"
    "\\ No newline at end of file\n";

std::vector<std::string> lines_of(const std::string& s) { return split_lines(s); }

}  // namespace

TEST(Diff, ParsesTwoFilesWithHeaders) {
    auto files = parse_unified_diff(kTwoFiles);
    ASSERT_EQ(files.size(), 2u);
    EXPECT_EQ(files[0].path, "app.py");
    EXPECT_EQ(files[0].change_type, ChangeType::Modified);
    ASSERT_EQ(files[0].hunks.size(), 1u);
    EXPECT_EQ(files[0].hunks[0].section, "def main():");
    EXPECT_EQ(files[0].hunks[0].new_len, 5);
    EXPECT_EQ(files[1].path, "new.js");
    EXPECT_EQ(files[1].change_type, ChangeType::Added);
    EXPECT_TRUE(files[1].hunks[0].lines.back().no_newline_at_eof);
}

TEST(Diff, ModifiedVersusAddedClassification) {
    auto files = parse_unified_diff(kTwoFiles);
    auto m = changed_lines_of(files[0]);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.at(2), LineChange::Modified);
    EXPECT_EQ(m.at(3), LineChange::Added);
    auto n = changed_lines_of(files[1]);
    EXPECT_EQ(n.at(1), LineChange::Added);
    EXPECT_EQ(n.at(2), LineChange::Added);
}

TEST(Diff, RemovedOldLines) {
    auto files = parse_unified_diff(kTwoFiles);
    EXPECT_EQ(removed_old_lines(files[0]), std::vector<int>{2});
    EXPECT_TRUE(removed_old_lines(files[1]).empty());
}

TEST(Diff, SerializeRoundTrip) {
    auto files = parse_unified_diff(kTwoFiles);
    std::string text = serialize_unified_diff(files);
    EXPECT_EQ(parse_unified_diff(text), files);
}

TEST(Diff, RenameAndDelete) {
    const char* text =
        "diff --git a/old name.py b/src/new.py\n"
        "similarity index 90%\n"
        "rename from old name.py\n"
        "rename to src/new.py\n"
        "index 1..2 100644\n"
        "--- a/old name.py\n"
        "+++ b/src/new.py\n"
        "@@ -1 +1 @@\n"
        "-a\n"
        "+b\n"
        "diff --git a/gone.txt b/gone.txt\n"
        "deleted file mode 100644\n"
        "index 3..0000000\n"
        "--- a/gone.txt\n"
        "+++ /dev/null\n"
        "@@ -1,2 +0,0 @@\n"
        "-x\n"
        "-y\n";
    auto files = parse_unified_diff(text);
    ASSERT_EQ(files.size(), 2u);
    EXPECT_EQ(files[0].change_type, ChangeType::Renamed);
    EXPECT_EQ(files[0].old_path, "old name.py");
    EXPECT_EQ(files[0].path, "src/new.py");
    EXPECT_EQ(files[1].change_type, ChangeType::Deleted);
    EXPECT_TRUE(changed_lines_of(files[1]).empty());
}

TEST(Diff, QuotedPathsAreUnescaped) {
    const char* text =
        "diff --git \"a/caf\\303\\251.py\" \"b/caf\\303\\251.py\"\n"
        "index 1..2 100644\n"
        "--- \"a/caf\\303\\251.py\"\n"
        "+++ \"b/caf\\303\\251.py\"\n"
        "@@ -1 +1 @@\n"
        "-a\n"
        "+b\n";
    auto files = parse_unified_diff(text);
    ASSERT_EQ(files.size(), 1u);
    EXPECT_EQ(files[0].path, "caf\xc3\xa9.py");
}

TEST(Diff, MalformedHunkHeaderReportsOffset) {
    std::string text = "diff --git a/x b/x\n--- a/x\n+++ b/x\n@@ -1,2 +1,x @@\n a\n";
    try {
        parse_unified_diff(text);
        FAIL() << "expected DiffParseError";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DiffParseError);
        ASSERT_TRUE(e.offset().has_value());
        EXPECT_EQ(*e.offset(), text.find("@@"));
    }
}

TEST(Diff, ShortHunkBodyIsRejected) {
    std::string text = "diff --git a/x b/x\n--- a/x\n+++ b/x\n@@ -1,3 +1,3 @@\n a\n-b\n+c\n";
    try {
        parse_unified_diff(text);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DiffParseError);
    }
}

TEST(Diff, EmptyInputYieldsNoFiles) { EXPECT_TRUE(parse_unified_diff("").empty()); }

TEST(Diff, GeneratedAndBinaryFilesAreSkipped) {
    const char* text =
        "diff --git a/package-lock.json b/package-lock.json\n"
        "index 1..2 100644\n"
        "--- a/package-lock.json\n"
        "+++ b/package-lock.json\n"
        "@@ -1 +1 @@\n"
        "-{}\n"
        "+{ }\n"
        "diff --git a/logo.png b/logo.png\n"
        "index 1..2 100644\n"
        "Binary files a/logo.png and b/logo.png differ\n"
        "diff --git a/a.py b/a.py\n"
        "index 1..2 100644\n"
        "--- a/a.py\n"
        "+++ b/a.py\n"
        "@@ -1 +1 @@\n"
        "-1\n"
        "+2\n";
    ChangeSet cs = make_change_set(parse_unified_diff(text));
    ASSERT_EQ(cs.files.size(), 1u);
    EXPECT_EQ(cs.files[0].path, "a.py");
    ASSERT_EQ(cs.skipped.size(), 2u);
    EXPECT_TRUE(cs.contains("a.py", 1));
    EXPECT_FALSE(cs.contains("package-lock.json", 1));
}

TEST(Diff, SanitizeUtf8ReplacesInvalidBytes) {
    EXPECT_EQ(sanitize_utf8("ok\xff!"), "ok\xef\xbf\xbd!");
    EXPECT_EQ(sanitize_utf8("caf\xc3\xa9"), "caf\xc3\xa9");
}

// Randomized edits committed through git: the parsed hunks must rebuild the
// new file from the old one, and the changed-line index must account for
// exactly the '+' lines.
TEST(Diff, RandomizedGitDiffsRebuildNewContent) {
    TempDir tmp;
    GitRepo repo(tmp.path());
    std::mt19937 rng(20240611);
    int id = 0;
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<int> len(0, 40);
        std::vector<std::string> old_lines;
        int n = len(rng);
        for (int i = 0; i < n; ++i) old_lines.push_back(random_line(rng, ++id));
        std::string old_text;
        for (const auto& l : old_lines) old_text += l + "\n";
        repo.write("f.py", old_text);
        repo.commit("base " + std::to_string(trial));

        std::vector<std::string> new_lines;
        std::uniform_int_distribution<int> op(0, 9);
        for (const auto& l : old_lines) {
            int o = op(rng);
            if (o == 0) continue;                                   // delete
            if (o == 1) { new_lines.push_back(random_line(rng, ++id)); continue; }  // rewrite
            if (o == 2) new_lines.push_back(random_line(rng, ++id));  // insert before
            new_lines.push_back(l);
        }
        if (op(rng) < 3) new_lines.push_back(random_line(rng, ++id));
        std::string new_text;
        for (const auto& l : new_lines) new_text += l + "\n";
        if (new_text == old_text) new_text += "tail = 1\n", new_lines.push_back("tail = 1");
        repo.write("f.py", new_text);
        repo.stage_all();

        ChangeSet cs = collect_staged_changes(RepoContext::open(tmp.path()));
        ASSERT_EQ(cs.files.size(), 1u);
        EXPECT_EQ(apply_hunks(old_lines, cs.files[0]), lines_of(new_text)) << "trial " << trial;
        std::size_t plus = 0;
        for (const auto& h : cs.files[0].hunks)
            for (const auto& l : h.lines) plus += l.marker == LineMarker::Add;
        EXPECT_EQ(cs.changed_line_count(), plus);
        for (const auto& [k, kind] : cs.changed_lines) {
            ASSERT_GE(k.line, 1);
            ASSERT_LE(k.line, static_cast<int>(new_lines.size()));
        }
        repo.commit("edit " + std::to_string(trial));
    }
}
