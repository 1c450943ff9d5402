#include "support.hpp"

#include "scr/error.hpp"
#include "scr/repo.hpp"
#include "scr/sast.hpp"

#include <gtest/gtest.h>

using namespace scr;
using namespace scr::test;

namespace {

std::string fixture(const std::string& name, const fs::path& root = {}) {
    std::string s = read_file(fixtures_dir() / "sarif" / name);
    for (auto pos = s.find("@ROOT@"); pos != std::string::npos; pos = s.find("@ROOT@"))
        s.replace(pos, 6, root.string());
    return s;
}

const SecurityComment* by_line(const std::vector<SecurityComment>& v, const std::string& file, int line) {
    for (const auto& c : v)
        if (c.file == file && c.start_line == line) return &c;
    return nullptr;
}

std::vector<std::string> ids_of(const std::vector<SecurityComment>& v) {
    std::vector<std::string> out;
    for (const auto& c : v) out.push_back(c.comment_id);
    return out;
}

struct BeakerChange {
    TempDir tmp;
    ChangeSet cs;
    BeakerChange() {
        make_beaker_repo(tmp.path());
        cs = collect_staged_changes(RepoContext::open(tmp.path()));
    }
};

}  // namespace

TEST(Sarif, CodeqlNormalization) {
    TempDir root;
    SarifOptions opts;
    opts.repo_root = root.path();
    NormalizedRun run = parse_sarif(fixture("codeql.sarif", root.path()), opts);
    EXPECT_EQ(run.format, "sarif");
    EXPECT_EQ(run.tool_name, "CodeQL");
    EXPECT_EQ(run.tool_version, "2.23.3");
    EXPECT_EQ(run.dropped, 1u);
    ASSERT_EQ(run.comments.size(), 6u);
    for (const auto& c : run.comments) EXPECT_EQ(c.producer, Producer::Codeql);

    const auto* ecb = by_line(run.comments, "beaker/crypto/pycrypto.py", 21);
    ASSERT_NE(ecb, nullptr);
    EXPECT_EQ(ecb->cwe_id, 327);  // from tags
    EXPECT_EQ(ecb->cwe_name, "Use of a Broken or Risky Cryptographic Algorithm");  // from the run taxonomy
    EXPECT_EQ(ecb->severity, Severity::High);  // security-severity 7.5
    EXPECT_EQ(ecb->rule_id, "py/weak-cryptographic-algorithm");

    const auto* hash = by_line(run.comments, "beaker/crypto/pycrypto.py", 7);
    ASSERT_NE(hash, nullptr);
    EXPECT_EQ(hash->cwe_id, 328);  // taxonomy reference on the result wins over tags
    EXPECT_EQ(hash->rule_id, "py/weak-sensitive-data-hashing");
    EXPECT_EQ(hash->severity, Severity::Medium);

    const auto* log = by_line(run.comments, "beaker/session.py", 19);
    ASSERT_NE(log, nullptr);
    EXPECT_EQ(log->cwe_id, 532);  // rule relationship
    EXPECT_EQ(log->cwe_name, "Insertion of Sensitive Information into Log File");
    EXPECT_EQ(log->comment, "This expression logs self.id as clear text.");
    EXPECT_EQ(log->evidence, std::vector<std::string>{"beaker/session.py:18"});

    const auto* abs = by_line(run.comments, "beaker/session.py", 14);
    ASSERT_NE(abs, nullptr);
    EXPECT_EQ(abs->end_line, 17);
    EXPECT_NE(by_line(run.comments, "beaker/crypto/pycrypto.py", 8), nullptr);  // "./" stripped
}

TEST(Sarif, SemgrepTagsCarryCweNames) {
    NormalizedRun run = parse_sarif(fixture("semgrep.sarif"));
    ASSERT_EQ(run.comments.size(), 2u);
    const auto& c = run.comments[0];
    EXPECT_EQ(c.producer, Producer::Semgrep);
    EXPECT_EQ(c.cwe_id, 327);
    EXPECT_EQ(c.cwe_name, "Use of a Broken or Risky Cryptographic Algorithm");
    EXPECT_EQ(c.severity, Severity::High);  // result level error
    EXPECT_FALSE(run.comments[1].cwe_id.has_value());
    EXPECT_EQ(run.comments[1].severity, Severity::Info);
}

TEST(Sarif, SnykCweProperty) {
    NormalizedRun run = parse_sarif(fixture("snyk.sarif"));
    ASSERT_EQ(run.comments.size(), 3u);
    EXPECT_EQ(run.comments[0].producer, Producer::Snyk);
    EXPECT_EQ(run.comments[0].cwe_id, 330);
    EXPECT_EQ(run.comments[0].comment, "random.random is not suitable for security tokens");
    EXPECT_EQ(run.comments[1].cwe_id, 916);
    EXPECT_EQ(run.tool_version, "1.130.0");
}

TEST(Sarif, ParseErrors) {
    auto code = [](std::string_view s) {
        try {
            parse_sarif(s);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code("{"), ErrorCode::SarifParseError);
    EXPECT_EQ(code("{}"), ErrorCode::SarifParseError);
    EXPECT_EQ(code(R"({"runs":[{}]})"), ErrorCode::SarifParseError);
    EXPECT_EQ(code(R"({"runs":[{"tool":{"driver":{"name":"x"}},"results":{}}]})"), ErrorCode::SarifParseError);
}

TEST(Sarif, NativeFormats) {
    RawToolRun sg{SastTool::Semgrep, "", fixture("semgrep.json"), ""};
    NormalizedRun a = normalize_tool_output(sg);
    EXPECT_EQ(a.format, "semgrep-json");
    EXPECT_EQ(a.tool_version, "1.140.0");
    ASSERT_EQ(a.comments.size(), 2u);
    EXPECT_EQ(a.comments[0].cwe_id, 327);
    EXPECT_EQ(a.comments[0].severity, Severity::Medium);
    EXPECT_EQ(a.comments[1].severity, Severity::Info);

    RawToolRun csv{SastTool::Codeql, "2.23.3", fixture("codeql.csv"), ""};
    NormalizedRun b = normalize_tool_output(csv);
    EXPECT_EQ(b.format, "codeql-csv");
    ASSERT_EQ(b.comments.size(), 3u);
    EXPECT_EQ(b.comments[0].file, "beaker/crypto/pycrypto.py");
    EXPECT_EQ(b.comments[1].comment, "This expression logs \"self.id\" as clear text.");
    EXPECT_EQ(b.tool_version, "2.23.3");

    RawToolRun snyk{SastTool::Snyk, "", fixture("snyk.sarif"), ""};
    EXPECT_EQ(normalize_tool_output(snyk).comments[0].producer, Producer::Snyk);
}

TEST(Sarif, UnsupportedPayloads) {
    auto code = [](RawToolRun r) {
        try {
            normalize_tool_output(r);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code({SastTool::Snyk, "", "a,b,c\n", ""}), ErrorCode::UnsupportedFormat);
    EXPECT_EQ(code({SastTool::Snyk, "", R"({"results":[]})", ""}), ErrorCode::UnsupportedFormat);
    EXPECT_EQ(code({SastTool::Codeql, "", "   ", ""}), ErrorCode::UnsupportedFormat);
    EXPECT_EQ(code({SastTool::Codeql, "", "\"a\",\"b\"\n", ""}), ErrorCode::UnsupportedFormat);
    EXPECT_THROW(parse_sast_tool("bandit"), Error);
    EXPECT_EQ(parse_sast_tool("Semgrep"), SastTool::Semgrep);
}

TEST(Sarif, FilterRetainsExactlyIntersectingWarnings) {
    BeakerChange bc;
    SarifOptions opts;
    opts.repo_root = bc.tmp.path();
    std::vector<SecurityComment> all;
    for (const char* f : {"codeql.sarif", "semgrep.sarif", "snyk.sarif"}) {
        opts.id_prefix = f;
        auto run = parse_sarif(fixture(f, bc.tmp.path()), opts);
        all.insert(all.end(), run.comments.begin(), run.comments.end());
    }
    for (int radius : {0, 1, 3}) {
        auto kept = filter_to_changeset(all, bc.cs, radius);
        EXPECT_EQ(ids_of(kept), oracle_filter(all, bc.cs, radius)) << "radius " << radius;
    }
    auto kept = filter_to_changeset(all, bc.cs, 0);
    std::set<std::pair<std::string, int>> got;
    for (const auto& c : kept) got.insert({c.file, c.start_line});
    std::set<std::pair<std::string, int>> expected{{"beaker/crypto/pycrypto.py", 21}, {"beaker/session.py", 19},
                                                   {"beaker/session.py", 14},          {"beaker/crypto/pycrypto.py", 27},
                                                   {"beaker/session.py", 17},          {"beaker/session.py", 18}};
    EXPECT_EQ(got, expected);
    EXPECT_EQ(filter_to_changeset(all, bc.cs, 1).size(), kept.size() + 1);  // lines 8-11 touch 12
}

TEST(Sarif, FilterMatchesOracleOnRandomComments) {
    BeakerChange bc;
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> line(1, 40), len(0, 4), file(0, 2), radius(0, 3);
    const char* files[] = {"beaker/crypto/pycrypto.py", "beaker/session.py", "README.txt"};
    std::vector<SecurityComment> all;
    for (int i = 0; i < 500; ++i) {
        SecurityComment c;
        c.comment_id = "r" + std::to_string(i);
        c.file = files[file(rng)];
        c.start_line = line(rng);
        c.end_line = c.start_line + len(rng);
        c.comment = "x";
        all.push_back(c);
    }
    for (int r = 0; r <= 3; ++r) EXPECT_EQ(ids_of(filter_to_changeset(all, bc.cs, r)), oracle_filter(all, bc.cs, r));
}
