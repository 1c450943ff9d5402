#pragma once

#include "scr/bench.hpp"
#include "scr/comments.hpp"
#include "scr/llm.hpp"
#include "scr/memory.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace scr {

struct JudgeInput {
    std::string comment_id;
    std::string comment;
    std::string cwe_id;           // "CWE-310", several joined with ", "
    std::string cwe_name;
    std::string cwe_description;
    std::string cve_description;
};

// The relevance-judge prompt with the five slots filled in.
std::string render_judge_prompt(const JudgeInput& in);

// "True" / "False" after trimming whitespace; anything else is nullopt.
std::optional<bool> parse_judge_reply(std::string_view reply);

class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    // Raw model reply for one attempt (0 = first, 1 = retry).
    virtual std::string reply(const JudgeInput& in, int attempt) = 0;
    virtual std::string name() const = 0;
};

// Table-driven judge:
//   {"by_id": {"C1": true}, "by_text": {"<comment>": "False"}, "default": false}
// Values are booleans, reply strings, or arrays of reply strings (one per
// attempt). Lookup order: comment id, then exact comment text, then default.
class ScriptedJudge final : public JudgeBackend {
public:
    explicit ScriptedJudge(json table);
    static ScriptedJudge from_file(const std::filesystem::path& path);
    std::string reply(const JudgeInput& in, int attempt) override;
    std::string name() const override { return "scripted"; }

private:
    json table_;
};

// Sends the rendered prompt as the single system message of a chat
// completion and returns the assistant text.
class LlmJudge final : public JudgeBackend {
public:
    explicit LlmJudge(LlmBackend& backend) : backend_(backend) {}
    std::string reply(const JudgeInput& in, int attempt) override;
    std::string name() const override { return "llm:" + backend_.name(); }

private:
    LlmBackend& backend_;
};

struct CommentScore {
    std::string comment_id;
    std::string case_id;
    std::string file;
    int start_line = 0;
    bool L = false;
    bool R = false;
    bool T = false;
    std::optional<LineKey> matched_truth_line;
    HighLevelCategory category = HighLevelCategory::Other;  // of the case's ground truth
    std::string notes;

    bool lrt() const { return L && R && T; }
};

struct LocalizationResult {
    bool hit = false;
    std::optional<LineKey> matched;
};

// Same file and |start_line - l| <= tolerance for some truth line l; the
// match is the nearest such line, ties to the smaller line. With
// strict_overlap the whole [start, end] range is used as the anchor.
LocalizationResult score_localization(const SecurityComment& c, const GroundTruth& truth, int tolerance = 5,
                                      bool strict_overlap = false);

bool score_type(const SecurityComment& c, const GroundTruth& truth, const CweTree& tree);

JudgeInput judge_input(const SecurityComment& c, const GroundTruth& truth, const CweTree& tree);

// Asks the judge, retrying once on an unparseable reply. Throws JudgeProtocolError.
bool score_relevance(const SecurityComment& c, const GroundTruth& truth, const CweTree& tree, JudgeBackend& judge);

// Ground-truth category of a case: first truth CWE outside Other.
HighLevelCategory truth_category(const GroundTruth& truth, const CweTree& tree);

struct EvalOptions {
    int tolerance = 5;
    bool strict_overlap = false;
    int jobs = 1;
};

// Scores every non-filtered comment of a report against its case. Comments
// whose case has no ground truth score false on all measures.
std::vector<CommentScore> score_report(const ReviewReport& report, const BenchCase* bench_case, const CweTree& tree,
                                       JudgeBackend& judge, const EvalOptions& opts = {});

struct CategoryCell {
    long n = 0;
    long lrt = 0;
};

struct MetricsReport {
    std::string label;
    long n_comments = 0;
    long count_lrt = 0, count_l = 0, count_r = 0, count_t = 0;
    double pct_lrt = 0, pct_l = 0, pct_r = 0, pct_t = 0;
    std::map<HighLevelCategory, CategoryCell> per_category;  // the five scored categories only
    bool empty() const { return n_comments == 0; }
};

MetricsReport aggregate(const std::string& label, const std::vector<CommentScore>& scores);

// count/n as a percentage with one decimal, rounded half-up exactly; "--"
// when n == 0 and dash_on_zero, else "0.0%".
std::string format_pct(long count, long n, bool dash_on_zero = false);
// 1092 -> "1,092"
std::string format_count(long n);

json to_json(const MetricsReport& m);
json to_json(const CommentScore& s);

struct Comparison {
    json data;
    std::string table;           // #Cmt, L&R&T, L, R, T
    std::string category_table;  // L&R&T per ground-truth category
};

Comparison compare_runs(const std::vector<MetricsReport>& reports);

// Label of a report for grouping: metadata "label", else the producer of
// its first comment, else "unknown".
std::string report_label(const ReviewReport& r);

}  // namespace scr
