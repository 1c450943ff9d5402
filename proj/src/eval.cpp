#include "scr/eval.hpp"

#include "scr/error.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>

namespace scr {

std::string render_judge_prompt(const JudgeInput& in) {
    std::string p;
    p += "Is the code review comment below relevant to the given groundtruth CWE-ID, CWE Name, CWE Description, "
         "and CVE Description?\n\n";
    p += "[Code Review Comment]\n" + in.comment + "\n";
    p += "[CWE-ID]\n" + in.cwe_id + "\n";
    p += "[CWE Name]\n" + in.cwe_name + "\n";
    p += "[CWE Description]\n" + in.cwe_description + "\n";
    p += "[CVE Description]\n" + in.cve_description + "\n";
    p += "Only respond with either `True`, when comment is relevant, or `False` when it is not, without any "
         "explanation.\n";
    return p;
}

std::optional<bool> parse_judge_reply(std::string_view reply) {
    auto b = reply.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::nullopt;
    auto e = reply.find_last_not_of(" \t\r\n");
    std::string_view t = reply.substr(b, e - b + 1);
    if (t == "True") return true;
    if (t == "False") return false;
    return std::nullopt;
}

ScriptedJudge::ScriptedJudge(json table) : table_(std::move(table)) {
    if (!table_.is_object()) throw Error(ErrorCode::SchemaError, "judge table must be a JSON object");
    for (const char* k : {"by_id", "by_text"})
        if (table_.contains(k) && !table_[k].is_object())
            throw Error(ErrorCode::SchemaError, std::string("judge table field ") + k + " must be an object");
}

ScriptedJudge ScriptedJudge::from_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw Error(ErrorCode::FileNotFound, path.string() + " does not exist");
    return ScriptedJudge(parse_json_document(read_file(path), path.string()));
}

std::string ScriptedJudge::reply(const JudgeInput& in, int attempt) {
    const json* v = nullptr;
    if (table_.contains("by_id") && table_["by_id"].contains(in.comment_id)) v = &table_["by_id"][in.comment_id];
    else if (table_.contains("by_text") && table_["by_text"].contains(in.comment)) v = &table_["by_text"][in.comment];
    else if (table_.contains("default")) v = &table_["default"];
    if (!v) throw Error(ErrorCode::JudgeProtocolError, "judge table has no entry for comment " + in.comment_id);
    if (v->is_boolean()) return v->get<bool>() ? "True" : "False";
    if (v->is_string()) return v->get<std::string>();
    if (v->is_array() && !v->empty()) {
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(attempt), v->size() - 1);
        const json& r = (*v)[i];
        if (r.is_boolean()) return r.get<bool>() ? "True" : "False";
        if (r.is_string()) return r.get<std::string>();
    }
    throw Error(ErrorCode::SchemaError, "judge table entry must be a boolean, string or array of strings");
}

std::string LlmJudge::reply(const JudgeInput& in, int) {
    CompletionRequest req;
    req.agent = "judge";
    req.messages.push_back({Role::System, render_judge_prompt(in), {}, {}});
    return backend_.complete(req).content;
}

LocalizationResult score_localization(const SecurityComment& c, const GroundTruth& truth, int tolerance,
                                      bool strict_overlap) {
    if (tolerance < 0) throw Error(ErrorCode::ConfigError, "tolerance must be >= 0");
    LocalizationResult out;
    int best = 0;
    for (const auto& k : truth.vulnerable_lines) {
        if (k.path != c.file) continue;
        int d;
        if (strict_overlap) d = k.line < c.start_line ? c.start_line - k.line : (k.line > c.end_line ? k.line - c.end_line : 0);
        else d = std::abs(c.start_line - k.line);
        if (d > tolerance) continue;
        // vulnerable_lines is ordered, so the first line at a distance wins ties
        if (!out.hit || d < best) {
            out.hit = true;
            best = d;
            out.matched = k;
        }
    }
    return out;
}

bool score_type(const SecurityComment& c, const GroundTruth& truth, const CweTree& tree) {
    if (!c.cwe_id) return false;
    for (int t : truth.cwe_ids)
        if (same_high_level_category(tree, *c.cwe_id, t)) return true;
    return false;
}

JudgeInput judge_input(const SecurityComment& c, const GroundTruth& truth, const CweTree& tree) {
    JudgeInput in;
    in.comment_id = c.comment_id;
    in.comment = c.comment;
    for (std::size_t i = 0; i < truth.cwe_ids.size(); ++i) {
        int id = truth.cwe_ids[i];
        const CweEntry* e = tree.find(id);
        if (i) {
            in.cwe_id += ", ";
            in.cwe_name += "; ";
            in.cwe_description += "\n";
        }
        in.cwe_id += "CWE-" + std::to_string(id);
        if (e) {
            in.cwe_name += e->name;
            in.cwe_description += e->description;
        }
    }
    in.cve_description = truth.cve_description;
    return in;
}

bool score_relevance(const SecurityComment& c, const GroundTruth& truth, const CweTree& tree, JudgeBackend& judge) {
    JudgeInput in = judge_input(c, truth, tree);
    std::string last;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last = judge.reply(in, attempt);
        if (auto v = parse_judge_reply(last)) return *v;
    }
    throw Error(ErrorCode::JudgeProtocolError,
                "judge reply for " + (c.comment_id.empty() ? std::string("comment") : c.comment_id) +
                    " is neither True nor False: " + last.substr(0, 80));
}

HighLevelCategory truth_category(const GroundTruth& truth, const CweTree& tree) {
    for (int t : truth.cwe_ids) {
        auto cat = classify_high_level(tree, t);
        if (cat != HighLevelCategory::Other) return cat;
    }
    return HighLevelCategory::Other;
}

std::vector<CommentScore> score_report(const ReviewReport& report, const BenchCase* bench_case, const CweTree& tree,
                                       JudgeBackend& judge, const EvalOptions& opts) {
    std::vector<const SecurityComment*> todo;
    for (const auto& c : report.comments)
        if (c.status != CommentStatus::Filtered) todo.push_back(&c);
    std::vector<CommentScore> out(todo.size());
    const GroundTruth* truth = bench_case && bench_case->ground_truth ? &*bench_case->ground_truth : nullptr;
    HighLevelCategory cat = truth ? truth_category(*truth, tree) : HighLevelCategory::Other;

    auto score_one = [&](std::size_t i) {
        const SecurityComment& c = *todo[i];
        CommentScore s;
        s.comment_id = c.comment_id;
        s.case_id = bench_case ? bench_case->case_id : report.repo;
        s.file = c.file;
        s.start_line = c.start_line;
        s.category = cat;
        if (!truth) {
            s.notes = "no ground truth for " + report.repo;
        } else {
            auto loc = score_localization(c, *truth, opts.tolerance, opts.strict_overlap);
            s.L = loc.hit;
            s.matched_truth_line = loc.matched;
            s.R = score_relevance(c, *truth, tree, judge);
            s.T = score_type(c, *truth, tree);
        }
        out[i] = std::move(s);
    };

    int jobs = std::max(1, opts.jobs);
    if (jobs == 1 || todo.size() < 2) {
        for (std::size_t i = 0; i < todo.size(); ++i) score_one(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < todo.size(); i = next++) {
                try {
                    score_one(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

MetricsReport aggregate(const std::string& label, const std::vector<CommentScore>& scores) {
    MetricsReport m;
    m.label = label;
    for (auto cat : kScoredCategories) m.per_category[cat] = {};
    for (const auto& s : scores) {
        ++m.n_comments;
        m.count_l += s.L;
        m.count_r += s.R;
        m.count_t += s.T;
        m.count_lrt += s.lrt();
        if (s.category != HighLevelCategory::Other) {
            auto& cell = m.per_category[s.category];
            ++cell.n;
            cell.lrt += s.lrt();
        }
    }
    if (m.n_comments > 0) {
        double n = static_cast<double>(m.n_comments);
        m.pct_lrt = 100.0 * m.count_lrt / n;
        m.pct_l = 100.0 * m.count_l / n;
        m.pct_r = 100.0 * m.count_r / n;
        m.pct_t = 100.0 * m.count_t / n;
    }
    return m;
}

std::string format_pct(long count, long n, bool dash_on_zero) {
    if (n <= 0) return dash_on_zero ? "--" : "0.0%";
    // tenths of a percent, half-up, in integer arithmetic
    long long tenths = (2000LL * count + n) / (2LL * n);
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + "%";
}

std::string format_count(long n) {
    std::string digits = std::to_string(n < 0 ? -n : n);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i && (digits.size() - i) % 3 == 0) out += ',';
        out += digits[i];
    }
    return n < 0 ? "-" + out : out;
}

json to_json(const CommentScore& s) {
    json j{{"comment_id", s.comment_id}, {"case_id", s.case_id}, {"file", s.file},       {"start_line", s.start_line},
           {"L", s.L},                   {"R", s.R},               {"T", s.T},             {"LRT", s.lrt()},
           {"category", std::string(to_string(s.category))}};
    j["matched_truth_line"] = s.matched_truth_line ? json{{"file", s.matched_truth_line->path}, {"line", s.matched_truth_line->line}}
                                                   : json(nullptr);
    if (!s.notes.empty()) j["notes"] = s.notes;
    return j;
}

json to_json(const MetricsReport& m) {
    json cats = json::object();
    for (const auto& [cat, cell] : m.per_category)
        cats[std::string(to_string(cat))] = {{"n", cell.n},
                                             {"lrt", cell.lrt},
                                             {"pct_lrt", cell.n ? 100.0 * cell.lrt / cell.n : 0.0},
                                             {"display", format_pct(cell.lrt, cell.n, true)}};
    return {{"label", m.label},
            {"n_comments", m.n_comments},
            {"empty", m.empty()},
            {"counts", {{"lrt", m.count_lrt}, {"l", m.count_l}, {"r", m.count_r}, {"t", m.count_t}}},
            {"pct", {{"lrt", m.pct_lrt}, {"l", m.pct_l}, {"r", m.pct_r}, {"t", m.pct_t}}},
            {"display",
             {{"lrt", format_pct(m.count_lrt, m.n_comments)},
              {"l", format_pct(m.count_l, m.n_comments)},
              {"r", format_pct(m.count_r, m.n_comments)},
              {"t", format_pct(m.count_t, m.n_comments)}}},
            {"per_category", cats}};
}

namespace {

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) s += "  ";
            std::string pad(width[i] - cells[i].size(), ' ');
            s += i == 0 ? cells[i] + pad : pad + cells[i];
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s + "\n";
    };
    std::string out = line(header);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    for (const auto& r : rows) out += line(r);
    return out;
}

}  // namespace

Comparison compare_runs(const std::vector<MetricsReport>& reports) {
    Comparison c;
    c.data = json::array();
    std::vector<std::vector<std::string>> rows, cat_rows;
    for (const auto& m : reports) {
        c.data.push_back(to_json(m));
        rows.push_back({m.label, format_count(m.n_comments), format_pct(m.count_lrt, m.n_comments),
                        format_pct(m.count_l, m.n_comments), format_pct(m.count_r, m.n_comments),
                        format_pct(m.count_t, m.n_comments)});
        std::vector<std::string> cr{m.label};
        for (auto cat : kScoredCategories) {
            auto it = m.per_category.find(cat);
            CategoryCell cell = it == m.per_category.end() ? CategoryCell{} : it->second;
            cr.push_back(format_pct(cell.lrt, cell.n, true));
        }
        cat_rows.push_back(std::move(cr));
    }
    c.table = render_table({"Approach", "#Cmt", "L&R&T", "L", "R", "T"}, rows);
    std::vector<std::string> cat_header{"Approach"};
    for (auto cat : kScoredCategories) cat_header.emplace_back(short_label(cat));
    c.category_table = render_table(cat_header, cat_rows);
    return c;
}

std::string report_label(const ReviewReport& r) {
    if (auto it = r.metadata.find("label"); it != r.metadata.end() && !it->second.empty()) return it->second;
    if (!r.comments.empty()) return std::string(to_string(r.comments.front().producer));
    return "unknown";
}

}  // namespace scr
