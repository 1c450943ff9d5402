#include "scr/comments.hpp"

#include "scr/error.hpp"
#include "scr/repo.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace scr {

std::string_view to_string(Producer p) {
    switch (p) {
        case Producer::Agentic: return "agentic";
        case Producer::StaticLlm: return "static_llm";
        case Producer::Codeql: return "codeql";
        case Producer::Semgrep: return "semgrep";
        case Producer::Snyk: return "snyk";
        case Producer::Other: return "other";
    }
    return "other";
}

std::string_view to_string(CommentStatus s) {
    switch (s) {
        case CommentStatus::Proposed: return "proposed";
        case CommentStatus::Validated: return "validated";
        case CommentStatus::Filtered: return "filtered";
    }
    return "proposed";
}

Producer parse_producer(std::string_view s) {
    std::string l = to_lower(s);
    if (l == "agentic") return Producer::Agentic;
    if (l == "static_llm") return Producer::StaticLlm;
    if (l.find("codeql") != std::string::npos) return Producer::Codeql;
    if (l.find("semgrep") != std::string::npos) return Producer::Semgrep;
    if (l.find("snyk") != std::string::npos) return Producer::Snyk;
    return Producer::Other;
}

std::size_t ReviewReport::count(CommentStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(comments.begin(), comments.end(), [&](const SecurityComment& c) { return c.status == s; }));
}

json to_json(const SecurityComment& c) {
    json j = {{"comment_id", c.comment_id},
              {"file", c.file},
              {"start_line", c.start_line},
              {"end_line", c.end_line},
              {"comment", c.comment},
              {"cwe_id", c.cwe_id ? json(*c.cwe_id) : json(nullptr)},
              {"cwe_name", c.cwe_name ? json(*c.cwe_name) : json(nullptr)},
              {"severity", std::string(to_string(c.severity))},
              {"evidence", c.evidence},
              {"rule_id", c.rule_id ? json(*c.rule_id) : json(nullptr)},
              {"producer", std::string(to_string(c.producer))},
              {"status", std::string(to_string(c.status))}};
    return j;
}

json to_json(const ValidationVerdict& v) {
    return {{"comment_id", v.comment_id},
            {"decision", v.decision == Decision::Keep ? "keep" : "filter"},
            {"matched_cwes", v.matched_cwes},
            {"criteria_notes", v.criteria_notes}};
}

json to_json(const ReviewReport& r) {
    json files = json::array();
    for (const auto& f : r.files)
        files.push_back({{"path", f.path}, {"change_type", f.change_type}, {"added", f.added}, {"modified", f.modified}});
    json comments = json::array();
    for (const auto& c : r.comments) comments.push_back(to_json(c));
    json verdicts = json::array();
    for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
    json sessions = json::array();
    for (const auto& s : r.sessions)
        sessions.push_back({{"agent", s.agent}, {"session_id", s.session_id}, {"log_file", s.log_file}, {"status", s.status}});
    json meta = json::object();
    for (const auto& [k, v] : r.metadata) meta[k] = v;
    return {{"repo", r.repo},
            {"head_commit", r.head_commit},
            {"change_summary", {{"files", files}, {"skipped_files", r.skipped_files}}},
            {"comments", comments},
            {"verdicts", verdicts},
            {"sessions", sessions},
            {"metadata", meta}};
}

SecurityComment comment_from_json(const json& j, const std::string& path) {
    FieldReader r(j, path);
    SecurityComment c;
    c.comment_id = r.opt_str("comment_id").value_or("");
    c.file = r.str("file");
    if (c.file.empty()) schema_error(r.child_path("file"), "must be non-empty");
    auto start = r.opt_integer("start_line");
    if (!start) start = r.opt_integer("line");
    if (!start) schema_error(r.child_path("start_line"), "required field missing");
    c.start_line = static_cast<int>(*start);
    c.end_line = static_cast<int>(r.opt_integer("end_line").value_or(*start));
    if (c.start_line < 1) schema_error(r.child_path("start_line"), "must be >= 1");
    if (c.end_line < c.start_line) schema_error(r.child_path("end_line"), "must be >= start_line");
    c.comment = r.str("comment");
    if (c.comment.empty()) schema_error(r.child_path("comment"), "must be non-empty");
    if (r.has("cwe_id")) {
        auto id = parse_cwe_id(j.at("cwe_id"));
        if (!id) schema_error(r.child_path("cwe_id"), "expected a CWE number");
        c.cwe_id = id;
    }
    c.cwe_name = r.opt_str("cwe_name");
    if (auto s = r.opt_str("severity")) c.severity = parse_severity(*s).value_or(Severity::Medium);
    c.evidence = r.str_list("evidence");
    c.rule_id = r.opt_str("rule_id");
    if (auto p = r.opt_str("producer")) c.producer = parse_producer(*p);
    if (auto s = r.opt_str("status")) {
        if (*s == "proposed") c.status = CommentStatus::Proposed;
        else if (*s == "validated") c.status = CommentStatus::Validated;
        else if (*s == "filtered") c.status = CommentStatus::Filtered;
        else schema_error(r.child_path("status"), "expected proposed|validated|filtered");
    }
    if (c.status == CommentStatus::Validated && !c.cwe_id)
        schema_error(r.child_path("cwe_id"), "validated comments must carry a CWE");
    return c;
}

ValidationVerdict verdict_from_json(const json& j, const std::string& path) {
    FieldReader r(j, path);
    ValidationVerdict v;
    v.comment_id = r.str("comment_id");
    std::string d = to_lower(r.str("decision"));
    if (d == "keep") v.decision = Decision::Keep;
    else if (d == "filter") v.decision = Decision::Filter;
    else schema_error(r.child_path("decision"), "expected keep|filter");
    const auto& m = r.array("matched_cwes");
    for (std::size_t i = 0; i < m.size(); ++i) {
        auto id = parse_cwe_id(m[i]);
        if (!id) schema_error(r.child_path("matched_cwes", i), "expected a CWE number");
        v.matched_cwes.push_back(*id);
    }
    v.criteria_notes = r.opt_str("criteria_notes").value_or("");
    if (v.decision == Decision::Keep && v.matched_cwes.empty())
        schema_error(r.child_path("matched_cwes"), "keep verdicts need at least one matched CWE");
    return v;
}

ReviewReport report_from_json(const json& j) {
    FieldReader r(j, "$");
    ReviewReport rep;
    rep.repo = r.opt_str("repo").value_or("");
    rep.head_commit = r.opt_str("head_commit").value_or("");
    if (r.has("change_summary")) {
        FieldReader cs(j.at("change_summary"), "$.change_summary");
        const auto& files = cs.array("files");
        for (std::size_t i = 0; i < files.size(); ++i) {
            FieldReader fr(files[i], cs.child_path("files", i));
            rep.files.push_back({fr.str("path"), fr.opt_str("change_type").value_or("modified"),
                                 static_cast<int>(fr.opt_integer("added").value_or(0)),
                                 static_cast<int>(fr.opt_integer("modified").value_or(0))});
        }
        rep.skipped_files = cs.str_list("skipped_files");
    }
    const auto& comments = r.array("comments");
    for (std::size_t i = 0; i < comments.size(); ++i)
        rep.comments.push_back(comment_from_json(comments[i], r.child_path("comments", i)));
    const auto& verdicts = r.array("verdicts");
    std::set<std::string> ids;
    for (const auto& c : rep.comments) ids.insert(c.comment_id);
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        auto v = verdict_from_json(verdicts[i], r.child_path("verdicts", i));
        if (!ids.contains(v.comment_id))
            schema_error(r.child_path("verdicts", i), "verdict references unknown comment " + v.comment_id);
        rep.verdicts.push_back(std::move(v));
    }
    const auto& sessions = r.array("sessions");
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        FieldReader sr(sessions[i], r.child_path("sessions", i));
        rep.sessions.push_back({sr.opt_str("agent").value_or(""), sr.opt_str("session_id").value_or(""),
                                sr.opt_str("log_file").value_or(""), sr.opt_str("status").value_or("")});
    }
    if (r.has("metadata")) {
        const auto& m = j.at("metadata");
        if (!m.is_object()) schema_error("$.metadata", "expected an object");
        for (const auto& [k, v] : m.items()) {
            if (!v.is_string()) schema_error("$.metadata." + k, "expected a string");
            rep.metadata[k] = v.get<std::string>();
        }
    }
    return rep;
}

std::string serialize_comment_file(const std::vector<SecurityComment>& comments) {
    json arr = json::array();
    for (const auto& c : comments) arr.push_back(to_json(c));
    return canonical_dump(arr);
}

std::vector<SecurityComment> parse_comment_file(std::string_view text) {
    json doc = parse_json_document(text, "comment file");
    if (!doc.is_array()) schema_error("$", "expected an array of comments");
    std::vector<SecurityComment> out;
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(comment_from_json(doc[i], "$[" + std::to_string(i) + "]"));
    return out;
}

namespace {

bool overlaps(const SecurityComment& a, const SecurityComment& b) {
    return a.start_line <= b.end_line && b.start_line <= a.end_line;
}

bool mergeable(const SecurityComment& a, const SecurityComment& b) {
    return a.file == b.file && a.cwe_id == b.cwe_id && overlaps(a, b);
}

void merge_into(SecurityComment& dst, const SecurityComment& src) {
    dst.start_line = std::min(dst.start_line, src.start_line);
    dst.end_line = std::max(dst.end_line, src.end_line);
    if (src.comment.size() > dst.comment.size()) dst.comment = src.comment;
    for (const auto& e : src.evidence)
        if (std::find(dst.evidence.begin(), dst.evidence.end(), e) == dst.evidence.end()) dst.evidence.push_back(e);
    if (!dst.cwe_name && src.cwe_name) dst.cwe_name = src.cwe_name;
    if (!dst.rule_id && src.rule_id) dst.rule_id = src.rule_id;
}

bool by_position(const SecurityComment& a, const SecurityComment& b) {
    if (a.file != b.file) return a.file < b.file;
    return a.start_line < b.start_line;
}

}  // namespace

std::vector<SecurityComment> dedupe(std::vector<SecurityComment> comments) {
    std::stable_sort(comments.begin(), comments.end(), by_position);
    // Sweep per (file, cwe) group; sorted by start, a comment merges into the
    // open cluster iff it starts at or before the cluster's end.
    std::vector<SecurityComment> out;
    for (auto& c : comments) {
        bool merged = false;
        for (std::size_t k = out.size(); k-- > 0;) {
            if (out[k].file != c.file) break;
            if (mergeable(out[k], c)) {
                merge_into(out[k], c);
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(std::move(c));
    }
    std::stable_sort(out.begin(), out.end(), by_position);
    return out;
}

std::vector<SecurityComment> apply_verdicts(std::vector<SecurityComment> comments,
                                            const std::vector<ValidationVerdict>& verdicts, const CweTree* tree) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < comments.size(); ++i) index[comments[i].comment_id] = i;
    for (const auto& v : verdicts) {
        auto it = index.find(v.comment_id);
        if (it == index.end()) throw Error(ErrorCode::UnknownCommentId, "verdict for unknown comment " + v.comment_id);
        auto& c = comments[it->second];
        if (v.decision == Decision::Filter) {
            c.status = CommentStatus::Filtered;
            continue;
        }
        if (!c.cwe_id && !v.matched_cwes.empty()) {
            c.cwe_id = v.matched_cwes.front();
            c.cwe_name.reset();
        }
        if (c.cwe_id && !c.cwe_name && tree)
            if (const auto* e = tree->find(*c.cwe_id)) c.cwe_name = e->name;
        c.status = c.cwe_id ? CommentStatus::Validated : CommentStatus::Filtered;
    }
    return comments;
}

std::string render_report(const ReviewReport& report) { return canonical_dump(to_json(report)); }

void emit_report(const ReviewReport& report, const std::filesystem::path& destination) {
    write_text_file(destination, render_report(report));
}

ReviewReport parse_report(std::string_view text) { return report_from_json(parse_json_document(text, "review report")); }

ReviewReport load_report_file(const std::filesystem::path& path) { return parse_report(read_file(path)); }

}  // namespace scr
