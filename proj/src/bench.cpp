#include "scr/bench.hpp"

#include "scr/error.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace scr {

namespace {

std::string short_sha(const std::string& s) { return s.substr(0, 7); }

std::string trim_nl(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
}

std::vector<std::string> with_flags(std::vector<std::string> head, std::vector<std::string> tail) {
    auto flags = diff_flags();
    head.insert(head.end(), flags.begin(), flags.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

std::optional<std::string> rev_parse(const fs::path& repo, const std::string& rev, process::Runner& runner) {
    auto r = run_git(repo, {"rev-parse", "--verify", "-q", rev + "^{commit}"}, runner);
    if (!r.ok()) return std::nullopt;
    return trim_nl(r.out);
}

bool is_ancestor(const fs::path& repo, const std::string& a, const std::string& b, process::Runner& runner) {
    return run_git(repo, {"merge-base", "--is-ancestor", a, b}, runner).ok();
}

std::map<std::string, std::vector<int>> changed_line_map(const ChangeSet& cs) {
    std::map<std::string, std::vector<int>> out;
    for (const auto& [key, kind] : cs.changed_lines) out[key.path].push_back(key.line);
    return out;
}

ChangeSet commit_diff(const fs::path& repo, const std::string& from, const std::string& to, process::Runner& runner) {
    std::string text = git_output(repo, with_flags({"diff"}, {from, to}), runner);
    return make_change_set(parse_unified_diff(sanitize_utf8(text)));
}

std::map<int, std::string> new_side_texts(const FileDiff& fd) {
    std::map<int, std::string> out;
    for (const auto& h : fd.hunks) {
        int n = h.new_start;
        for (const auto& l : h.lines) {
            if (l.marker == LineMarker::Del) continue;
            if (l.marker == LineMarker::Add) out[n] = l.text;
            ++n;
        }
    }
    return out;
}

}  // namespace

CveRecord cve_record_from_json(const json& j, const std::string& path) {
    static const std::regex cve_re(R"(^CVE-\d{4}-\d+$)");
    FieldReader r(j, path);
    CveRecord c;
    c.cve_id = r.str("cve_id");
    if (!std::regex_match(c.cve_id, cve_re)) schema_error(r.child_path("cve_id"), "expected CVE-YYYY-N");
    c.description = r.opt_str("description").value_or("");
    c.repo_url = r.str("repo_url");
    if (c.repo_url.empty()) schema_error(r.child_path("repo_url"), "must be non-empty");
    c.fix_commit = r.str("fix_commit");
    if (c.fix_commit.empty()) schema_error(r.child_path("fix_commit"), "must be non-empty");
    c.introducing_commits = r.str_list("introducing_commits");
    const json& cwes = r.array("cwe_ids");
    for (std::size_t i = 0; i < cwes.size(); ++i) {
        auto id = parse_cwe_id(cwes[i]);
        if (!id) schema_error(r.child_path("cwe_ids", i), "expected a CWE number");
        c.cwe_ids.push_back(*id);
    }
    c.language = r.opt_str("language").value_or("");
    return c;
}

json to_json(const CveRecord& r) {
    return {{"cve_id", r.cve_id},
            {"description", r.description},
            {"repo_url", r.repo_url},
            {"fix_commit", r.fix_commit},
            {"introducing_commits", r.introducing_commits},
            {"cwe_ids", r.cwe_ids},
            {"language", r.language}};
}

std::vector<CveRecord> parse_cve_corpus(std::string_view text) {
    std::vector<CveRecord> out;
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++n;
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            json j = parse_json_document(line, "corpus line " + std::to_string(n));
            out.push_back(cve_record_from_json(j, "line " + std::to_string(n)));
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return out;
}

std::vector<CveRecord> load_cve_corpus(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::FileNotFound, path.string() + " does not exist");
    return parse_cve_corpus(read_file(path));
}

json to_json(const GroundTruth& g) {
    json lines = json::array();
    for (const auto& k : g.vulnerable_lines) lines.push_back({{"file", k.path}, {"line", k.line}});
    return {{"vulnerable_lines", lines},
            {"cwe_ids", g.cwe_ids},
            {"cve_description", g.cve_description},
            {"verified", g.verified},
            {"notes", g.notes}};
}

GroundTruth ground_truth_from_json(const json& j, const std::string& path) {
    FieldReader r(j, path);
    GroundTruth g;
    const json& lines = r.array("vulnerable_lines");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        FieldReader lr(lines[i], r.child_path("vulnerable_lines", i));
        g.vulnerable_lines.insert(LineKey{lr.str("file"), static_cast<int>(lr.integer("line"))});
    }
    const json& cwes = r.array("cwe_ids");
    for (std::size_t i = 0; i < cwes.size(); ++i) {
        auto id = parse_cwe_id(cwes[i]);
        if (!id) schema_error(r.child_path("cwe_ids", i), "expected a CWE number");
        g.cwe_ids.push_back(*id);
    }
    g.cve_description = r.opt_str("cve_description").value_or("");
    if (r.has("verified")) {
        if (!j.at("verified").is_boolean()) schema_error(r.child_path("verified"), "expected a boolean");
        g.verified = j.at("verified").get<bool>();
    }
    g.notes = r.opt_str("notes").value_or("");
    return g;
}

json to_json(const BenchCase& c) {
    json staged = json::object();
    for (const auto& [p, lines] : c.staged_changed_lines) staged[p] = lines;
    json j{{"case_id", c.case_id},
           {"cve", to_json(c.cve)},
           {"sandbox_commit", c.sandbox_commit},
           {"pre_commit_parent", c.pre_commit_parent},
           {"changed_line_count", c.changed_line_count},
           {"staged_changed_lines", staged}};
    if (c.ground_truth) j["ground_truth"] = to_json(*c.ground_truth);
    return j;
}

BenchCase bench_case_from_json(const json& j, const std::string& path) {
    FieldReader r(j, path);
    BenchCase c;
    c.case_id = r.str("case_id");
    if (!r.has("cve")) schema_error(r.child_path("cve"), "required field missing");
    c.cve = cve_record_from_json(j.at("cve"), r.child_path("cve"));
    c.sandbox_commit = r.opt_str("sandbox_commit").value_or("");
    c.pre_commit_parent = r.opt_str("pre_commit_parent").value_or("");
    c.changed_line_count = static_cast<int>(r.opt_integer("changed_line_count").value_or(0));
    if (r.has("staged_changed_lines")) {
        const json& s = j.at("staged_changed_lines");
        if (!s.is_object()) schema_error(r.child_path("staged_changed_lines"), "expected an object");
        for (const auto& [p, lines] : s.items()) {
            if (!lines.is_array()) schema_error(r.child_path("staged_changed_lines") + "." + p, "expected an array");
            for (const auto& l : lines) {
                if (!l.is_number_integer()) schema_error(r.child_path("staged_changed_lines") + "." + p, "expected integers");
                c.staged_changed_lines[p].push_back(l.get<int>());
            }
        }
    }
    if (r.has("ground_truth")) c.ground_truth = ground_truth_from_json(j.at("ground_truth"), r.child_path("ground_truth"));
    return c;
}

std::string make_case_id(const std::string& cve_id, const std::string& commit) {
    return cve_id + "-" + short_sha(commit);
}

CloneCache::CloneCache(fs::path dir, process::Runner& runner) : dir_(std::move(dir)), runner_(runner) {}

fs::path CloneCache::ensure(const std::string& url) {
    std::shared_ptr<std::mutex> m;
    {
        std::lock_guard lock(mu_);
        auto& slot = per_url_[url];
        if (!slot) slot = std::make_shared<std::mutex>();
        m = slot;
    }
    std::lock_guard lock(*m);
    std::string key;
    for (char c : url) key.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_');
    fs::path dest = dir_ / (key + ".git");
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (fs::exists(dest / "HEAD", ec) && run_git(dest, {"rev-parse", "--git-dir"}, runner_).ok()) return dest;
    fs::remove_all(dest, ec);

    std::string source = url;
    if (fs::is_directory(url, ec)) source = fs::absolute(url).string();
    auto r = run_git(dir_, {"clone", "--bare", "--quiet", source, dest.string()}, runner_);
    if (!r.ok()) {
        fs::remove_all(dest, ec);
        throw Error(ErrorCode::RepoUnavailable, "cannot clone " + url + ": " + trim_nl(r.err));
    }
    return dest;
}

std::string canonical_language(std::string_view lang) {
    std::string l = to_lower(lang);
    if (l == "py" || l == "python") return "python";
    if (l == "js" || l == "javascript") return "javascript";
    if (l == "ts" || l == "typescript") return "typescript";
    return l;
}

json SelectionReport::summary() const {
    json counts = json::object();
    for (const auto& [k, v] : rejection_counts) counts[k] = v;
    std::set<std::string> cves, repos, cwes;
    for (const auto& c : cases) {
        cves.insert(c.cve.cve_id);
        repos.insert(c.cve.repo_url);
        for (int w : c.cve.cwe_ids) cwes.insert(std::to_string(w));
    }
    return {{"total", total},
            {"selected", cases.size()},
            {"cves", cves.size()},
            {"repositories", repos.size()},
            {"cwe_types", cwes.size()},
            {"rejections", counts}};
}

std::pair<std::string, std::string> resolve_sandbox_commits(const fs::path& clone, const CveRecord& record,
                                                            process::Runner& runner) {
    std::vector<std::string> full;
    for (const auto& c : record.introducing_commits) {
        auto sha = rev_parse(clone, c, runner);
        if (!sha) throw Error(ErrorCode::CommitNotFound, "commit " + c + " not found in " + record.repo_url);
        full.push_back(*sha);
    }
    if (full.empty()) throw Error(ErrorCode::CommitNotFound, record.cve_id + " lists no introducing commit");
    // Earliest = ancestor of every other introducing commit; listing order
    // (newest first) decides when history is not linear.
    std::string earliest = full.back();
    for (const auto& cand : full) {
        bool all = true;
        for (const auto& other : full)
            if (other != cand && !is_ancestor(clone, cand, other, runner)) {
                all = false;
                break;
            }
        if (all) {
            earliest = cand;
            break;
        }
    }
    auto parent = rev_parse(clone, earliest + "^", runner);
    return {earliest, parent.value_or("")};
}

SelectionReport select_cases(const std::vector<CveRecord>& records, const SelectionCriteria& criteria,
                             CloneCache& cache) {
    SelectionReport rep;
    std::set<std::string> langs;
    for (const auto& l : criteria.languages) langs.insert(canonical_language(l));
    auto reject = [&](const CveRecord& r, const char* reason, std::string detail = {}) {
        rep.rejections.push_back({r.cve_id, reason, std::move(detail)});
        ++rep.rejection_counts[reason];
    };
    for (const auto& r : records) {
        ++rep.total;
        if (r.introducing_commits.empty()) {
            reject(r, "no_introducing_commit");
            continue;
        }
        if (static_cast<int>(r.introducing_commits.size()) > criteria.max_chain) {
            reject(r, "chain_too_long", std::to_string(r.introducing_commits.size()) + " introducing commits");
            continue;
        }
        if (!langs.count(canonical_language(r.language))) {
            reject(r, "language", r.language);
            continue;
        }
        fs::path clone;
        try {
            clone = cache.ensure(r.repo_url);
        } catch (const Error& e) {
            reject(r, "repo_unavailable", e.what());
            continue;
        }
        std::pair<std::string, std::string> commits;
        try {
            commits = resolve_sandbox_commits(clone, r, cache.runner());
        } catch (const Error& e) {
            reject(r, "commit_not_found", e.what());
            continue;
        }
        if (commits.second.empty()) {
            reject(r, "root_commit", commits.first);
            continue;
        }
        ChangeSet cs = commit_diff(clone, commits.second, commits.first, cache.runner());
        int count = static_cast<int>(cs.changed_line_count());
        if (count == 0) {
            reject(r, "empty_change");
            continue;
        }
        if (count > criteria.max_changed_lines) {
            reject(r, "too_many_changed_lines", std::to_string(count) + " changed lines");
            continue;
        }
        BenchCase c;
        c.case_id = make_case_id(r.cve_id, commits.first);
        c.cve = r;
        c.sandbox_commit = commits.first;
        c.pre_commit_parent = commits.second;
        c.changed_line_count = count;
        c.staged_changed_lines = changed_line_map(cs);
        rep.cases.push_back(std::move(c));
    }
    return rep;
}

RepoContext build_sandbox(const BenchCase& bench_case, const fs::path& workdir, CloneCache& cache) {
    process::Runner& runner = cache.runner();
    fs::path mirror;
    try {
        mirror = cache.ensure(bench_case.cve.repo_url);
    } catch (const Error& e) {
        throw Error(ErrorCode::CloneFailed, e.what());
    }
    std::error_code ec;
    fs::create_directories(workdir, ec);
    fs::path dir = fs::absolute(workdir) / bench_case.case_id;
    fs::remove_all(dir, ec);

    auto clone = run_git(fs::absolute(workdir),
                         {"clone", "--quiet", "--no-checkout", "-c", "core.autocrlf=false", mirror.string(), dir.string()},
                         runner);
    if (!clone.ok()) throw Error(ErrorCode::CloneFailed, "clone of " + bench_case.cve.repo_url + " failed: " + trim_nl(clone.err));

    auto co = run_git(dir, {"-c", "advice.detachedHead=false", "checkout", "--quiet", "--detach", bench_case.sandbox_commit},
                      runner);
    if (!co.ok()) throw Error(ErrorCode::CommitNotFound, "cannot check out " + bench_case.sandbox_commit + ": " + trim_nl(co.err));
    auto commit = rev_parse(dir, "HEAD", runner);
    auto parent = rev_parse(dir, "HEAD~1", runner);
    if (!commit || !parent)
        throw Error(ErrorCode::CommitNotFound, bench_case.sandbox_commit + " has no parent commit");

    git_output(dir, {"reset", "--quiet", "HEAD~1"}, runner);
    git_output(dir, {"add", "."}, runner);

    std::string staged_text = git_output(dir, with_flags({"diff", "--cached"}, {}), runner);
    std::string expected_text = git_output(dir, with_flags({"diff"}, {*parent, *commit}), runner);
    auto staged = parse_unified_diff(staged_text);
    auto expected = parse_unified_diff(expected_text);
    if (staged.empty()) throw Error(ErrorCode::StagedDiffMismatch, bench_case.case_id + ": nothing staged after reset");
    if (staged != expected)
        throw Error(ErrorCode::StagedDiffMismatch,
                    bench_case.case_id + ": staged diff differs from diff(" + short_sha(*parent) + ", " + short_sha(*commit) + ")");
    return RepoContext::open(dir, runner);
}

std::optional<int> map_line_through(const FileDiff& diff, int old_line) {
    int delta = 0;
    for (const auto& h : diff.hunks) {
        bool before = h.old_len == 0 ? old_line <= h.old_start : old_line < h.old_start;
        if (before) return old_line + delta;
        if (h.old_len > 0 && old_line <= h.old_start + h.old_len - 1) {
            int o = h.old_start;
            int n = h.new_start;
            for (const auto& l : h.lines) {
                if (l.marker == LineMarker::Context) {
                    if (o == old_line) return n;
                    ++o;
                    ++n;
                } else if (l.marker == LineMarker::Del) {
                    if (o == old_line) return std::nullopt;
                    ++o;
                } else {
                    ++n;
                }
            }
            return std::nullopt;
        }
        delta += h.new_len - h.old_len;
    }
    return old_line + delta;
}

namespace {

struct Tracked {
    std::string origin_file;
    int origin_line = 0;
    std::string text;
    std::string file;
    int line = 0;
};

const FileDiff* find_old(const std::vector<FileDiff>& files, const std::string& path) {
    for (const auto& f : files)
        if (f.old_path == path && f.change_type != ChangeType::Added) return &f;
    return nullptr;
}

}  // namespace

CandidateSet derive_candidate_lines(const fs::path& repo, const BenchCase& bench_case, process::Runner& runner) {
    auto sandbox = rev_parse(repo, bench_case.sandbox_commit, runner);
    if (!sandbox) throw Error(ErrorCode::CommitNotFound, "sandbox commit " + bench_case.sandbox_commit + " not found");
    auto fix = rev_parse(repo, bench_case.cve.fix_commit, runner);
    if (!fix) throw Error(ErrorCode::CommitNotFound, "fix commit " + bench_case.cve.fix_commit + " not found");
    auto fix_parent = rev_parse(repo, *fix + "^", runner);
    if (!fix_parent) throw Error(ErrorCode::CommitNotFound, "fix commit " + *fix + " has no parent");
    auto sandbox_parent = rev_parse(repo, *sandbox + "^", runner);
    if (!sandbox_parent) throw Error(ErrorCode::CommitNotFound, "sandbox commit " + *sandbox + " has no parent");

    std::vector<Tracked> live;
    for (const auto& fd : parse_unified_diff(sanitize_utf8(
             git_output(repo, with_flags({"diff"}, {*sandbox_parent, *sandbox}), runner)))) {
        if (fd.binary || fd.change_type == ChangeType::Deleted) continue;
        auto texts = new_side_texts(fd);
        for (const auto& [line, kind] : changed_lines_of(fd))
            live.push_back({fd.path, line, texts[line], fd.path, line});
    }

    CandidateSet out;
    auto flag = [&](const Tracked& t, std::string why) {
        out.ambiguous.push_back({t.origin_file, t.origin_line, t.text, std::move(why)});
    };
    if (!is_ancestor(repo, *sandbox, *fix_parent, runner)) {
        for (const auto& t : live) flag(t, "fix parent " + short_sha(*fix_parent) + " does not descend from the sandbox commit");
        return out;
    }

    std::vector<std::string> chain{*sandbox};
    std::istringstream revs(git_output(repo, {"rev-list", "--reverse", "--first-parent", "--ancestry-path",
                                              *sandbox + ".." + *fix_parent}, runner));
    for (std::string line; std::getline(revs, line);)
        if (!trim_nl(line).empty()) chain.push_back(trim_nl(line));
    if (chain.back() != *fix_parent) chain.push_back(*fix_parent);

    for (std::size_t i = 0; i + 1 < chain.size() && !live.empty(); ++i) {
        auto step = parse_unified_diff(sanitize_utf8(git_output(repo, with_flags({"diff"}, {chain[i], chain[i + 1]}), runner)));
        std::set<std::string> readded;
        for (const auto& fd : step)
            for (const auto& h : fd.hunks)
                for (const auto& l : h.lines)
                    if (l.marker == LineMarker::Add) readded.insert(l.text);
        std::vector<Tracked> next;
        for (auto& t : live) {
            const FileDiff* fd = find_old(step, t.file);
            if (!fd) {
                next.push_back(t);
                continue;
            }
            std::optional<int> m;
            if (!fd->binary && fd->change_type != ChangeType::Deleted) m = map_line_through(*fd, t.line);
            if (m) {
                t.file = fd->path;
                t.line = *m;
                next.push_back(t);
            } else if (readded.count(t.text)) {
                flag(t, "rewritten in " + short_sha(chain[i + 1]) + " but identical content was re-added");
            }
        }
        live = std::move(next);
    }

    auto fix_diff = parse_unified_diff(sanitize_utf8(git_output(repo, with_flags({"diff"}, {*fix_parent, *fix}), runner)));
    std::size_t steps = chain.size() - 1;
    for (const auto& t : live) {
        const FileDiff* fd = find_old(fix_diff, t.file);
        if (!fd) continue;
        auto removed = removed_old_lines(*fd);
        if (!std::binary_search(removed.begin(), removed.end(), t.line)) continue;
        std::string why = "added in " + short_sha(*sandbox);
        if (steps > 0)
            why += ", traced through " + std::to_string(steps) + " later commit(s) to " + t.file + ":" + std::to_string(t.line);
        why += ", rewritten or deleted by fix " + short_sha(*fix);
        out.candidates.push_back({t.origin_file, t.origin_line, t.text, why});
    }
    auto by_pos = [](const Candidate& a, const Candidate& b) { return std::tie(a.file, a.line) < std::tie(b.file, b.line); };
    std::sort(out.candidates.begin(), out.candidates.end(), by_pos);
    std::sort(out.ambiguous.begin(), out.ambiguous.end(), by_pos);
    return out;
}

json export_annotation_sheet(const BenchCase& bench_case, const CandidateSet& candidates, const fs::path& sandbox,
                             const CweTree* tree) {
    json cwes = json::array();
    for (int id : bench_case.cve.cwe_ids) {
        json e{{"cwe_id", id}};
        if (tree)
            if (const CweEntry* entry = tree->find(id)) {
                e["name"] = entry->name;
                e["description"] = entry->description;
            }
        cwes.push_back(e);
    }
    json staged = json::object();
    for (const auto& [p, lines] : bench_case.staged_changed_lines) staged[p] = lines;

    std::optional<RepoContext> repo;
    if (!sandbox.empty()) repo = RepoContext{sandbox, "", true};
    auto rows = [&](const std::vector<Candidate>& list, bool ambiguous) {
        json arr = json::array();
        for (const auto& c : list) {
            std::string context;
            if (repo) {
                try {
                    CodeSlice s = expand_context(*repo, c.file, LineRange{c.line, c.line}, 3);
                    int n = s.start_line;
                    for (const auto& l : split_lines(s.text)) {
                        context += (n == c.line ? ">" : " ") + std::to_string(n) + "| " + l + "\n";
                        ++n;
                    }
                } catch (const Error&) {
                }
            }
            arr.push_back({{"file", c.file},
                           {"line", c.line},
                           {"text", c.text},
                           {"rationale", c.rationale},
                           {"context", context},
                           {"ambiguous", ambiguous},
                           {"decision", nullptr},
                           {"notes", ""}});
        }
        return arr;
    };
    json cands = rows(candidates.candidates, false);
    for (auto& a : rows(candidates.ambiguous, true)) cands.push_back(a);
    return {{"case_id", bench_case.case_id},
            {"cve_id", bench_case.cve.cve_id},
            {"cve_description", bench_case.cve.description},
            {"cwe", cwes},
            {"sandbox_commit", bench_case.sandbox_commit},
            {"pre_commit_parent", bench_case.pre_commit_parent},
            {"fix_commit", bench_case.cve.fix_commit},
            {"staged_changed_lines", staged},
            {"candidates", cands},
            {"additional_lines", json::array()},
            {"annotator_notes", ""}};
}

GroundTruth import_ground_truth(const json& sheet) {
    try {
        FieldReader r(sheet, "$");
        std::set<LineKey> staged;
        if (!r.has("staged_changed_lines") || !sheet.at("staged_changed_lines").is_object())
            schema_error("$.staged_changed_lines", "required object missing");
        for (const auto& [p, lines] : sheet.at("staged_changed_lines").items()) {
            if (!lines.is_array()) schema_error("$.staged_changed_lines." + p, "expected an array");
            for (const auto& l : lines) {
                if (!l.is_number_integer()) schema_error("$.staged_changed_lines." + p, "expected integers");
                staged.insert({p, l.get<int>()});
            }
        }
        GroundTruth g;
        std::string notes;
        auto accept = [&](const LineKey& k, const std::string& path) {
            if (!staged.count(k))
                schema_error(path, k.path + ":" + std::to_string(k.line) +
                                       " is not an added or modified line of the staged diff");
            g.vulnerable_lines.insert(k);
        };
        const json& cands = r.array("candidates");
        for (std::size_t i = 0; i < cands.size(); ++i) {
            FieldReader cr(cands[i], r.child_path("candidates", i));
            LineKey k{cr.str("file"), static_cast<int>(cr.integer("line"))};
            auto d = cr.opt_str("decision");
            if (!d) schema_error(cr.child_path("decision"), "candidate is undecided (expected accept|reject)");
            std::string dl = to_lower(*d);
            if (dl == "accept") accept(k, r.child_path("candidates", i));
            else if (dl != "reject") schema_error(cr.child_path("decision"), "expected accept|reject");
            if (auto n = cr.opt_str("notes"); n && !n->empty())
                notes += k.path + ":" + std::to_string(k.line) + ": " + *n + "\n";
        }
        const json& extra = r.array("additional_lines");
        for (std::size_t i = 0; i < extra.size(); ++i) {
            FieldReader er(extra[i], r.child_path("additional_lines", i));
            accept({er.str("file"), static_cast<int>(er.integer("line"))}, r.child_path("additional_lines", i));
        }
        const json& cwes = r.array("cwe");
        for (std::size_t i = 0; i < cwes.size(); ++i) {
            const json& e = cwes[i];
            auto id = parse_cwe_id(e.is_object() && e.contains("cwe_id") ? e.at("cwe_id") : e);
            if (!id) schema_error(r.child_path("cwe", i), "expected a CWE id");
            g.cwe_ids.push_back(*id);
        }
        g.cve_description = r.opt_str("cve_description").value_or("");
        if (auto n = r.opt_str("annotator_notes"); n && !n->empty()) notes = *n + "\n" + notes;
        while (!notes.empty() && notes.back() == '\n') notes.pop_back();
        g.notes = notes;
        if (g.vulnerable_lines.empty())
            throw Error(ErrorCode::EmptyVerifiedSet,
                        r.opt_str("case_id").value_or("case") + ": no candidate line was accepted");
        g.verified = true;
        return g;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaError) throw Error(ErrorCode::SheetSchemaError, e.what());
        throw;
    }
}

void write_bundle_case(const fs::path& dir, const BenchCase& bench_case) {
    write_text_file(dir / (bench_case.case_id + ".json"), canonical_dump(to_json(bench_case)));
}

std::vector<BenchCase> load_bundle(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::FileNotFound, dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<BenchCase> out;
    for (const auto& f : files)
        out.push_back(bench_case_from_json(parse_json_document(read_file(f), f.string()), f.filename().string()));
    return out;
}

std::vector<std::string> verify_case(const BenchCase& c) {
    std::vector<std::string> problems;
    if (!c.ground_truth) {
        problems.push_back(c.case_id + ": no ground truth");
        return problems;
    }
    const GroundTruth& g = *c.ground_truth;
    if (!g.verified) problems.push_back(c.case_id + ": ground truth is not verified");
    if (g.vulnerable_lines.empty()) problems.push_back(c.case_id + ": verified set is empty");
    for (const auto& k : g.vulnerable_lines) {
        auto it = c.staged_changed_lines.find(k.path);
        if (it == c.staged_changed_lines.end() || std::find(it->second.begin(), it->second.end(), k.line) == it->second.end())
            problems.push_back(c.case_id + ": " + k.path + ":" + std::to_string(k.line) +
                               " is not an added or modified line of the staged diff");
    }
    return problems;
}

}  // namespace scr
