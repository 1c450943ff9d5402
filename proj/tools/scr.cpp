// scr: pre-commit secure code review, benchmark construction and evaluation.

#include "CLI11.hpp"

#include "scr/agent.hpp"
#include "scr/bench.hpp"
#include "scr/comments.hpp"
#include "scr/config.hpp"
#include "scr/error.hpp"
#include "scr/eval.hpp"
#include "scr/memory.hpp"
#include "scr/repo.hpp"
#include "scr/sast.hpp"

#include <glob.h>

#include <atomic>
#include <iostream>
#include <memory>
#include <thread>

namespace fs = std::filesystem;
using namespace scr;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitError = 1;
constexpr int kExitFindings = 2;

struct Common {
    std::string config_file;
    bool json_out = false;
};

Config load_cfg(const Common& c) {
    std::optional<fs::path> f;
    if (!c.config_file.empty()) f = fs::path(c.config_file);
    return load_config(f);
}

std::string first_line(const std::string& s) {
    auto nl = s.find('\n');
    return nl == std::string::npos ? s : s.substr(0, nl);
}

void print_summary(const ReviewReport& r, std::ostream& out) {
    out << "repo " << r.repo << " @ " << (r.head_commit.empty() ? "(no commits)" : r.head_commit.substr(0, 12)) << "\n";
    out << r.files.size() << " file(s) reviewed, " << r.comments.size() << " comment(s): "
        << r.count(CommentStatus::Validated) << " validated, " << r.count(CommentStatus::Filtered) << " filtered, "
        << r.count(CommentStatus::Proposed) << " proposed\n";
    for (const auto& c : r.comments) {
        out << "  [" << to_string(c.status) << "] " << c.file << ":" << c.start_line;
        if (c.end_line != c.start_line) out << "-" << c.end_line;
        out << "  " << (c.cwe_id ? "CWE-" + std::to_string(*c.cwe_id) : std::string("CWE-?")) << "  "
            << first_line(c.comment) << "\n";
    }
    for (const auto& [k, v] : r.metadata)
        if (k == "validation" && v == "failed")
            out << "validation failed: " << (r.metadata.count("validation_error") ? r.metadata.at("validation_error") : "")
                << "\n";
}

std::unique_ptr<LlmBackend> make_backend(const std::string& spec, const Config& cfg) {
    std::string kind = spec.empty() ? cfg.str("backend", "kind") : spec;
    if (kind.rfind("scripted:", 0) == 0) return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(kind.substr(9)));
    if (kind == "scripted") {
        fs::path t = cfg.path("backend", "transcript");
        if (t.empty()) throw Error(ErrorCode::ConfigError, "scripted backend needs backend.transcript");
        return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(t));
    }
    if (kind == "remote") return std::make_unique<ChatCompletionsBackend>(cfg.remote());
    throw Error(ErrorCode::ConfigError, "unknown backend '" + kind + "' (expected scripted:<file> or remote)");
}

SemanticStores stores_from(const Config& cfg, bool with_guidelines) {
    fs::path dir = cfg.data_dir();
    fs::path rules = cfg.path("memory", "sast_rules");
    fs::path cwe = cfg.path("memory", "cwe_tree");
    fs::path guide = cfg.path("memory", "guidelines");
    if (rules.empty()) rules = dir / "sast_rules.json";
    if (cwe.empty()) cwe = dir / "cwe_tree.json";
    if (guide.empty() && with_guidelines) guide = dir / "guidelines.json";
    if (!with_guidelines) guide.clear();
    return load_stores(rules, cwe, guide);
}

CweTree tree_from(const Config& cfg) {
    fs::path cwe = cfg.path("memory", "cwe_tree");
    if (cwe.empty()) cwe = cfg.data_dir() / "cwe_tree.json";
    return load_cwe_tree_file(cwe);
}

// ---------------------------------------------------------------- review

struct ReviewArgs {
    std::string repo = ".";
    std::string backend;
    std::string out;
    std::string work_dir;
    std::string label;
    std::string clock;
    bool sequential_ids = false;
    bool dry_run = false;
    bool include_unstaged = false;
    bool guidelines = false;
    bool no_validator = false;
    int max_tool_calls = -1;
};

int cmd_review(const Common& common, const ReviewArgs& a) {
    Config cfg = load_cfg(common);
    if (a.include_unstaged) cfg.set("review", "include_unstaged", "true");
    if (a.guidelines) cfg.set("review", "use_guidelines", "true");
    if (a.no_validator) cfg.set("review", "use_validator", "false");
    if (a.max_tool_calls >= 0) cfg.set("budget", "max_tool_calls", std::to_string(a.max_tool_calls));
    if (!a.work_dir.empty()) cfg.set("review", "work_dir", a.work_dir);

    RepoContext repo = RepoContext::open(a.repo);
    CollectOptions copts;
    copts.include_unstaged = cfg.boolean("review", "include_unstaged");
    ChangeSet changes = collect_staged_changes(repo, copts);

    bool with_guidelines = cfg.boolean("review", "use_guidelines");
    PipelinePolicy policy = default_policy(with_guidelines, cfg.boolean("review", "use_validator"));

    if (a.dry_run) {
        json plan{{"repo", repo.root_path.string()},
                  {"head_commit", repo.head_commit},
                  {"stages", json::array()},
                  {"instruction", policy.instruction},
                  {"backend", a.backend.empty() ? cfg.str("backend", "kind") : a.backend},
                  {"max_tool_calls", cfg.integer("budget", "max_tool_calls")},
                  {"max_prompt_bytes", cfg.integer("budget", "max_prompt_bytes")},
                  {"files", json::array()},
                  {"skipped", json::array()}};
        for (const auto& s : policy.stages) plan["stages"].push_back(s.name);
        for (const auto& f : changes.files) {
            std::size_t n = 0;
            for (const auto& [k, v] : changes.changed_lines) n += k.path == f.path;
            plan["files"].push_back({{"path", f.path}, {"change_type", std::string(to_string(f.change_type))}, {"changed_lines", n}});
        }
        for (const auto& s : changes.skipped) plan["skipped"].push_back({{"path", s.path}, {"reason", s.reason}});
        if (common.json_out) {
            std::cout << plan.dump(2) << "\n";
        } else {
            std::cout << "plan: review " << changes.files.size() << " staged file(s), " << changes.changed_line_count()
                      << " changed line(s) in " << repo.root_path.string() << "\n";
            for (const auto& f : plan["files"])
                std::cout << "  " << f["path"].get<std::string>() << " (" << f["change_type"].get<std::string>() << ", "
                          << f["changed_lines"].get<std::size_t>() << " lines)\n";
            for (const auto& s : changes.skipped) std::cout << "  skip " << s.path << " (" << s.reason << ")\n";
            std::cout << "stages:";
            for (const auto& s : policy.stages) std::cout << " " << s.name;
            std::cout << "\nbackend: " << plan["backend"].get<std::string>() << "\n";
        }
        return kExitClean;
    }

    SemanticStores stores = stores_from(cfg, with_guidelines);
    auto backend = make_backend(a.backend, cfg);

    PipelineEnv env;
    env.work_dir = fs::absolute(cfg.path("review", "work_dir"));
    env.session.budget = cfg.budget();
    if (!a.clock.empty()) {
        std::string ts = a.clock;
        env.session.clock = [ts] { return ts; };
    }
    if (a.sequential_ids) env.session.ids = sequential_ids();
    env.limits.bash_timeout = std::chrono::milliseconds(cfg.integer("budget", "bash_timeout_ms"));
    env.limits.slice_budget = static_cast<std::size_t>(cfg.integer("budget", "slice_budget_bytes"));

    ReviewReport report = run_pipeline(policy, repo, changes, stores, *backend, env);
    if (!a.label.empty()) report.metadata["label"] = a.label;

    fs::path out = a.out.empty() ? env.work_dir / "report.json" : fs::path(a.out);
    emit_report(report, out);
    if (common.json_out) {
        std::cout << render_report(report);
    } else {
        print_summary(report, std::cout);
        std::cout << "report: " << out.string() << "\n";
    }
    return report.count(CommentStatus::Validated) > 0 ? kExitFindings : kExitClean;
}

// ---------------------------------------------------------------- memory

int cmd_memory_validate(const Common& common, const std::string& kind, const std::string& file) {
    std::string doc = read_file(file);
    json summary{{"kind", kind}, {"file", file}};
    if (kind == "rules") {
        auto s = load_sast_rules(doc);
        summary["entries"] = s.rules.size();
        summary["cwes"] = s.by_cwe.size();
        summary["warnings"] = s.warnings;
    } else if (kind == "cwe") {
        auto t = load_cwe_tree(doc);
        summary["entries"] = t.entries.size();
        summary["pillars"] = t.pillars.size();
    } else if (kind == "guidelines") {
        auto g = load_guidelines(doc);
        summary["entries"] = g.entries.size();
        summary["warnings"] = g.warnings;
    } else {
        throw Error(ErrorCode::ConfigError, "unknown memory kind '" + kind + "' (rules|cwe|guidelines)");
    }
    if (common.json_out) std::cout << summary.dump(2) << "\n";
    else std::cout << file << ": valid " << kind << " document with " << summary["entries"].get<std::size_t>() << " entries\n";
    return kExitClean;
}

int cmd_memory_build(const Common& common, const std::string& kind, const std::string& source, const std::string& out,
                     const std::string& cwe_tree) {
    json doc;
    std::size_t count = 0;
    std::vector<std::string> warnings;
    if (kind == "rules") {
        std::error_code ec;
        if (fs::is_directory(source, ec)) {
            std::optional<CweTree> tree;
            if (!cwe_tree.empty()) tree = load_cwe_tree_file(cwe_tree);
            auto store = convert_codeql_queries(source, tree ? &*tree : nullptr);
            doc = to_json(store);
            count = store.rules.size();
            warnings = store.warnings;
        } else {
            auto store = load_sast_rules_file(source);
            doc = to_json(store);
            count = store.rules.size();
            warnings = store.warnings;
        }
    } else if (kind == "cwe") {
        auto t = load_cwe_tree_file(source);
        doc = to_json(t);
        count = t.entries.size();
    } else if (kind == "guidelines") {
        auto g = load_guidelines_file(source);
        doc = to_json(g);
        count = g.entries.size();
        warnings = g.warnings;
    } else {
        throw Error(ErrorCode::ConfigError, "unknown memory kind '" + kind + "' (rules|cwe|guidelines)");
    }
    write_text_file(out, canonical_dump(doc));
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (common.json_out) std::cout << json{{"kind", kind}, {"out", out}, {"entries", count}}.dump(2) << "\n";
    else std::cout << "wrote " << count << " " << kind << " entries to " << out << "\n";
    return kExitClean;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string corpus;
    std::string workdir;
    std::string bundle;
    std::string cache;
    std::string sheet;
    int max_chain = 3;
    int max_lines = 112;
    std::string languages = "py,js,ts";
    int jobs = 1;
    bool no_build = false;
};

SelectionCriteria criteria_from(const BenchArgs& a) {
    SelectionCriteria c;
    c.max_chain = a.max_chain;
    c.max_changed_lines = a.max_lines;
    c.languages.clear();
    std::string cur;
    for (char ch : a.languages + ",") {
        if (ch == ',') {
            if (!cur.empty()) c.languages.insert(canonical_language(cur));
            cur.clear();
        } else if (ch != ' ') {
            cur.push_back(ch);
        }
    }
    return c;
}

int cmd_bench_build(const Common& common, const BenchArgs& a) {
    auto records = load_cve_corpus(a.corpus);
    fs::path workdir = fs::absolute(a.workdir);
    fs::path cache_dir = a.cache.empty() ? workdir / ".clones" : fs::path(a.cache);
    fs::path bundle = a.bundle.empty() ? workdir / "bundle" : fs::path(a.bundle);
    fs::path sheets = workdir / "sheets";
    CloneCache cache(cache_dir);
    SelectionReport sel = select_cases(records, criteria_from(a), cache);

    Config cfg = load_cfg(common);
    std::optional<CweTree> tree;
    try {
        tree = tree_from(cfg);
    } catch (const Error&) {
    }

    std::vector<json> built(sel.cases.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < sel.cases.size(); i = next++) {
            const BenchCase& c = sel.cases[i];
            json row{{"case_id", c.case_id}, {"changed_lines", c.changed_line_count}};
            try {
                write_bundle_case(bundle, c);
                if (!a.no_build) {
                    RepoContext repo = build_sandbox(c, workdir / "sandboxes", cache);
                    CandidateSet cands = derive_candidate_lines(repo.root_path, c, cache.runner());
                    json sheet = export_annotation_sheet(c, cands, repo.root_path, tree ? &*tree : nullptr);
                    write_text_file(sheets / (c.case_id + ".json"), canonical_dump(sheet));
                    row["sandbox"] = repo.root_path.string();
                    row["candidates"] = cands.candidates.size();
                    row["ambiguous"] = cands.ambiguous.size();
                }
                row["status"] = "ok";
            } catch (const Error& e) {
                row["status"] = "error";
                row["error"] = std::string(error_code_name(e.code()));
                row["message"] = e.what();
            }
            built[i] = row;
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, a.jobs); ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    json summary = sel.summary();
    summary["cases"] = built;
    json rejected = json::array();
    for (const auto& r : sel.rejections) rejected.push_back({{"cve_id", r.cve_id}, {"reason", r.reason}, {"detail", r.detail}});
    summary["rejected"] = rejected;
    write_text_file(workdir / "selection.json", canonical_dump(summary));

    int failures = 0;
    for (const auto& b : built) failures += b["status"] == "error";
    if (common.json_out) {
        std::cout << summary.dump(2) << "\n";
    } else {
        std::cout << "selected " << sel.cases.size() << " of " << sel.total << " record(s)\n";
        for (const auto& [reason, n] : sel.rejection_counts) std::cout << "  rejected " << reason << ": " << n << "\n";
        for (const auto& b : built) {
            std::cout << "  " << b["case_id"].get<std::string>() << "  " << b["status"].get<std::string>();
            if (b.contains("candidates")) std::cout << "  candidates=" << b["candidates"].get<std::size_t>();
            if (b.contains("error")) std::cout << "  error[" << b["error"].get<std::string>() << "] " << b["message"].get<std::string>();
            std::cout << "\n";
        }
    }
    for (const auto& b : built)
        if (b["status"] == "error")
            std::cerr << "error[" << b["error"].get<std::string>() << "]: " << b["message"].get<std::string>() << "\n";
    return failures ? kExitError : kExitClean;
}

int cmd_bench_list(const Common& common, const BenchArgs& a) {
    auto cases = load_bundle(a.bundle);
    json arr = json::array();
    for (const auto& c : cases)
        arr.push_back({{"case_id", c.case_id},
                       {"cve_id", c.cve.cve_id},
                       {"language", c.cve.language},
                       {"changed_lines", c.changed_line_count},
                       {"verified", c.ground_truth && c.ground_truth->verified},
                       {"truth_lines", c.ground_truth ? c.ground_truth->vulnerable_lines.size() : 0}});
    if (common.json_out) {
        std::cout << arr.dump(2) << "\n";
    } else {
        for (const auto& r : arr)
            std::cout << r["case_id"].get<std::string>() << "  " << r["language"].get<std::string>() << "  lines="
                      << r["changed_lines"].get<int>() << "  " << (r["verified"].get<bool>() ? "verified" : "unverified")
                      << "\n";
    }
    return kExitClean;
}

int cmd_bench_import(const Common& common, const BenchArgs& a) {
    json sheet = parse_json_document(read_file(a.sheet), a.sheet);
    GroundTruth g = import_ground_truth(sheet);
    std::string case_id = sheet.value("case_id", "");
    fs::path file = fs::path(a.bundle) / (case_id + ".json");
    std::error_code ec;
    if (!fs::is_regular_file(file, ec)) throw Error(ErrorCode::FileNotFound, "bundle has no case " + case_id);
    BenchCase c = bench_case_from_json(parse_json_document(read_file(file), file.string()), file.string());
    c.ground_truth = g;
    auto problems = verify_case(c);
    if (!problems.empty()) throw Error(ErrorCode::SheetSchemaError, problems.front());
    write_bundle_case(a.bundle, c);
    if (common.json_out) std::cout << to_json(c).dump(2) << "\n";
    else std::cout << case_id << ": " << g.vulnerable_lines.size() << " verified line(s)\n";
    return kExitClean;
}

int cmd_bench_verify(const Common& common, const BenchArgs& a) {
    auto cases = load_bundle(a.bundle);
    std::vector<std::string> problems;
    for (const auto& c : cases)
        for (auto& p : verify_case(c)) problems.push_back(std::move(p));
    if (common.json_out)
        std::cout << json{{"cases", cases.size()}, {"problems", problems}, {"ok", problems.empty()}}.dump(2) << "\n";
    else if (problems.empty())
        std::cout << cases.size() << " case(s) verified\n";
    for (const auto& p : problems) std::cerr << "error[SheetSchemaError]: " << p << "\n";
    return problems.empty() ? kExitClean : kExitError;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::vector<std::string> reports;
    std::string truth;
    std::string judge;
    std::string out;
    std::string scores;
    int tolerance = -1;
    int jobs = 0;
    bool strict_overlap = false;
};

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
    std::vector<std::string> out;
    for (const auto& p : patterns) {
        glob_t g{};
        int rc = ::glob(p.c_str(), 0, nullptr, &g);
        if (rc == 0)
            for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
        globfree(&g);
        if (rc == GLOB_NOMATCH) throw Error(ErrorCode::FileNotFound, "no report matches " + p);
        if (rc != 0 && rc != GLOB_NOMATCH) throw Error(ErrorCode::IoError, "cannot expand " + p);
    }
    return out;
}

int cmd_eval(const Common& common, const EvalArgs& a) {
    Config cfg = load_cfg(common);
    if (a.tolerance >= 0) cfg.set("eval", "tolerance", std::to_string(a.tolerance));
    if (a.jobs > 0) cfg.set("eval", "jobs", std::to_string(a.jobs));
    if (a.strict_overlap) cfg.set("eval", "strict_overlap", "true");
    if (!a.judge.empty()) cfg.set("eval", "judge", a.judge);

    std::error_code ec;
    if (!fs::is_directory(a.truth, ec)) throw Error(ErrorCode::FileNotFound, "truth directory " + a.truth + " not found");
    auto cases = load_bundle(a.truth);
    std::map<std::string, const BenchCase*> by_id;
    for (const auto& c : cases) by_id[c.case_id] = &c;
    CweTree tree = tree_from(cfg);

    std::string judge_spec = cfg.str("eval", "judge");
    std::unique_ptr<LlmBackend> judge_backend;
    std::unique_ptr<JudgeBackend> judge;
    if (judge_spec.rfind("scripted:", 0) == 0) {
        judge = std::make_unique<ScriptedJudge>(ScriptedJudge::from_file(judge_spec.substr(9)));
    } else if (judge_spec == "remote") {
        judge_backend = std::make_unique<ChatCompletionsBackend>(cfg.remote());
        judge = std::make_unique<LlmJudge>(*judge_backend);
    } else {
        throw Error(ErrorCode::ConfigError, "--judge must be scripted:<table.json> or remote");
    }

    EvalOptions opts;
    opts.tolerance = static_cast<int>(cfg.integer("eval", "tolerance"));
    opts.jobs = static_cast<int>(cfg.integer("eval", "jobs"));
    opts.strict_overlap = cfg.boolean("eval", "strict_overlap");

    std::vector<std::string> labels;
    std::map<std::string, std::vector<CommentScore>> scores;
    for (const auto& file : expand_globs(a.reports)) {
        ReviewReport r = load_report_file(file);
        std::string label = report_label(r);
        if (!scores.count(label)) labels.push_back(label);
        auto it = by_id.find(r.repo);
        auto s = score_report(r, it == by_id.end() ? nullptr : it->second, tree, *judge, opts);
        auto& dst = scores[label];
        dst.insert(dst.end(), s.begin(), s.end());
    }
    std::vector<MetricsReport> metrics;
    for (const auto& l : labels) metrics.push_back(aggregate(l, scores[l]));
    Comparison cmp = compare_runs(metrics);

    json out{{"tolerance", opts.tolerance}, {"judge", judge->name()}, {"runs", cmp.data}};
    if (!a.out.empty()) write_text_file(a.out, canonical_dump(out));
    if (!a.scores.empty()) {
        json all = json::object();
        for (const auto& l : labels) {
            json arr = json::array();
            for (const auto& s : scores[l]) arr.push_back(to_json(s));
            all[l] = arr;
        }
        write_text_file(a.scores, canonical_dump(all));
    }
    if (common.json_out) std::cout << out.dump(2) << "\n";
    else std::cout << cmp.table << "\n" << cmp.category_table;
    return kExitClean;
}

// ---------------------------------------------------------------- report / sast

int cmd_report(const Common& common, const std::string& file) {
    ReviewReport r = load_report_file(file);
    if (common.json_out) std::cout << render_report(r);
    else print_summary(r, std::cout);
    return kExitClean;
}

struct SastArgs {
    std::string tool;
    std::string input;
    std::string repo;
    std::string out;
    std::string version;
    bool filter_staged = false;
    int radius = 0;
};

int cmd_sast(const Common& common, const SastArgs& a) {
    RawToolRun run;
    run.tool = parse_sast_tool(a.tool);
    run.version = a.version;
    run.payload = read_file(a.input);
    SarifOptions opts;
    ReviewReport report;
    std::optional<RepoContext> repo;
    if (!a.repo.empty()) {
        repo = RepoContext::open(a.repo);
        opts.repo_root = repo->root_path;
        report.repo = repo->root_path.filename().string();
        report.head_commit = repo->head_commit;
    }
    NormalizedRun n = normalize_tool_output(run, opts);
    std::vector<SecurityComment> comments = n.comments;
    if (a.filter_staged) {
        if (!repo) throw Error(ErrorCode::ConfigError, "--filter-staged needs --repo");
        ChangeSet cs = collect_staged_changes(*repo);
        comments = filter_to_changeset(comments, cs, a.radius);
        for (const auto& f : cs.files) report.files.push_back({f.path, std::string(to_string(f.change_type)), 0, 0});
    }
    report.comments = comments;
    report.metadata["tool"] = std::string(to_string(run.tool));
    report.metadata["tool_version"] = n.tool_version;
    report.metadata["format"] = n.format;
    report.metadata["dropped"] = std::to_string(n.dropped);
    report.metadata["label"] = std::string(to_string(run.tool));
    if (!a.out.empty()) emit_report(report, a.out);
    if (common.json_out) std::cout << render_report(report);
    else print_summary(report, std::cout);
    return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pre-commit secure code review"};
    app.require_subcommand(1);
    app.fallthrough();  // --json and --config may follow the subcommand
    app.set_version_flag("--version", "scr 0.1.0");
    Common common;
    app.add_option("--config", common.config_file, "JSON config file");
    app.add_flag("--json", common.json_out, "machine-readable output on stdout");

    ReviewArgs ra;
    auto* review = app.add_subcommand("review", "review the staged changes of a repository");
    review->add_option("repo", ra.repo, "repository path");
    review->add_option("--backend", ra.backend, "scripted:<transcript.json> or remote");
    review->add_option("--out", ra.out, "report file (default <work-dir>/report.json)");
    review->add_option("--work-dir", ra.work_dir, "directory for the comment file and session logs");
    review->add_option("--label", ra.label, "run label recorded in the report");
    review->add_option("--max-tool-calls", ra.max_tool_calls, "tool-call budget per session");
    review->add_option("--clock", ra.clock, "fixed timestamp for reproducible reports");
    review->add_flag("--sequential-ids", ra.sequential_ids, "session ids <agent>-<n>");
    review->add_flag("--dry-run", ra.dry_run, "print the review plan without calling a backend");
    review->add_flag("--include-unstaged", ra.include_unstaged, "review the worktree against HEAD");
    review->add_flag("--guidelines", ra.guidelines, "give the detector the secure coding guidelines");
    review->add_flag("--no-validator", ra.no_validator, "skip the validator stage");

    auto* memory = app.add_subcommand("memory", "semantic-memory documents");
    memory->require_subcommand(1);
    std::string mkind = "rules", msource, mout, mcwe, mfile;
    auto* mbuild = memory->add_subcommand("build", "convert CodeQL query metadata or canonicalize a document");
    mbuild->add_option("--kind", mkind, "rules|cwe|guidelines");
    mbuild->add_option("--source", msource, "query directory or document")->required();
    mbuild->add_option("--out", mout, "output document")->required();
    mbuild->add_option("--cwe-tree", mcwe, "CWE tree used to name converted rules");
    auto* mvalidate = memory->add_subcommand("validate", "schema-check a document");
    mvalidate->add_option("--kind", mkind, "rules|cwe|guidelines");
    mvalidate->add_option("file", mfile, "document")->required();

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "benchmark construction");
    bench->require_subcommand(1);
    auto* bbuild = bench->add_subcommand("build", "select cases and build sandboxes");
    bbuild->add_option("--corpus", ba.corpus, "CVE records, JSON lines")->required();
    bbuild->add_option("--workdir", ba.workdir, "output directory")->required();
    bbuild->add_option("--bundle", ba.bundle, "ground-truth bundle directory (default <workdir>/bundle)");
    bbuild->add_option("--cache", ba.cache, "clone cache directory");
    bbuild->add_option("--max-chain", ba.max_chain, "maximum introducing commits");
    bbuild->add_option("--max-lines", ba.max_lines, "maximum added+modified lines");
    bbuild->add_option("--languages", ba.languages, "comma-separated languages");
    bbuild->add_option("--jobs", ba.jobs, "parallel sandbox builds");
    bbuild->add_flag("--select-only", ba.no_build, "write bundle entries without building sandboxes");
    auto* blist = bench->add_subcommand("list", "list bundle cases");
    blist->add_option("--bundle", ba.bundle, "bundle directory")->required();
    auto* bimport = bench->add_subcommand("import", "import an annotated sheet into the bundle");
    bimport->add_option("--sheet", ba.sheet, "annotation sheet")->required();
    bimport->add_option("--bundle", ba.bundle, "bundle directory")->required();
    auto* bverify = bench->add_subcommand("verify", "check ground-truth invariants of a bundle");
    bverify->add_option("--bundle", ba.bundle, "bundle directory")->required();

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "score review reports against ground truth");
    eval->add_option("--reports", ea.reports, "report files or glob patterns")->required();
    eval->add_option("--truth", ea.truth, "ground-truth bundle directory")->required();
    eval->add_option("--judge", ea.judge, "scripted:<table.json> or remote");
    eval->add_option("--tolerance", ea.tolerance, "localization tolerance in lines (default 5)");
    eval->add_option("--jobs", ea.jobs, "parallel judge calls");
    eval->add_option("--out", ea.out, "metrics JSON file");
    eval->add_option("--scores", ea.scores, "per-comment scores JSON file");
    eval->add_flag("--strict-overlap", ea.strict_overlap, "anchor localization on the whole comment range");

    std::string report_file;
    auto* report = app.add_subcommand("report", "summarize a review report");
    report->add_option("file", report_file, "report JSON")->required();

    SastArgs sa;
    auto* sast = app.add_subcommand("sast", "normalize SAST tool output into a review report");
    sast->add_option("--tool", sa.tool, "codeql|semgrep|snyk")->required();
    sast->add_option("--input", sa.input, "SARIF or tool-native output")->required();
    sast->add_option("--tool-version", sa.version, "tool version");
    sast->add_option("--repo", sa.repo, "repository the results refer to");
    sast->add_option("--out", sa.out, "report file");
    sast->add_option("--radius", sa.radius, "line radius for --filter-staged");
    sast->add_flag("--filter-staged", sa.filter_staged, "keep only results on staged changed lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*review) return cmd_review(common, ra);
        if (*mbuild) return cmd_memory_build(common, mkind, msource, mout, mcwe);
        if (*mvalidate) return cmd_memory_validate(common, mkind, mfile);
        if (*bbuild) return cmd_bench_build(common, ba);
        if (*blist) return cmd_bench_list(common, ba);
        if (*bimport) return cmd_bench_import(common, ba);
        if (*bverify) return cmd_bench_verify(common, ba);
        if (*eval) return cmd_eval(common, ea);
        if (*report) return cmd_report(common, report_file);
        if (*sast) return cmd_sast(common, sa);
    } catch (const Error& e) {
        std::cerr << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error[IoError]: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
