#include "scr/agent.hpp"

#include "scr/error.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace scr {

namespace {

const char* kCommentSchema = R"(Reply with only a JSON array. Each element is one security comment:
{"file": "<repo-relative path>", "start_line": <int>, "end_line": <int>,
 "comment": "<what is wrong, why it is exploitable, how to fix it>",
 "cwe_id": "CWE-<n>", "cwe_name": "<CWE name>", "severity": "low|medium|high|critical",
 "rule_id": "<SAST rule id or null>", "evidence": ["<tool result or code reference>"]}
Line numbers refer to the file after the change. Reply with [] when the change has no security issue.)";

const char* kVerdictSchema = R"(Reply with only a JSON array holding one verdict per input comment:
{"comment_id": "<id from the comment file>", "decision": "keep|filter",
 "matched_cwes": ["CWE-<n>", ...], "criteria_notes": "<preconditions, exploitability and environment checked>"}
A keep decision must list at least one matched CWE.)";

std::string tools_section(const std::set<std::string>& allowed) {
    std::string out;
    for (const auto& t : tool_catalog(allowed)) out += "- " + t.name + ": " + t.description + "\n";
    return out;
}

}  // namespace

SubagentSpec detector_spec(bool with_guidelines) {
    SubagentSpec s;
    s.name = "detector";
    s.goal = "Find security issues introduced by the staged code changes.";
    s.resources = {"@resources/sast_rules.json"};
    if (with_guidelines) s.resources.push_back("@resources/guidelines.json");
    s.allowed_tools = registered_tools();
    s.output_schema = OutputSchema::Comments;
    std::string p =
        "# Detector Subagent\n"
        "You are an experienced secure code reviewer using Static Application Security Testing (SAST) "
        "methodology. Your task is to conduct comprehensive security-focused code review by exploring the repo "
        "and generating actionable security comments following SAST tool rules and patterns.\n\n"
        "## Workflow\n"
        "1. Load SAST Rules Resource\n"
        "   Open @resources/sast_rules.json with open_files and keep the rules relevant to the changed languages.\n";
    if (with_guidelines)
        p += "   Also open @resources/guidelines.json for the organisation's secure coding guidelines.\n";
    p += "2. Find Diff Changes to Review\n"
         "   The staged diff is given below; `git diff --cached` through bash returns it again.\n"
         "3. Examine Changes with SAST Focus\n"
         "   Expand the changed hunks with expand_code_chunks and follow data flow with grep and open_files.\n"
         "4. Apply SAST Rules to Changes\n"
         "   Report only issues located on changed lines, each tied to a rule and a CWE.\n\n"
         "## Tools\n" +
         tools_section(s.allowed_tools) + "\n## Output Format\n" + kCommentSchema + "\n";
    s.system_prompt = std::move(p);
    return s;
}

SubagentSpec validator_spec() {
    SubagentSpec s;
    s.name = "validator";
    s.goal = "Keep only review comments that describe real, substantiated security weaknesses.";
    s.resources = {"@resources/cwe_tree.json"};
    s.allowed_tools = registered_tools();
    s.output_schema = OutputSchema::Verdicts;
    s.system_prompt =
        "# Validation Code Review\n"
        "You are an experienced secure code reviewer using the Common Weakness Enumeration (CWE) methodology. "
        "You will read a code review comment file (JSON format) from <target_warning_path> and validate each "
        "review comment using the CWE knowledge base. Filter out comments that do not correspond to real security "
        "issues or are likely false positives.\n\n"
        "## Workflow\n"
        "1. Load CWE Tree Resource\n"
        "   Open @resources/cwe_tree.json with open_files.\n"
        "2. Input Processing\n"
        "   Open <target_warning_path> and read every comment.\n"
        "3. CWE-Based Validation Process\n"
        "   Map each comment to one or more candidate CWE entries of the tree.\n"
        "4. CWE-Specific Validation Criteria\n"
        "   Check the required preconditions, exploitability assumptions and environmental dependencies of "
        "those entries against the code.\n\n"
        "## Tools\n" +
        tools_section(s.allowed_tools) + "\n## Output Format\n" + kVerdictSchema + "\n";
    return s;
}

PipelinePolicy default_policy(bool with_guidelines, bool use_validator) {
    PipelinePolicy p;
    p.stages.push_back(detector_spec(with_guidelines));
    if (use_validator) p.stages.push_back(validator_spec());
    return p;
}

Clock system_clock() {
    return [] {
        auto now = std::chrono::system_clock::now();
        std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return std::string(buf);
    };
}

IdGenerator random_ids() {
    return [](const std::string& agent) {
        static std::mutex mu;
        static std::mt19937_64 rng{std::random_device{}()};
        std::lock_guard lock(mu);
        std::ostringstream os;
        os << agent << '-' << std::hex << (rng() & 0xffffffffffULL);
        return os.str();
    };
}

IdGenerator sequential_ids() {
    auto counters = std::make_shared<std::map<std::string, int>>();
    auto mu = std::make_shared<std::mutex>();
    return [counters, mu](const std::string& agent) {
        std::lock_guard lock(*mu);
        return agent + "-" + std::to_string(++(*counters)[agent]);
    };
}

EpisodicLog::EpisodicLog(std::string session_id, fs::path file, Clock clock)
    : session_id_(std::move(session_id)), file_(std::move(file)), clock_(std::move(clock)) {
    std::error_code ec;
    fs::create_directories(file_.parent_path(), ec);
    std::ofstream out(file_, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot create episodic log " + file_.string());
}

void EpisodicLog::record(std::string type, json fields) {
    json ev = json::object();
    ev["type"] = std::move(type);
    ev["session_id"] = session_id_;
    ev["ts"] = clock_();
    for (auto& [k, v] : fields.items()) ev[k] = v;
    std::ofstream out(file_, std::ios::binary | std::ios::app);
    out << ev.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "cannot append to episodic log " + file_.string());
    events_.push_back(std::move(ev));
}

std::vector<json> read_episodic_log(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + file.string());
    std::vector<json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(ErrorCode::SchemaError, file.string() + ":" + std::to_string(n) + ": invalid JSON line");
        out.push_back(std::move(j));
    }
    return out;
}

std::string_view to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::Running: return "running";
        case SessionStatus::Done: return "done";
        case SessionStatus::BudgetExhausted: return "budget_exhausted";
        case SessionStatus::Failed: return "failed";
    }
    return "failed";
}

namespace {

const json& unwrap(const json& output, const char* key) {
    if (output.is_object() && output.contains(key)) return output.at(key);
    return output;
}

std::size_t prompt_bytes(const std::vector<Message>& msgs) {
    std::size_t n = 0;
    for (const auto& m : msgs) {
        n += m.content.size();
        for (const auto& c : m.tool_calls) n += c.tool.size() + c.arguments.dump().size();
    }
    return n;
}

// Elides the oldest tool results until the prompt fits. The system prompt
// and the initial user message (which carries the diff) are never touched.
int fit_prompt(std::vector<Message>& msgs, std::size_t max_bytes) {
    int elided = 0;
    for (std::size_t i = 2; i < msgs.size() && prompt_bytes(msgs) > max_bytes; ++i) {
        Message& m = msgs[i];
        if (m.role != Role::Tool || m.content.rfind("[tool result truncated", 0) == 0) continue;
        m.content = "[tool result truncated: " + std::to_string(m.content.size()) +
                    " bytes elided to fit the prompt budget]";
        ++elided;
    }
    return elided;
}

json message_json(const Message& m) {
    json j{{"role", std::string(to_string(m.role))}, {"content", m.content}};
    if (!m.call_id.empty()) j["call_id"] = m.call_id;
    if (!m.tool_calls.empty()) {
        j["tool_calls"] = json::array();
        for (const auto& c : m.tool_calls)
            j["tool_calls"].push_back({{"call_id", c.call_id}, {"tool", c.tool}, {"arguments", c.arguments}});
    }
    return j;
}

}  // namespace

std::vector<SecurityComment> comments_from_output(const json& output) {
    const json& arr = unwrap(output, "comments");
    if (!arr.is_array()) schema_error("$", "expected an array of comments");
    std::vector<SecurityComment> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        SecurityComment c = comment_from_json(arr[i], "$[" + std::to_string(i) + "]");
        c.producer = Producer::Agentic;
        c.status = CommentStatus::Proposed;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ValidationVerdict> verdicts_from_output(const json& output) {
    const json& arr = unwrap(output, "verdicts");
    if (!arr.is_array()) schema_error("$", "expected an array of verdicts");
    std::vector<ValidationVerdict> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(verdict_from_json(arr[i], "$[" + std::to_string(i) + "]"));
    return out;
}

SessionResult run_subagent(const SubagentSpec& spec, const std::string& input, LlmBackend& backend,
                           ToolExecutor& tools, WorkingMemory& working, const SessionEnv& env) {
    if (spec.system_prompt.empty()) throw Error(ErrorCode::ConfigError, "subagent " + spec.name + " has no system prompt");
    for (const auto& t : spec.allowed_tools)
        if (!registered_tools().count(t)) throw Error(ErrorCode::ConfigError, "unknown tool in allowed_tools: " + t);

    SessionResult res;
    res.session_id = env.ids(spec.name);
    res.log_file = env.log_dir / (res.session_id + ".jsonl");
    EpisodicLog log(res.session_id, res.log_file, env.clock);
    log.record("session_start", {{"agent", spec.name},
                                 {"backend", backend.name()},
                                 {"max_tool_calls", env.budget.max_tool_calls},
                                 {"max_prompt_bytes", env.budget.max_prompt_bytes}});

    CompletionRequest req;
    req.agent = spec.name;
    req.tools = tool_catalog(spec.allowed_tools);
    req.messages.push_back({Role::System, spec.system_prompt, {}, {}});
    req.messages.push_back({Role::User, input, {}, {}});
    log.record("message", message_json(req.messages[0]));
    log.record("message", message_json(req.messages[1]));

    auto finish = [&](SessionStatus status) {
        res.status = status;
        res.messages = req.messages;
        json end{{"status", std::string(to_string(status))}, {"tool_calls", res.tool_calls}};
        if (res.error) {
            end["error"] = std::string(error_code_name(*res.error));
            end["error_message"] = res.error_message;
        }
        end["output"] = res.output;
        log.record("session_end", end);
        return res;
    };
    auto fail = [&](ErrorCode code, std::string msg) {
        res.error = code;
        res.error_message = std::move(msg);
        return finish(SessionStatus::Failed);
    };

    bool repaired = false;
    for (;;) {
        if (int elided = fit_prompt(req.messages, env.budget.max_prompt_bytes))
            log.record("prompt_truncated", {{"elided_tool_results", elided}, {"prompt_bytes", prompt_bytes(req.messages)}});

        AssistantTurn turn;
        try {
            turn = backend.complete(req);
        } catch (const Error& e) {
            return fail(e.code() == ErrorCode::BackendError ? ErrorCode::BackendError : e.code(), e.what());
        }

        Message assistant{Role::Assistant, turn.content, turn.tool_calls, {}};
        req.messages.push_back(assistant);
        log.record("message", message_json(assistant));

        if (turn.is_final()) {
            try {
                json out = extract_json_payload(turn.content);
                if (spec.output_schema == OutputSchema::Comments) comments_from_output(out);
                else verdicts_from_output(out);
                res.output = std::move(out);
                return finish(SessionStatus::Done);
            } catch (const Error& e) {
                if (repaired) return fail(ErrorCode::SchemaViolation, e.what());
                repaired = true;
                Message repair{Role::User,
                               std::string("Your final answer does not match the output format: ") + e.what() +
                                   "\nReply again with only the corrected JSON document.",
                               {}, {}};
                req.messages.push_back(repair);
                log.record("schema_repair", message_json(repair));
                continue;
            }
        }

        for (const auto& call : turn.tool_calls) {
            if (res.tool_calls >= env.budget.max_tool_calls) {
                log.record("budget_exhausted", {{"call_id", call.call_id},
                                                {"tool", call.tool},
                                                {"call_number", res.tool_calls + 1}});
                res.error = ErrorCode::BudgetExhausted;
                res.error_message = "tool call " + std::to_string(res.tool_calls + 1) + " exceeds max_tool_calls=" +
                                    std::to_string(env.budget.max_tool_calls);
                return finish(SessionStatus::BudgetExhausted);
            }
            ++res.tool_calls;
            log.record("tool_call", {{"call_id", call.call_id}, {"tool", call.tool}, {"arguments", call.arguments}});
            ToolResult r;
            if (!spec.allowed_tools.count(call.tool)) {
                r.call_id = call.call_id;
                r.tool = call.tool;
                r.status = ToolStatus::Denied;
                r.payload = "denied: tool '" + call.tool + "' is not available to the " + spec.name;
                working.tool_results.push_back(r);
            } else {
                r = tools.execute(call, working);
            }
            log.record("tool_result", {{"call_id", r.call_id},
                                       {"tool", r.tool},
                                       {"status", std::string(to_string(r.status))},
                                       {"truncated", r.truncated},
                                       {"payload", r.payload}});
            Message tm{Role::Tool, r.payload, {}, r.call_id};
            req.messages.push_back(std::move(tm));
        }
    }
}

SemanticStores load_stores(const fs::path& data_dir) {
    SemanticStores s;
    s.rules_path = data_dir / "sast_rules.json";
    s.cwe_tree_path = data_dir / "cwe_tree.json";
    s.rules = load_sast_rules_file(s.rules_path);
    s.cwe_tree = load_cwe_tree_file(s.cwe_tree_path);
    std::error_code ec;
    if (fs::exists(data_dir / "guidelines.json", ec)) {
        s.guidelines_path = data_dir / "guidelines.json";
        s.guidelines = load_guidelines_file(s.guidelines_path);
    }
    return s;
}

SemanticStores load_stores(const fs::path& rules, const fs::path& cwe_tree, const fs::path& guidelines) {
    SemanticStores s;
    s.rules_path = rules;
    s.cwe_tree_path = cwe_tree;
    s.rules = load_sast_rules_file(rules);
    s.cwe_tree = load_cwe_tree_file(cwe_tree);
    if (!guidelines.empty()) {
        s.guidelines_path = guidelines;
        s.guidelines = load_guidelines_file(guidelines);
    }
    return s;
}

namespace {

std::string detector_input(const PipelinePolicy& policy, const ChangeSet& changes) {
    std::string s = policy.instruction + "\n\nReview the staged changes of this repository.\n\nChanged files:\n";
    for (const auto& f : changes.files) {
        s += "- " + f.path + " (" + std::string(to_string(f.change_type)) + ")\n";
    }
    if (!changes.skipped.empty()) {
        s += "\nSkipped (binary or generated):\n";
        for (const auto& k : changes.skipped) s += "- " + k.path + "\n";
    }
    s += "\nStaged diff:\n```diff\n" + changes.raw_diff + "```\n";
    return s;
}

std::string replace_all(std::string s, std::string_view from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

}  // namespace

ReviewReport run_pipeline(const PipelinePolicy& policy, const RepoContext& repo, const ChangeSet& changes,
                          const SemanticStores& stores, LlmBackend& backend, const PipelineEnv& env) {
    if (policy.stages.empty() || policy.stages.front().output_schema != OutputSchema::Comments)
        throw Error(ErrorCode::ConfigError, "pipeline must start with a detector stage");
    if (changes.files.empty()) throw Error(ErrorCode::EmptyChangeSet, "no staged changes to review");

    process::Runner& runner = env.runner ? *env.runner : process::default_runner();
    ToolExecutor tools(repo, runner, env.limits);
    tools.register_resource("@resources/sast_rules.json", stores.rules_path);
    tools.register_resource("@resources/cwe_tree.json", stores.cwe_tree_path);
    if (!stores.guidelines_path.empty()) tools.register_resource("@resources/guidelines.json", stores.guidelines_path);

    SessionEnv senv = env.session;
    if (senv.log_dir.empty()) senv.log_dir = env.work_dir / "logs";

    ReviewReport report;
    report.repo = env.repo_id.empty() ? repo.root_path.filename().string() : env.repo_id;
    report.head_commit = repo.head_commit;
    for (const auto& f : changes.files) {
        FileSummary fs_{f.path, std::string(to_string(f.change_type)), 0, 0};
        for (const auto& [line, kind] : changed_lines_of(f)) (kind == LineChange::Added ? fs_.added : fs_.modified)++;
        report.files.push_back(std::move(fs_));
    }
    for (const auto& k : changes.skipped) report.skipped_files.push_back(k.path);
    report.metadata["backend"] = backend.name();
    report.metadata["generated_at"] = senv.clock();

    // Stage 1: detector.
    WorkingMemory working;
    working.current_diff = changes;
    const SubagentSpec& det = policy.stages.front();
    SessionResult d = run_subagent(det, detector_input(policy, changes), backend, tools, working, senv);
    report.sessions.push_back({det.name, d.session_id, d.log_file.filename().string(), std::string(to_string(d.status))});
    report.metadata["detector_status"] = std::string(to_string(d.status));
    if (d.status == SessionStatus::Failed)
        throw Error(*d.error, "detector stage failed: " + d.error_message);

    std::vector<SecurityComment> comments;
    if (d.status == SessionStatus::Done) comments = comments_from_output(d.output);
    comments = dedupe(std::move(comments));
    for (std::size_t i = 0; i < comments.size(); ++i) {
        auto& c = comments[i];
        c.comment_id = "C" + std::to_string(i + 1);
        if (c.cwe_id && !c.cwe_name)
            if (const CweEntry* e = stores.cwe_tree.find(*c.cwe_id)) c.cwe_name = e->name;
    }

    fs::path comment_file = env.work_dir / "review_comments.json";
    write_text_file(comment_file, serialize_comment_file(comments));

    if (policy.stages.size() < 2) {
        report.metadata["validation"] = "disabled";
    } else if (comments.empty()) {
        report.metadata["validation"] = "skipped";
    } else {
        SubagentSpec val = policy.stages[1];
        std::string target = comment_file.string();
        val.system_prompt = replace_all(val.system_prompt, "<target_warning_path>", target);
        tools.register_resource(target, comment_file);

        WorkingMemory vworking;
        vworking.current_diff = changes;
        std::string input = policy.instruction + "\n\nValidate the review comments in " + target + ".\n";
        SessionResult v = run_subagent(val, input, backend, tools, vworking, senv);
        report.sessions.push_back({val.name, v.session_id, v.log_file.filename().string(), std::string(to_string(v.status))});
        report.metadata["validator_status"] = std::string(to_string(v.status));
        if (v.status == SessionStatus::Done) {
            try {
                auto verdicts = verdicts_from_output(v.output);
                comments = apply_verdicts(std::move(comments), verdicts, &stores.cwe_tree);
                report.verdicts = std::move(verdicts);
                report.metadata["validation"] = "done";
            } catch (const Error& e) {
                report.metadata["validation"] = "failed";
                report.metadata["validation_error"] =
                    "error[" + std::string(error_code_name(e.code())) + "]: " + e.what();
            }
        } else {
            report.metadata["validation"] = "failed";
            report.metadata["validation_error"] = v.error_message;
        }
    }
    report.comments = std::move(comments);
    return report;
}

}  // namespace scr
