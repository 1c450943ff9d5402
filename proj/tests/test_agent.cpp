#include "support.hpp"

#include "scr/agent.hpp"
#include "scr/error.hpp"
#include "scr/repo.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace scr;
using namespace scr::test;

namespace {

const char* kClock = "2025-01-01T00:00:00Z";

struct Beaker {
    TempDir tmp;
    TempDir work;
    GitRepo repo;
    RepoContext ctx;
    ChangeSet cs;
    SemanticStores stores;
    Beaker()
        : repo(make_beaker_repo(tmp.path())),
          ctx(RepoContext::open(tmp.path())),
          cs(collect_staged_changes(ctx)),
          stores(load_stores(data_dir())) {}

    PipelineEnv env() const {
        PipelineEnv e;
        e.work_dir = work.path();
        e.repo_id = kBeakerRepoId;
        e.session.clock = [] { return std::string(kClock); };
        e.session.ids = sequential_ids();
        return e;
    }
};

// Backend driven by a callback; keeps every request it saw.
class FnBackend final : public LlmBackend {
public:
    explicit FnBackend(std::function<AssistantTurn(const CompletionRequest&)> fn) : fn_(std::move(fn)) {}
    AssistantTurn complete(const CompletionRequest& r) override {
        seen.push_back(r);
        return fn_(r);
    }
    std::string name() const override { return "fn"; }
    std::vector<CompletionRequest> seen;

private:
    std::function<AssistantTurn(const CompletionRequest&)> fn_;
};

AssistantTurn tool_turn(std::string tool, json args) {
    AssistantTurn t;
    t.tool_calls.push_back({"c", std::move(tool), std::move(args)});
    return t;
}

AssistantTurn final_turn(std::string content) {
    AssistantTurn t;
    t.content = std::move(content);
    return t;
}

SessionEnv session_env(const fs::path& logs, int max_calls = 25) {
    SessionEnv e;
    e.log_dir = logs;
    e.budget.max_tool_calls = max_calls;
    e.clock = [] { return std::string(kClock); };
    e.ids = sequential_ids();
    return e;
}

std::vector<std::string> event_types(const std::vector<json>& events) {
    std::vector<std::string> out;
    for (const auto& e : events) out.push_back(e["type"]);
    return out;
}

}  // namespace

TEST(Pipeline, EcbWalkthroughShape) {
    Beaker b;
    ScriptedBackend backend = ScriptedBackend::from_file(fixtures_dir() / "transcripts/ecb_walkthrough.json");
    ReviewReport r = run_pipeline(default_policy(), b.ctx, b.cs, b.stores, backend, b.env());

    ASSERT_EQ(r.comments.size(), 6u);
    std::vector<std::string> ids;
    int filtered = 0, validated = 0;
    for (const auto& c : r.comments) {
        ids.push_back(c.comment_id);
        filtered += c.status == CommentStatus::Filtered;
        validated += c.status == CommentStatus::Validated;
    }
    EXPECT_EQ(ids, (std::vector<std::string>{"C1", "C2", "C3", "C4", "C5", "C6"}));
    EXPECT_EQ(filtered, 2);
    EXPECT_EQ(validated, 4);
    EXPECT_EQ(r.comments[0].status, CommentStatus::Filtered);
    EXPECT_EQ(r.comments[5].status, CommentStatus::Filtered);

    const SecurityComment& ecb = r.comments[1];
    EXPECT_EQ(ecb.file, "beaker/crypto/pycrypto.py");
    EXPECT_EQ(ecb.start_line, 21);
    EXPECT_EQ(ecb.cwe_id, 327);
    EXPECT_EQ(ecb.cwe_name, b.stores.cwe_tree.find(327)->name);
    // The ground truth for this CVE is CWE-310; the prediction must land in
    // the same category.
    EXPECT_TRUE(oracle_same_category(b.stores.cwe_tree, 327, 310));
    EXPECT_TRUE(same_high_level_category(b.stores.cwe_tree, 327, 310));
    EXPECT_EQ(r.comments[4].cwe_id, 338);

    EXPECT_EQ(r.repo, kBeakerRepoId);
    EXPECT_EQ(r.head_commit, b.repo.head());
    EXPECT_EQ(r.metadata.at("validation"), "done");
    ASSERT_EQ(r.sessions.size(), 2u);
    EXPECT_EQ(r.sessions[0].session_id, "detector-1");
    EXPECT_EQ(r.sessions[1].session_id, "validator-1");
    EXPECT_EQ(r.verdicts.size(), 6u);

    // The comment file handed to the validator holds the deduplicated
    // detector output.
    auto file_comments = parse_comment_file(read_file(b.work / "review_comments.json"));
    ASSERT_EQ(file_comments.size(), 6u);
    for (const auto& c : file_comments) EXPECT_EQ(c.status, CommentStatus::Proposed);
}

TEST(Pipeline, DeterministicAndMatchesGolden) {
    std::string first, second;
    for (std::string* out : {&first, &second}) {
        Beaker b;
        ScriptedBackend backend = ScriptedBackend::from_file(fixtures_dir() / "transcripts/ecb_walkthrough.json");
        *out = render_report(run_pipeline(default_policy(), b.ctx, b.cs, b.stores, backend, b.env()));
    }
    EXPECT_EQ(first, second);
    fs::path golden = golden_dir() / "ecb_report.json";
    if (std::getenv("SCR_UPDATE_GOLDEN")) write_text_file(golden, first);
    EXPECT_EQ(first, read_file(golden));
}

TEST(Pipeline, EpisodicLogsAreComplete) {
    Beaker b;
    ScriptedBackend backend = ScriptedBackend::from_file(fixtures_dir() / "transcripts/ecb_walkthrough.json");
    run_pipeline(default_policy(), b.ctx, b.cs, b.stores, backend, b.env());
    auto det = read_episodic_log(b.work / "logs/detector-1.jsonl");
    auto types = event_types(det);
    EXPECT_EQ(types.front(), "session_start");
    EXPECT_EQ(types.back(), "session_end");
    EXPECT_EQ(std::count(types.begin(), types.end(), "tool_call"), 3);
    EXPECT_EQ(std::count(types.begin(), types.end(), "tool_result"), 3);
    EXPECT_EQ(det.back()["status"], "done");
    EXPECT_EQ(det.back()["tool_calls"], 3);
    for (const auto& e : det) {
        EXPECT_EQ(e["session_id"], "detector-1");
        EXPECT_EQ(e["ts"], kClock);
    }
    // The system prompt is recorded first.
    EXPECT_EQ(det[1]["role"], "system");
    EXPECT_NE(det[1]["content"].get<std::string>().find("Detector Subagent"), std::string::npos);
    auto val = read_episodic_log(b.work / "logs/validator-1.jsonl");
    EXPECT_EQ(val.back()["status"], "done");
    // The comment file path replaced the placeholder in the validator prompt.
    std::string vprompt = val[1]["content"];
    EXPECT_EQ(vprompt.find("<target_warning_path>"), std::string::npos);
    EXPECT_NE(vprompt.find((b.work / "review_comments.json").string()), std::string::npos);
}

TEST(Pipeline, ValidatorFailureLeavesCommentsProposed) {
    Beaker b;
    json script = json::parse(read_file(fixtures_dir() / "transcripts/ecb_walkthrough.json"));
    script["validator"] = json{{"turns", {{{"error", "service unavailable"}}}}};
    ScriptedBackend backend(script);
    ReviewReport r = run_pipeline(default_policy(), b.ctx, b.cs, b.stores, backend, b.env());
    ASSERT_EQ(r.comments.size(), 6u);
    for (const auto& c : r.comments) EXPECT_EQ(c.status, CommentStatus::Proposed);
    EXPECT_EQ(r.metadata.at("validation"), "failed");
    EXPECT_EQ(r.sessions[1].status, "failed");
    EXPECT_TRUE(r.verdicts.empty());
}

TEST(Pipeline, ValidatorWithUnknownIdIsReported) {
    Beaker b;
    json script = json::parse(read_file(fixtures_dir() / "transcripts/ecb_walkthrough.json"));
    script["validator"] = json::array(
        {{{"final", {{{"comment_id", "C99"}, {"decision", "keep"}, {"matched_cwes", {327}}}}}}});
    ScriptedBackend backend(script);
    ReviewReport r = run_pipeline(default_policy(), b.ctx, b.cs, b.stores, backend, b.env());
    EXPECT_EQ(r.metadata.at("validation"), "failed");
    EXPECT_NE(r.metadata.at("validation_error").find("UnknownCommentId"), std::string::npos);
    for (const auto& c : r.comments) EXPECT_EQ(c.status, CommentStatus::Proposed);
}

TEST(Pipeline, AblationWithoutValidator) {
    Beaker b;
    ScriptedBackend backend = ScriptedBackend::from_file(fixtures_dir() / "transcripts/ecb_walkthrough.json");
    ReviewReport r = run_pipeline(default_policy(false, false), b.ctx, b.cs, b.stores, backend, b.env());
    EXPECT_EQ(r.comments.size(), 6u);
    EXPECT_EQ(r.sessions.size(), 1u);
    EXPECT_EQ(r.metadata.at("validation"), "disabled");
}

TEST(Pipeline, NoCommentsSkipsValidation) {
    Beaker b;
    ScriptedBackend backend(json{{"detector", json::array({{{"final", json::array()}}})}});
    ReviewReport r = run_pipeline(default_policy(), b.ctx, b.cs, b.stores, backend, b.env());
    EXPECT_TRUE(r.comments.empty());
    EXPECT_EQ(r.metadata.at("validation"), "skipped");
}

TEST(Pipeline, DetectorFailureIsAnError) {
    Beaker b;
    ScriptedBackend backend(json{{"detector", json::array({{{"content", "no json"}}, {{"content", "still none"}}})}});
    try {
        run_pipeline(default_policy(), b.ctx, b.cs, b.stores, backend, b.env());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    }
    ChangeSet empty;
    EXPECT_THROW(run_pipeline(default_policy(), b.ctx, empty, b.stores, backend, b.env()), Error);
}

TEST(Pipeline, GuidelinesAreOfferedAsResource) {
    Beaker b;
    FnBackend backend([](const CompletionRequest& r) {
        if (r.messages.size() == 2) return tool_turn("open_files", {{"paths", {"@resources/guidelines.json"}}});
        return final_turn("[]");
    });
    ReviewReport r = run_pipeline(default_policy(true), b.ctx, b.cs, b.stores, backend, b.env());
    ASSERT_EQ(backend.seen.size(), 2u);
    EXPECT_NE(backend.seen[0].messages[0].content.find("@resources/guidelines.json"), std::string::npos);
    EXPECT_NE(backend.seen[1].messages.back().content.find("SCR-001"), std::string::npos);
}

TEST(Session, BudgetExhaustedOnTheCallPastTheLimit) {
    Beaker b;
    ScriptedBackend backend(json{{"detector",
                                  {{"turns", {{{"tool_calls", {{{"tool", "grep"}, {"arguments", {{"pattern", "AES"}}}}}}}}},
                                   {"repeat_last", true}}}});
    ToolExecutor tools(b.ctx, process::default_runner());
    WorkingMemory wm;
    SessionResult s = run_subagent(detector_spec(), "go", backend, tools, wm, session_env(b.work.path(), 20));
    EXPECT_EQ(s.status, SessionStatus::BudgetExhausted);
    EXPECT_EQ(s.error, ErrorCode::BudgetExhausted);
    EXPECT_EQ(s.tool_calls, 20);
    EXPECT_EQ(wm.tool_results.size(), 20u);
    auto log = read_episodic_log(s.log_file);
    auto types = event_types(log);
    EXPECT_EQ(std::count(types.begin(), types.end(), "tool_call"), 20);
    auto it = std::find(types.begin(), types.end(), "budget_exhausted");
    ASSERT_NE(it, types.end());
    EXPECT_EQ(log[it - types.begin()]["call_number"], 21);
    EXPECT_EQ(log.back()["status"], "budget_exhausted");
}

TEST(Session, BudgetCountsCallsWithinOneTurn) {
    Beaker b;
    AssistantTurn many;
    for (int i = 0; i < 5; ++i) many.tool_calls.push_back({"c" + std::to_string(i), "expand_folder", json::object()});
    FnBackend backend([&](const CompletionRequest&) { return many; });
    ToolExecutor tools(b.ctx, process::default_runner());
    WorkingMemory wm;
    SessionResult s = run_subagent(detector_spec(), "go", backend, tools, wm, session_env(b.work.path(), 3));
    EXPECT_EQ(s.status, SessionStatus::BudgetExhausted);
    EXPECT_EQ(s.tool_calls, 3);
    EXPECT_EQ(backend.seen.size(), 1u);
}

TEST(Session, SchemaRepairGetsOneRetry) {
    Beaker b;
    ScriptedBackend backend(json{{"detector",
                                  json::array({{{"content", "I found: {\"file\": 1}"}},
                                               {{"content", "```json\n[{\"file\":\"a.py\",\"start_line\":2,\"comment\":\"c\"}]\n```"}}})}});
    ToolExecutor tools(b.ctx, process::default_runner());
    WorkingMemory wm;
    SessionResult s = run_subagent(detector_spec(), "go", backend, tools, wm, session_env(b.work.path()));
    EXPECT_EQ(s.status, SessionStatus::Done);
    EXPECT_EQ(comments_from_output(s.output).size(), 1u);
    auto types = event_types(read_episodic_log(s.log_file));
    EXPECT_EQ(std::count(types.begin(), types.end(), "schema_repair"), 1);
}

TEST(Session, SecondSchemaViolationFails) {
    Beaker b;
    ScriptedBackend backend(json{{"validator", json::array({{{"final", {{{"comment_id", "C1"}, {"decision", "keep"}}}}},
                                                            {{"final", {{"verdicts", "nope"}}}}})}});
    ToolExecutor tools(b.ctx, process::default_runner());
    WorkingMemory wm;
    SessionResult s = run_subagent(validator_spec(), "go", backend, tools, wm, session_env(b.work.path()));
    EXPECT_EQ(s.status, SessionStatus::Failed);
    EXPECT_EQ(s.error, ErrorCode::SchemaViolation);
    EXPECT_TRUE(s.output.is_null());
    EXPECT_EQ(read_episodic_log(s.log_file).back()["error"], "SchemaViolation");
}

TEST(Session, BackendErrorEndsSession) {
    Beaker b;
    ScriptedBackend backend(json{{"detector", json::array({{{"error", "HTTP 500"}}})}});
    ToolExecutor tools(b.ctx, process::default_runner());
    WorkingMemory wm;
    SessionResult s = run_subagent(detector_spec(), "go", backend, tools, wm, session_env(b.work.path()));
    EXPECT_EQ(s.status, SessionStatus::Failed);
    EXPECT_EQ(s.error, ErrorCode::BackendError);
}

TEST(Session, ToolsOutsideTheSpecAreDenied) {
    Beaker b;
    SubagentSpec spec = detector_spec();
    spec.allowed_tools = {"open_files", "grep"};
    FnBackend backend([](const CompletionRequest& r) {
        if (r.messages.size() == 2) return tool_turn("bash", {{"command", "git log"}});
        return final_turn("[]");
    });
    ToolExecutor tools(b.ctx, process::default_runner());
    WorkingMemory wm;
    std::uint64_t before = process::launch_count();
    SessionResult s = run_subagent(spec, "go", backend, tools, wm, session_env(b.work.path()));
    EXPECT_EQ(s.status, SessionStatus::Done);
    EXPECT_EQ(process::launch_count(), before);
    ASSERT_EQ(wm.tool_results.size(), 1u);
    EXPECT_EQ(wm.tool_results[0].status, ToolStatus::Denied);
    EXPECT_EQ(backend.seen[0].tools.size(), 2u);
    EXPECT_EQ(backend.seen[1].messages.back().role, Role::Tool);

    spec.allowed_tools = {"open_files", "curl"};
    EXPECT_THROW(run_subagent(spec, "go", backend, tools, wm, session_env(b.work.path())), Error);
}

TEST(Session, OldToolResultsAreElidedToFitThePrompt) {
    Beaker b;
    b.repo.write("big.txt", std::string(3000, 'x') + "\n");
    int turn = 0;
    FnBackend backend([&](const CompletionRequest&) {
        if (++turn <= 3) return tool_turn("open_files", {{"paths", {"big.txt"}}});
        return final_turn("[]");
    });
    SubagentSpec spec = detector_spec();
    spec.system_prompt = "short";
    SessionEnv env = session_env(b.work.path());
    env.budget.max_prompt_bytes = 7000;
    ToolExecutor tools(b.ctx, process::default_runner());
    WorkingMemory wm;
    SessionResult s = run_subagent(spec, "go", backend, tools, wm, env);
    EXPECT_EQ(s.status, SessionStatus::Done);
    ASSERT_EQ(backend.seen.size(), 4u);
    const auto& last = backend.seen[3].messages;
    // The first tool result gave way; the two latest are intact.
    EXPECT_EQ(last[3].content.rfind("[tool result truncated", 0), 0u);
    EXPECT_GT(last[5].content.size(), 3000u);
    EXPECT_GT(last[7].content.size(), 3000u);
    EXPECT_EQ(last[0].content, "short");
    EXPECT_EQ(last[1].content, "go");
    auto types = event_types(read_episodic_log(s.log_file));
    EXPECT_GE(std::count(types.begin(), types.end(), "prompt_truncated"), 1);
}

TEST(Session, SequentialIdsPerAgent) {
    auto ids = sequential_ids();
    EXPECT_EQ(ids("detector"), "detector-1");
    EXPECT_EQ(ids("validator"), "validator-1");
    EXPECT_EQ(ids("detector"), "detector-2");
    auto r = random_ids();
    EXPECT_NE(r("detector"), r("detector"));
}

TEST(Prompts, DetectorAndValidatorTemplates) {
    auto d = detector_spec();
    EXPECT_NE(d.system_prompt.find("SAST"), std::string::npos);
    EXPECT_NE(d.system_prompt.find("@resources/sast_rules.json"), std::string::npos);
    EXPECT_EQ(d.system_prompt.find("guidelines"), std::string::npos);
    EXPECT_NE(detector_spec(true).system_prompt.find("@resources/guidelines.json"), std::string::npos);
    auto v = validator_spec();
    EXPECT_NE(v.system_prompt.find("<target_warning_path>"), std::string::npos);
    EXPECT_NE(v.system_prompt.find("@resources/cwe_tree.json"), std::string::npos);
    EXPECT_EQ(v.output_schema, OutputSchema::Verdicts);
    EXPECT_EQ(default_policy().instruction, kOrchestrationInstruction);
}
