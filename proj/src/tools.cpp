#include "scr/tools.hpp"

#include "scr/error.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

namespace fs = std::filesystem;

namespace scr {

namespace {

json string_param(const char* desc) { return {{"type", "string"}, {"description", desc}}; }
json int_param(const char* desc) { return {{"type", "integer"}, {"description", desc}}; }

}  // namespace

std::vector<ToolSpec> tool_catalog(const std::set<std::string>& allowed) {
    std::vector<ToolSpec> all = {
        {"open_files", "Load source files or security resource files (e.g. @resources/sast_rules.json).",
         {{"type", "object"},
          {"properties", {{"paths", {{"type", "array"}, {"items", {{"type", "string"}}}}}}},
          {"required", {"paths"}}}},
        {"expand_code_chunks", "Show a changed region with surrounding context lines.",
         {{"type", "object"},
          {"properties",
           {{"path", string_param("repo-relative file")},
            {"start_line", int_param("first line of the region")},
            {"end_line", int_param("last line of the region")},
            {"radius", int_param("context lines on each side, default 10")}}},
          {"required", {"path", "start_line"}}}},
        {"grep", "Search the repository for a literal string or regular expression.",
         {{"type", "object"},
          {"properties",
           {{"pattern", string_param("text to search for")},
            {"regex", {{"type", "boolean"}}},
            {"ignore_case", {{"type", "boolean"}}},
            {"path", string_param("optional sub-directory")}}},
          {"required", {"pattern"}}}},
        {"expand_folder", "List one directory level of the repository.",
         {{"type", "object"}, {"properties", {{"path", string_param("repo-relative directory, default root")}}}}},
        {"bash", "Run a read-only version-control command such as `git diff --cached` or `git log -3`.",
         {{"type", "object"}, {"properties", {{"command", string_param("command line")}}}, {"required", {"command"}}}},
    };
    std::vector<ToolSpec> out;
    for (auto& t : all)
        if (allowed.count(t.name)) out.push_back(std::move(t));
    return out;
}

std::optional<std::vector<std::string>> tokenize_command(std::string_view line, std::string* reason) {
    auto deny = [&](std::string why) -> std::optional<std::vector<std::string>> {
        if (reason) *reason = std::move(why);
        return std::nullopt;
    };
    std::vector<std::string> words;
    std::string cur;
    bool in_word = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '\'') {
            auto close = line.find('\'', i + 1);
            if (close == std::string_view::npos) return deny("unterminated quote");
            cur.append(line.substr(i + 1, close - i - 1));
            i = close;
            in_word = true;
        } else if (c == '"') {
            ++i;
            for (; i < line.size() && line[i] != '"'; ++i) {
                if (line[i] == '$' || line[i] == '`') return deny("shell substitution is not allowed");
                if (line[i] == '\\' && i + 1 < line.size()) ++i;
                cur.push_back(line[i]);
            }
            if (i >= line.size()) return deny("unterminated quote");
            in_word = true;
        } else if (c == '\\') {
            if (i + 1 >= line.size()) return deny("trailing backslash");
            if (line[i + 1] == '\n') return deny("line continuation is not allowed");
            cur.push_back(line[++i]);
            in_word = true;
        } else if (c == ' ' || c == '\t') {
            if (in_word) words.push_back(std::move(cur));
            cur.clear();
            in_word = false;
        } else if (std::string_view("|&;<>()$`\n\r{}").find(c) != std::string_view::npos) {
            return deny(std::string("shell operator '") + (c == '\n' ? std::string("\\n") : std::string(1, c)) +
                        "' is not allowed");
        } else {
            cur.push_back(c);
            in_word = true;
        }
    }
    if (in_word) words.push_back(std::move(cur));
    if (words.empty()) return deny("empty command");
    return words;
}

namespace {

bool escapes_root(std::string_view arg) {
    if (arg.empty()) return false;
    if (arg.front() == '/' || arg.front() == '~') return true;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
        auto slash = arg.find('/', pos);
        auto seg = arg.substr(pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
        if (seg == "..") return true;
        if (slash == std::string_view::npos) break;
        pos = slash + 1;
    }
    return false;
}

bool is_letter_flag(const std::string& a) {
    return a.size() >= 2 && a[0] == '-' && a[1] != '-' &&
           std::all_of(a.begin() + 1, a.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

}  // namespace

std::optional<std::string> bash_denial(const std::vector<std::string>& argv) {
    if (argv.empty()) return "empty command";
    const std::string& prog = argv[0];
    if (prog != "git" && prog != "ls" && prog != "grep") return "command '" + prog + "' is not allowlisted";
    for (std::size_t i = 1; i < argv.size(); ++i) {
        const std::string& a = argv[i];
        std::string_view value = a;
        if (a.rfind("-", 0) == 0) {
            auto eq = a.find('=');
            if (eq == std::string::npos) continue;
            value = std::string_view(a).substr(eq + 1);
        }
        if (escapes_root(value)) return "argument '" + a + "' reaches outside the repository";
    }
    if (prog == "git") {
        if (argv.size() < 2) return "git needs a subcommand";
        const std::string& sub = argv[1];
        if (sub.rfind("-", 0) == 0) return "git global option '" + sub + "' is not allowed";
        static const std::set<std::string> subs{"diff", "show", "log", "status", "blame", "ls-files", "rev-parse", "remote"};
        if (!subs.count(sub)) return "git " + sub + " is not allowlisted";
        static const std::vector<std::string> banned{"--output", "--no-index", "--ext-diff", "--textconv",
                                                     "--open-files-in-pager", "--exec", "--upload-pack"};
        for (std::size_t i = 2; i < argv.size(); ++i)
            for (const auto& b : banned)
                if (argv[i] == b || argv[i].rfind(b + "=", 0) == 0) return "git option '" + b + "' is not allowed";
        if (sub == "remote") {
            std::vector<std::string> rest(argv.begin() + 2, argv.end());
            bool ok = rest.empty() || (rest.size() == 1 && rest[0] == "-v") ||
                      (rest.size() == 2 && (rest[0] == "show" || rest[0] == "get-url") && rest[1].rfind("-", 0) != 0);
            if (!ok) return "only 'git remote [-v]', 'git remote show <name>' and 'git remote get-url <name>' are allowed";
        }
        return std::nullopt;
    }
    if (prog == "ls") {
        for (std::size_t i = 1; i < argv.size(); ++i)
            if (argv[i].rfind("-", 0) == 0 && !is_letter_flag(argv[i])) return "ls option '" + argv[i] + "' is not allowed";
        return std::nullopt;
    }
    // grep
    for (std::size_t i = 1; i < argv.size(); ++i) {
        const auto& a = argv[i];
        if (a.rfind("--", 0) == 0 && a != "--" && a.rfind("--include=", 0) != 0 && a.rfind("--exclude=", 0) != 0 &&
            a != "--recursive" && a != "--line-number" && a != "--ignore-case" && a != "--fixed-strings")
            return "grep option '" + a + "' is not allowed";
    }
    return std::nullopt;
}

ToolExecutor::ToolExecutor(const RepoContext& repo, process::Runner& runner, ToolLimits limits)
    : repo_(repo), runner_(runner), limits_(limits) {}

void ToolExecutor::register_resource(const std::string& alias, const fs::path& path) { resources_[alias] = path; }

void ToolExecutor::clip(ToolResult& r) const {
    if (r.payload.size() <= limits_.max_output_bytes) return;
    std::size_t extra = r.payload.size() - limits_.max_output_bytes;
    r.payload.resize(limits_.max_output_bytes);
    r.payload += "\n[truncated: " + std::to_string(extra) + " more bytes]";
    r.truncated = true;
}

ToolResult ToolExecutor::execute(const ToolCall& call, WorkingMemory& working) {
    ToolResult r;
    try {
        if (call.tool == "open_files") r = open_files(call);
        else if (call.tool == "expand_code_chunks") r = expand_code_chunks(call, working);
        else if (call.tool == "grep") r = grep(call);
        else if (call.tool == "expand_folder") r = expand_folder(call);
        else if (call.tool == "bash") r = bash(call);
        else {
            r.status = ToolStatus::Denied;
            r.payload = "unknown tool '" + call.tool + "'";
        }
    } catch (const Error& e) {
        r.status = ToolStatus::Error;
        r.payload = "error[" + std::string(error_code_name(e.code())) + "]: " + e.what();
    } catch (const json::exception& e) {
        r.status = ToolStatus::Error;
        r.payload = std::string("invalid arguments: ") + e.what();
    } catch (const std::exception& e) {
        r.status = ToolStatus::Error;
        r.payload = e.what();
    }
    r.call_id = call.call_id;
    r.tool = call.tool;
    clip(r);
    working.tool_results.push_back(r);
    return r;
}

ToolResult ToolExecutor::open_files(const ToolCall& call) {
    std::vector<std::string> paths;
    const json& a = call.arguments;
    if (a.contains("paths")) paths = a.at("paths").get<std::vector<std::string>>();
    else if (a.contains("path")) paths.push_back(a.at("path").get<std::string>());
    if (paths.empty()) throw Error(ErrorCode::SchemaError, "open_files needs 'paths'");

    ToolResult r;
    std::size_t failures = 0;
    for (const auto& p : paths) {
        r.payload += "==> " + p + " <==\n";
        try {
            fs::path full;
            if (auto it = resources_.find(p); it != resources_.end()) full = it->second;
            else full = resolve_in_repo(repo_, p);
            std::error_code ec;
            if (!fs::is_regular_file(full, ec)) throw Error(ErrorCode::FileNotFound, p + " does not exist");
            std::string content = read_file(full);
            if (looks_binary(content)) throw Error(ErrorCode::BinaryFile, p + " is a binary file");
            r.payload += content;
            if (!content.empty() && content.back() != '\n') r.payload += '\n';
        } catch (const Error& e) {
            ++failures;
            r.payload += "error[" + std::string(error_code_name(e.code())) + "]: " + e.what() + "\n";
        }
    }
    if (failures == paths.size()) r.status = ToolStatus::Error;
    return r;
}

ToolResult ToolExecutor::expand_code_chunks(const ToolCall& call, WorkingMemory& working) {
    std::vector<json> chunks;
    if (call.arguments.contains("chunks")) {
        for (const auto& c : call.arguments.at("chunks")) chunks.push_back(c);
    } else {
        chunks.push_back(call.arguments);
    }
    ToolResult r;
    for (const auto& c : chunks) {
        std::string path = c.at("path").get<std::string>();
        int start = c.at("start_line").get<int>();
        int end = c.value("end_line", start);
        int radius = c.value("radius", 10);
        CodeSlice slice = expand_context(repo_, path, LineRange{start, std::max(start, end)}, std::max(radius, 0),
                                         limits_.slice_budget);
        r.payload += path + ":" + std::to_string(slice.start_line) + "-" + std::to_string(slice.end_line) +
                     (slice.truncated ? " (truncated)" : "") + "\n";
        int n = slice.start_line;
        for (const auto& line : split_lines(slice.text)) {
            char num[16];
            std::snprintf(num, sizeof num, "%6d| ", n++);
            r.payload += num + line + "\n";
        }
        r.truncated = r.truncated || slice.truncated;
        working.expanded_slices.push_back(std::move(slice));
    }
    return r;
}

std::vector<std::string> grep_worktree(const fs::path& root, const std::string& pattern, bool regex, bool ignore_case,
                                       const std::string& subdir, std::size_t max_matches) {
    std::optional<std::regex> re;
    if (regex) {
        auto flags = std::regex::ECMAScript;
        if (ignore_case) flags |= std::regex::icase;
        try {
            re.emplace(pattern, flags);
        } catch (const std::regex_error& e) {
            throw Error(ErrorCode::SchemaError, "invalid regular expression: " + std::string(e.what()));
        }
    }
    std::string needle = ignore_case ? to_lower(pattern) : pattern;

    fs::path base = subdir.empty() ? root : root / subdir;
    std::vector<std::string> files;
    std::error_code ec;
    if (fs::is_regular_file(base, ec)) {
        files.push_back(fs::relative(base, root).generic_string());
    } else {
        for (auto it = fs::recursive_directory_iterator(base, fs::directory_options::skip_permission_denied, ec);
             it != fs::recursive_directory_iterator(); it.increment(ec)) {
            if (ec) break;
            if (it->path().filename() == ".git") {
                if (it->is_directory()) it.disable_recursion_pending();
                continue;
            }
            if (it->is_regular_file() && !it->is_symlink()) files.push_back(fs::relative(it->path(), root).generic_string());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<std::string> out;
    for (const auto& rel : files) {
        std::string content = read_file(root / rel);
        if (looks_binary(content)) continue;
        int n = 0;
        for (const auto& line : split_lines(content)) {
            ++n;
            bool hit = re ? std::regex_search(line, *re)
                          : (ignore_case ? to_lower(line).find(needle) : line.find(needle)) != std::string::npos;
            if (!hit) continue;
            out.push_back(rel + ":" + std::to_string(n) + ":" + line);
            if (max_matches && out.size() >= max_matches) return out;
        }
    }
    return out;
}

ToolResult ToolExecutor::grep(const ToolCall& call) {
    const json& a = call.arguments;
    std::string pattern = a.at("pattern").get<std::string>();
    if (pattern.empty()) throw Error(ErrorCode::SchemaError, "grep pattern is empty");
    std::string sub = a.value("path", "");
    if (sub == ".") sub.clear();
    if (!sub.empty()) resolve_in_repo(repo_, sub);
    auto matches = grep_worktree(repo_.root_path, pattern, a.value("regex", false), a.value("ignore_case", false), sub,
                                 limits_.max_grep_matches + 1);
    ToolResult r;
    bool more = matches.size() > limits_.max_grep_matches;
    if (more) matches.resize(limits_.max_grep_matches);
    for (const auto& m : matches) r.payload += m + "\n";
    if (matches.empty()) r.payload = "no matches\n";
    if (more) {
        r.payload += "[more matches omitted]\n";
        r.truncated = true;
    }
    return r;
}

ToolResult ToolExecutor::expand_folder(const ToolCall& call) {
    std::string rel = call.arguments.value("path", "");
    if (rel == ".") rel.clear();
    fs::path dir = rel.empty() ? repo_.root_path : resolve_in_repo(repo_, rel);
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::FileNotFound, (rel.empty() ? "." : rel) + " is not a directory");
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        std::string name = e.path().filename().string();
        if (name == ".git") continue;
        names.push_back(name + (e.is_directory() ? "/" : ""));
    }
    std::sort(names.begin(), names.end());
    ToolResult r;
    for (const auto& n : names) r.payload += n + "\n";
    return r;
}

ToolResult ToolExecutor::bash(const ToolCall& call) {
    std::string line = call.arguments.at("command").get<std::string>();
    ToolResult r;
    std::string reason;
    auto argv = tokenize_command(line, &reason);
    if (argv) {
        if (auto why = bash_denial(*argv)) reason = *why;
    }
    if (!argv || !reason.empty()) {
        r.status = ToolStatus::Denied;
        r.payload = "denied: " + reason;
        return r;
    }
    process::Command cmd;
    cmd.argv = (*argv)[0] == "git" ? git_argv(std::vector<std::string>(argv->begin() + 1, argv->end())) : *argv;
    cmd.cwd = repo_.root_path;
    cmd.timeout = limits_.bash_timeout;
    cmd.env = {{"GIT_TERMINAL_PROMPT", "0"}, {"LC_ALL", "C"}, {"GIT_OPTIONAL_LOCKS", "0"}, {"GIT_PAGER", "cat"}};
    auto res = runner_.run(cmd);
    if (res.timed_out) {
        r.status = ToolStatus::Error;
        r.payload = "timeout after " + std::to_string(limits_.bash_timeout.count()) + " ms\n" + res.out;
        return r;
    }
    r.payload = res.out;
    // grep exits 1 for "no match"; that is not a failure.
    bool ok = res.exit_code == 0 || ((*argv)[0] == "grep" && res.exit_code == 1);
    if (!ok) {
        r.status = ToolStatus::Error;
        r.payload += "exit status " + std::to_string(res.exit_code) + "\n" + res.err;
    }
    return r;
}

}  // namespace scr
