#include "scr/repo.hpp"

#include "scr/error.hpp"

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace scr {

std::vector<std::string> git_argv(std::vector<std::string> args) {
    std::vector<std::string> argv = {"git",
                                     "--no-pager",
                                     "-c", "core.quotepath=false",
                                     "-c", "color.ui=false",
                                     "-c", "core.fsmonitor=false",
                                     "-c", "diff.external=",
                                     "-c", "core.pager=cat"};
    argv.insert(argv.end(), std::make_move_iterator(args.begin()), std::make_move_iterator(args.end()));
    return argv;
}

process::Result run_git(const fs::path& root, std::vector<std::string> args, process::Runner& runner) {
    process::Command cmd;
    cmd.argv = git_argv(std::move(args));
    cmd.cwd = root;
    cmd.timeout = std::chrono::minutes(5);
    cmd.env = {{"GIT_TERMINAL_PROMPT", "0"}, {"LC_ALL", "C"}, {"GIT_OPTIONAL_LOCKS", "0"}};
    return runner.run(cmd);
}

std::string git_output(const fs::path& root, std::vector<std::string> args, process::Runner& runner) {
    std::string joined;
    for (const auto& a : args) joined += (joined.empty() ? "" : " ") + a;
    auto r = run_git(root, std::move(args), runner);
    if (!r.ok()) {
        throw Error(ErrorCode::ProcessError, "git " + joined + " failed (" + std::to_string(r.exit_code) + "): " + r.err);
    }
    return r.out;
}

std::vector<std::string> diff_flags() {
    return {"--no-color", "--no-ext-diff", "--no-textconv", "-M", "--src-prefix=a/", "--dst-prefix=b/", "--unified=3"};
}

RepoContext RepoContext::open(const fs::path& path, process::Runner& runner) {
    std::error_code ec;
    if (!fs::is_directory(path, ec)) throw Error(ErrorCode::NotARepository, path.string() + " is not a directory");
    auto top = run_git(path, {"rev-parse", "--show-toplevel"}, runner);
    if (!top.ok()) throw Error(ErrorCode::NotARepository, path.string() + " is not a git repository");
    std::string root = top.out;
    while (!root.empty() && (root.back() == '\n' || root.back() == '\r')) root.pop_back();

    RepoContext repo;
    repo.root_path = fs::path(root);
    if (!fs::exists(repo.root_path / ".git")) throw Error(ErrorCode::NotARepository, root + " has no .git entry");

    auto head = run_git(repo.root_path, {"rev-parse", "--verify", "-q", "HEAD"}, runner);
    if (head.ok()) {
        repo.head_commit = head.out.substr(0, head.out.find('\n'));
    }
    auto quiet = run_git(repo.root_path, {"diff", "--cached", "--quiet", "--no-ext-diff"}, runner);
    repo.staged = quiet.exit_code == 1;
    return repo;
}

ChangeSet collect_staged_changes(const RepoContext& repo, const CollectOptions& opts, process::Runner& runner) {
    std::vector<std::string> args = {"diff"};
    if (opts.include_unstaged && !repo.head_commit.empty()) args.push_back("HEAD");
    else args.push_back("--cached");
    for (auto& f : diff_flags()) args.push_back(f);

    auto r = run_git(repo.root_path, args, runner);
    if (!r.ok()) throw Error(ErrorCode::NotARepository, "git diff failed: " + r.err);
    std::string text = sanitize_utf8(r.out);
    if (text.find_first_not_of(" \n\r\t") == std::string::npos)
        throw Error(ErrorCode::EmptyChangeSet, "no staged changes to review");

    ChangeSet cs = make_change_set(parse_unified_diff(text));
    cs.raw_diff = std::move(text);
    return cs;
}

fs::path resolve_in_repo(const RepoContext& repo, const std::string& rel_path) {
    fs::path p(rel_path);
    if (p.is_absolute()) throw Error(ErrorCode::FileNotFound, "absolute paths are outside the repository: " + rel_path);
    for (const auto& part : p)
        if (part == "..") throw Error(ErrorCode::FileNotFound, "path escapes the repository: " + rel_path);
    fs::path full = repo.root_path / p;
    std::error_code ec;
    fs::path canon = fs::weakly_canonical(full, ec);
    fs::path root = fs::weakly_canonical(repo.root_path, ec);
    auto rel = canon.lexically_relative(root);
    if (!rel.empty() && *rel.begin() == "..") throw Error(ErrorCode::FileNotFound, "path escapes the repository: " + rel_path);
    return full;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool looks_binary(std::string_view content) {
    return content.substr(0, 8000).find('\0') != std::string_view::npos;
}

std::vector<std::string> split_lines(std::string_view content) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.emplace_back(content.substr(pos));
            break;
        }
        lines.emplace_back(content.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

CodeSlice expand_context(const RepoContext& repo, const std::string& path, LineRange center, int radius,
                         std::size_t byte_budget) {
    if (radius < 0) radius = 0;
    fs::path full = resolve_in_repo(repo, path);
    std::error_code ec;
    if (!fs::is_regular_file(full, ec)) throw Error(ErrorCode::FileNotFound, "no such file: " + path);
    std::string content = read_file(full);
    if (looks_binary(content)) throw Error(ErrorCode::BinaryFile, "binary file: " + path);
    auto lines = split_lines(sanitize_utf8(content));
    const int file_len = static_cast<int>(lines.size());

    CodeSlice slice;
    slice.path = path;
    slice.start_line = std::max(1, center.start - radius);
    slice.end_line = std::min(file_len, std::max(center.start, center.end) + radius);
    if (slice.end_line < slice.start_line) {
        slice.end_line = slice.start_line - 1;
        return slice;
    }
    for (int ln = slice.start_line; ln <= slice.end_line; ++ln) {
        const auto& l = lines[static_cast<std::size_t>(ln - 1)];
        if (slice.text.size() + l.size() + 1 > byte_budget) {
            slice.truncated = true;
            break;
        }
        slice.text += l;
        slice.text.push_back('\n');
    }
    return slice;
}

}  // namespace scr
