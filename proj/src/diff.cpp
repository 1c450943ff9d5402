#include "scr/diff.hpp"

#include "scr/error.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace scr {

std::string_view to_string(ChangeType t) {
    switch (t) {
        case ChangeType::Added: return "added";
        case ChangeType::Modified: return "modified";
        case ChangeType::Deleted: return "deleted";
        case ChangeType::Renamed: return "renamed";
    }
    return "modified";
}

const FileDiff* ChangeSet::find_file(std::string_view path) const {
    for (const auto& f : files)
        if (f.path == path) return &f;
    return nullptr;
}

std::size_t ChangeSet::added_count() const {
    return static_cast<std::size_t>(std::count_if(changed_lines.begin(), changed_lines.end(),
                                                  [](const auto& kv) { return kv.second == LineChange::Added; }));
}

std::size_t ChangeSet::modified_count() const { return changed_lines.size() - added_count(); }

std::size_t ChangeSet::total_hunk_lines() const {
    std::size_t n = 0;
    for (const auto& f : files)
        for (const auto& h : f.hunks) n += h.lines.size();
    return n;
}

namespace {

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

// Git C-style path unquoting: "a/b\tc" with octal escapes.
std::string unquote_path(std::string_view s, std::size_t offset) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (i + 2 >= s.size()) throw Error(ErrorCode::DiffParseError, "dangling escape in quoted path", offset);
        char e = s[++i];
        switch (e) {
            case 'a': out.push_back('\a'); break;
            case 'b': out.push_back('\b'); break;
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            case 'v': out.push_back('\v'); break;
            case 'f': out.push_back('\f'); break;
            case 'r': out.push_back('\r'); break;
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            default:
                if (e >= '0' && e <= '7' && i + 2 < s.size()) {
                    int v = (e - '0') * 64 + (s[i + 1] - '0') * 8 + (s[i + 2] - '0');
                    out.push_back(static_cast<char>(v));
                    i += 2;
                } else {
                    throw Error(ErrorCode::DiffParseError, "bad escape in quoted path", offset);
                }
        }
    }
    return out;
}

bool needs_quoting(std::string_view p) {
    return std::any_of(p.begin(), p.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return c == '"' || c == '\\' || u < 0x20 || u == 0x7f;
    });
}

std::string quote_path(std::string_view p) {
    if (!needs_quoting(p)) return std::string(p);
    std::string out = "\"";
    for (char c : p) {
        switch (c) {
            case '\a': out += "\\a"; break;
            case '\b': out += "\\b"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\v': out += "\\v"; break;
            case '\f': out += "\\f"; break;
            case '\r': out += "\\r"; break;
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            default: {
                auto u = static_cast<unsigned char>(c);
                if (u < 0x20 || u == 0x7f) {
                    char buf[5];
                    std::snprintf(buf, sizeof buf, "\\%03o", u);
                    out += buf;
                } else {
                    out.push_back(c);
                }
            }
        }
    }
    out.push_back('"');
    return out;
}

std::string strip_prefix(std::string p) {
    if (starts_with(p, "a/") || starts_with(p, "b/")) return p.substr(2);
    return p;
}

// Path token from a "---"/"+++" line: may be quoted, may carry a tab-separated
// timestamp (non-git diffs).
std::string header_path(std::string_view rest, std::size_t offset) {
    if (!rest.empty() && rest.front() == '"') {
        auto close = rest.find('"', 1);
        while (close != std::string_view::npos && rest[close - 1] == '\\') close = rest.find('"', close + 1);
        if (close == std::string_view::npos) throw Error(ErrorCode::DiffParseError, "unterminated quoted path", offset);
        return unquote_path(rest.substr(0, close + 1), offset);
    }
    auto tab = rest.find('\t');
    if (tab != std::string_view::npos) rest = rest.substr(0, tab);
    return std::string(rest);
}

// Splits "a/X b/Y" from a `diff --git` line.
std::pair<std::string, std::string> git_header_paths(std::string_view rest, std::size_t offset) {
    if (!rest.empty() && rest.front() == '"') {
        auto close = rest.find('"', 1);
        while (close != std::string_view::npos && rest[close - 1] == '\\') close = rest.find('"', close + 1);
        if (close == std::string_view::npos) throw Error(ErrorCode::DiffParseError, "unterminated quoted path", offset);
        std::string a = unquote_path(rest.substr(0, close + 1), offset);
        std::string_view b = rest.substr(std::min(rest.size(), close + 2));
        return {strip_prefix(a), strip_prefix(unquote_path(b, offset))};
    }
    // Symmetric case "a/P b/P" resolves paths containing spaces.
    if (rest.size() >= 5 && (rest.size() - 5) % 2 == 0) {
        std::size_t n = (rest.size() - 5) / 2;
        std::string_view a = rest.substr(0, n + 2);
        std::string_view b = rest.substr(n + 3);
        if (rest[n + 2] == ' ' && a.substr(2) == b.substr(2)) return {strip_prefix(std::string(a)), strip_prefix(std::string(b))};
    }
    auto sp = rest.find(" b/");
    if (sp == std::string_view::npos) sp = rest.rfind(' ');
    if (sp == std::string_view::npos) throw Error(ErrorCode::DiffParseError, "malformed diff --git header", offset);
    std::string_view b = rest.substr(sp + 1);
    return {strip_prefix(std::string(rest.substr(0, sp))), strip_prefix(b.front() == '"' ? unquote_path(b, offset) : std::string(b))};
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && out >= 0;
}

// "-a[,b]" or "+c[,d]"
bool parse_range(std::string_view tok, char sign, int& start, int& len) {
    if (tok.empty() || tok.front() != sign) return false;
    tok.remove_prefix(1);
    auto comma = tok.find(',');
    if (comma == std::string_view::npos) {
        len = 1;
        return parse_int(tok, start);
    }
    return parse_int(tok.substr(0, comma), start) && parse_int(tok.substr(comma + 1), len);
}

Hunk parse_hunk_header(std::string_view line, std::size_t offset) {
    // @@ -a,b +c,d @@ section
    if (!starts_with(line, "@@ ")) throw Error(ErrorCode::DiffParseError, "malformed hunk header", offset);
    auto close = line.find(" @@", 3);
    if (close == std::string_view::npos) throw Error(ErrorCode::DiffParseError, "malformed hunk header", offset);
    std::string_view ranges = line.substr(3, close - 3);
    auto sp = ranges.find(' ');
    if (sp == std::string_view::npos) throw Error(ErrorCode::DiffParseError, "malformed hunk header", offset);
    Hunk h;
    if (!parse_range(ranges.substr(0, sp), '-', h.old_start, h.old_len) ||
        !parse_range(ranges.substr(sp + 1), '+', h.new_start, h.new_len))
        throw Error(ErrorCode::DiffParseError, "malformed hunk header ranges", offset);
    std::string_view tail = line.substr(close + 3);
    if (!tail.empty() && tail.front() == ' ') tail.remove_prefix(1);
    h.section = std::string(tail);
    return h;
}

struct LineCursor {
    std::string_view text;
    std::size_t pos = 0;

    bool done() const { return pos >= text.size(); }
    // Returns the next line without its '\n'; `start` receives its offset.
    std::string_view next(std::size_t& start) {
        start = pos;
        auto nl = text.find('\n', pos);
        std::string_view line;
        if (nl == std::string_view::npos) {
            line = text.substr(pos);
            pos = text.size();
        } else {
            line = text.substr(pos, nl - pos);
            pos = nl + 1;
        }
        return line;
    }
    std::string_view peek() const {
        auto nl = text.find('\n', pos);
        return nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    }
};

void finish_file(std::vector<FileDiff>& out, std::optional<FileDiff>& cur) {
    if (!cur) return;
    if (cur->change_type == ChangeType::Deleted) cur->path = cur->old_path;
    if (cur->old_path.empty()) cur->old_path = cur->path;
    out.push_back(std::move(*cur));
    cur.reset();
}

}  // namespace

std::vector<FileDiff> parse_unified_diff(std::string_view text) {
    std::vector<FileDiff> out;
    std::optional<FileDiff> cur;
    LineCursor cursor{text};

    while (!cursor.done()) {
        std::size_t off = 0;
        std::string_view line = cursor.next(off);

        if (starts_with(line, "diff --git ")) {
            finish_file(out, cur);
            auto [a, b] = git_header_paths(line.substr(11), off);
            cur.emplace();
            cur->old_path = a;
            cur->path = b;
            continue;
        }
        if (starts_with(line, "--- ") && (!cur || !cur->hunks.empty()) && starts_with(cursor.peek(), "+++ ")) {
            // plain unified diff without a git header
            finish_file(out, cur);
            cur.emplace();
        }
        if (!cur) continue;  // preamble

        if (starts_with(line, "new file mode ")) {
            cur->change_type = ChangeType::Added;
            cur->new_mode = std::string(line.substr(14));
        } else if (starts_with(line, "deleted file mode ")) {
            cur->change_type = ChangeType::Deleted;
            cur->old_mode = std::string(line.substr(18));
        } else if (starts_with(line, "old mode ")) {
            cur->old_mode = std::string(line.substr(9));
        } else if (starts_with(line, "new mode ")) {
            cur->new_mode = std::string(line.substr(9));
        } else if (starts_with(line, "rename from ")) {
            cur->change_type = ChangeType::Renamed;
            cur->old_path = unquote_path(line.substr(12), off);
        } else if (starts_with(line, "rename to ")) {
            cur->change_type = ChangeType::Renamed;
            cur->path = unquote_path(line.substr(10), off);
        } else if (starts_with(line, "copy from ")) {
            cur->change_type = ChangeType::Added;
            cur->old_path = unquote_path(line.substr(10), off);
        } else if (starts_with(line, "copy to ")) {
            cur->path = unquote_path(line.substr(8), off);
        } else if (starts_with(line, "similarity index ") || starts_with(line, "dissimilarity index ") ||
                   starts_with(line, "index ")) {
            // informational
        } else if (starts_with(line, "Binary files ") || line == "GIT binary patch") {
            cur->binary = true;
            if (line == "GIT binary patch") {
                while (!cursor.done() && !starts_with(cursor.peek(), "diff --git ")) cursor.next(off);
            }
        } else if (starts_with(line, "--- ")) {
            std::string p = header_path(line.substr(4), off);
            if (p == "/dev/null") cur->change_type = ChangeType::Added;
            else if (cur->old_path.empty() || cur->change_type != ChangeType::Renamed) cur->old_path = strip_prefix(p);
        } else if (starts_with(line, "+++ ")) {
            std::string p = header_path(line.substr(4), off);
            if (p == "/dev/null") cur->change_type = ChangeType::Deleted;
            else cur->path = strip_prefix(p);
        } else if (starts_with(line, "@@")) {
            Hunk h = parse_hunk_header(line, off);
            int need_old = h.old_len;
            int need_new = h.new_len;
            while (need_old > 0 || need_new > 0) {
                if (cursor.done())
                    throw Error(ErrorCode::DiffParseError, "hunk body shorter than header counts", cursor.pos);
                std::size_t loff = 0;
                std::string_view body = cursor.next(loff);
                if (starts_with(body, "\\")) {
                    if (h.lines.empty()) throw Error(ErrorCode::DiffParseError, "misplaced no-newline marker", loff);
                    h.lines.back().no_newline_at_eof = true;
                    continue;
                }
                DiffLine dl;
                char m = body.empty() ? ' ' : body.front();
                dl.text = body.empty() ? std::string() : std::string(body.substr(1));
                if (m == ' ') {
                    dl.marker = LineMarker::Context;
                    --need_old;
                    --need_new;
                } else if (m == '+') {
                    dl.marker = LineMarker::Add;
                    --need_new;
                } else if (m == '-') {
                    dl.marker = LineMarker::Del;
                    --need_old;
                } else {
                    throw Error(ErrorCode::DiffParseError, "unexpected line inside hunk", loff);
                }
                if (need_old < 0 || need_new < 0)
                    throw Error(ErrorCode::DiffParseError, "hunk body inconsistent with header counts", loff);
                h.lines.push_back(std::move(dl));
            }
            if (starts_with(cursor.peek(), "\\")) {
                std::size_t loff = 0;
                cursor.next(loff);
                if (!h.lines.empty()) h.lines.back().no_newline_at_eof = true;
            }
            cur->hunks.push_back(std::move(h));
        } else if (line.empty() && cursor.done()) {
            // trailing newline
        } else if (!cur->hunks.empty()) {
            // trailing text after the last hunk of a file (e.g. email signature)
        } else {
            throw Error(ErrorCode::DiffParseError, "unrecognized diff header line", off);
        }
    }
    finish_file(out, cur);
    return out;
}

std::string format_hunk_header(const Hunk& h) {
    auto range = [](char sign, int start, int len) {
        std::string s(1, sign);
        s += std::to_string(start);
        if (len != 1) s += "," + std::to_string(len);
        return s;
    };
    std::string s = "@@ " + range('-', h.old_start, h.old_len) + " " + range('+', h.new_start, h.new_len) + " @@";
    if (!h.section.empty()) s += " " + h.section;
    return s;
}

std::string serialize_unified_diff(std::span<const FileDiff> files) {
    std::string out;
    for (const auto& f : files) {
        const std::string& oldp = f.old_path.empty() ? f.path : f.old_path;
        out += "diff --git " + quote_path("a/" + oldp) + " " + quote_path("b/" + f.path) + "\n";
        if (f.change_type == ChangeType::Added) {
            out += "new file mode " + (f.new_mode.empty() ? std::string("100644") : f.new_mode) + "\n";
        } else if (f.change_type == ChangeType::Deleted) {
            out += "deleted file mode " + (f.old_mode.empty() ? std::string("100644") : f.old_mode) + "\n";
        } else if (!f.old_mode.empty() || !f.new_mode.empty()) {
            out += "old mode " + f.old_mode + "\nnew mode " + f.new_mode + "\n";
        }
        if (f.change_type == ChangeType::Renamed) {
            out += "rename from " + quote_path(oldp) + "\nrename to " + quote_path(f.path) + "\n";
        }
        if (f.binary) {
            out += "Binary files " + (f.change_type == ChangeType::Added ? std::string("/dev/null") : quote_path("a/" + oldp)) +
                   " and " + (f.change_type == ChangeType::Deleted ? std::string("/dev/null") : quote_path("b/" + f.path)) +
                   " differ\n";
            continue;
        }
        if (f.hunks.empty()) continue;
        out += "--- " + (f.change_type == ChangeType::Added ? std::string("/dev/null") : quote_path("a/" + oldp)) + "\n";
        out += "+++ " + (f.change_type == ChangeType::Deleted ? std::string("/dev/null") : quote_path("b/" + f.path)) + "\n";
        for (const auto& h : f.hunks) {
            out += format_hunk_header(h) + "\n";
            for (const auto& l : h.lines) {
                out.push_back(l.marker == LineMarker::Add ? '+' : l.marker == LineMarker::Del ? '-' : ' ');
                out += l.text;
                out.push_back('\n');
                if (l.no_newline_at_eof) out += "\\ No newline at end of file\n";
            }
        }
    }
    return out;
}

std::map<int, LineChange> changed_lines_of(const FileDiff& file) {
    std::map<int, LineChange> out;
    if (file.change_type == ChangeType::Deleted || file.binary) return out;
    for (const auto& h : file.hunks) {
        int new_line = h.new_start;
        int pending_del = 0;
        for (const auto& l : h.lines) {
            switch (l.marker) {
                case LineMarker::Context:
                    pending_del = 0;
                    ++new_line;
                    break;
                case LineMarker::Del:
                    ++pending_del;
                    break;
                case LineMarker::Add:
                    if (pending_del > 0) {
                        out[new_line] = LineChange::Modified;
                        --pending_del;
                    } else {
                        out[new_line] = LineChange::Added;
                    }
                    ++new_line;
                    break;
            }
        }
    }
    return out;
}

std::vector<int> removed_old_lines(const FileDiff& file) {
    std::vector<int> out;
    for (const auto& h : file.hunks) {
        int old_line = h.old_start;
        for (const auto& l : h.lines) {
            if (l.marker == LineMarker::Add) continue;
            if (l.marker == LineMarker::Del) out.push_back(old_line);
            ++old_line;
        }
    }
    return out;
}

bool is_generated_path(std::string_view path) {
    auto base_pos = path.rfind('/');
    std::string_view base = base_pos == std::string_view::npos ? path : path.substr(base_pos + 1);
    static const std::set<std::string_view> lockfiles = {
        "package-lock.json", "yarn.lock", "pnpm-lock.yaml", "poetry.lock", "Pipfile.lock", "npm-shrinkwrap.json"};
    if (lockfiles.contains(base)) return true;
    auto ends = [&](std::string_view suf) { return base.size() >= suf.size() && base.substr(base.size() - suf.size()) == suf; };
    return ends(".min.js") || ends(".min.css") || ends(".js.map") || ends(".css.map");
}

ChangeSet make_change_set(std::vector<FileDiff> files) {
    ChangeSet cs;
    std::sort(files.begin(), files.end(), [](const FileDiff& a, const FileDiff& b) { return a.path < b.path; });
    for (std::size_t i = 1; i < files.size(); ++i)
        if (files[i].path == files[i - 1].path)
            throw Error(ErrorCode::DiffParseError, "duplicate file entry in diff: " + files[i].path);
    for (auto& f : files) {
        if (f.binary) {
            cs.skipped.push_back({f.path, "binary"});
            continue;
        }
        if (is_generated_path(f.path)) {
            cs.skipped.push_back({f.path, "generated"});
            continue;
        }
        std::sort(f.hunks.begin(), f.hunks.end(), [](const Hunk& a, const Hunk& b) { return a.new_start < b.new_start; });
        for (const auto& [line, kind] : changed_lines_of(f)) cs.changed_lines.emplace(LineKey{f.path, line}, kind);
        cs.files.push_back(std::move(f));
    }
    return cs;
}

std::string sanitize_utf8(std::string_view in) {
    std::string out;
    out.reserve(in.size());
    const auto* s = reinterpret_cast<const unsigned char*>(in.data());
    std::size_t n = in.size();
    std::size_t i = 0;
    while (i < n) {
        unsigned char c = s[i];
        std::size_t len = 0;
        if (c < 0x80) len = 1;
        else if ((c & 0xE0) == 0xC0 && c >= 0xC2) len = 2;
        else if ((c & 0xF0) == 0xE0) len = 3;
        else if ((c & 0xF8) == 0xF0 && c <= 0xF4) len = 4;
        bool ok = len > 0 && i + len <= n;
        for (std::size_t k = 1; ok && k < len; ++k) ok = (s[i + k] & 0xC0) == 0x80;
        if (ok && len == 3) {
            unsigned cp = ((c & 0x0F) << 12) | ((s[i + 1] & 0x3F) << 6) | (s[i + 2] & 0x3F);
            ok = cp >= 0x800 && (cp < 0xD800 || cp > 0xDFFF);
        }
        if (ok && len == 4) {
            unsigned cp = ((c & 0x07) << 18) | ((s[i + 1] & 0x3F) << 12) | ((s[i + 2] & 0x3F) << 6) | (s[i + 3] & 0x3F);
            ok = cp >= 0x10000 && cp <= 0x10FFFF;
        }
        if (ok) {
            out.append(in.substr(i, len));
            i += len;
        } else {
            out += "\xEF\xBF\xBD";
            ++i;
        }
    }
    return out;
}

}  // namespace scr
