#include "scr/sast.hpp"

#include "scr/error.hpp"

#include <algorithm>

namespace scr {

std::string_view to_string(SastTool t) {
    switch (t) {
        case SastTool::Codeql: return "codeql";
        case SastTool::Semgrep: return "semgrep";
        case SastTool::Snyk: return "snyk";
    }
    return "codeql";
}

SastTool parse_sast_tool(std::string_view name) {
    std::string l = to_lower(name);
    if (l == "codeql") return SastTool::Codeql;
    if (l == "semgrep") return SastTool::Semgrep;
    if (l == "snyk") return SastTool::Snyk;
    throw Error(ErrorCode::UnsupportedFormat, "unknown SAST tool: " + std::string(name));
}

namespace {

const json* get(const json& j, const char* key) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string get_str(const json& j, const char* key) {
    const json* v = get(j, key);
    return v && v->is_string() ? v->get<std::string>() : std::string();
}

std::string percent_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::string normalize_path(std::string uri, const std::filesystem::path& root) {
    if (uri.rfind("file://", 0) == 0) uri = uri.substr(7);
    else if (uri.rfind("file:", 0) == 0) uri = uri.substr(5);
    uri = percent_decode(uri);
    std::filesystem::path p(uri);
    if (p.is_absolute() && !root.empty()) {
        auto rel = p.lexically_relative(root);
        if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    std::string s = p.lexically_normal().generic_string();
    while (s.rfind("./", 0) == 0) s = s.substr(2);
    return s;
}

std::string format_message(const std::string& tmpl, const json* args) {
    if (!args || !args->is_array()) return tmpl;
    std::string out = tmpl;
    for (std::size_t i = 0; i < args->size(); ++i) {
        std::string key = "{" + std::to_string(i) + "}";
        std::string val = (*args)[i].is_string() ? (*args)[i].get<std::string>() : (*args)[i].dump();
        for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + val.size()))
            out.replace(pos, key.size(), val);
    }
    return out;
}

struct RunIndex {
    std::vector<const json*> components;  // 0 = driver, 1.. = extensions
    std::map<int, std::string> taxa_names;
};

const json* rule_for(const json& run, const json& result, const RunIndex& idx) {
    int comp = 0;
    int rule_index = -1;
    std::string rule_id = get_str(result, "ruleId");
    if (const json* r = get(result, "rule")) {
        if (rule_id.empty()) rule_id = get_str(*r, "id");
        if (const json* ri = get(*r, "index"); ri && ri->is_number_integer()) rule_index = ri->get<int>();
        if (const json* tc = get(*r, "toolComponent"))
            if (const json* ci = get(*tc, "index"); ci && ci->is_number_integer()) comp = ci->get<int>() + 1;
    }
    if (rule_index < 0)
        if (const json* ri = get(result, "ruleIndex"); ri && ri->is_number_integer()) rule_index = ri->get<int>();
    (void)run;
    if (rule_index >= 0 && comp >= 0 && static_cast<std::size_t>(comp) < idx.components.size()) {
        const json* rules = get(*idx.components[static_cast<std::size_t>(comp)], "rules");
        if (rules && rules->is_array() && static_cast<std::size_t>(rule_index) < rules->size())
            return &(*rules)[static_cast<std::size_t>(rule_index)];
    }
    if (rule_id.empty()) return nullptr;
    for (const json* c : idx.components) {
        const json* rules = get(*c, "rules");
        if (!rules || !rules->is_array()) continue;
        for (const auto& r : *rules)
            if (get_str(r, "id") == rule_id) return &r;
    }
    return nullptr;
}

bool is_cwe_component(const json& ref) {
    if (const json* tc = get(ref, "toolComponent")) return to_lower(get_str(*tc, "name")) == "cwe";
    return false;
}

void collect_tag_strings(const json* props, std::vector<std::string>& out) {
    if (!props) return;
    for (const char* key : {"tags", "cwe"}) {
        const json* v = get(*props, key);
        if (!v) continue;
        if (v->is_string()) out.push_back(v->get<std::string>());
        else if (v->is_array())
            for (const auto& t : *v)
                if (t.is_string()) out.push_back(t.get<std::string>());
    }
}

// Name after "CWE-89: " in semgrep-style tags.
std::optional<std::string> name_from_tag(const std::string& tag, int cwe) {
    auto colon = tag.find(':');
    if (colon == std::string::npos) return std::nullopt;
    auto ids = cwe_ids_in_text(tag.substr(0, colon));
    if (ids.empty() || ids.front() != cwe) return std::nullopt;
    std::string name = tag.substr(colon + 1);
    auto b = name.find_first_not_of(' ');
    if (b == std::string::npos) return std::nullopt;
    return name.substr(b);
}

void extract_cwe(const json& result, const json* rule, const RunIndex& idx, SecurityComment& c) {
    auto taxon_name = [&](int id) -> std::optional<std::string> {
        auto it = idx.taxa_names.find(id);
        if (it != idx.taxa_names.end() && !it->second.empty()) return it->second;
        return std::nullopt;
    };
    // 1. taxonomy references on the result, then on the rule
    if (const json* taxa = get(result, "taxa"); taxa && taxa->is_array()) {
        for (const auto& t : *taxa) {
            if (!is_cwe_component(t)) continue;
            if (auto id = parse_cwe_id(std::string_view(get_str(t, "id")))) {
                c.cwe_id = id;
                c.cwe_name = taxon_name(*id);
                return;
            }
        }
    }
    if (rule) {
        if (const json* rels = get(*rule, "relationships"); rels && rels->is_array()) {
            for (const auto& rel : *rels) {
                const json* target = get(rel, "target");
                if (!target || !is_cwe_component(*target)) continue;
                if (auto id = parse_cwe_id(std::string_view(get_str(*target, "id")))) {
                    c.cwe_id = id;
                    c.cwe_name = taxon_name(*id);
                    return;
                }
            }
        }
    }
    // 2. tags
    std::vector<std::string> tags;
    collect_tag_strings(get(result, "properties"), tags);
    if (rule) collect_tag_strings(get(*rule, "properties"), tags);
    for (const auto& t : tags) {
        auto ids = cwe_ids_in_text(t);
        if (ids.empty()) continue;
        c.cwe_id = ids.front();
        c.cwe_name = taxon_name(ids.front());
        if (!c.cwe_name) c.cwe_name = name_from_tag(t, ids.front());
        return;
    }
}

std::optional<std::pair<std::string, std::pair<int, int>>> physical_location(const json& loc, const json& run,
                                                                            const std::filesystem::path& root) {
    const json* phys = get(loc, "physicalLocation");
    if (!phys) return std::nullopt;
    const json* art = get(*phys, "artifactLocation");
    const json* region = get(*phys, "region");
    if (!art || !region) return std::nullopt;
    const json* start = get(*region, "startLine");
    if (!start || !start->is_number_integer() || start->get<int>() < 1) return std::nullopt;
    std::string uri = get_str(*art, "uri");
    if (uri.empty()) {
        if (const json* ai = get(*art, "index"); ai && ai->is_number_integer()) {
            const json* arts = get(run, "artifacts");
            auto i = ai->get<std::size_t>();
            if (arts && arts->is_array() && i < arts->size())
                if (const json* l = get((*arts)[i], "location")) uri = get_str(*l, "uri");
        }
    }
    if (uri.empty()) return std::nullopt;
    int s = start->get<int>();
    int e = s;
    if (const json* end = get(*region, "endLine"); end && end->is_number_integer()) e = std::max(s, end->get<int>());
    return std::make_pair(normalize_path(uri, root), std::make_pair(s, e));
}

}  // namespace

NormalizedRun parse_sarif(std::string_view payload, const SarifOptions& opts) {
    json doc;
    try {
        std::string_view p = payload;
        if (p.substr(0, 3) == "\xEF\xBB\xBF") p.remove_prefix(3);
        doc = json::parse(p.begin(), p.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SarifParseError, std::string("invalid SARIF JSON: ") + e.what(), e.byte);
    }
    const json* runs = get(doc, "runs");
    if (!runs || !runs->is_array()) throw Error(ErrorCode::SarifParseError, "SARIF document has no runs array");

    NormalizedRun out;
    out.format = "sarif";
    std::size_t n = 0;
    for (const auto& run : *runs) {
        const json* tool = get(run, "tool");
        const json* driver = tool ? get(*tool, "driver") : nullptr;
        if (!driver) throw Error(ErrorCode::SarifParseError, "SARIF run without tool.driver");
        std::string name = get_str(*driver, "name");
        std::string version = get_str(*driver, "semanticVersion");
        if (version.empty()) version = get_str(*driver, "version");
        if (out.tool_name.empty()) {
            out.tool_name = name;
            out.tool_version = version;
        }
        Producer producer = parse_producer(name);
        std::string prefix = opts.id_prefix.empty() ? std::string(to_string(producer)) : opts.id_prefix;

        RunIndex idx;
        idx.components.push_back(driver);
        if (const json* ext = get(*tool, "extensions"); ext && ext->is_array())
            for (const auto& e : *ext) idx.components.push_back(&e);
        if (const json* taxonomies = get(run, "taxonomies"); taxonomies && taxonomies->is_array()) {
            for (const auto& tax : *taxonomies) {
                if (to_lower(get_str(tax, "name")) != "cwe") continue;
                if (const json* taxa = get(tax, "taxa"); taxa && taxa->is_array())
                    for (const auto& t : *taxa)
                        if (auto id = parse_cwe_id(std::string_view(get_str(t, "id")))) {
                            std::string nm = get_str(t, "name");
                            if (nm.empty())
                                if (const json* sd = get(t, "shortDescription")) nm = get_str(*sd, "text");
                            idx.taxa_names[*id] = nm;
                        }
            }
        }

        const json* results = get(run, "results");
        if (!results) continue;
        if (!results->is_array()) throw Error(ErrorCode::SarifParseError, "SARIF results is not an array");
        for (const auto& result : *results) {
            const json* locs = get(result, "locations");
            std::optional<std::pair<std::string, std::pair<int, int>>> primary;
            if (locs && locs->is_array() && !locs->empty()) primary = physical_location((*locs)[0], run, opts.repo_root);
            if (!primary) {
                ++out.dropped;
                continue;
            }
            const json* rule = rule_for(run, result, idx);

            SecurityComment c;
            c.comment_id = prefix + "-" + std::to_string(++n);
            c.file = primary->first;
            c.start_line = primary->second.first;
            c.end_line = primary->second.second;
            c.producer = producer;
            c.rule_id = get_str(result, "ruleId");
            if (c.rule_id->empty() && rule) c.rule_id = get_str(*rule, "id");
            if (c.rule_id->empty()) c.rule_id.reset();

            if (const json* msg = get(result, "message")) {
                c.comment = get_str(*msg, "text");
                if (c.comment.empty()) {
                    std::string mid = get_str(*msg, "id");
                    if (rule && !mid.empty())
                        if (const json* ms = get(*rule, "messageStrings"))
                            if (const json* m = get(*ms, mid.c_str()))
                                c.comment = format_message(get_str(*m, "text"), get(*msg, "arguments"));
                }
                if (c.comment.empty()) c.comment = get_str(*msg, "markdown");
                if (const json* args = get(*msg, "arguments"); args && c.comment.find('{') != std::string::npos)
                    c.comment = format_message(c.comment, args);
            }
            if (c.comment.empty() && rule)
                if (const json* sd = get(*rule, "shortDescription")) c.comment = get_str(*sd, "text");
            if (c.comment.empty()) c.comment = c.rule_id.value_or("SAST finding");

            std::optional<Severity> sev;
            if (rule)
                if (const json* props = get(*rule, "properties"))
                    if (const json* ss = get(*props, "security-severity")) {
                        if (ss->is_string()) {
                            try {
                                sev = severity_from_score(std::stod(ss->get<std::string>()));
                            } catch (const std::exception&) {
                            }
                        } else if (ss->is_number()) {
                            sev = severity_from_score(ss->get<double>());
                        }
                    }
            if (!sev) {
                std::string level = get_str(result, "level");
                if (level.empty() && rule)
                    if (const json* dc = get(*rule, "defaultConfiguration")) level = get_str(*dc, "level");
                sev = parse_severity(level.empty() ? "warning" : level);
            }
            c.severity = sev.value_or(Severity::Medium);

            extract_cwe(result, rule, idx, c);

            if (locs)
                for (std::size_t i = 1; i < locs->size(); ++i)
                    if (auto p = physical_location((*locs)[i], run, opts.repo_root))
                        c.evidence.push_back(p->first + ":" + std::to_string(p->second.first));
            if (const json* rel = get(result, "relatedLocations"); rel && rel->is_array())
                for (const auto& l : *rel)
                    if (auto p = physical_location(l, run, opts.repo_root))
                        c.evidence.push_back(p->first + ":" + std::to_string(p->second.first));

            out.comments.push_back(std::move(c));
        }
    }
    return out;
}

namespace {

NormalizedRun parse_semgrep_json(const json& doc, const SarifOptions& opts) {
    NormalizedRun out;
    out.format = "semgrep-json";
    out.tool_name = "semgrep";
    out.tool_version = get_str(doc, "version");
    const json* results = get(doc, "results");
    if (!results || !results->is_array()) throw Error(ErrorCode::UnsupportedFormat, "semgrep JSON without results");
    std::size_t n = 0;
    for (const auto& r : *results) {
        const json* start = get(r, "start");
        const json* line = start ? get(*start, "line") : nullptr;
        std::string path = get_str(r, "path");
        if (!line || !line->is_number_integer() || path.empty()) {
            ++out.dropped;
            continue;
        }
        SecurityComment c;
        c.comment_id = (opts.id_prefix.empty() ? std::string("semgrep") : opts.id_prefix) + "-" + std::to_string(++n);
        c.producer = Producer::Semgrep;
        c.file = normalize_path(path, opts.repo_root);
        c.start_line = line->get<int>();
        c.end_line = c.start_line;
        if (const json* end = get(r, "end"))
            if (const json* el = get(*end, "line"); el && el->is_number_integer()) c.end_line = std::max(c.start_line, el->get<int>());
        c.rule_id = get_str(r, "check_id");
        if (c.rule_id->empty()) c.rule_id.reset();
        if (const json* extra = get(r, "extra")) {
            c.comment = get_str(*extra, "message");
            c.severity = parse_severity(get_str(*extra, "severity")).value_or(Severity::Medium);
            if (const json* meta = get(*extra, "metadata")) {
                std::vector<std::string> tags;
                collect_tag_strings(meta, tags);
                for (const auto& t : tags) {
                    auto ids = cwe_ids_in_text(t);
                    if (ids.empty()) continue;
                    c.cwe_id = ids.front();
                    c.cwe_name = name_from_tag(t, ids.front());
                    break;
                }
            }
        }
        if (c.comment.empty()) c.comment = c.rule_id.value_or("semgrep finding");
        out.comments.push_back(std::move(c));
    }
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
            any = true;
        } else if (ch == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field.push_back(ch);
            any = true;
        }
    }
    if (quoted) throw Error(ErrorCode::UnsupportedFormat, "unterminated quoted CSV field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

// codeql database analyze --format=csv:
// name, description, severity, message, path, start_line, start_column, end_line, end_column
NormalizedRun parse_codeql_csv(std::string_view text, const SarifOptions& opts) {
    NormalizedRun out;
    out.format = "codeql-csv";
    out.tool_name = "CodeQL";
    std::size_t n = 0;
    for (const auto& row : parse_csv(text)) {
        if (row.size() < 9) throw Error(ErrorCode::UnsupportedFormat, "CodeQL CSV rows need 9 columns");
        int start = 0;
        int end = 0;
        try {
            start = std::stoi(row[5]);
            end = std::stoi(row[7]);
        } catch (const std::exception&) {
            ++out.dropped;
            continue;
        }
        if (start < 1 || row[4].empty()) {
            ++out.dropped;
            continue;
        }
        SecurityComment c;
        c.comment_id = (opts.id_prefix.empty() ? std::string("codeql") : opts.id_prefix) + "-" + std::to_string(++n);
        c.producer = Producer::Codeql;
        std::string path = row[4];
        if (!path.empty() && path.front() == '/' && (opts.repo_root.empty() || !std::filesystem::exists(path)))
            path = path.substr(1);
        c.file = normalize_path(path, opts.repo_root);
        c.start_line = start;
        c.end_line = std::max(start, end);
        c.comment = row[3].empty() ? row[1] : row[3];
        if (c.comment.empty()) c.comment = row[0];
        c.severity = parse_severity(row[2]).value_or(Severity::Medium);
        out.comments.push_back(std::move(c));
    }
    return out;
}

}  // namespace

NormalizedRun normalize_tool_output(const RawToolRun& run, const SarifOptions& opts) {
    std::string_view p = run.payload;
    if (p.substr(0, 3) == "\xEF\xBB\xBF") p.remove_prefix(3);
    auto first = p.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) throw Error(ErrorCode::UnsupportedFormat, "empty tool payload");

    NormalizedRun out;
    if (p[first] == '{') {
        json doc;
        try {
            doc = json::parse(p.begin(), p.end());
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::UnsupportedFormat, std::string("tool payload is not valid JSON: ") + e.what());
        }
        if (doc.contains("runs")) {
            out = parse_sarif(p, opts);
        } else if (run.tool == SastTool::Semgrep && doc.contains("results")) {
            out = parse_semgrep_json(doc, opts);
        } else {
            throw Error(ErrorCode::UnsupportedFormat, "unrecognized JSON payload for " + std::string(to_string(run.tool)));
        }
    } else if (run.tool == SastTool::Codeql) {
        out = parse_codeql_csv(p, opts);
    } else {
        throw Error(ErrorCode::UnsupportedFormat, "unrecognized payload for " + std::string(to_string(run.tool)));
    }

    Producer producer = run.tool == SastTool::Codeql ? Producer::Codeql
                        : run.tool == SastTool::Semgrep ? Producer::Semgrep
                                                        : Producer::Snyk;
    for (auto& c : out.comments) c.producer = producer;
    if (!run.version.empty()) out.tool_version = run.version;
    return out;
}

std::vector<SecurityComment> filter_to_changeset(const std::vector<SecurityComment>& comments,
                                                 const ChangeSet& change_set, int radius) {
    radius = std::max(radius, 0);
    std::vector<SecurityComment> out;
    for (const auto& c : comments) {
        auto it = change_set.changed_lines.lower_bound(LineKey{c.file, c.start_line - radius});
        if (it != change_set.changed_lines.end() && it->first.path == c.file && it->first.line <= c.end_line + radius)
            out.push_back(c);
    }
    return out;
}

}  // namespace scr
