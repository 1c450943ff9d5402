#include "scr/error.hpp"
#include "scr/memory.hpp"
#include "scr/repo.hpp"

#include <algorithm>
#include <cstdlib>

namespace fs = std::filesystem;

namespace scr {

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::Info: return "info";
        case Severity::Low: return "low";
        case Severity::Medium: return "medium";
        case Severity::High: return "high";
        case Severity::Critical: return "critical";
    }
    return "medium";
}

std::optional<Severity> parse_severity(std::string_view label) {
    std::string l = to_lower(label);
    if (l == "info" || l == "informational" || l == "note" || l == "none") return Severity::Info;
    if (l == "low" || l == "recommendation" || l == "minor") return Severity::Low;
    if (l == "medium" || l == "moderate" || l == "warning") return Severity::Medium;
    if (l == "high" || l == "error" || l == "major") return Severity::High;
    if (l == "critical" || l == "blocker") return Severity::Critical;
    return std::nullopt;
}

Severity severity_from_score(double score) {
    if (score >= 9.0) return Severity::Critical;
    if (score >= 7.0) return Severity::High;
    if (score >= 4.0) return Severity::Medium;
    if (score > 0.0) return Severity::Low;
    return Severity::Info;
}

fs::path default_data_dir() {
    if (const char* env = std::getenv("SCR_DATA_DIR"); env && *env) return fs::path(env);
#ifdef SCR_DATA_DIR
    return fs::path(SCR_DATA_DIR);
#else
    return fs::path("data");
#endif
}

std::set<int> SastRule::cwe_ids() const {
    std::set<int> out;
    if (cwe_id) out.insert(*cwe_id);
    for (const auto& t : tags)
        for (int c : cwe_ids_in_text(t)) out.insert(c);
    return out;
}

const SastRule* SastRuleStore::find(std::string_view id) const {
    auto it = rules.find(std::string(id));
    return it == rules.end() ? nullptr : &it->second;
}

void SastRuleStore::add(SastRule rule) {
    if (rule.rule_id.empty()) throw Error(ErrorCode::SchemaError, "rule_id must be non-empty");
    if (rule.cwe_id && !rule.cwe_name)
        throw Error(ErrorCode::SchemaError, rule.rule_id + ": cwe_id present without cwe_name");
    if (rules.contains(rule.rule_id)) throw Error(ErrorCode::DuplicateRuleId, "duplicate rule_id: " + rule.rule_id);
    const std::string id = rule.rule_id;
    for (int c : rule.cwe_ids()) by_cwe[c].push_back(id);
    for (const auto& t : rule.tags) by_tag[t].push_back(id);
    for (const auto& l : rule.languages) by_language[to_lower(l)].push_back(id);
    rules.emplace(id, std::move(rule));
}

namespace {

std::string text_or_lines(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key) || obj.at(key).is_null()) return {};
    const auto& v = obj.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string()) schema_error(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
            if (!out.empty()) out.push_back('\n');
            out += v[i].get<std::string>();
        }
        return out;
    }
    schema_error(path + "." + key, "expected a string or array of strings");
}

SastRule parse_rule(const json& j, const std::string& path, std::vector<std::string>& warnings) {
    FieldReader r(j, path);
    SastRule rule;
    rule.rule_id = r.str("rule_id");
    if (rule.rule_id.empty()) schema_error(r.child_path("rule_id"), "must be non-empty");
    rule.description = r.str("description");
    rule.pattern = r.str("pattern");
    if (r.has("cwe_id")) {
        auto id = parse_cwe_id(j.at("cwe_id"));
        if (!id) schema_error(r.child_path("cwe_id"), "expected a CWE number");
        rule.cwe_id = id;
    }
    rule.cwe_name = r.opt_str("cwe_name");
    if (rule.cwe_id && !rule.cwe_name) schema_error(r.child_path("cwe_name"), "required when cwe_id is present");
    if (auto sev = r.opt_str("severity")) {
        if (auto s = parse_severity(*sev)) {
            rule.severity = *s;
        } else {
            warnings.push_back(path + ".severity: unmapped severity '" + *sev + "', using medium");
            rule.severity = Severity::Medium;
        }
    }
    rule.tags = r.str_list("tags");
    rule.languages = r.str_list("languages");
    rule.remediation = text_or_lines(j, "remediation", path);
    const auto& ex = r.array("examples");
    for (std::size_t i = 0; i < ex.size(); ++i) {
        FieldReader er(ex[i], r.child_path("examples", i));
        rule.examples.push_back({er.opt_str("bad").value_or(""), er.opt_str("good").value_or("")});
    }
    return rule;
}

}  // namespace

SastRuleStore load_sast_rules(std::string_view document) {
    json doc = parse_json_document(document, "sast rules");
    FieldReader top(doc, "$");
    SastRuleStore store;
    store.version = top.opt_str("version").value_or("");
    if (!top.has("entries")) schema_error("$.entries", "required field missing");
    const auto& entries = top.array("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        SastRule rule = parse_rule(entries[i], top.child_path("entries", i), store.warnings);
        if (store.rules.contains(rule.rule_id))
            throw Error(ErrorCode::DuplicateRuleId, top.child_path("entries", i) + ": duplicate rule_id " + rule.rule_id);
        store.add(std::move(rule));
    }
    return store;
}

SastRuleStore load_sast_rules_file(const fs::path& path) { return load_sast_rules(read_file(path)); }

json to_json(const SastRuleStore& store) {
    json entries = json::array();
    for (const auto& [id, r] : store.rules) {
        json e = {{"rule_id", r.rule_id},
                  {"description", r.description},
                  {"pattern", r.pattern},
                  {"severity", std::string(to_string(r.severity))},
                  {"tags", r.tags},
                  {"languages", r.languages},
                  {"remediation", r.remediation}};
        if (r.cwe_id) e["cwe_id"] = *r.cwe_id;
        if (r.cwe_name) e["cwe_name"] = *r.cwe_name;
        json ex = json::array();
        for (const auto& x : r.examples) ex.push_back({{"bad", x.bad}, {"good", x.good}});
        e["examples"] = ex;
        entries.push_back(std::move(e));
    }
    return {{"version", store.version}, {"entries", entries}};
}

std::vector<const SastRule*> query_rules(const SastRuleStore& store, const RuleFilter& filter) {
    std::vector<const SastRule*> out;
    const std::string needle = filter.free_text ? to_lower(*filter.free_text) : std::string();
    const std::string lang = filter.language ? to_lower(*filter.language) : std::string();
    for (const auto& [id, rule] : store.rules) {
        bool ok = std::all_of(filter.tags.begin(), filter.tags.end(), [&](const std::string& t) {
            return std::find(rule.tags.begin(), rule.tags.end(), t) != rule.tags.end();
        });
        if (ok && filter.cwe) ok = rule.cwe_ids().contains(*filter.cwe);
        if (ok && filter.language)
            ok = std::any_of(rule.languages.begin(), rule.languages.end(),
                             [&](const std::string& l) { return to_lower(l) == lang; });
        if (ok && filter.free_text)
            ok = to_lower(rule.description).find(needle) != std::string::npos ||
                 to_lower(rule.pattern).find(needle) != std::string::npos;
        if (ok) out.push_back(&rule);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CodeQL query metadata converter
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
        } else {
            if (space) out.push_back(' ');
            space = false;
            out.push_back(c);
        }
    }
    return out;
}

std::map<std::string, std::string> parse_qldoc(std::string_view src) {
    std::map<std::string, std::string> meta;
    auto open = src.find("/**");
    if (open == std::string_view::npos) return meta;
    auto close = src.find("*/", open + 3);
    if (close == std::string_view::npos) return meta;
    std::string current;
    for (const auto& raw : split_lines(src.substr(open + 3, close - open - 3))) {
        std::string line = trim(raw);
        if (!line.empty() && line.front() == '*') line = trim(line.substr(1));
        if (!line.empty() && line.front() == '@') {
            auto sp = line.find_first_of(" \t");
            current = line.substr(1, sp == std::string::npos ? std::string::npos : sp - 1);
            meta[current] = sp == std::string::npos ? std::string() : trim(line.substr(sp));
        } else if (!current.empty() && !line.empty()) {
            meta[current] += " " + line;
        }
    }
    return meta;
}

std::string qhelp_recommendation(const fs::path& qhelp) {
    std::error_code ec;
    if (!fs::exists(qhelp, ec)) return {};
    std::string xml = read_file(qhelp);
    auto b = xml.find("<recommendation>");
    auto e = xml.find("</recommendation>");
    if (b == std::string::npos || e == std::string::npos || e < b) return {};
    std::string body = xml.substr(b + 16, e - b - 16);
    std::string text;
    bool in_tag = false;
    for (char c : body) {
        if (c == '<') in_tag = true;
        else if (c == '>') {
            in_tag = false;
            text.push_back(' ');
        } else if (!in_tag) text.push_back(c);
    }
    return collapse_ws(text);
}

std::vector<std::string> languages_for(std::string_view id) {
    auto slash = id.find('/');
    std::string prefix(id.substr(0, slash));
    if (prefix == "py") return {"python"};
    if (prefix == "js") return {"javascript", "typescript"};
    if (prefix == "rb") return {"ruby"};
    if (prefix == "cs") return {"csharp"};
    if (prefix == "java" || prefix == "go" || prefix == "cpp" || prefix == "swift" || prefix == "rust")
        return {prefix};
    return {};
}

}  // namespace

SastRuleStore convert_codeql_queries(const fs::path& source_dir, const CweTree* tree) {
    std::error_code ec;
    if (!fs::is_directory(source_dir, ec)) throw Error(ErrorCode::IoError, "not a directory: " + source_dir.string());
    std::vector<fs::path> queries;
    for (const auto& e : fs::recursive_directory_iterator(source_dir))
        if (e.is_regular_file() && e.path().extension() == ".ql") queries.push_back(e.path());
    std::sort(queries.begin(), queries.end());

    SastRuleStore store;
    store.version = "codeql-curated";
    for (const auto& q : queries) {
        auto meta = parse_qldoc(read_file(q));
        auto id_it = meta.find("id");
        if (id_it == meta.end() || id_it->second.empty()) continue;
        SastRule rule;
        rule.rule_id = collapse_ws(id_it->second);
        if (store.rules.contains(rule.rule_id)) {
            store.warnings.push_back(q.string() + ": duplicate query id " + rule.rule_id + " skipped");
            continue;
        }
        rule.description = collapse_ws(meta["name"]);
        rule.pattern = collapse_ws(meta["description"]);
        if (rule.pattern.empty()) rule.pattern = rule.description;
        for (const auto& t : split_lines(meta["tags"])) {
            std::string s = collapse_ws(t);
            std::size_t pos = 0;
            while (pos < s.size()) {
                auto sp = s.find(' ', pos);
                std::string tok = s.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos);
                if (!tok.empty()) rule.tags.push_back(tok);
                if (sp == std::string::npos) break;
                pos = sp + 1;
            }
        }
        if (auto it = meta.find("security-severity"); it != meta.end() && !it->second.empty()) {
            char* end = nullptr;
            double score = std::strtod(it->second.c_str(), &end);
            rule.severity = end != it->second.c_str() ? severity_from_score(score) : Severity::Medium;
        } else if (auto ps = meta.find("problem.severity"); ps != meta.end()) {
            rule.severity = parse_severity(collapse_ws(ps->second)).value_or(Severity::Medium);
        }
        std::vector<int> cwes;
        for (const auto& t : rule.tags)
            for (int c : cwe_ids_in_text(t)) cwes.push_back(c);
        if (!cwes.empty()) {
            int chosen = cwes.front();
            if (tree) {
                for (int c : cwes)
                    if (tree->contains(c)) {
                        chosen = c;
                        break;
                    }
            }
            rule.cwe_id = chosen;
            const CweEntry* e = tree ? tree->find(chosen) : nullptr;
            rule.cwe_name = e ? e->name : "CWE-" + std::to_string(chosen);
        }
        rule.languages = languages_for(rule.rule_id);
        rule.remediation = qhelp_recommendation(fs::path(q).replace_extension(".qhelp"));
        store.add(std::move(rule));
    }
    return store;
}

}  // namespace scr
