#include "scr/error.hpp"
#include "scr/memory.hpp"
#include "scr/repo.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace fs = std::filesystem;

namespace scr {

std::string_view to_string(HighLevelCategory c) {
    switch (c) {
        case HighLevelCategory::Injection: return "Injection";
        case HighLevelCategory::Authorization: return "Authorization";
        case HighLevelCategory::Information: return "Information";
        case HighLevelCategory::Resource: return "Resource";
        case HighLevelCategory::Control: return "Control";
        case HighLevelCategory::Other: return "Other";
    }
    return "Other";
}

std::string_view short_label(HighLevelCategory c) {
    switch (c) {
        case HighLevelCategory::Injection: return "Inj.";
        case HighLevelCategory::Authorization: return "Auth.";
        case HighLevelCategory::Information: return "Inf.";
        case HighLevelCategory::Resource: return "Res.";
        case HighLevelCategory::Control: return "Cont.";
        case HighLevelCategory::Other: return "Other";
    }
    return "Other";
}

const CweEntry* CweTree::find(int id) const {
    auto it = entries.find(id);
    return it == entries.end() ? nullptr : &it->second;
}

bool CweTree::is_pillar(int id) const { return std::find(pillars.begin(), pillars.end(), id) != pillars.end(); }

std::set<int> CweTree::ancestors(int id) const {
    std::set<int> seen;
    if (!contains(id)) return seen;
    std::deque<int> todo{id};
    while (!todo.empty()) {
        int cur = todo.front();
        todo.pop_front();
        if (!seen.insert(cur).second) continue;
        for (int p : entries.at(cur).parent_ids) todo.push_back(p);
    }
    return seen;
}

std::set<int> CweTree::pillar_ancestors(int id) const {
    std::set<int> out;
    for (int a : ancestors(id))
        if (is_pillar(a)) out.insert(a);
    return out;
}

namespace {

int read_cwe(const json& v, const std::string& path) {
    auto id = parse_cwe_id(v);
    if (!id) schema_error(path, "expected a CWE number");
    return *id;
}

CweEntry parse_entry(const json& j, const std::string& path) {
    FieldReader r(j, path);
    CweEntry e;
    if (!r.has("cwe_id")) schema_error(r.child_path("cwe_id"), "required field missing");
    e.cwe_id = read_cwe(j.at("cwe_id"), r.child_path("cwe_id"));
    e.name = r.str("name");
    e.category = r.opt_str("category").value_or("");
    e.subcategory = r.opt_str("subcategory").value_or("");
    e.severity = r.opt_str("severity").value_or("");
    e.description = r.opt_str("description").value_or("");
    e.patterns = r.str_list("patterns");
    e.detection_indicators = r.str_list("detection_indicators");
    e.languages = r.str_list("languages");
    e.remediation_steps = r.str_list("remediation_steps");
    e.hint = r.opt_str("hint").value_or("");
    const auto& ex = r.array("examples");
    for (std::size_t i = 0; i < ex.size(); ++i) {
        FieldReader er(ex[i], r.child_path("examples", i));
        e.examples.push_back({er.opt_str("vulnerable").value_or(""), er.opt_str("secure").value_or("")});
    }
    const auto& parents = r.array("parent_ids");
    for (std::size_t i = 0; i < parents.size(); ++i) e.parent_ids.push_back(read_cwe(parents[i], r.child_path("parent_ids", i)));
    return e;
}

// Returns a cycle (first node repeated at the end) or empty.
std::vector<int> find_cycle(const CweTree& tree) {
    enum class Mark { White, Gray, Black };
    std::map<int, Mark> mark;
    std::vector<int> stack;
    std::vector<int> cycle;

    std::function<bool(int)> visit = [&](int id) {
        mark[id] = Mark::Gray;
        stack.push_back(id);
        for (int p : tree.entries.at(id).parent_ids) {
            Mark m = mark.contains(p) ? mark[p] : Mark::White;
            if (m == Mark::Gray) {
                auto it = std::find(stack.begin(), stack.end(), p);
                cycle.assign(it, stack.end());
                cycle.push_back(p);
                return true;
            }
            if (m == Mark::White && visit(p)) return true;
        }
        stack.pop_back();
        mark[id] = Mark::Black;
        return false;
    };
    for (const auto& [id, _] : tree.entries) {
        if (mark.contains(id) && mark[id] != Mark::White) continue;
        if (visit(id)) return cycle;
    }
    return {};
}

}  // namespace

CweTree load_cwe_tree(std::string_view document) {
    json doc = parse_json_document(document, "cwe tree");
    FieldReader top(doc, "$");
    CweTree tree;
    tree.version = top.opt_str("version").value_or("");
    if (top.has("categories")) {
        const auto& cats = doc.at("categories");
        if (!cats.is_object()) schema_error("$.categories", "expected an object of category -> description");
        for (const auto& [k, v] : cats.items()) {
            if (!v.is_string()) schema_error("$.categories." + k, "expected a string");
            tree.categories[k] = v.get<std::string>();
        }
    }
    if (!top.has("entries")) schema_error("$.entries", "required field missing");
    const auto& entries = top.array("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        std::string path = top.child_path("entries", i);
        CweEntry e = parse_entry(entries[i], path);
        if (tree.entries.contains(e.cwe_id)) schema_error(path + ".cwe_id", "duplicate cwe_id " + std::to_string(e.cwe_id));
        tree.entries.emplace(e.cwe_id, std::move(e));
    }
    for (const auto& [id, e] : tree.entries)
        for (int p : e.parent_ids)
            if (!tree.entries.contains(p))
                schema_error("CWE-" + std::to_string(id) + ".parent_ids", "unknown parent CWE-" + std::to_string(p));

    if (auto cycle = find_cycle(tree); !cycle.empty()) {
        std::string s;
        for (int c : cycle) s += (s.empty() ? "" : " -> ") + std::string("CWE-") + std::to_string(c);
        throw Error(ErrorCode::CycleDetected, "cycle in CWE hierarchy: " + s);
    }

    const auto& pillars = top.array("pillars");
    for (std::size_t i = 0; i < pillars.size(); ++i) {
        std::string path = top.child_path("pillars", i);
        int id = 0;
        std::string name;
        if (pillars[i].is_object()) {
            FieldReader pr(pillars[i], path);
            if (!pr.has("cwe_id")) schema_error(pr.child_path("cwe_id"), "required field missing");
            id = read_cwe(pillars[i].at("cwe_id"), pr.child_path("cwe_id"));
            name = pr.opt_str("name").value_or("");
        } else {
            id = read_cwe(pillars[i], path);
        }
        if (!tree.entries.contains(id)) schema_error(path, "pillar CWE-" + std::to_string(id) + " is not an entry");
        if (!tree.entries.at(id).parent_ids.empty())
            schema_error(path, "pillar CWE-" + std::to_string(id) + " must not have parents");
        tree.pillars.push_back(id);
        tree.high_level_map[id] = name.empty() ? tree.entries.at(id).name : name;
    }
    for (const auto& [id, e] : tree.entries) {
        if (!e.parent_ids.empty()) continue;
        if (pillars.empty()) {
            tree.pillars.push_back(id);
            tree.high_level_map[id] = e.name;
        } else if (!tree.is_pillar(id)) {
            schema_error("CWE-" + std::to_string(id), "root entry is not a declared pillar");
        }
    }
    if (tree.pillars.empty() && !tree.entries.empty()) schema_error("$.pillars", "pillar set is empty");
    return tree;
}

CweTree load_cwe_tree_file(const fs::path& path) { return load_cwe_tree(read_file(path)); }

json to_json(const CweTree& tree) {
    json entries = json::array();
    for (const auto& [id, e] : tree.entries) {
        json ex = json::array();
        for (const auto& x : e.examples) ex.push_back({{"vulnerable", x.vulnerable}, {"secure", x.secure}});
        entries.push_back({{"cwe_id", e.cwe_id},
                           {"name", e.name},
                           {"category", e.category},
                           {"subcategory", e.subcategory},
                           {"severity", e.severity},
                           {"description", e.description},
                           {"patterns", e.patterns},
                           {"detection_indicators", e.detection_indicators},
                           {"languages", e.languages},
                           {"examples", ex},
                           {"remediation_steps", e.remediation_steps},
                           {"hint", e.hint},
                           {"parent_ids", e.parent_ids}});
    }
    json pillars = json::array();
    for (int p : tree.pillars) pillars.push_back({{"cwe_id", p}, {"name", tree.high_level_map.at(p)}});
    json cats = json::object();
    for (const auto& [k, v] : tree.categories) cats[k] = v;
    return {{"version", tree.version}, {"categories", cats}, {"pillars", pillars}, {"entries", entries}};
}

std::vector<std::vector<int>> cwe_ancestors(const CweTree& tree, int cwe_id) {
    if (!tree.contains(cwe_id)) throw Error(ErrorCode::UnknownCwe, "unknown CWE-" + std::to_string(cwe_id));
    std::map<int, std::vector<std::vector<int>>> memo;
    std::function<const std::vector<std::vector<int>>&(int)> paths = [&](int id) -> const std::vector<std::vector<int>>& {
        if (auto it = memo.find(id); it != memo.end()) return it->second;
        std::vector<std::vector<int>> out;
        const auto& parents = tree.entries.at(id).parent_ids;
        if (parents.empty()) {
            out.push_back({id});
        } else {
            for (int p : parents) {
                for (const auto& tail : paths(p)) {
                    std::vector<int> path{id};
                    path.insert(path.end(), tail.begin(), tail.end());
                    out.push_back(std::move(path));
                }
            }
        }
        return memo[id] = std::move(out);
    };
    return paths(cwe_id);
}

bool same_high_level_category(const CweTree& tree, int a, int b, std::vector<int>* unknown) {
    bool ok = true;
    for (int id : {a, b}) {
        if (!tree.contains(id)) {
            ok = false;
            if (unknown) unknown->push_back(id);
        }
    }
    if (!ok) return false;
    auto pa = tree.pillar_ancestors(a);
    auto pb = tree.pillar_ancestors(b);
    return std::any_of(pa.begin(), pa.end(), [&](int p) { return pb.contains(p); });
}

Classification classify(const CweTree& tree, int cwe_id) {
    static const std::vector<std::pair<HighLevelCategory, std::vector<int>>> anchors = {
        {HighLevelCategory::Injection, {707}},
        {HighLevelCategory::Authorization, {287, 284}},
        {HighLevelCategory::Information, {200}},
        {HighLevelCategory::Resource, {664}},
        {HighLevelCategory::Control, {691}},
    };
    Classification out;
    auto anc = tree.ancestors(cwe_id);
    for (const auto& [cat, ids] : anchors) {
        for (int a : ids) {
            if (!anc.contains(a)) continue;
            if (out.all_matches.empty()) {
                out.category = cat;
                out.anchor = a;
            }
            out.all_matches.push_back(cat);
            break;
        }
    }
    return out;
}

HighLevelCategory classify_high_level(const CweTree& tree, int cwe_id) { return classify(tree, cwe_id).category; }

}  // namespace scr
