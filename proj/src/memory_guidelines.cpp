#include "scr/error.hpp"
#include "scr/memory.hpp"
#include "scr/repo.hpp"

namespace scr {

std::string_view to_string(Priority p) {
    switch (p) {
        case Priority::Low: return "low";
        case Priority::Medium: return "medium";
        case Priority::High: return "high";
    }
    return "medium";
}

const GuidelineEntry* GuidelineStore::find(std::string_view id) const {
    auto it = entries.find(std::string(id));
    return it == entries.end() ? nullptr : &it->second;
}

std::vector<const GuidelineEntry*> GuidelineStore::in_category(std::string_view category) const {
    std::vector<const GuidelineEntry*> out;
    if (auto it = by_category.find(std::string(category)); it != by_category.end())
        for (const auto& id : it->second) out.push_back(&entries.at(id));
    return out;
}

GuidelineStore load_guidelines(std::string_view document) {
    json doc = parse_json_document(document, "guidelines");
    FieldReader top(doc, "$");
    GuidelineStore store;
    store.version = top.opt_str("version").value_or("");
    if (!top.has("entries")) schema_error("$.entries", "required field missing");
    const auto& entries = top.array("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        std::string path = top.child_path("entries", i);
        FieldReader r(entries[i], path);
        GuidelineEntry g;
        g.guideline_id = r.str("guideline_id");
        if (g.guideline_id.empty()) schema_error(r.child_path("guideline_id"), "must be non-empty");
        g.category = r.str("category");
        g.title = r.str("title");
        if (auto p = r.opt_str("priority")) {
            std::string l = to_lower(*p);
            if (l == "low") g.priority = Priority::Low;
            else if (l == "medium") g.priority = Priority::Medium;
            else if (l == "high") g.priority = Priority::High;
            else store.warnings.push_back(path + ".priority: unmapped priority '" + *p + "', using medium");
        }
        g.essential_checks = r.str_list("essential_checks");
        g.remediation_steps = r.str_list("remediation_steps");
        g.related_guidelines = r.str_list("related_guidelines");
        const auto& vp = r.array("vulnerability_patterns");
        for (std::size_t k = 0; k < vp.size(); ++k) {
            FieldReader pr(vp[k], r.child_path("vulnerability_patterns", k));
            g.vulnerability_patterns.push_back(
                {pr.str("pattern"), pr.opt_str("example").value_or(""), pr.opt_str("risk").value_or("")});
        }
        if (store.entries.contains(g.guideline_id))
            throw Error(ErrorCode::DuplicateRuleId, path + ": duplicate guideline_id " + g.guideline_id);
        store.by_category[g.category].push_back(g.guideline_id);
        store.entries.emplace(g.guideline_id, std::move(g));
    }
    for (const auto& [id, g] : store.entries)
        for (std::size_t k = 0; k < g.related_guidelines.size(); ++k)
            if (!store.entries.contains(g.related_guidelines[k]))
                schema_error(id + ".related_guidelines[" + std::to_string(k) + "]",
                             "references unknown guideline " + g.related_guidelines[k]);
    return store;
}

GuidelineStore load_guidelines_file(const std::filesystem::path& path) { return load_guidelines(read_file(path)); }

json to_json(const GuidelineStore& store) {
    json entries = json::array();
    for (const auto& [id, g] : store.entries) {
        json vp = json::array();
        for (const auto& p : g.vulnerability_patterns)
            vp.push_back({{"pattern", p.pattern}, {"example", p.example}, {"risk", p.risk}});
        entries.push_back({{"guideline_id", g.guideline_id},
                           {"category", g.category},
                           {"priority", std::string(to_string(g.priority))},
                           {"title", g.title},
                           {"essential_checks", g.essential_checks},
                           {"vulnerability_patterns", vp},
                           {"remediation_steps", g.remediation_steps},
                           {"related_guidelines", g.related_guidelines}});
    }
    return {{"version", store.version}, {"entries", entries}};
}

}  // namespace scr
