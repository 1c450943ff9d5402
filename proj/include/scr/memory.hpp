#pragma once

#include "scr/json_util.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace scr {

enum class Severity { Info, Low, Medium, High, Critical };

std::string_view to_string(Severity s);

// Maps tool and free-form labels onto the closed set. Unknown labels return
// nullopt; callers default them to Medium and record a warning.
std::optional<Severity> parse_severity(std::string_view label);

Severity severity_from_score(double security_severity);

// ---------------------------------------------------------------------------
// SAST rules
// ---------------------------------------------------------------------------

struct RuleExample {
    std::string bad;
    std::string good;
    bool operator==(const RuleExample&) const = default;
};

struct SastRule {
    std::string rule_id;
    std::string description;
    std::string pattern;
    std::optional<int> cwe_id;
    std::optional<std::string> cwe_name;
    Severity severity = Severity::Medium;
    std::vector<std::string> tags;
    std::string remediation;
    std::vector<RuleExample> examples;
    std::vector<std::string> languages;

    // Primary CWE plus every CWE referenced from tags.
    std::set<int> cwe_ids() const;

    bool operator==(const SastRule&) const = default;
};

struct RuleFilter {
    std::vector<std::string> tags;  // rule must carry all of them
    std::optional<int> cwe;
    std::optional<std::string> language;
    std::optional<std::string> free_text;  // case-insensitive, description + pattern
};

class SastRuleStore {
public:
    std::string version;
    std::map<std::string, SastRule> rules;
    std::map<int, std::vector<std::string>> by_cwe;
    std::map<std::string, std::vector<std::string>> by_tag;
    std::map<std::string, std::vector<std::string>> by_language;
    std::vector<std::string> warnings;

    std::size_t size() const { return rules.size(); }
    const SastRule* find(std::string_view id) const;

    // Validates invariants and rebuilds the indices. Throws DuplicateRuleId.
    void add(SastRule rule);
};

SastRuleStore load_sast_rules(std::string_view document);
SastRuleStore load_sast_rules_file(const std::filesystem::path& path);
json to_json(const SastRuleStore& store);

std::vector<const SastRule*> query_rules(const SastRuleStore& store, const RuleFilter& filter);

// Best-effort curation from CodeQL query metadata (.ql QLDoc headers plus
// sibling .qhelp recommendations). `tree`, when given, supplies CWE names.
class CweTree;
SastRuleStore convert_codeql_queries(const std::filesystem::path& source_dir, const CweTree* tree = nullptr);

// ---------------------------------------------------------------------------
// CWE tree
// ---------------------------------------------------------------------------

struct CweExample {
    std::string vulnerable;
    std::string secure;
    bool operator==(const CweExample&) const = default;
};

struct CweEntry {
    int cwe_id = 0;
    std::string name;
    std::string category;
    std::string subcategory;
    std::string severity;
    std::string description;
    std::vector<std::string> patterns;
    std::vector<std::string> detection_indicators;
    std::vector<std::string> languages;
    std::vector<CweExample> examples;
    std::vector<std::string> remediation_steps;
    std::string hint;
    std::vector<int> parent_ids;

    bool operator==(const CweEntry&) const = default;
};

enum class HighLevelCategory { Injection, Authorization, Information, Resource, Control, Other };

std::string_view to_string(HighLevelCategory c);
std::string_view short_label(HighLevelCategory c);  // "Inj." etc.

inline constexpr HighLevelCategory kScoredCategories[] = {
    HighLevelCategory::Injection, HighLevelCategory::Authorization, HighLevelCategory::Information,
    HighLevelCategory::Resource, HighLevelCategory::Control};

struct Classification {
    HighLevelCategory category = HighLevelCategory::Other;
    std::optional<int> anchor;                   // anchor CWE that decided the class
    std::vector<HighLevelCategory> all_matches;  // >1 means the listing order broke a tie
};

class CweTree {
public:
    std::string version;
    std::map<int, CweEntry> entries;
    std::vector<int> pillars;
    std::map<int, std::string> high_level_map;
    std::map<std::string, std::string> categories;

    bool contains(int id) const { return entries.contains(id); }
    const CweEntry* find(int id) const;
    bool is_pillar(int id) const;

    // Reflexive ancestor closure.
    std::set<int> ancestors(int id) const;
    std::set<int> pillar_ancestors(int id) const;
};

CweTree load_cwe_tree(std::string_view document);
CweTree load_cwe_tree_file(const std::filesystem::path& path);
json to_json(const CweTree& tree);

// Every parent-edge path from `cwe_id` to a pillar. Throws UnknownCwe.
std::vector<std::vector<int>> cwe_ancestors(const CweTree& tree, int cwe_id);

// True iff both ids are known and their pillar-ancestor sets intersect.
// Unknown ids are appended to `unknown` when provided.
bool same_high_level_category(const CweTree& tree, int cwe_a, int cwe_b, std::vector<int>* unknown = nullptr);

Classification classify(const CweTree& tree, int cwe_id);
HighLevelCategory classify_high_level(const CweTree& tree, int cwe_id);

// ---------------------------------------------------------------------------
// Review guidelines
// ---------------------------------------------------------------------------

enum class Priority { Low, Medium, High };
std::string_view to_string(Priority p);

struct VulnerabilityPattern {
    std::string pattern;
    std::string example;
    std::string risk;
    bool operator==(const VulnerabilityPattern&) const = default;
};

struct GuidelineEntry {
    std::string guideline_id;
    std::string category;
    Priority priority = Priority::Medium;
    std::string title;
    std::vector<std::string> essential_checks;
    std::vector<VulnerabilityPattern> vulnerability_patterns;
    std::vector<std::string> remediation_steps;
    std::vector<std::string> related_guidelines;

    bool operator==(const GuidelineEntry&) const = default;
};

class GuidelineStore {
public:
    std::string version;
    std::map<std::string, GuidelineEntry> entries;
    std::map<std::string, std::vector<std::string>> by_category;
    std::vector<std::string> warnings;

    std::size_t size() const { return entries.size(); }
    const GuidelineEntry* find(std::string_view id) const;
    std::vector<const GuidelineEntry*> in_category(std::string_view category) const;
};

GuidelineStore load_guidelines(std::string_view document);
GuidelineStore load_guidelines_file(const std::filesystem::path& path);
json to_json(const GuidelineStore& store);

// Shipped documents (resolved against the data directory).
std::filesystem::path default_data_dir();

}  // namespace scr
