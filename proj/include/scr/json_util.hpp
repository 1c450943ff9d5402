#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scr {

using json = nlohmann::json;

// Parses a UTF-8 JSON document, tolerating a leading BOM. Throws
// Error{SchemaError} naming `what` on syntax errors.
json parse_json_document(std::string_view bytes, std::string_view what);

// Sorted keys, two-space indent, invalid UTF-8 replaced, trailing newline.
std::string canonical_dump(const json& j);

void write_text_file(const std::filesystem::path& path, std::string_view content);

// Typed field access that reports the JSON path of the offending field.
class FieldReader {
public:
    FieldReader(const json& obj, std::string path);

    const std::string& path() const { return path_; }
    bool has(const char* key) const;

    std::string str(const char* key) const;
    std::optional<std::string> opt_str(const char* key) const;
    long long integer(const char* key) const;
    std::optional<long long> opt_integer(const char* key) const;
    std::vector<std::string> str_list(const char* key) const;  // missing -> empty
    std::vector<long long> int_list(const char* key) const;    // missing -> empty
    const json& array(const char* key) const;                  // missing -> empty array
    std::string child_path(const char* key) const;
    std::string child_path(const char* key, std::size_t index) const;

    // Rejects keys outside `allowed`.
    void only(std::initializer_list<const char*> allowed) const;

private:
    const json& obj_;
    std::string path_;
};

[[noreturn]] void schema_error(const std::string& path, const std::string& what);

// "CWE-89", "cwe-089", "89" or 89 -> 89
std::optional<int> parse_cwe_id(const json& v);
std::optional<int> parse_cwe_id(std::string_view s);

}  // namespace scr

namespace scr {

// CWE numbers referenced by a tag or free text, matching /cwe[-/]?(\d+)/i
// (e.g. "external/cwe/cwe-089", "CWE-89: SQL Injection"). Order of first
// appearance, no duplicates.
std::vector<int> cwe_ids_in_text(std::string_view text);

std::string to_lower(std::string_view s);

}  // namespace scr
