#include "scr/json_util.hpp"

#include "scr/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

namespace scr {

json parse_json_document(std::string_view bytes, std::string_view what) {
    if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, std::string(what) + ": invalid JSON: " + e.what(), e.byte);
    }
}

std::string canonical_dump(const json& j) {
    return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void schema_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::SchemaError, path + ": " + what);
}

FieldReader::FieldReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) schema_error(path_, "expected an object");
}

bool FieldReader::has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

std::string FieldReader::child_path(const char* key) const { return path_ + "." + key; }

std::string FieldReader::child_path(const char* key, std::size_t index) const {
    return path_ + "." + key + "[" + std::to_string(index) + "]";
}

std::string FieldReader::str(const char* key) const {
    if (!has(key)) schema_error(child_path(key), "required field missing");
    const auto& v = obj_.at(key);
    if (!v.is_string()) schema_error(child_path(key), "expected a string");
    return v.get<std::string>();
}

std::optional<std::string> FieldReader::opt_str(const char* key) const {
    if (!has(key)) return std::nullopt;
    return str(key);
}

long long FieldReader::integer(const char* key) const {
    if (!has(key)) schema_error(child_path(key), "required field missing");
    const auto& v = obj_.at(key);
    if (!v.is_number_integer()) schema_error(child_path(key), "expected an integer");
    return v.get<long long>();
}

std::optional<long long> FieldReader::opt_integer(const char* key) const {
    if (!has(key)) return std::nullopt;
    return integer(key);
}

std::vector<std::string> FieldReader::str_list(const char* key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const auto& v = obj_.at(key);
    if (!v.is_array()) schema_error(child_path(key), "expected an array of strings");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) schema_error(child_path(key, i), "expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

std::vector<long long> FieldReader::int_list(const char* key) const {
    std::vector<long long> out;
    if (!has(key)) return out;
    const auto& v = obj_.at(key);
    if (!v.is_array()) schema_error(child_path(key), "expected an array of integers");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer()) schema_error(child_path(key, i), "expected an integer");
        out.push_back(v[i].get<long long>());
    }
    return out;
}

const json& FieldReader::array(const char* key) const {
    static const json empty = json::array();
    if (!has(key)) return empty;
    const auto& v = obj_.at(key);
    if (!v.is_array()) schema_error(child_path(key), "expected an array");
    return v;
}

void FieldReader::only(std::initializer_list<const char*> allowed) const {
    for (const auto& [k, _] : obj_.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) schema_error(path_ + "." + k, "unknown field");
    }
}

std::optional<int> parse_cwe_id(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (s.size() >= 4 && (s[0] == 'C' || s[0] == 'c') && (s[1] == 'W' || s[1] == 'w') && (s[2] == 'E' || s[2] == 'e')) {
        s.remove_prefix(3);
        if (!s.empty() && (s.front() == '-' || s.front() == '_' || s.front() == ' ')) s.remove_prefix(1);
    }
    std::size_t n = 0;
    while (n < s.size() && s[n] >= '0' && s[n] <= '9') ++n;
    if (n == 0) return std::nullopt;
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + n, v);
    if (ec != std::errc() || v <= 0) return std::nullopt;
    return v;
}

std::optional<int> parse_cwe_id(const json& v) {
    if (v.is_number_integer()) {
        auto n = v.get<long long>();
        if (n <= 0 || n > 1'000'000) return std::nullopt;
        return static_cast<int>(n);
    }
    if (v.is_string()) return parse_cwe_id(std::string_view(v.get_ref<const std::string&>()));
    return std::nullopt;
}

}  // namespace scr

namespace scr {

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<int> cwe_ids_in_text(std::string_view text) {
    std::vector<int> out;
    std::string lower = to_lower(text);
    std::size_t pos = 0;
    while ((pos = lower.find("cwe", pos)) != std::string::npos) {
        std::size_t p = pos + 3;
        if (p < lower.size() && (lower[p] == '-' || lower[p] == '/')) ++p;
        std::size_t q = p;
        while (q < lower.size() && std::isdigit(static_cast<unsigned char>(lower[q]))) ++q;
        if (q > p && q - p <= 7) {
            int v = 0;
            std::from_chars(lower.data() + p, lower.data() + q, v);
            if (v > 0 && std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
        }
        pos += 3;
    }
    return out;
}

}  // namespace scr
