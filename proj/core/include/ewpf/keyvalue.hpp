#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ewpf {

// Flat "key = value" text format shared by config files, benchmark specs and
// checkpoint headers. Lines starting with '#' and blank lines are skipped.
// Keys keep their insertion order when written back out.
class KeyValue {
public:
    void set(const std::string& key, const std::string& value);
    void set_int(const std::string& key, int64_t value);
    void set_double(const std::string& key, double value);  // round-trip exact (%.17g)
    void set_bool(const std::string& key, bool value);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;  // throws DataError if absent
    std::string get_or(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key) const;
    int64_t get_int_or(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;

    // Comma-separated list value, e.g. "10,20,50".
    std::vector<std::string> get_list_or(const std::string& key,
                                         const std::vector<std::string>& fallback) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string to_string() const;
    static KeyValue parse(const std::string& text);
    static KeyValue load(const std::string& path);
    void save(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, size_t> index_;
};

// Exact decimal rendering of a double (17 significant digits).
std::string format_double(double v);

}  // namespace ewpf
