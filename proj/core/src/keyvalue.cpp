#include "ewpf/keyvalue.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ewpf/error.hpp"

namespace ewpf {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void KeyValue::set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it != index_.end()) {
        entries_[it->second].second = value;
    } else {
        index_[key] = entries_.size();
        entries_.emplace_back(key, value);
    }
}

void KeyValue::set_int(const std::string& key, int64_t value) {
    set(key, std::to_string(value));
}

void KeyValue::set_double(const std::string& key, double value) {
    set(key, format_double(value));
}

void KeyValue::set_bool(const std::string& key, bool value) {
    set(key, value ? "true" : "false");
}

bool KeyValue::has(const std::string& key) const { return index_.count(key) > 0; }

const std::string& KeyValue::get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw DataError("missing key: " + key);
    return entries_[it->second].second;
}

std::string KeyValue::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

int64_t KeyValue::get_int(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw DataError("key '" + key + "' is not an integer: " + v);
    }
}

int64_t KeyValue::get_int_or(const std::string& key, int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double KeyValue::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw DataError("key '" + key + "' is not a number: " + v);
    }
}

double KeyValue::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool KeyValue::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DataError("key '" + key + "' is not a boolean: " + v);
}

std::vector<std::string> KeyValue::get_list_or(const std::string& key,
                                               const std::vector<std::string>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<std::string> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string KeyValue::to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

KeyValue KeyValue::parse(const std::string& text) {
    KeyValue kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw DataError("line " + std::to_string(lineno) + ": expected 'key = value', got: " + t);
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw DataError("line " + std::to_string(lineno) + ": empty key");
        }
        kv.set(key, value);
    }
    return kv;
}

KeyValue KeyValue::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void KeyValue::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << to_string();
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace ewpf
