#ifndef BREAKPOINT_TOMLMINI_HPP
#define BREAKPOINT_TOMLMINI_HPP

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Small TOML subset used for experiment configs: [section] headers,
// key = value lines with integers, floats, booleans, quoted strings and
// flat arrays of those, and # comments. Keys are stored as "section.key".
namespace bp::toml {

struct Value {
    enum class Kind { Integer, Float, Boolean, String, Array };
    Kind kind = Kind::Integer;
    long long i = 0;
    double f = 0.0;
    bool b = false;
    std::string s;
    std::vector<Value> items;

    long long as_int() const {
        if (kind == Kind::Integer) return i;
        throw std::runtime_error("config: expected an integer");
    }
    double as_double() const {
        if (kind == Kind::Float) return f;
        if (kind == Kind::Integer) return static_cast<double>(i);
        throw std::runtime_error("config: expected a number");
    }
    bool as_bool() const {
        if (kind == Kind::Boolean) return b;
        throw std::runtime_error("config: expected true or false");
    }
    const std::string& as_string() const {
        if (kind == Kind::String) return s;
        throw std::runtime_error("config: expected a string");
    }
    std::vector<double> as_double_array() const {
        if (kind != Kind::Array) return {as_double()};
        std::vector<double> out;
        out.reserve(items.size());
        for (const Value& v : items) out.push_back(v.as_double());
        return out;
    }
};

class Table {
  public:
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const Value& at(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::runtime_error("config: missing key '" + key + "'");
        return it->second;
    }
    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? at(key).as_int() : fallback;
    }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? at(key).as_double() : fallback;
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? at(key).as_string() : fallback;
    }
    void set(const std::string& key, Value v) { values_[key] = std::move(v); }
    const std::map<std::string, Value>& entries() const { return values_; }

  private:
    std::map<std::string, Value> values_;
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Removes a trailing comment, respecting quoted strings.
inline std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

inline Value parse_scalar(const std::string& tok, int line) {
    std::string t = strip(tok);
    if (t.empty()) throw std::runtime_error("config line " + std::to_string(line) + ": empty value");
    Value v;
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"')
            throw std::runtime_error("config line " + std::to_string(line) + ": unterminated string");
        v.kind = Value::Kind::String;
        std::string body = t.substr(1, t.size() - 2);
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (body[i] == '\\' && i + 1 < body.size()) {
                char c = body[++i];
                v.s += (c == 'n') ? '\n' : (c == 't') ? '\t' : c;
            } else {
                v.s += body[i];
            }
        }
        return v;
    }
    if (t == "true" || t == "false") {
        v.kind = Value::Kind::Boolean;
        v.b = (t == "true");
        return v;
    }
    bool floaty = t.find_first_of(".eE") != std::string::npos &&
                  t.find_first_not_of("+-0123456789.eE") == std::string::npos;
    std::istringstream is(t);
    if (floaty) {
        v.kind = Value::Kind::Float;
        is >> v.f;
    } else {
        v.kind = Value::Kind::Integer;
        is >> v.i;
    }
    if (is.fail() || !(is >> std::ws).eof())
        throw std::runtime_error("config line " + std::to_string(line) + ": bad value '" + t + "'");
    return v;
}

inline Value parse_value(const std::string& tok, int line) {
    std::string t = strip(tok);
    if (!t.empty() && t.front() == '[') {
        if (t.back() != ']')
            throw std::runtime_error("config line " + std::to_string(line) + ": unterminated array");
        Value v;
        v.kind = Value::Kind::Array;
        std::string body = t.substr(1, t.size() - 2);
        std::string item;
        bool in_str = false;
        for (char c : body) {
            if (c == '"') in_str = !in_str;
            if (c == ',' && !in_str) {
                v.items.push_back(parse_scalar(item, line));
                item.clear();
            } else {
                item += c;
            }
        }
        if (!strip(item).empty()) v.items.push_back(parse_scalar(item, line));
        return v;
    }
    return parse_scalar(t, line);
}

}  // namespace detail

inline Table parse(const std::string& text) {
    Table tbl;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = detail::strip(detail::strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::runtime_error("config line " + std::to_string(line) + ": bad section header");
            section = detail::strip(s.substr(1, s.size() - 2));
            if (section.empty())
                throw std::runtime_error("config line " + std::to_string(line) + ": empty section name");
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line) + ": expected key = value");
        std::string key = detail::strip(s.substr(0, eq));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(line) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        tbl.set(key, detail::parse_value(s.substr(eq + 1), line));
    }
    return tbl;
}

inline Table parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

}  // namespace bp::toml

#endif
