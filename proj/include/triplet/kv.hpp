#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace triplet::kv {

// Structured text used across the repo for configs, state files and reports:
//
//   key = value            # comment
//   key.subkey = 3.5
//   widths = [1, 2, inf]
//   mixture = [{weight = 0.5, state = {sigma = [inf, 1, 1]}}]
//
// Values: number | inf | true/false | "string" | [list] | {table}.
// A pair may span lines as long as brackets stay balanced.

struct Value;
using List = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct Value {
    std::variant<double, bool, std::string, List, Table> v;

    Value() : v(0.0) {}
    Value(double d) : v(d) {}
    Value(bool b) : v(b) {}
    Value(std::string s) : v(std::move(s)) {}
    Value(List l) : v(std::move(l)) {}
    Value(Table t) : v(std::move(t)) {}

    bool is_number() const { return std::holds_alternative<double>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_list() const { return std::holds_alternative<List>(v); }
    bool is_table() const { return std::holds_alternative<Table>(v); }

    double number() const {
        if (!is_number()) throw std::runtime_error("kv: expected a number");
        return std::get<double>(v);
    }
    bool boolean() const {
        if (!is_bool()) throw std::runtime_error("kv: expected a boolean");
        return std::get<bool>(v);
    }
    const std::string& string() const {
        if (!is_string()) throw std::runtime_error("kv: expected a string");
        return std::get<std::string>(v);
    }
    const List& list() const {
        if (!is_list()) throw std::runtime_error("kv: expected a list");
        return std::get<List>(v);
    }
    const Table& table() const {
        if (!is_table()) throw std::runtime_error("kv: expected a table");
        return std::get<Table>(v);
    }
};

namespace detail {

struct Parser {
    std::string_view s;
    std::size_t pos = 0;
    int line = 1;

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::runtime_error("kv parse error at line " + std::to_string(line) + ": " + msg);
    }

    bool at_end() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }

    char take() {
        const char c = s[pos++];
        if (c == '\n') ++line;
        return c;
    }

    void skip_ws_and_comments(bool cross_lines) {
        while (!at_end()) {
            const char c = peek();
            if (c == '#') {
                while (!at_end() && peek() != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++pos;
            } else if (c == '\n' && cross_lines) {
                take();
            } else {
                break;
            }
        }
    }

    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
    }

    std::string parse_key() {
        skip_ws_and_comments(true);
        std::size_t start = pos;
        while (!at_end() && ident_char(peek())) ++pos;
        if (pos == start) fail("expected a key");
        return std::string(s.substr(start, pos - start));
    }

    void expect(char c) {
        skip_ws_and_comments(true);
        if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
        take();
    }

    Value parse_value() {
        skip_ws_and_comments(true);
        if (at_end()) fail("expected a value");
        const char c = peek();
        if (c == '[') return parse_list();
        if (c == '{') return parse_table();
        if (c == '"') return parse_string();
        return parse_scalar();
    }

    Value parse_list() {
        take();  // '['
        List out;
        skip_ws_and_comments(true);
        if (!at_end() && peek() == ']') {
            take();
            return Value(std::move(out));
        }
        while (true) {
            out.push_back(parse_value());
            skip_ws_and_comments(true);
            if (at_end()) fail("unterminated list");
            const char d = take();
            if (d == ']') break;
            if (d != ',') fail("expected ',' or ']' in list");
            skip_ws_and_comments(true);
            if (!at_end() && peek() == ']') {  // trailing comma
                take();
                break;
            }
        }
        return Value(std::move(out));
    }

    Value parse_table() {
        take();  // '{'
        Table out;
        skip_ws_and_comments(true);
        if (!at_end() && peek() == '}') {
            take();
            return Value(std::move(out));
        }
        while (true) {
            const std::string key = parse_key();
            expect('=');
            out[key] = parse_value();
            skip_ws_and_comments(true);
            if (at_end()) fail("unterminated table");
            const char d = take();
            if (d == '}') break;
            if (d != ',') fail("expected ',' or '}' in table");
            skip_ws_and_comments(true);
            if (!at_end() && peek() == '}') {
                take();
                break;
            }
        }
        return Value(std::move(out));
    }

    Value parse_string() {
        take();  // '"'
        std::string out;
        while (!at_end() && peek() != '"') {
            char c = take();
            if (c == '\\' && !at_end()) {
                const char e = take();
                if (e == 'n') c = '\n';
                else if (e == 't') c = '\t';
                else c = e;
            }
            out.push_back(c);
        }
        if (at_end()) fail("unterminated string");
        take();
        return Value(std::move(out));
    }

    Value parse_scalar() {
        std::size_t start = pos;
        while (!at_end() && (ident_char(peek()) || peek() == '+')) ++pos;
        std::string tok(s.substr(start, pos - start));
        if (tok.empty()) fail("expected a value");
        if (tok == "true") return Value(true);
        if (tok == "false") return Value(false);
        if (tok == "inf" || tok == "+inf") return Value(std::numeric_limits<double>::infinity());
        char* end = nullptr;
        const double d = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) fail("cannot parse value '" + tok + "'");
        return Value(d);
    }
};

}  // namespace detail

/// Parse a whole document into a flat table of top-level keys.
inline Table parse(std::string_view text) {
    detail::Parser p{text};
    Table out;
    while (true) {
        p.skip_ws_and_comments(true);
        if (p.at_end()) break;
        const std::string key = p.parse_key();
        p.expect('=');
        out[key] = p.parse_value();
    }
    return out;
}

inline Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("kv: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

inline std::string format_number(double d) {
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", d);
    return buf;
}

inline void write_value(std::ostream& os, const Value& v) {
    if (v.is_number()) {
        os << format_number(v.number());
    } else if (v.is_bool()) {
        os << (v.boolean() ? "true" : "false");
    } else if (v.is_string()) {
        os << '"' << v.string() << '"';
    } else if (v.is_list()) {
        os << '[';
        bool first = true;
        for (const auto& e : v.list()) {
            if (!first) os << ", ";
            first = false;
            write_value(os, e);
        }
        os << ']';
    } else {
        os << '{';
        bool first = true;
        for (const auto& [k, e] : v.table()) {
            if (!first) os << ", ";
            first = false;
            os << k << " = ";
            write_value(os, e);
        }
        os << '}';
    }
}

/// Ordered key=value emitter for reports and summaries.
class Writer {
  public:
    void put(const std::string& key, const Value& v) {
        std::ostringstream os;
        os << key << " = ";
        write_value(os, v);
        lines_.push_back(os.str());
    }
    void put(const std::string& key, double d) { put(key, Value(d)); }
    void put(const std::string& key, bool b) { put(key, Value(b)); }
    void put(const std::string& key, const std::string& s) { put(key, Value(s)); }
    void put(const std::string& key, const char* s) { put(key, Value(std::string(s))); }
    void comment(const std::string& text) { lines_.push_back("# " + text); }
    void blank() { lines_.push_back(""); }

    std::string str() const {
        std::string out;
        for (const auto& l : lines_) {
            out += l;
            out += '\n';
        }
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("kv: cannot write " + path);
        out << str();
    }

  private:
    std::vector<std::string> lines_;
};

}  // namespace triplet::kv
