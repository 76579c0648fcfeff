#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace gazeseg::detail {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

template <typename T>
std::optional<T> parse_number(std::string_view s)
{
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return value;
}

inline std::string_view trim(std::string_view s)
{
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r')
            ++j;
        if (j > i)
            out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

// Strips a trailing `#` comment and surrounding whitespace.
inline std::string_view strip_comment(std::string_view line)
{
    if (auto h = line.find('#'); h != std::string_view::npos)
        line = line.substr(0, h);
    return trim(line);
}

struct KeyValueLine {
    int line_no;
    std::string key;
    std::string value;
};

// `key=value` lines; blank lines and `#` comments are skipped. Lines without
// '=' are reported with an empty key so callers can reject them.
inline std::vector<KeyValueLine> read_key_values(std::istream& in)
{
    std::vector<KeyValueLine> out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        auto body = strip_comment(line);
        if (body.empty())
            continue;
        auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            out.push_back({no, "", std::string(body)});
            continue;
        }
        out.push_back({no, std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1)))});
    }
    return out;
}

} // namespace gazeseg::detail
