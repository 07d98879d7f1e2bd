#ifndef EVIDENTIAL_TEXT_HPP
#define EVIDENTIAL_TEXT_HPP

// Small text helpers shared by the line-oriented file formats.

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace evidential::text {

inline std::string_view trim(std::string_view s)
{
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

/// Drops everything from the first '#'.
inline std::string_view strip_comment(std::string_view s)
{
    const auto hash = s.find('#');
    return hash == std::string_view::npos ? s : s.substr(0, hash);
}

inline std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') {
            ++i;
        }
        if (i > start) {
            out.push_back(s.substr(start, i - start));
        }
    }
    return out;
}

inline std::vector<std::string_view> split_lines(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) {
                out.push_back(s.substr(start));
            }
            break;
        }
        out.push_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

/// Parses a whole token as a real number. `fixed_only` rejects exponent
/// notation, inf and nan.
inline std::optional<double> parse_real(std::string_view token, bool fixed_only = false)
{
    if (token.empty()) {
        return std::nullopt;
    }
    if (token.front() == '+') {
        token.remove_prefix(1);
    }
    double value = 0.0;
    const auto fmt = fixed_only ? std::chars_format::fixed : std::chars_format::general;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value, fmt);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view token)
{
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
        return std::nullopt;
    }
    return value;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_real(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

/// Fixed notation, shortest round-trip digits. Used where exponent
/// notation is not accepted on read-back.
inline std::string format_fixed(double value)
{
    char buf[400];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

} // namespace evidential::text

#endif // EVIDENTIAL_TEXT_HPP
