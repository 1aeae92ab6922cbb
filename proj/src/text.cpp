#include "ctxaudit/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace ctxaudit::text {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::string substitute(std::string_view tmpl, std::string_view placeholder,
                       std::string_view value) {
    std::string out;
    out.reserve(tmpl.size() + value.size());
    std::size_t pos = 0;
    for (;;) {
        const std::size_t hit = tmpl.find(placeholder, pos);
        if (hit == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            return out;
        }
        out.append(tmpl.substr(pos, hit - pos));
        out.append(value);
        pos = hit + placeholder.size();
    }
}

bool shares_substring(std::string_view a, std::string_view b, std::size_t min_len) {
    if (min_len == 0) return true;
    if (a.size() < min_len || b.size() < min_len) return false;
    // Hash every window of `a`, probe with windows of `b`. Collisions are
    // confirmed by direct comparison.
    std::unordered_set<std::uint64_t> windows;
    auto window_hash = [](std::string_view w) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : w) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    };
    for (std::size_t i = 0; i + min_len <= a.size(); ++i)
        windows.insert(window_hash(a.substr(i, min_len)));
    for (std::size_t i = 0; i + min_len <= b.size(); ++i) {
        const auto w = b.substr(i, min_len);
        if (windows.count(window_hash(w)) && a.find(w) != std::string_view::npos)
            return true;
    }
    return false;
}

}  // namespace ctxaudit::text
