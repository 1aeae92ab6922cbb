#include "ctxaudit/resources.hpp"

#include <cstddef>
#include <fstream>
#include <sstream>
#include <utility>

#include "ctxaudit/error.hpp"

namespace ctxaudit::resources {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kResourceTable[];
extern const std::size_t kResourceCount;
}  // namespace detail

std::string_view builtin(std::string_view name) {
    for (std::size_t i = 0; i < detail::kResourceCount; ++i)
        if (detail::kResourceTable[i].first == name) return detail::kResourceTable[i].second;
    throw InvalidArgumentError("unknown resource: " + std::string(name));
}

namespace {

std::string strip_one_trailing_newline(std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

std::string load(std::string_view name, const std::filesystem::path& override_dir) {
    if (!override_dir.empty()) {
        const auto candidate = override_dir / std::filesystem::path(std::string(name));
        if (std::filesystem::exists(candidate)) {
            std::ifstream in(candidate, std::ios::binary);
            if (!in) throw Error("cannot read resource override: " + candidate.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            return strip_one_trailing_newline(buf.str());
        }
    }
    return strip_one_trailing_newline(std::string(builtin(name)));
}

std::vector<std::string> false_facts(const std::filesystem::path& override_dir) {
    const std::string blob = load("false_facts.txt", override_dir);
    std::vector<std::string> facts;
    std::istringstream in(blob);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) facts.push_back(line);
    }
    return facts;
}

}  // namespace ctxaudit::resources
