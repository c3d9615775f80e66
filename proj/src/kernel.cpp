#include "mbp/kernel.hpp"

#include <sstream>
#include <stdexcept>

namespace mbp {

bool is_ordered(const Support& s) {
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].t <= s[i - 1].t) return false;
    return true;
}

void require_ordered(const Support& s) {
    if (!is_ordered(s)) throw std::invalid_argument("support must have strictly increasing times");
}

std::string to_string(const Support& s) {
    std::ostringstream os;
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << '(' << s[i].t << ';' << s[i].k + 1 << ')';
    return os.str();
}

}  // namespace mbp
