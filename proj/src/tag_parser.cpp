#include "taskinduct/tag_parser.hpp"

#include "taskinduct/util.hpp"

namespace taskinduct::tags {

std::optional<std::string> extract(std::string_view raw, std::string_view tag) {
    std::string open = "<" + std::string(tag) + ">";
    std::string close = "</" + std::string(tag) + ">";

    // Left-to-right scan over non-overlapping pairs; the last one wins.
    std::optional<std::string> last;
    size_t pos = 0;
    while (true) {
        size_t start = raw.find(open, pos);
        if (start == std::string_view::npos) break;
        size_t body = start + open.size();
        size_t end = raw.find(close, body);
        if (end == std::string_view::npos) break;
        last = util::trim(raw.substr(body, end - body));
        pos = end + close.size();
    }
    return last;
}

TaggedResponse parse_response(std::string_view raw) {
    TaggedResponse out;
    out.raw = std::string(raw);
    out.strategy = extract(raw, "strategy");
    out.task_instruction = extract(raw, "task_instruction");
    out.deduction = extract(raw, "deduction");
    out.final_answer = extract(raw, "final_answer");
    return out;
}

}  // namespace taskinduct::tags
