#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace taskinduct::tags {

/// The four tag names the prompt templates instruct models to emit.
inline constexpr std::array<std::string_view, 4> kKnownTags = {
    "strategy", "task_instruction", "deduction", "final_answer"};

/// Structured view of a raw model response.
struct TaggedResponse {
    std::string raw;
    std::optional<std::string> strategy;
    std::optional<std::string> task_instruction;
    std::optional<std::string> deduction;
    std::optional<std::string> final_answer;
};

/// Content of the last well-formed `<tag>...</tag>` pair in `raw`,
/// whitespace-trimmed. Absent when no well-formed pair exists; matching
/// is exact and case-sensitive.
std::optional<std::string> extract(std::string_view raw, std::string_view tag);

/// Applies extract() for each known tag. Never throws.
TaggedResponse parse_response(std::string_view raw);

}  // namespace taskinduct::tags
