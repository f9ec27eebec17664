#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskinduct/errors.hpp"

namespace taskinduct::templates {

/// One (strategy, question) pair produced by the strategy stage.
/// item_id is provenance only; serialization uses question and strategy.
struct StrategyPair {
    std::string question;
    std::string strategy;
    std::string item_id;
};

enum class TemplateKind {
    StrategyDesign,
    InductBaseline,
    StrategyInduction,
    InferenceZCoT,
    InferenceSCoT,
    InferenceInduced,
};

inline constexpr std::array<TemplateKind, 6> kAllTemplateKinds = {
    TemplateKind::StrategyDesign,   TemplateKind::InductBaseline,
    TemplateKind::StrategyInduction, TemplateKind::InferenceZCoT,
    TemplateKind::InferenceSCoT,    TemplateKind::InferenceInduced,
};

std::string_view to_string(TemplateKind kind);

/// File name of the fixture holding a kind's template text.
std::string_view template_file_name(TemplateKind kind);

/// Values for the named slots a template may require.
///
/// task_information doubles as the instruction slot of the inference
/// templates: instance-level methods put the Short Phrase there,
/// task-level methods the induced instruction.
struct SlotValues {
    std::string task_information;
    std::string answer_format;
    std::optional<std::string> question;
    std::optional<std::string> examples_block;
};

struct PromptText {
    std::string text;
    std::vector<std::string> slots_filled;
};

/// Loads the six template fixtures and renders prompts from them.
/// Rendering replaces positional `{}` / `{ }` markers in order; every
/// other byte of the fixture passes through unchanged.
class TemplateStore {
public:
    static TemplateStore load(const std::filesystem::path& dir);

    const std::string& text(TemplateKind kind) const;

    PromptText render(TemplateKind kind, const SlotValues& slots) const;

private:
    std::array<std::string, 6> texts_{};
};

/// Serializes strategy-question pairs into the `<examples>` block, one
/// labeled Question/Strategy section per pair, input order preserved.
std::string serialize_pairs(const std::vector<StrategyPair>& pairs);

/// Question-only variant used by the instruction-induction baseline.
std::string serialize_questions(const std::vector<std::string>& questions);

}  // namespace taskinduct::templates
