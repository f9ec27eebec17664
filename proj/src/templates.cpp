#include "taskinduct/templates.hpp"

#include "taskinduct/util.hpp"

namespace taskinduct::templates {

namespace {

struct SlotName {
    const char* name;
    const std::string* (*get)(const SlotValues&);
};

const std::string* get_task_information(const SlotValues& s) { return &s.task_information; }
const std::string* get_answer_format(const SlotValues& s) { return &s.answer_format; }
const std::string* get_question(const SlotValues& s) {
    return s.question ? &*s.question : nullptr;
}
const std::string* get_examples(const SlotValues& s) {
    return s.examples_block ? &*s.examples_block : nullptr;
}

// Positional slot layout per template, in marker order.
std::vector<SlotName> slot_layout(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::StrategyDesign:
            return {{"task_information", get_task_information},
                    {"answer_format", get_answer_format},
                    {"question", get_question}};
        case TemplateKind::InductBaseline:
        case TemplateKind::StrategyInduction:
            return {{"task_information", get_task_information},
                    {"answer_format", get_answer_format},
                    {"examples_block", get_examples}};
        case TemplateKind::InferenceZCoT:
        case TemplateKind::InferenceSCoT:
        case TemplateKind::InferenceInduced:
            return {{"task_information", get_task_information},
                    {"answer_format", get_answer_format},
                    {"question", get_question}};
    }
    return {};
}

// A slot marker is a literal "{}" or "{ }". Brace pairs with any other
// content are ordinary template text and pass through untouched.
size_t find_marker(const std::string& text, size_t from, size_t& marker_len) {
    while (true) {
        size_t pos = text.find('{', from);
        if (pos == std::string::npos) return std::string::npos;
        if (text.compare(pos, 2, "{}") == 0) {
            marker_len = 2;
            return pos;
        }
        if (text.compare(pos, 3, "{ }") == 0) {
            marker_len = 3;
            return pos;
        }
        from = pos + 1;
    }
}

}  // namespace

std::string_view to_string(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::StrategyDesign: return "strategy_design";
        case TemplateKind::InductBaseline: return "induct_baseline";
        case TemplateKind::StrategyInduction: return "strategy_induction";
        case TemplateKind::InferenceZCoT: return "inference_zcot";
        case TemplateKind::InferenceSCoT: return "inference_scot";
        case TemplateKind::InferenceInduced: return "inference_induced";
    }
    return "unknown";
}

std::string_view template_file_name(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::StrategyDesign: return "strategy_design.txt";
        case TemplateKind::InductBaseline: return "induct_baseline.txt";
        case TemplateKind::StrategyInduction: return "strategy_induction.txt";
        case TemplateKind::InferenceZCoT: return "inference_zcot.txt";
        case TemplateKind::InferenceSCoT: return "inference_scot.txt";
        case TemplateKind::InferenceInduced: return "inference_induced.txt";
    }
    return "";
}

TemplateStore TemplateStore::load(const std::filesystem::path& dir) {
    TemplateStore store;
    for (TemplateKind kind : kAllTemplateKinds) {
        auto path = dir / template_file_name(kind);
        if (!std::filesystem::exists(path)) {
            throw ConfigError("template fixture not found: " + path.string());
        }
        std::string text = util::read_file(path);
        // Fixtures are LF-normalized; strip any CR that crept in.
        std::erase(text, '\r');
        store.texts_[size_t(kind)] = std::move(text);
    }
    return store;
}

const std::string& TemplateStore::text(TemplateKind kind) const {
    return texts_[size_t(kind)];
}

PromptText TemplateStore::render(TemplateKind kind, const SlotValues& slots) const {
    const std::string& tpl = texts_[size_t(kind)];
    auto layout = slot_layout(kind);

    PromptText out;
    out.text.reserve(tpl.size() + 256);

    size_t cursor = 0;
    for (const SlotName& slot : layout) {
        const std::string* value = slot.get(slots);
        if (value == nullptr) throw MissingSlot(slot.name);
        size_t marker_len = 0;
        size_t pos = find_marker(tpl, cursor, marker_len);
        if (pos == std::string::npos) {
            throw ConfigError(std::string("template ") + std::string(to_string(kind)) +
                              " has fewer slot markers than its layout");
        }
        out.text.append(tpl, cursor, pos - cursor);
        out.text.append(*value);
        out.slots_filled.emplace_back(slot.name);
        cursor = pos + marker_len;
    }
    out.text.append(tpl, cursor, tpl.size() - cursor);

    // Slot values may legitimately contain braces; only markers surviving
    // in the template body past the filled slots are an error.
    size_t leftover_len = 0;
    if (find_marker(tpl, cursor, leftover_len) != std::string::npos) {
        throw UnfilledSlot(std::string("unfilled slot marker remains in ") +
                           std::string(to_string(kind)));
    }
    return out;
}

std::string serialize_pairs(const std::vector<StrategyPair>& pairs) {
    if (pairs.empty()) throw EmptyPairs();
    std::string out;
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (i > 0) out += "\n";
        out += "Question " + std::to_string(i + 1) + ":\n";
        out += pairs[i].question;
        out += "\nStrategy " + std::to_string(i + 1) + ":\n";
        out += pairs[i].strategy;
        out += "\n";
    }
    return out;
}

std::string serialize_questions(const std::vector<std::string>& questions) {
    if (questions.empty()) throw EmptyPairs();
    std::string out;
    for (size_t i = 0; i < questions.size(); ++i) {
        if (i > 0) out += "\n";
        out += "Question " + std::to_string(i + 1) + ":\n";
        out += questions[i];
        out += "\n";
    }
    return out;
}

}  // namespace taskinduct::templates
