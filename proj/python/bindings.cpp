#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <mutex>

#include "taskinduct/dataset.hpp"
#include "taskinduct/evaluation.hpp"
#include "taskinduct/tag_parser.hpp"
#include "taskinduct/templates.hpp"

namespace py = pybind11;

using namespace taskinduct;

namespace {

const templates::TemplateStore& store_for(const std::string& dir) {
    static std::mutex mutex;
    static std::map<std::string, templates::TemplateStore> stores;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = stores.find(dir);
    if (it == stores.end()) {
        it = stores.emplace(dir, templates::TemplateStore::load(dir)).first;
    }
    return it->second;
}

templates::TemplateKind kind_from_name(const std::string& name) {
    for (templates::TemplateKind kind : templates::kAllTemplateKinds) {
        if (templates::to_string(kind) == name) return kind;
    }
    throw ConfigError("unknown template kind: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "question-only task instruction induction: templates, tag parsing, "
              "shift cipher, and accuracy aggregation";

    m.def(
        "render",
        [](const std::string& kind, const std::string& templates_dir,
           const std::string& task_information, const std::string& answer_format,
           std::optional<std::string> question, std::optional<std::string> examples) {
            templates::SlotValues slots;
            slots.task_information = task_information;
            slots.answer_format = answer_format;
            slots.question = std::move(question);
            slots.examples_block = std::move(examples);
            return store_for(templates_dir).render(kind_from_name(kind), slots).text;
        },
        py::arg("kind"), py::arg("templates_dir"), py::arg("task_information"),
        py::arg("answer_format"), py::arg("question") = std::nullopt,
        py::arg("examples") = std::nullopt,
        "Render one of the six prompt templates with the given slot values.");

    m.def(
        "serialize_pairs",
        [](const std::vector<std::pair<std::string, std::string>>& pairs) {
            std::vector<templates::StrategyPair> converted;
            converted.reserve(pairs.size());
            for (const auto& [question, strategy] : pairs) {
                converted.push_back({question, strategy, ""});
            }
            return templates::serialize_pairs(converted);
        },
        py::arg("pairs"), "Serialize (question, strategy) pairs into an examples block.");

    m.def(
        "extract",
        [](const std::string& raw, const std::string& tag) {
            return tags::extract(raw, tag);
        },
        py::arg("raw"), py::arg("tag"),
        "Content of the last well-formed <tag>...</tag> pair, or None.");

    m.def(
        "parse_response",
        [](const std::string& raw) {
            tags::TaggedResponse parsed = tags::parse_response(raw);
            py::dict out;
            out["strategy"] = parsed.strategy;
            out["task_instruction"] = parsed.task_instruction;
            out["deduction"] = parsed.deduction;
            out["final_answer"] = parsed.final_answer;
            return out;
        },
        py::arg("raw"));

    m.def("rot_encode", &data::rot_encode, py::arg("word"), py::arg("k"));
    m.def("rot_decode", &data::rot_decode, py::arg("word"), py::arg("k"));

    m.def(
        "sample_ids",
        [](const std::vector<std::string>& ids, int n, uint64_t seed) {
            data::TaskSpec task;
            task.task = "sample";
            task.short_phrase = "sample";
            task.answer_format = "any";
            for (const std::string& id : ids) task.items.push_back({id, id, std::nullopt});
            std::vector<std::string> out;
            for (const data::QAItem& item : data::sample_items(task, n, seed)) {
                out.push_back(item.id);
            }
            return out;
        },
        py::arg("ids"), py::arg("n"), py::arg("seed"),
        "Seeded without-replacement sample of the given ids.");

    m.def(
        "match_answer",
        [](std::optional<std::string> extracted, const std::string& gold,
           const std::string& policy, double epsilon) {
            auto parsed = eval::match_policy_from_string(policy);
            if (!parsed) throw ConfigError("unknown match policy: " + policy);
            return eval::match_answer(extracted, gold, *parsed, epsilon);
        },
        py::arg("extracted"), py::arg("gold"), py::arg("policy") = "exact",
        py::arg("epsilon") = 1e-6);

    m.def(
        "win_tie_lose",
        [](const std::vector<std::tuple<std::string, std::string, std::string>>& ours,
           const std::vector<std::tuple<std::string, std::string, std::string>>& baseline) {
            auto convert = [](const auto& rows) {
                std::vector<eval::SettingResult> out;
                for (const auto& [model, dataset, percent] : rows) {
                    out.push_back(eval::SettingResult::from_percent_text(model, dataset,
                                                                         "", percent));
                }
                return out;
            };
            eval::WTLRecord record = eval::win_tie_lose(convert(ours), convert(baseline));
            return py::make_tuple(record.wins, record.ties, record.losses);
        },
        py::arg("ours"), py::arg("baseline"),
        "Win-tie-lose counts over (model, dataset, accuracy%) rows aligned pairwise.");

    m.def(
        "replay_table1",
        [](const std::string& fixture_csv) {
            eval::Table1Replay replay =
                eval::replay_table1(eval::load_results_csv(fixture_csv));
            py::dict out;
            out["vs_zcot"] = replay.vs_zcot.render();
            out["vs_induct"] = replay.vs_induct.render();
            out["vs_scot"] = replay.vs_scot.render();
            out["small_models_vs_induct"] = replay.small_models_vs_induct.render();
            return out;
        },
        py::arg("fixture_csv"));

    py::register_exception<Error>(m, "TaskinductError");
}
