#include "taskinduct/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "taskinduct/util.hpp"

namespace taskinduct::eval {

namespace {

// First whitespace-delimited token with parentheses/brackets and trailing
// punctuation stripped; the option letter convention.
std::optional<char> option_letter(const std::string& s) {
    std::string token;
    std::istringstream in(s);
    if (!(in >> token)) return std::nullopt;
    std::string stripped;
    for (char c : token) {
        if (c == '(' || c == ')' || c == '[' || c == ']' || c == '.' || c == ':') continue;
        stripped.push_back(c);
    }
    if (stripped.size() != 1 || !std::isalpha(static_cast<unsigned char>(stripped[0]))) {
        return std::nullopt;
    }
    return char(std::tolower(static_cast<unsigned char>(stripped[0])));
}

std::optional<double> parse_number(const std::string& s) {
    std::string t = util::trim(s);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    double value = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) return std::nullopt;
    return value;
}

}  // namespace

std::string_view to_string(MatchPolicy policy) {
    switch (policy) {
        case MatchPolicy::OptionLetter: return "option_letter";
        case MatchPolicy::ExactNormalized: return "exact";
        case MatchPolicy::NumericTolerant: return "numeric";
    }
    return "exact";
}

std::optional<MatchPolicy> match_policy_from_string(std::string_view name) {
    std::string s = util::lower(name);
    if (s == "option_letter" || s == "option-letter" || s == "option") {
        return MatchPolicy::OptionLetter;
    }
    if (s == "exact" || s == "exact_normalized") return MatchPolicy::ExactNormalized;
    if (s == "numeric" || s == "numeric_tolerant") return MatchPolicy::NumericTolerant;
    return std::nullopt;
}

MatchPolicy resolve_policy(const data::TaskSpec& task) {
    if (task.match_policy) {
        auto policy = match_policy_from_string(*task.match_policy);
        if (!policy) {
            throw ConfigError("unknown match_policy '" + *task.match_policy + "' in task " +
                              task.key());
        }
        return *policy;
    }
    if (util::contains(util::lower(task.answer_format), "option")) {
        return MatchPolicy::OptionLetter;
    }
    return MatchPolicy::ExactNormalized;
}

bool match_answer(const std::optional<std::string>& extracted, const std::string& gold,
                  MatchPolicy policy, double epsilon) {
    if (!extracted) return false;
    switch (policy) {
        case MatchPolicy::OptionLetter: {
            auto a = option_letter(*extracted);
            auto b = option_letter(gold);
            return a && b && *a == *b;
        }
        case MatchPolicy::ExactNormalized:
            return util::lower(util::collapse_ws(*extracted)) ==
                   util::lower(util::collapse_ws(gold));
        case MatchPolicy::NumericTolerant: {
            auto a = parse_number(*extracted);
            auto b = parse_number(gold);
            return a && b && std::abs(*a - *b) <= epsilon;
        }
    }
    return false;
}

int64_t percent_to_hundredths(const std::string& percent) {
    std::string t = util::trim(percent);
    if (!t.empty() && t.back() == '%') t.pop_back();
    bool negative = !t.empty() && t[0] == '-';
    if (negative) t.erase(0, 1);
    size_t dot = t.find('.');
    std::string whole = dot == std::string::npos ? t : t.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : t.substr(dot + 1);
    if (whole.empty()) whole = "0";
    while (frac.size() < 2) frac.push_back('0');
    if (frac.size() > 2) frac.resize(2);  // published precision is 2 decimals
    for (char c : whole + frac) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw ConfigError("bad percentage value: '" + percent + "'");
        }
    }
    int64_t value = std::stoll(whole) * 100 + std::stoll(frac);
    return negative ? -value : value;
}

std::string hundredths_to_percent(int64_t value) {
    char buf[32];
    int64_t abs_value = value < 0 ? -value : value;
    std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", value < 0 ? "-" : "",
                  static_cast<long long>(abs_value / 100),
                  static_cast<long long>(abs_value % 100));
    return buf;
}

SettingResult SettingResult::from_counts(std::string model, std::string dataset,
                                         std::string method, long correct, long total) {
    if (total <= 0) throw ConfigError("setting result needs a positive total");
    SettingResult out;
    out.model = std::move(model);
    out.dataset = std::move(dataset);
    out.method = std::move(method);
    out.correct = correct;
    out.total = total;
    // round half up at 2-decimal percent precision, exactly
    out.percent_hundredths = (int64_t(correct) * 10000 + total / 2) / total;
    return out;
}

SettingResult SettingResult::from_percent_text(std::string model, std::string dataset,
                                               std::string method,
                                               const std::string& percent) {
    SettingResult out;
    out.model = std::move(model);
    out.dataset = std::move(dataset);
    out.method = std::move(method);
    out.percent_hundredths = percent_to_hundredths(percent);
    return out;
}

std::string SettingResult::render_percent() const {
    return hundredths_to_percent(percent_hundredths);
}

SettingResult accuracy(std::vector<pipeline::InferenceRecord>& records,
                       const data::TaskSpec& task, const std::string& model,
                       const std::string& dataset, const std::string& method) {
    std::map<std::string, const data::QAItem*> by_id;
    for (const data::QAItem& item : task.items) by_id[item.id] = &item;

    MatchPolicy policy = resolve_policy(task);
    double epsilon = task.numeric_epsilon.value_or(1e-6);

    long correct = 0;
    for (pipeline::InferenceRecord& record : records) {
        auto it = by_id.find(record.item_id);
        if (it == by_id.end() || !it->second->gold) throw MissingGold(record.item_id);
        bool ok = match_answer(record.final_answer, *it->second->gold, policy, epsilon);
        record.correct = ok;
        if (ok) ++correct;
    }
    return SettingResult::from_counts(model, dataset, method, correct,
                                      long(records.size()));
}

std::string WTLRecord::render() const {
    return std::to_string(wins) + "-" + std::to_string(ties) + "-" + std::to_string(losses);
}

WTLRecord win_tie_lose(const std::vector<SettingResult>& ours,
                       const std::vector<SettingResult>& baseline) {
    if (ours.size() != baseline.size()) {
        throw MisalignedSettings("setting lists differ in length: " +
                                 std::to_string(ours.size()) + " vs " +
                                 std::to_string(baseline.size()));
    }
    WTLRecord record;
    for (size_t i = 0; i < ours.size(); ++i) {
        if (ours[i].model != baseline[i].model || ours[i].dataset != baseline[i].dataset) {
            throw MisalignedSettings("settings misaligned at index " + std::to_string(i) +
                                     ": (" + ours[i].model + ", " + ours[i].dataset +
                                     ") vs (" + baseline[i].model + ", " +
                                     baseline[i].dataset + ")");
        }
        if (ours[i].percent_hundredths > baseline[i].percent_hundredths) {
            ++record.wins;
        } else if (ours[i].percent_hundredths < baseline[i].percent_hundredths) {
            ++record.losses;
        } else {
            ++record.ties;
        }
    }
    return record;
}

std::string DeltaMatrix::to_csv() const {
    std::ostringstream csv;
    csv << "model";
    for (const auto& subtask : subtasks) csv << ',' << subtask;
    csv << '\n';
    for (size_t r = 0; r < models.size(); ++r) {
        csv << models[r];
        for (size_t c = 0; c < subtasks.size(); ++c) {
            csv << ',' << hundredths_to_percent(cells[r][c]);
        }
        csv << '\n';
    }
    return csv.str();
}

DeltaMatrix delta_matrix(const std::vector<SettingResult>& results,
                         const std::string& method_a, const std::string& method_b) {
    std::map<std::pair<std::string, std::string>, int64_t> a_cells, b_cells;
    std::vector<std::string> models, subtasks;
    std::set<std::string> seen_models, seen_subtasks;
    for (const SettingResult& r : results) {
        if (seen_models.insert(r.model).second) models.push_back(r.model);
        if (seen_subtasks.insert(r.dataset).second) subtasks.push_back(r.dataset);
        if (r.method == method_a) a_cells[{r.model, r.dataset}] = r.percent_hundredths;
        if (r.method == method_b) b_cells[{r.model, r.dataset}] = r.percent_hundredths;
    }
    DeltaMatrix out;
    out.models = std::move(models);
    out.subtasks = std::move(subtasks);
    out.cells.assign(out.models.size(), std::vector<int64_t>(out.subtasks.size(), 0));
    for (size_t r = 0; r < out.models.size(); ++r) {
        for (size_t c = 0; c < out.subtasks.size(); ++c) {
            auto key = std::make_pair(out.models[r], out.subtasks[c]);
            auto a = a_cells.find(key);
            auto b = b_cells.find(key);
            if (a == a_cells.end() || b == b_cells.end()) {
                throw MissingCell("no " + (a == a_cells.end() ? method_a : method_b) +
                                  " result for (" + key.first + ", " + key.second + ")");
            }
            out.cells[r][c] = a->second - b->second;
        }
    }
    return out;
}

std::string CrossModelGrid::to_csv() const {
    std::ostringstream csv;
    csv << "inducing_model";
    for (const auto& model : inference_models) csv << ',' << model;
    csv << '\n';
    for (size_t r = 0; r < inducing_models.size(); ++r) {
        csv << inducing_models[r];
        for (size_t c = 0; c < inference_models.size(); ++c) {
            csv << ',' << hundredths_to_percent(cells[r][c]);
        }
        csv << '\n';
    }
    return csv.str();
}

CrossModelGrid cross_model_grid(const std::vector<CrossModelCell>& induced,
                                const std::vector<SettingResult>& baselines) {
    std::map<std::string, int64_t> baseline_by_model;
    for (const SettingResult& b : baselines) baseline_by_model[b.model] = b.percent_hundredths;

    CrossModelGrid out;
    std::set<std::string> seen_rows, seen_cols;
    for (const CrossModelCell& cell : induced) {
        if (seen_rows.insert(cell.inducing_model).second) {
            out.inducing_models.push_back(cell.inducing_model);
        }
        if (seen_cols.insert(cell.inference_model).second) {
            out.inference_models.push_back(cell.inference_model);
        }
    }
    out.cells.assign(out.inducing_models.size(),
                     std::vector<int64_t>(out.inference_models.size(), 0));
    std::map<std::pair<std::string, std::string>, int64_t> values;
    for (const CrossModelCell& cell : induced) {
        values[{cell.inducing_model, cell.inference_model}] = cell.percent_hundredths;
    }
    for (size_t r = 0; r < out.inducing_models.size(); ++r) {
        for (size_t c = 0; c < out.inference_models.size(); ++c) {
            const std::string& inference = out.inference_models[c];
            auto baseline = baseline_by_model.find(inference);
            if (baseline == baseline_by_model.end()) {
                throw MissingBaseline("no baseline result for inference model " + inference);
            }
            auto value = values.find({out.inducing_models[r], inference});
            if (value == values.end()) {
                throw MissingCell("no induced result for (" + out.inducing_models[r] +
                                  " -> " + inference + ")");
            }
            out.cells[r][c] = value->second - baseline->second;
        }
    }
    return out;
}

std::vector<SettingResult> load_results_csv(const std::filesystem::path& path) {
    std::string content = util::read_file(path);
    std::vector<SettingResult> out;
    bool header = true;
    for (const std::string& line : util::split_lines(content)) {
        std::string trimmed = util::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(trimmed);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(util::trim(field));
        if (fields.size() != 4) {
            throw ConfigError("results CSV row needs 4 fields: " + trimmed);
        }
        out.push_back(
            SettingResult::from_percent_text(fields[0], fields[1], fields[2], fields[3]));
    }
    return out;
}

namespace {

std::vector<SettingResult> select_method(const std::vector<SettingResult>& fixture,
                                         const std::string& method,
                                         bool small_models_only) {
    std::vector<SettingResult> out;
    for (const SettingResult& r : fixture) {
        if (r.method != method) continue;
        if (small_models_only) {
            bool is_small = std::any_of(kSmallModels.begin(), kSmallModels.end(),
                                        [&](std::string_view m) { return m == r.model; });
            if (!is_small) continue;
        }
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const SettingResult& a, const SettingResult& b) {
        return std::tie(a.model, a.dataset) < std::tie(b.model, b.dataset);
    });
    return out;
}

}  // namespace

Table1Replay replay_table1(const std::vector<SettingResult>& fixture) {
    auto ours = select_method(fixture, "strategy-induct", false);
    Table1Replay replay;
    replay.vs_zcot = win_tie_lose(ours, select_method(fixture, "zcot", false));
    replay.vs_induct = win_tie_lose(ours, select_method(fixture, "induct", false));
    replay.vs_scot = win_tie_lose(ours, select_method(fixture, "scot", false));
    replay.small_models_vs_induct =
        win_tie_lose(select_method(fixture, "strategy-induct", true),
                     select_method(fixture, "induct", true));
    return replay;
}

}  // namespace taskinduct::eval
