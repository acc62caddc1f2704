#include "va/consistency.hpp"
#include "va/error.hpp"
#include "va/parallel.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>

namespace va {

namespace {

SymptomValue parse_value(const std::string &text, SymptomValue fallback, const std::string &where) {
    if (text.empty()) {
        return fallback;
    }
    if (text == "Y" || text == "y" || text == "Yes" || text == "yes") {
        return SymptomValue::Yes;
    }
    if (text == "N" || text == "n" || text == "No" || text == "no") {
        return SymptomValue::No;
    }
    throw ConfigError(where + ": value '" + text + "' is not Y or N");
}

bool parse_flag(const std::string &text) {
    return text == "1" || text == "Y" || text == "y" || text == "TRUE" || text == "true" ||
           text == "yes";
}

} // namespace

SymptomHierarchy::SymptomHierarchy(std::vector<HierarchyRule> rules,
                                   std::vector<std::string> neonate_only,
                                   std::map<std::string, SymptomValue> substantive)
    : rules_(std::move(rules)), neonate_only_(std::move(neonate_only)),
      substantive_(std::move(substantive)) {
    for (const auto &r : rules_) {
        if (r.symptom == r.higher) {
            throw ConfigError("symptom '" + r.symptom + "' is listed as its own ancestor");
        }
    }
    depth();
}

SymptomHierarchy SymptomHierarchy::from_table(const Table &table) {
    auto c_sym = table.require_column("symptom");
    auto c_rel = table.require_column("relation");
    auto c_high = table.require_column("higher_symptom");
    auto c_trig = table.require_column("trigger_value");
    auto c_impl = table.require_column("implied_value");
    auto c_neo = table.require_column("neonate_only");
    auto c_sub = table.column("substantive");

    std::vector<HierarchyRule> rules;
    std::vector<std::string> neonate;
    std::set<std::string> neonate_seen;
    std::map<std::string, SymptomValue> substantive;
    for (std::size_t r = 0; r < table.height(); ++r) {
        const auto &row = table.rows[r];
        const std::string where = "hierarchy row " + std::to_string(r + 1);
        const auto &sym = row[c_sym];
        if (sym.empty()) {
            throw ConfigError(where + ": empty symptom name");
        }
        if (parse_flag(row[c_neo]) && neonate_seen.insert(sym).second) {
            neonate.push_back(sym);
        }
        if (c_sub && !row[*c_sub].empty()) {
            substantive[sym] = parse_value(row[*c_sub], SymptomValue::Yes, where);
        }
        const auto &rel = row[c_rel];
        if (rel.empty() || rel == "none") {
            continue;
        }
        HierarchyRule rule;
        rule.symptom = sym;
        rule.higher = row[c_high];
        if (rule.higher.empty()) {
            throw ConfigError(where + ": relation '" + rel + "' needs a higher_symptom");
        }
        if (rel == "notask") {
            rule.relation = Relation::NotAsk;
        } else if (rel == "anc") {
            rule.relation = Relation::Ancestor;
        } else {
            throw ConfigError(where + ": unknown relation '" + rel + "' (expected notask or anc)");
        }
        rule.trigger = parse_value(row[c_trig], SymptomValue::Yes, where);
        rule.implied = parse_value(row[c_impl], SymptomValue::Yes, where);
        rules.push_back(std::move(rule));
    }
    return SymptomHierarchy(std::move(rules), std::move(neonate), std::move(substantive));
}

SymptomHierarchy SymptomHierarchy::from_csv(const std::string &path) {
    return from_table(read_csv_file(path));
}

SymptomValue SymptomHierarchy::substantive(const std::string &symptom) const {
    auto it = substantive_.find(symptom);
    return it == substantive_.end() ? SymptomValue::Yes : it->second;
}

std::size_t SymptomHierarchy::depth() const {
    // Influence edges: notask runs higher -> symptom, anc runs symptom -> higher.
    std::unordered_map<std::string, std::vector<std::string>> edges;
    std::set<std::string> nodes;
    for (const auto &r : rules_) {
        if (r.relation == Relation::NotAsk) {
            edges[r.higher].push_back(r.symptom);
        } else {
            edges[r.symptom].push_back(r.higher);
        }
        nodes.insert(r.symptom);
        nodes.insert(r.higher);
    }
    std::unordered_map<std::string, std::size_t> memo;
    std::set<std::string> on_stack;
    std::function<std::size_t(const std::string &)> longest = [&](const std::string &n) {
        if (auto it = memo.find(n); it != memo.end()) {
            return it->second;
        }
        if (!on_stack.insert(n).second) {
            throw ConfigError("symptom hierarchy has a cycle through '" + n + "'");
        }
        std::size_t best = 0;
        if (auto it = edges.find(n); it != edges.end()) {
            for (const auto &next : it->second) {
                best = std::max(best, 1 + longest(next));
            }
        }
        on_stack.erase(n);
        memo[n] = best;
        return best;
    };
    std::size_t depth = 0;
    for (const auto &n : nodes) {
        depth = std::max(depth, longest(n));
    }
    return depth;
}

void SymptomHierarchy::validate(const std::vector<std::string> &symptoms) const {
    std::set<std::string> known(symptoms.begin(), symptoms.end());
    std::set<std::string> unknown;
    for (const auto &r : rules_) {
        for (const auto *name : {&r.symptom, &r.higher}) {
            if (!known.count(*name)) {
                unknown.insert(*name);
            }
        }
    }
    for (const auto &n : neonate_only_) {
        if (!known.count(n)) {
            unknown.insert(n);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto &u : unknown) {
            list += (list.empty() ? "" : ", ") + u;
        }
        throw ConfigError("hierarchy references symptoms not in the data: " + list);
    }
    auto d = depth();
    if (d > 2) {
        throw ConfigError("hierarchy depth " + std::to_string(d) +
                          " exceeds the two levels handled by the data check");
    }
}

CheckVariant parse_check_variant(std::string_view name) {
    if (name == "interva4") {
        return CheckVariant::InterVA4;
    }
    if (name == "interva5") {
        return CheckVariant::InterVA5;
    }
    if (name == "insilico") {
        return CheckVariant::InSilico;
    }
    throw ConfigError("unknown check policy '" + std::string(name) +
                      "' (expected interva4, interva5 or insilico)");
}

CheckResult data_check(const SymptomMatrix &data, const SymptomHierarchy &hierarchy,
                       const CheckPolicy &policy, int passes) {
    hierarchy.validate(data.symptoms());
    const std::size_t S = data.cols();

    struct Link {
        std::size_t col;
        SymptomValue value;
    };
    std::vector<std::vector<Link>> notask(S);
    std::vector<std::vector<Link>> anc(S);
    std::vector<SymptomValue> substantive(S, SymptomValue::Yes);
    for (const auto &r : hierarchy.rules()) {
        auto s = *data.symptom_index(r.symptom);
        auto h = *data.symptom_index(r.higher);
        if (r.relation == Relation::NotAsk) {
            notask[s].push_back({h, r.trigger});
        } else {
            anc[s].push_back({h, r.implied});
        }
    }
    if (policy.variant != CheckVariant::InterVA4) {
        for (std::size_t j = 0; j < S; ++j) {
            substantive[j] = hierarchy.substantive(data.symptoms()[j]);
        }
    }
    std::vector<std::size_t> neonate_cols;
    std::optional<std::size_t> neonate_flag;
    if (policy.variant != CheckVariant::InterVA4) {
        neonate_flag = data.symptom_index(policy.neonate_symptom);
        for (const auto &n : hierarchy.neonate_only()) {
            neonate_cols.push_back(*data.symptom_index(n));
        }
    }
    const SymptomValue imputed = policy.imputed();

    std::vector<SymptomValue> out = data.values();
    parallel_for(data.rows(), [&](std::size_t i) {
        SymptomValue *w = out.data() + i * S;
        for (int pass = 0; pass < passes; ++pass) {
            // The indicator itself may be rewritten by a rule, so re-read it each pass.
            if (neonate_flag && w[*neonate_flag] != SymptomValue::Yes) {
                for (auto c : neonate_cols) {
                    w[c] = SymptomValue::Missing;
                }
            }
            for (std::size_t j = 0; j < S; ++j) {
                if (!notask[j].empty()) {
                    bool triggered = std::any_of(notask[j].begin(), notask[j].end(),
                                                 [&](const Link &l) { return w[l.col] == l.value; });
                    if (triggered) {
                        switch (policy.variant) {
                        case CheckVariant::InterVA4:
                        case CheckVariant::InSilico:
                            w[j] = imputed;
                            break;
                        case CheckVariant::InterVA5:
                            if (w[j] == substantive[j]) {
                                w[j] = imputed;
                            }
                            break;
                        }
                    }
                }
                if (!anc[j].empty() && w[j] == substantive[j]) {
                    for (const auto &l : anc[j]) {
                        w[l.col] = l.value;
                    }
                }
            }
        }
    });

    CheckResult result;
    const auto &in = data.values();
    for (std::size_t idx = 0; idx < in.size(); ++idx) {
        if (in[idx] != out[idx]) {
            result.changes.push_back({idx / S, idx % S, in[idx], out[idx]});
        }
    }
    result.data = data.with_values(std::move(out));
    return result;
}

namespace {

const char *value_word(SymptomValue v) {
    switch (v) {
    case SymptomValue::Yes:
        return "Yes";
    case SymptomValue::No:
        return "No";
    case SymptomValue::Missing:
        return "Missing";
    }
    return "Missing";
}

} // namespace

Table change_log_table(const SymptomMatrix &data, const std::vector<CellChange> &changes) {
    Table t;
    t.header = {"ID", "symptom", "before", "after"};
    for (const auto &c : changes) {
        t.rows.push_back(
            {data.ids()[c.row], data.symptoms()[c.col], value_word(c.before), value_word(c.after)});
    }
    return t;
}

// ---------------------------------------------------------------------------

const std::vector<std::string> &default_demographic_symptoms() {
    static const std::vector<std::string> names = {"elder",  "midage", "adult",
                                                   "child",  "under5", "infant",
                                                   "neonate", "male",  "female"};
    return names;
}

ImpossibleCauses remove_impossible_causes(const SymptomMatrix &data, const CondProbMatrix &probs,
                                          const std::vector<std::string> &demographic,
                                          bool strict) {
    struct Pair {
        std::size_t data_col;
        std::size_t prob_row;
    };
    std::vector<Pair> demo;
    for (const auto &name : demographic) {
        auto dc = data.symptom_index(name);
        auto pr = probs.symptom_index(name);
        if (!dc || !pr) {
            if (strict) {
                throw ConfigError("demographic symptom '" + name +
                                  "' is missing from the data or probability table");
            }
            continue;
        }
        demo.push_back({*dc, *pr});
    }
    const std::size_t N = data.rows();
    const std::size_t C = probs.num_causes();
    std::vector<std::uint8_t> possible(N * C, 1);
    for (std::size_t i = 0; i < N; ++i) {
        for (const auto &d : demo) {
            if (data(i, d.data_col) != SymptomValue::Yes) {
                continue;
            }
            for (std::size_t k = 0; k < C; ++k) {
                if (probs(d.prob_row, k) == 0.0) {
                    possible[i * C + k] = 0;
                }
            }
        }
    }

    ImpossibleCauses out;
    for (std::size_t k = 0; k < C; ++k) {
        bool any = N == 0;
        for (std::size_t i = 0; i < N && !any; ++i) {
            any = possible[i * C + k] != 0;
        }
        if (any) {
            out.kept.push_back(k);
            out.kept_names.push_back(probs.causes()[k]);
        } else {
            out.removed.push_back(probs.causes()[k]);
        }
    }
    if (out.kept.empty()) {
        throw InconsistencyError("every cause is physically impossible for every record");
    }
    const std::size_t K = out.kept.size();
    out.mask.causes = K;
    out.mask.possible.assign(N * K, 1);
    for (std::size_t i = 0; i < N; ++i) {
        bool any = false;
        for (std::size_t kk = 0; kk < K; ++kk) {
            auto p = possible[i * C + out.kept[kk]];
            out.mask.possible[i * K + kk] = p;
            any = any || p != 0;
        }
        if (!any) {
            std::fill_n(out.mask.possible.begin() + static_cast<std::ptrdiff_t>(i * K), K, 1);
            out.reset_records.push_back(i);
        }
    }
    return out;
}

ImpossibilityMask expand_mask(const ImpossibleCauses &impossible, std::size_t records,
                              std::size_t causes) {
    ImpossibilityMask mask;
    mask.causes = causes;
    mask.possible.assign(records * causes, 0);
    const std::size_t K = impossible.kept.size();
    for (std::size_t i = 0; i < records; ++i) {
        for (std::size_t kk = 0; kk < K; ++kk) {
            mask.possible[i * causes + impossible.kept[kk]] = impossible.mask.possible[i * K + kk];
        }
    }
    return mask;
}

} // namespace va
