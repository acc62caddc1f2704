#include "va/ingest.hpp"
#include "va/error.hpp"
#include "va/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <map>
#include <unordered_map>

namespace va {

namespace {

SymptomMatrix parse_who(const Table &table, std::size_t expected, bool who2016, TokenPolicy policy,
                        ParseStats *stats) {
    if (table.width() != expected) {
        throw FormatError("expected " + std::to_string(expected) + " columns (ID + " +
                          std::to_string(expected - 1) + " indicators), found " +
                          std::to_string(table.width()));
    }
    std::vector<std::string> symptoms(table.header.begin() + 1, table.header.end());
    std::vector<std::string> ids;
    std::vector<SymptomValue> values;
    ids.reserve(table.height());
    values.reserve(table.height() * symptoms.size());
    std::size_t unrecognized = 0;
    for (const auto &row : table.rows) {
        ids.push_back(row[0]);
        for (std::size_t j = 1; j < row.size(); ++j) {
            const auto &cell = row[j];
            std::optional<SymptomValue> v;
            if (who2016) {
                if (cell == "Y" || cell == "y") {
                    v = SymptomValue::Yes;
                } else if (cell == "N" || cell == "n") {
                    v = SymptomValue::No;
                } else if (cell == "." || cell == "-" || cell.empty()) {
                    v = SymptomValue::Missing;
                }
            } else {
                v = from_token(cell);
            }
            if (!v) {
                if (policy == TokenPolicy::Strict) {
                    throw FormatError("record '" + row[0] + "', column '" + table.header[j] +
                                      "': unrecognized token '" + cell + "'");
                }
                ++unrecognized;
                v = SymptomValue::Missing;
            }
            values.push_back(*v);
        }
    }
    if (stats) {
        stats->unrecognized = unrecognized;
    }
    return {std::move(ids), std::move(symptoms), std::move(values)};
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char &c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::optional<double> parse_number(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    if (text.empty()) {
        return std::nullopt;
    }
    if (text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

} // namespace

SymptomMatrix parse_who2012(const Table &table, TokenPolicy policy, ParseStats *stats) {
    return parse_who(table, kWho2012Columns, false, policy, stats);
}

SymptomMatrix parse_who2016(const Table &table, TokenPolicy policy, ParseStats *stats) {
    return parse_who(table, kWho2016Columns, true, policy, stats);
}

SymptomMatrix parse_who2012(std::string_view csv, TokenPolicy policy, ParseStats *stats) {
    return parse_who2012(read_csv(csv), policy, stats);
}

SymptomMatrix parse_who2016(std::string_view csv, TokenPolicy policy, ParseStats *stats) {
    return parse_who2016(read_csv(csv), policy, stats);
}

void LabelMap::validate() const {
    if (yes.empty() || no.empty() || missing.empty()) {
        throw ConfigError("yes, no and missing label sets must all be nonempty");
    }
    auto check = [](const std::set<std::string> &a, const std::set<std::string> &b,
                    const char *na, const char *nb) {
        for (const auto &x : a) {
            if (b.count(x)) {
                throw ConfigError("label '" + x + "' appears in both the " + na + " and " + nb +
                                  " sets");
            }
        }
    };
    check(yes, no, "yes", "no");
    check(yes, missing, "yes", "missing");
    check(no, missing, "no", "missing");
}

ConvertedData convert_custom(const Table &table, const LabelMap &labels, TokenPolicy policy,
                             std::string_view cause_column) {
    labels.validate();
    if (table.width() == 0) {
        throw FormatError("custom table has no ID column");
    }
    std::optional<std::size_t> cause_col;
    if (!cause_column.empty()) {
        cause_col = table.column(cause_column);
        if (cause_col == std::size_t{0}) {
            cause_col.reset();
        }
    }
    std::vector<std::size_t> symptom_cols;
    std::vector<std::string> symptoms;
    for (std::size_t j = 1; j < table.width(); ++j) {
        if (cause_col && j == *cause_col) {
            continue;
        }
        symptom_cols.push_back(j);
        symptoms.push_back(table.header[j]);
    }
    ConvertedData out;
    std::vector<std::string> ids;
    std::vector<SymptomValue> values;
    std::set<std::string> offending;
    std::vector<std::string> causes;
    for (const auto &row : table.rows) {
        ids.push_back(row[0]);
        if (cause_col) {
            causes.push_back(row[*cause_col]);
        }
        for (auto j : symptom_cols) {
            const auto &cell = row[j];
            if (labels.yes.count(cell)) {
                values.push_back(SymptomValue::Yes);
            } else if (labels.no.count(cell)) {
                values.push_back(SymptomValue::No);
            } else if (labels.missing.count(cell)) {
                values.push_back(SymptomValue::Missing);
            } else {
                offending.insert(cell);
                ++out.stats.unrecognized;
                values.push_back(SymptomValue::Missing);
            }
        }
    }
    if (!offending.empty() && policy == TokenPolicy::Strict) {
        std::string list;
        for (const auto &t : offending) {
            list += (list.empty() ? "'" : ", '") + t + "'";
        }
        throw FormatError("tokens outside the yes/no/missing label sets: " + list);
    }
    out.data = SymptomMatrix(std::move(ids), std::move(symptoms), std::move(values));
    if (cause_col) {
        out.causes = std::move(causes);
    }
    return out;
}

// ---------------------------------------------------------------------------
// PHMRC

PhmrcModule parse_phmrc_module(std::string_view name) {
    auto n = lower(name);
    if (n == "adult") {
        return PhmrcModule::Adult;
    }
    if (n == "child") {
        return PhmrcModule::Child;
    }
    if (n == "neonate") {
        return PhmrcModule::Neonate;
    }
    throw ConfigError("unknown PHMRC module '" + std::string(name) +
                      "' (expected adult, child or neonate)");
}

std::string_view to_string(PhmrcModule module) noexcept {
    switch (module) {
    case PhmrcModule::Adult:
        return "adult";
    case PhmrcModule::Child:
        return "child";
    case PhmrcModule::Neonate:
        return "neonate";
    }
    return "adult";
}

Comparator parse_comparator(std::string_view text) {
    if (text == "yes") {
        return Comparator::Categorical;
    }
    if (text == "==") {
        return Comparator::Equal;
    }
    if (text == ">") {
        return Comparator::Greater;
    }
    if (text == ">=") {
        return Comparator::GreaterEqual;
    }
    if (text == "<") {
        return Comparator::Less;
    }
    if (text == "<=") {
        return Comparator::LessEqual;
    }
    throw ConfigError("unknown comparator '" + std::string(text) +
                      "' (expected yes, ==, >, >=, <, <=)");
}

std::string_view to_string(Comparator comparator) noexcept {
    switch (comparator) {
    case Comparator::Categorical:
        return "yes";
    case Comparator::Equal:
        return "==";
    case Comparator::Greater:
        return ">";
    case Comparator::GreaterEqual:
        return ">=";
    case Comparator::Less:
        return "<";
    case Comparator::LessEqual:
        return "<=";
    }
    return "yes";
}

namespace {

bool is_numeric(Comparator c) {
    return c != Comparator::Categorical && c != Comparator::Equal;
}

} // namespace

PhmrcCutoffTable PhmrcCutoffTable::from_table(const Table &table) {
    auto sc = table.require_column("symptom");
    auto src = table.require_column("source_column");
    auto cmp = table.require_column("comparator");
    auto cut = table.require_column("cutoff");
    PhmrcCutoffTable out;
    for (const auto &row : table.rows) {
        PhmrcRule rule{row[sc], row[src], parse_comparator(row[cmp]), row[cut]};
        if (rule.symptom.empty() || rule.source_column.empty()) {
            throw ConfigError("cutoff table rows need a symptom and a source column");
        }
        if (is_numeric(rule.comparator) && !parse_number(rule.cutoff)) {
            throw ConfigError("symptom '" + rule.symptom + "': cutoff '" + rule.cutoff +
                              "' is not numeric");
        }
        out.rules.push_back(std::move(rule));
    }
    return out;
}

PhmrcCutoffTable PhmrcCutoffTable::from_csv(const std::string &path) {
    // Lines starting with '#' document the table and are skipped.
    std::string text = read_file(path);
    std::string body;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto end = nl == std::string::npos ? text.size() : nl + 1;
        if (text[pos] != '#') {
            body.append(text, pos, end - pos);
        }
        pos = end;
    }
    return from_table(read_csv(std::string_view(body)));
}

Table PhmrcCutoffTable::to_table() const {
    Table t;
    t.header = {"symptom", "source_column", "comparator", "cutoff"};
    for (const auto &r : rules) {
        t.rows.push_back({r.symptom, r.source_column, std::string(to_string(r.comparator)), r.cutoff});
    }
    return t;
}

std::vector<std::string> PhmrcCutoffTable::symptoms() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto &r : rules) {
        if (seen.insert(r.symptom).second) {
            out.push_back(r.symptom);
        }
    }
    return out;
}

bool is_phmrc_missing_token(std::string_view token) noexcept {
    if (token.empty() || token == "." || token == "NA") {
        return true;
    }
    std::string t(token);
    for (char &c : t) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return t == "don't know" || t == "refused to answer" || t == "dk" || t == "not known";
}

namespace {

// Outcome of one rule on one cell.
SymptomValue apply_rule(const PhmrcRule &rule, double numeric_cutoff, std::string_view cell) {
    switch (rule.comparator) {
    case Comparator::Categorical: {
        auto v = lower(cell);
        if (v == "yes") {
            return SymptomValue::Yes;
        }
        if (v == "no") {
            return SymptomValue::No;
        }
        return SymptomValue::Missing;
    }
    case Comparator::Equal:
        if (is_phmrc_missing_token(cell)) {
            return SymptomValue::Missing;
        }
        return cell == rule.cutoff ? SymptomValue::Yes : SymptomValue::No;
    default:
        break;
    }
    auto x = parse_number(cell);
    if (!x) {
        return SymptomValue::Missing;
    }
    bool hit = false;
    switch (rule.comparator) {
    case Comparator::Greater:
        hit = *x > numeric_cutoff;
        break;
    case Comparator::GreaterEqual:
        hit = *x >= numeric_cutoff;
        break;
    case Comparator::Less:
        hit = *x < numeric_cutoff;
        break;
    case Comparator::LessEqual:
        hit = *x <= numeric_cutoff;
        break;
    default:
        break;
    }
    return hit ? SymptomValue::Yes : SymptomValue::No;
}

} // namespace

PhmrcConversion convert_phmrc(const Table &raw, PhmrcModule module, const PhmrcCutoffTable &rules,
                              CutoffMode mode, std::string_view cause_column) {
    (void)module;
    if (raw.width() == 0) {
        throw SchemaError("raw PHMRC table has no columns");
    }
    if (rules.rules.empty()) {
        throw ConfigError("PHMRC cutoff table is empty");
    }
    auto cause_idx = raw.column(cause_column);
    if (!cause_idx) {
        throw SchemaError("cause column '" + std::string(cause_column) +
                          "' not found in PHMRC table");
    }
    std::vector<std::string> causes;
    causes.reserve(raw.height());
    for (const auto &row : raw.rows) {
        causes.push_back(row[*cause_idx]);
    }
    if (mode == CutoffMode::Adapt) {
        for (const auto &c : causes) {
            if (c.empty() || c == "NA") {
                throw ValidationError("adaptive cutoffs need a cause label on every record");
            }
        }
    }

    std::vector<std::size_t> source;
    for (const auto &r : rules.rules) {
        auto idx = raw.column(r.source_column);
        if (!idx) {
            throw SchemaError("PHMRC column '" + r.source_column + "' (symptom '" + r.symptom +
                              "') not found; columns must match the PHMRC schema");
        }
        source.push_back(*idx);
    }

    PhmrcConversion out;
    out.applied.mode = mode;
    out.applied.rules = rules.rules;
    std::vector<double> cutoffs(rules.rules.size(), 0.0);
    for (std::size_t r = 0; r < rules.rules.size(); ++r) {
        const auto &rule = rules.rules[r];
        if (!is_numeric(rule.comparator)) {
            continue;
        }
        cutoffs[r] = *parse_number(rule.cutoff);
        if (mode != CutoffMode::Adapt) {
            continue;
        }
        std::map<std::string, std::pair<double, std::size_t>> per_cause;
        for (std::size_t i = 0; i < raw.height(); ++i) {
            if (auto x = parse_number(raw.rows[i][source[r]])) {
                auto &acc = per_cause[causes[i]];
                acc.first += *x;
                ++acc.second;
            }
        }
        if (per_cause.empty()) {
            continue;
        }
        std::vector<double> means;
        for (const auto &[cause, acc] : per_cause) {
            means.push_back(acc.first / static_cast<double>(acc.second));
        }
        cutoffs[r] = median(std::move(means));
        out.applied.rules[r].cutoff = format_double(cutoffs[r]);
    }

    auto symptoms = rules.symptoms();
    std::unordered_map<std::string, std::size_t> symptom_pos;
    for (std::size_t j = 0; j < symptoms.size(); ++j) {
        symptom_pos.emplace(symptoms[j], j);
    }
    std::vector<std::size_t> rule_target(rules.rules.size());
    for (std::size_t r = 0; r < rules.rules.size(); ++r) {
        rule_target[r] = symptom_pos.at(rules.rules[r].symptom);
    }

    const std::size_t S = symptoms.size();
    std::vector<std::string> ids;
    std::vector<SymptomValue> values(raw.height() * S, SymptomValue::Missing);
    for (std::size_t i = 0; i < raw.height(); ++i) {
        ids.push_back(std::to_string(i + 1));
        const auto &row = raw.rows[i];
        auto *cells = values.data() + i * S;
        for (std::size_t r = 0; r < rules.rules.size(); ++r) {
            auto v = apply_rule(rules.rules[r], cutoffs[r], row[source[r]]);
            auto &cell = cells[rule_target[r]];
            if (v == SymptomValue::Yes || (v == SymptomValue::No && cell == SymptomValue::Missing)) {
                cell = v;
            }
        }
    }
    out.data = SymptomMatrix(std::move(ids), std::move(symptoms), std::move(values));
    out.causes = std::move(causes);
    out.tally = out.data.tally();
    return out;
}

std::string phmrc_url(PhmrcModule module) {
    std::string name;
    switch (module) {
    case PhmrcModule::Adult:
        name = "ADULT";
        break;
    case PhmrcModule::Child:
        name = "CHILD";
        break;
    case PhmrcModule::Neonate:
        name = "NEONATE";
        break;
    }
    return "https://ghdx.healthdata.org/sites/default/files/record-attached-files/"
           "IHME_PHMRC_VA_DATA_" +
           name + "_Y2013M09D11_0.csv";
}

} // namespace va
