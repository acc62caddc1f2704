#include "va/core.hpp"
#include "va/csv.hpp"
#include "va/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace va {

std::string_view to_token(SymptomValue value) noexcept {
    switch (value) {
    case SymptomValue::Yes:
        return "Y";
    case SymptomValue::No:
        return "";
    case SymptomValue::Missing:
        return ".";
    }
    return ".";
}

std::optional<SymptomValue> from_token(std::string_view token) noexcept {
    if (token == "Y") {
        return SymptomValue::Yes;
    }
    if (token.empty()) {
        return SymptomValue::No;
    }
    if (token == ".") {
        return SymptomValue::Missing;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// SymptomMatrix

SymptomMatrix::SymptomMatrix(std::vector<std::string> ids, std::vector<std::string> symptoms,
                             std::vector<SymptomValue> values)
    : ids_(std::move(ids)), symptoms_(std::move(symptoms)), values_(std::move(values)) {
    if (values_.size() != ids_.size() * symptoms_.size()) {
        throw ValidationError("symptom matrix has " + std::to_string(values_.size()) +
                              " cells, expected " + std::to_string(ids_.size()) + " x " +
                              std::to_string(symptoms_.size()));
    }
    symptom_lookup_.reserve(symptoms_.size());
    for (std::size_t j = 0; j < symptoms_.size(); ++j) {
        symptom_lookup_.emplace(symptoms_[j], j);
    }
    id_lookup_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        id_lookup_.emplace(ids_[i], i);
    }
}

std::optional<std::size_t> SymptomMatrix::symptom_index(std::string_view name) const {
    auto it = symptom_lookup_.find(std::string(name));
    if (it == symptom_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> SymptomMatrix::row_index(std::string_view id) const {
    auto it = id_lookup_.find(std::string(id));
    if (it == id_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

SymptomTally SymptomMatrix::tally() const noexcept {
    SymptomTally t;
    for (auto v : values_) {
        switch (v) {
        case SymptomValue::Yes:
            ++t.yes;
            break;
        case SymptomValue::No:
            ++t.no;
            break;
        case SymptomValue::Missing:
            ++t.missing;
            break;
        }
    }
    return t;
}

SymptomMatrix SymptomMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::string> ids;
    std::vector<SymptomValue> values;
    ids.reserve(rows.size());
    values.reserve(rows.size() * cols());
    for (auto r : rows) {
        ids.push_back(ids_.at(r));
        auto src = row(r);
        values.insert(values.end(), src.begin(), src.end());
    }
    return {std::move(ids), symptoms_, std::move(values)};
}

SymptomMatrix SymptomMatrix::select_columns(std::span<const std::size_t> cols) const {
    std::vector<std::string> names;
    names.reserve(cols.size());
    for (auto c : cols) {
        names.push_back(symptoms_.at(c));
    }
    std::vector<SymptomValue> values;
    values.reserve(rows() * cols.size());
    for (std::size_t i = 0; i < rows(); ++i) {
        for (auto c : cols) {
            values.push_back((*this)(i, c));
        }
    }
    return {ids_, std::move(names), std::move(values)};
}

SymptomMatrix SymptomMatrix::with_values(std::vector<SymptomValue> values) const {
    return {ids_, symptoms_, std::move(values)};
}

// ---------------------------------------------------------------------------
// CauseList

CauseList::CauseList(std::vector<std::string> causes, std::optional<std::string> undetermined)
    : causes_(std::move(causes)), undetermined_(std::move(undetermined)) {
    if (causes_.size() < 2) {
        throw ValidationError("a cause list needs at least 2 causes, got " +
                              std::to_string(causes_.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto &c : causes_) {
        if (!seen.insert(c).second) {
            throw ValidationError("duplicate cause name '" + c + "'");
        }
    }
    if (undetermined_ && seen.count(*undetermined_)) {
        throw ValidationError("undetermined label '" + *undetermined_ +
                              "' collides with a substantive cause");
    }
}

std::optional<std::size_t> CauseList::index(std::string_view name) const {
    for (std::size_t k = 0; k < causes_.size(); ++k) {
        if (causes_[k] == name) {
            return k;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// GradeTable

GradeTable::GradeTable(std::vector<Grade> grades) : grades_(std::move(grades)) {
    if (grades_.empty()) {
        throw ConfigError("grade table is empty");
    }
    std::unordered_set<std::string> labels;
    for (std::size_t i = 0; i < grades_.size(); ++i) {
        const auto &g = grades_[i];
        if (!(g.value >= 0.0 && g.value <= 1.0)) {
            throw ConfigError("grade '" + g.label + "' value outside [0,1]");
        }
        if (i > 0 && !(g.value < grades_[i - 1].value)) {
            throw ConfigError("grade values must be strictly decreasing at '" + g.label + "'");
        }
        if (!labels.insert(g.label).second) {
            throw ConfigError("duplicate grade label '" + g.label + "'");
        }
        if (g.reference_share < 0.0) {
            throw ConfigError("negative reference share for grade '" + g.label + "'");
        }
    }
}

GradeTable GradeTable::defaults() {
    // Reference counts: grade frequencies of the InterVA-4 symptom-by-cause
    // table (245 indicators x 60 causes).
    struct Row {
        const char *label;
        double value;
        double count;
    };
    static constexpr Row rows[] = {
        {"I", 1.0, 92},       {"A+", 0.8, 197},    {"A", 0.5, 521},      {"A-", 0.2, 287},
        {"B+", 0.1, 225},     {"B", 0.05, 1472},   {"B-", 0.02, 199},    {"C+", 0.01, 257},
        {"C", 0.005, 2882},   {"C-", 0.002, 449},  {"D+", 0.001, 42},    {"D", 0.0005, 4214},
        {"D-", 0.0001, 101},  {"E", 0.00001, 1262}, {"N", 0.0, 2499},
    };
    double total = 0.0;
    for (const auto &r : rows) {
        total += r.count;
    }
    std::vector<Grade> grades;
    for (const auto &r : rows) {
        grades.push_back({r.label, r.value, r.count / total});
    }
    return GradeTable(std::move(grades));
}

GradeTable GradeTable::from_csv(const std::string &path) {
    Table t = read_csv_file(path);
    auto gcol = t.require_column("grade");
    auto vcol = t.require_column("value");
    auto ccol = t.column("reference_count");
    std::vector<Grade> grades;
    double total = 0.0;
    for (const auto &row : t.rows) {
        Grade g;
        g.label = row[gcol];
        try {
            g.value = std::stod(row[vcol]);
            if (ccol && !row[*ccol].empty()) {
                g.reference_share = std::stod(row[*ccol]);
            }
        } catch (const std::exception &) {
            throw ConfigError("grade table " + path + ": non-numeric entry for '" + g.label + "'");
        }
        total += g.reference_share;
        grades.push_back(std::move(g));
    }
    if (total > 0.0) {
        for (auto &g : grades) {
            g.reference_share /= total;
        }
    }
    return GradeTable(std::move(grades));
}

std::optional<std::size_t> GradeTable::index(std::string_view label) const {
    for (std::size_t i = 0; i < grades_.size(); ++i) {
        if (grades_[i].label == label) {
            return i;
        }
    }
    return std::nullopt;
}

double GradeTable::value(std::string_view label) const {
    if (auto i = index(label)) {
        return grades_[*i].value;
    }
    throw ConfigError("unknown grade label '" + std::string(label) + "'");
}

std::size_t GradeTable::nearest(double p) const {
    std::size_t best = 0;
    double best_dist = std::abs(grades_[0].value - p);
    for (std::size_t i = 1; i < grades_.size(); ++i) {
        double d = std::abs(grades_[i].value - p);
        if (d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// CondProbMatrix

namespace {

void require_unique(const std::vector<std::string> &names, const char *what) {
    std::unordered_set<std::string> seen;
    for (const auto &n : names) {
        if (!seen.insert(n).second) {
            throw ValidationError(std::string("duplicate ") + what + " name '" + n + "'");
        }
    }
}

} // namespace

CondProbMatrix::CondProbMatrix(std::vector<std::string> symptoms, std::vector<std::string> causes,
                               Matrix values, Provenance provenance,
                               std::optional<std::vector<std::string>> grades)
    : symptoms_(std::move(symptoms)), causes_(std::move(causes)), values_(std::move(values)),
      provenance_(provenance), grades_(std::move(grades)) {
    if (static_cast<std::size_t>(values_.rows()) != symptoms_.size() ||
        static_cast<std::size_t>(values_.cols()) != causes_.size()) {
        throw ValidationError("conditional probability matrix is " +
                              std::to_string(values_.rows()) + " x " +
                              std::to_string(values_.cols()) + ", declared " +
                              std::to_string(symptoms_.size()) + " x " +
                              std::to_string(causes_.size()));
    }
    require_unique(symptoms_, "symptom");
    require_unique(causes_, "cause");
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
        for (Eigen::Index k = 0; k < values_.cols(); ++k) {
            double v = values_(i, k);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError("conditional probability for symptom '" +
                                      symptoms_[static_cast<std::size_t>(i)] + "', cause '" +
                                      causes_[static_cast<std::size_t>(k)] +
                                      "' is outside [0,1]");
            }
        }
    }
    if (grades_ && grades_->size() != symptoms_.size() * causes_.size()) {
        throw ValidationError("grade label count does not match matrix dimensions");
    }
}

CondProbMatrix CondProbMatrix::from_grades(std::vector<std::string> symptoms,
                                           std::vector<std::string> causes,
                                           std::vector<std::string> grade_labels,
                                           const GradeTable &table, Provenance provenance) {
    const auto S = symptoms.size();
    const auto C = causes.size();
    if (grade_labels.size() != S * C) {
        throw ValidationError("grade label count does not match matrix dimensions");
    }
    Matrix values(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(C));
    for (std::size_t j = 0; j < S; ++j) {
        for (std::size_t k = 0; k < C; ++k) {
            values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                table.value(grade_labels[j * C + k]);
        }
    }
    return {std::move(symptoms), std::move(causes), std::move(values), provenance,
            std::move(grade_labels)};
}

std::optional<std::size_t> CondProbMatrix::symptom_index(std::string_view name) const {
    for (std::size_t j = 0; j < symptoms_.size(); ++j) {
        if (symptoms_[j] == name) {
            return j;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> CondProbMatrix::cause_index(std::string_view name) const {
    for (std::size_t k = 0; k < causes_.size(); ++k) {
        if (causes_[k] == name) {
            return k;
        }
    }
    return std::nullopt;
}

CondProbMatrix CondProbMatrix::select_symptoms(std::span<const std::size_t> rows) const {
    std::vector<std::string> names;
    Matrix values(static_cast<Eigen::Index>(rows.size()), values_.cols());
    std::optional<std::vector<std::string>> grades;
    if (grades_) {
        grades.emplace();
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        names.push_back(symptoms_.at(rows[r]));
        values.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows[r]));
        if (grades_) {
            for (std::size_t k = 0; k < causes_.size(); ++k) {
                grades->push_back(grade(rows[r], k));
            }
        }
    }
    return {std::move(names), causes_, std::move(values), provenance_, std::move(grades)};
}

CondProbMatrix CondProbMatrix::select_causes(std::span<const std::size_t> cols) const {
    std::vector<std::string> names;
    Matrix values(values_.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        names.push_back(causes_.at(cols[c]));
        values.col(static_cast<Eigen::Index>(c)) = values_.col(static_cast<Eigen::Index>(cols[c]));
    }
    std::optional<std::vector<std::string>> grades;
    if (grades_) {
        grades.emplace();
        for (std::size_t j = 0; j < symptoms_.size(); ++j) {
            for (auto c : cols) {
                grades->push_back(grade(j, c));
            }
        }
    }
    return {symptoms_, std::move(names), std::move(values), provenance_, std::move(grades)};
}

// ---------------------------------------------------------------------------
// PriorCSMF

PriorCSMF::PriorCSMF(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) {
        throw ValidationError("prior CSMF is empty");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValidationError("prior CSMF weights must be finite and nonnegative");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        throw ValidationError("prior CSMF weights sum to zero");
    }
    for (double &w : weights_) {
        w /= total;
    }
}

PriorCSMF PriorCSMF::uniform(std::size_t causes) {
    return PriorCSMF(std::vector<double>(causes, 1.0));
}

// ---------------------------------------------------------------------------
// IndivProbResult

namespace {

void check_rows_sum_to_one(const Matrix &m, const char *what) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double s = m.row(i).sum();
        if (!(std::abs(s - 1.0) <= kSumTolerance)) {
            throw ValidationError(std::string(what) + " row " + std::to_string(i) +
                                  " sums to " + format_double(s) + ", expected 1");
        }
    }
}

} // namespace

IndivProbResult::IndivProbResult(std::vector<std::string> ids, std::vector<std::string> causes,
                                 Matrix point, std::optional<IndivQuantiles> quantiles)
    : ids_(std::move(ids)), causes_(std::move(causes)), point_(std::move(point)),
      quantiles_(std::move(quantiles)) {
    if (static_cast<std::size_t>(point_.rows()) != ids_.size() ||
        static_cast<std::size_t>(point_.cols()) != causes_.size()) {
        throw ValidationError("individual probability matrix shape does not match ids/causes");
    }
    check_rows_sum_to_one(point_, "individual probability");
    if (quantiles_) {
        const auto &q = *quantiles_;
        for (const Matrix *m : {&q.mean, &q.median, &q.lower, &q.upper}) {
            if (m->rows() != point_.rows() || m->cols() != point_.cols()) {
                throw ValidationError("quantile summary shape does not match point estimate");
            }
        }
        // Small slack for floating noise in quantile interpolation.
        constexpr double slack = 1e-12;
        for (Eigen::Index i = 0; i < point_.rows(); ++i) {
            for (Eigen::Index k = 0; k < point_.cols(); ++k) {
                if (q.lower(i, k) > q.median(i, k) + slack ||
                    q.median(i, k) > q.upper(i, k) + slack) {
                    throw ValidationError("quantile summary violates lower <= median <= upper");
                }
            }
        }
    }
}

std::vector<std::size_t> IndivProbResult::ranking(std::size_t row) const {
    std::vector<std::size_t> order(causes_.size());
    std::iota(order.begin(), order.end(), 0);
    auto r = static_cast<Eigen::Index>(row);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return point_(r, static_cast<Eigen::Index>(a)) > point_(r, static_cast<Eigen::Index>(b));
    });
    return order;
}

// ---------------------------------------------------------------------------
// CSMFEstimate

CSMFEstimate::CSMFEstimate(std::vector<std::string> causes, std::vector<std::string> groups,
                           std::vector<CsmfSummary> values)
    : causes_(std::move(causes)), groups_(std::move(groups)), values_(std::move(values)) {
    if (groups_.size() != values_.size()) {
        throw ValidationError("CSMF group labels and values differ in length");
    }
    require_unique(groups_, "sub-population");
    for (std::size_t g = 0; g < values_.size(); ++g) {
        const auto &v = values_[g];
        if (v.mean.size() != causes_.size()) {
            throw ValidationError("CSMF vector for group '" + groups_[g] +
                                  "' has wrong length");
        }
        double total = std::accumulate(v.mean.begin(), v.mean.end(), 0.0);
        if (!(std::abs(total - 1.0) <= kSumTolerance)) {
            throw ValidationError("CSMF for group '" + groups_[g] + "' sums to " +
                                  format_double(total));
        }
        for (const auto *opt : {&v.sd, &v.lower, &v.median, &v.upper}) {
            if (*opt && (*opt)->size() != causes_.size()) {
                throw ValidationError("CSMF summary column has wrong length");
            }
        }
    }
}

CSMFEstimate CSMFEstimate::single(std::vector<std::string> causes, std::vector<double> fractions,
                                  std::string group) {
    CsmfSummary s;
    s.mean = std::move(fractions);
    return CSMFEstimate(std::move(causes), {std::move(group)}, {std::move(s)});
}

const CsmfSummary &CSMFEstimate::group(std::string_view label) const {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (groups_[g] == label) {
            return values_[g];
        }
    }
    std::string valid;
    for (const auto &g : groups_) {
        valid += (valid.empty() ? "" : ", ") + g;
    }
    throw ValidationError("unknown sub-population '" + std::string(label) +
                          "'; valid labels: " + valid);
}

bool CSMFEstimate::has_uncertainty() const noexcept {
    return !values_.empty() && values_.front().lower.has_value();
}

// ---------------------------------------------------------------------------
// Validation and alignment

std::string_view to_string(FindingKind kind) noexcept {
    switch (kind) {
    case FindingKind::DuplicateId:
        return "duplicate-id";
    case FindingKind::EmptyId:
        return "empty-id";
    case FindingKind::AllMissingRow:
        return "all-missing-row";
    case FindingKind::AllMissingColumn:
        return "all-missing-column";
    case FindingKind::SymptomNameCollision:
        return "symptom-name-collision";
    }
    return "unknown";
}

bool ValidationReport::has_errors() const noexcept {
    return std::any_of(findings.begin(), findings.end(), [](const Finding &f) {
        return f.kind == FindingKind::DuplicateId || f.kind == FindingKind::EmptyId ||
               f.kind == FindingKind::SymptomNameCollision;
    });
}

std::string ValidationReport::describe() const {
    std::ostringstream out;
    for (const auto &f : findings) {
        out << to_string(f.kind) << ": " << f.subject << '\n';
    }
    return out.str();
}

ValidationReport validate_dataset(const SymptomMatrix &data) {
    ValidationReport report;
    {
        std::set<std::string> seen;
        std::set<std::string> reported;
        for (const auto &id : data.ids()) {
            if (id.empty()) {
                report.findings.push_back({FindingKind::EmptyId, "(row with empty ID)"});
                continue;
            }
            if (!seen.insert(id).second && reported.insert(id).second) {
                report.findings.push_back({FindingKind::DuplicateId, id});
            }
        }
    }
    {
        std::set<std::string> seen;
        std::set<std::string> reported;
        for (const auto &s : data.symptoms()) {
            if (!seen.insert(s).second && reported.insert(s).second) {
                report.findings.push_back({FindingKind::SymptomNameCollision, s});
            }
        }
    }
    if (data.cols() > 0) {
        for (std::size_t i = 0; i < data.rows(); ++i) {
            auto r = data.row(i);
            if (std::all_of(r.begin(), r.end(),
                            [](SymptomValue v) { return v == SymptomValue::Missing; })) {
                report.findings.push_back({FindingKind::AllMissingRow, data.ids()[i]});
            }
        }
    }
    if (data.rows() > 0) {
        for (std::size_t j = 0; j < data.cols(); ++j) {
            bool all_missing = true;
            for (std::size_t i = 0; i < data.rows() && all_missing; ++i) {
                all_missing = data(i, j) == SymptomValue::Missing;
            }
            if (all_missing) {
                report.findings.push_back({FindingKind::AllMissingColumn, data.symptoms()[j]});
            }
        }
    }
    return report;
}

void require_valid(const SymptomMatrix &data) {
    auto report = validate_dataset(data);
    if (report.has_errors()) {
        std::string msg = "dataset failed validation:";
        for (const auto &f : report.findings) {
            if (f.kind != FindingKind::AllMissingRow && f.kind != FindingKind::AllMissingColumn) {
                msg += " " + std::string(to_string(f.kind)) + "(" + f.subject + ")";
            }
        }
        throw ValidationError(msg);
    }
}

AlignedPair align(const SymptomMatrix &data, const CondProbMatrix &probs) {
    AlignedPair out;
    std::vector<std::size_t> data_cols;
    std::vector<std::size_t> prob_rows;
    for (std::size_t j = 0; j < probs.num_symptoms(); ++j) {
        if (auto idx = data.symptom_index(probs.symptoms()[j])) {
            data_cols.push_back(*idx);
            prob_rows.push_back(j);
        } else {
            out.dropped_from_probs.push_back(probs.symptoms()[j]);
        }
    }
    if (data_cols.empty()) {
        auto join = [](const std::vector<std::string> &v) {
            std::string s;
            for (const auto &x : v) {
                s += (s.empty() ? "" : ",") + x;
            }
            return "{" + s + "}";
        };
        throw AlignmentError("no shared symptoms between data " + join(data.symptoms()) +
                             " and probability table " + join(probs.symptoms()));
    }
    std::vector<bool> used(data.cols(), false);
    for (auto c : data_cols) {
        used[c] = true;
    }
    for (std::size_t j = 0; j < data.cols(); ++j) {
        if (!used[j]) {
            out.dropped_from_data.push_back(data.symptoms()[j]);
        }
    }
    out.data = data.select_columns(data_cols);
    out.probs = probs.select_symptoms(prob_rows);
    return out;
}

std::vector<std::size_t> column_map(const SymptomMatrix &data,
                                    const std::vector<std::string> &symptoms) {
    std::vector<std::size_t> map;
    map.reserve(symptoms.size());
    for (const auto &s : symptoms) {
        auto idx = data.symptom_index(s);
        if (!idx) {
            throw AlignmentError("symptom '" + s + "' missing from data");
        }
        map.push_back(*idx);
    }
    return map;
}

// ---------------------------------------------------------------------------
// Canonical CSV

SymptomMatrix symptom_matrix_from_table(const Table &table) {
    if (table.header.empty() || table.header[0] != "ID") {
        throw FormatError("canonical symptom CSV must start with an 'ID' column");
    }
    std::vector<std::string> symptoms(table.header.begin() + 1, table.header.end());
    std::vector<std::string> ids;
    std::vector<SymptomValue> values;
    ids.reserve(table.height());
    values.reserve(table.height() * symptoms.size());
    for (std::size_t r = 0; r < table.height(); ++r) {
        const auto &row = table.rows[r];
        ids.push_back(row[0]);
        for (std::size_t j = 1; j < row.size(); ++j) {
            auto v = from_token(row[j]);
            if (!v) {
                throw FormatError("record '" + row[0] + "', symptom '" + table.header[j] +
                                  "': token '" + row[j] + "' is not one of Y, empty, '.'");
            }
            values.push_back(*v);
        }
    }
    return {std::move(ids), std::move(symptoms), std::move(values)};
}

Table symptom_matrix_to_table(const SymptomMatrix &data) {
    Table t;
    t.header.reserve(data.cols() + 1);
    t.header.push_back("ID");
    t.header.insert(t.header.end(), data.symptoms().begin(), data.symptoms().end());
    t.rows.reserve(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::vector<std::string> row;
        row.reserve(data.cols() + 1);
        row.push_back(data.ids()[i]);
        for (auto v : data.row(i)) {
            row.emplace_back(to_token(v));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

SymptomMatrix read_symptom_csv(const std::string &path) {
    return symptom_matrix_from_table(read_csv_file(path));
}

void write_symptom_csv(const std::string &path, const SymptomMatrix &data) {
    write_file_atomic(path, to_csv_string(symptom_matrix_to_table(data)));
}

} // namespace va
