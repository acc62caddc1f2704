#pragma once

#include "va/csv.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace va {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kSumTolerance = 1e-9;
inline constexpr const char *kUndetermined = "Undetermined";

enum class SymptomValue : std::uint8_t { No = 0, Yes = 1, Missing = 2 };

// Canonical file tokens: "Y" (Yes), "" (No), "." (Missing).
std::string_view to_token(SymptomValue value) noexcept;
std::optional<SymptomValue> from_token(std::string_view token) noexcept;

struct SymptomTally {
    std::size_t yes = 0;
    std::size_t no = 0;
    std::size_t missing = 0;
    std::size_t total() const noexcept { return yes + no + missing; }
    bool operator==(const SymptomTally &) const = default;
};

// N x S tri-state symptom table. The constructor enforces shape only; ID and
// name uniqueness are reported by validate_dataset() and enforced by coders.
class SymptomMatrix {
  public:
    SymptomMatrix() = default;
    SymptomMatrix(std::vector<std::string> ids, std::vector<std::string> symptoms,
                  std::vector<SymptomValue> values);

    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t cols() const noexcept { return symptoms_.size(); }
    const std::vector<std::string> &ids() const noexcept { return ids_; }
    const std::vector<std::string> &symptoms() const noexcept { return symptoms_; }
    const std::vector<SymptomValue> &values() const noexcept { return values_; }

    SymptomValue operator()(std::size_t row, std::size_t col) const {
        return values_[row * symptoms_.size() + col];
    }
    std::span<const SymptomValue> row(std::size_t i) const {
        return {values_.data() + i * symptoms_.size(), symptoms_.size()};
    }
    std::optional<std::size_t> symptom_index(std::string_view name) const;
    std::optional<std::size_t> row_index(std::string_view id) const;

    SymptomTally tally() const noexcept;
    SymptomMatrix select_rows(std::span<const std::size_t> rows) const;
    SymptomMatrix select_columns(std::span<const std::size_t> cols) const;
    // Replaces values, keeping ids and symptom names.
    SymptomMatrix with_values(std::vector<SymptomValue> values) const;

    bool operator==(const SymptomMatrix &other) const {
        return ids_ == other.ids_ && symptoms_ == other.symptoms_ && values_ == other.values_;
    }

  private:
    std::vector<std::string> ids_;
    std::vector<std::string> symptoms_;
    std::vector<SymptomValue> values_;
    std::unordered_map<std::string, std::size_t> symptom_lookup_;
    std::unordered_map<std::string, std::size_t> id_lookup_;
};

class CauseList {
  public:
    CauseList() = default;
    explicit CauseList(std::vector<std::string> causes,
                       std::optional<std::string> undetermined = std::nullopt);

    std::size_t size() const noexcept { return causes_.size(); }
    const std::vector<std::string> &names() const noexcept { return causes_; }
    const std::string &operator[](std::size_t i) const { return causes_[i]; }
    const std::optional<std::string> &undetermined() const noexcept { return undetermined_; }
    std::optional<std::size_t> index(std::string_view name) const;

  private:
    std::vector<std::string> causes_;
    std::optional<std::string> undetermined_;
};

// Ordered (label, value) levels, values strictly decreasing in [0, 1].
struct Grade {
    std::string label;
    double value = 0.0;
    // Share of this grade in a reference probability table; drives
    // quantile-mode conversion. Zero when unknown.
    double reference_share = 0.0;
};

class GradeTable {
  public:
    explicit GradeTable(std::vector<Grade> grades);

    // I, A+ (0.8), A, A-, ..., E, N.
    static GradeTable defaults();
    // CSV with header `grade,value[,reference_count]`.
    static GradeTable from_csv(const std::string &path);

    const std::vector<Grade> &grades() const noexcept { return grades_; }
    std::size_t size() const noexcept { return grades_.size(); }
    std::optional<std::size_t> index(std::string_view label) const;
    double value(std::string_view label) const;
    // Index of the grade whose value is nearest; ties go to the higher grade.
    std::size_t nearest(double p) const;

  private:
    std::vector<Grade> grades_;
};

enum class Provenance { BuiltIn, Trained, Converted };

// S x C matrix of P(symptom = Yes | cause).
class CondProbMatrix {
  public:
    CondProbMatrix() = default;
    CondProbMatrix(std::vector<std::string> symptoms, std::vector<std::string> causes, Matrix values,
                   Provenance provenance,
                   std::optional<std::vector<std::string>> grades = std::nullopt);

    // Resolves every grade label through `table`.
    static CondProbMatrix from_grades(std::vector<std::string> symptoms,
                                      std::vector<std::string> causes,
                                      std::vector<std::string> grade_labels,
                                      const GradeTable &table, Provenance provenance);

    std::size_t num_symptoms() const noexcept { return symptoms_.size(); }
    std::size_t num_causes() const noexcept { return causes_.size(); }
    const std::vector<std::string> &symptoms() const noexcept { return symptoms_; }
    const std::vector<std::string> &causes() const noexcept { return causes_; }
    const Matrix &values() const noexcept { return values_; }
    double operator()(std::size_t symptom, std::size_t cause) const {
        return values_(static_cast<Eigen::Index>(symptom), static_cast<Eigen::Index>(cause));
    }
    Provenance provenance() const noexcept { return provenance_; }
    bool has_grades() const noexcept { return grades_.has_value(); }
    // Row-major S x C labels.
    const std::vector<std::string> &grades() const { return grades_.value(); }
    const std::string &grade(std::size_t symptom, std::size_t cause) const {
        return grades_.value()[symptom * causes_.size() + cause];
    }
    std::optional<std::size_t> symptom_index(std::string_view name) const;
    std::optional<std::size_t> cause_index(std::string_view name) const;

    CondProbMatrix select_symptoms(std::span<const std::size_t> rows) const;
    CondProbMatrix select_causes(std::span<const std::size_t> cols) const;

  private:
    std::vector<std::string> symptoms_;
    std::vector<std::string> causes_;
    Matrix values_;
    Provenance provenance_ = Provenance::Trained;
    std::optional<std::vector<std::string>> grades_;
};

// Normalized cause prior; the constructor rescales to unit sum.
class PriorCSMF {
  public:
    PriorCSMF() = default;
    explicit PriorCSMF(std::vector<double> weights);
    static PriorCSMF uniform(std::size_t causes);

    std::size_t size() const noexcept { return weights_.size(); }
    const std::vector<double> &weights() const noexcept { return weights_; }
    double operator[](std::size_t k) const { return weights_[k]; }

  private:
    std::vector<double> weights_;
};

struct IndivQuantiles {
    Matrix mean;
    Matrix median;
    Matrix lower;
    Matrix upper;
};

// Per-death cause distributions. Rows of `point` sum to one.
class IndivProbResult {
  public:
    IndivProbResult() = default;
    IndivProbResult(std::vector<std::string> ids, std::vector<std::string> causes, Matrix point,
                    std::optional<IndivQuantiles> quantiles = std::nullopt);

    const std::vector<std::string> &ids() const noexcept { return ids_; }
    const std::vector<std::string> &causes() const noexcept { return causes_; }
    const Matrix &point() const noexcept { return point_; }
    const std::optional<IndivQuantiles> &quantiles() const noexcept { return quantiles_; }
    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t cols() const noexcept { return causes_.size(); }
    // Cause indices sorted by decreasing probability; ties keep list order.
    std::vector<std::size_t> ranking(std::size_t row) const;

  private:
    std::vector<std::string> ids_;
    std::vector<std::string> causes_;
    Matrix point_;
    std::optional<IndivQuantiles> quantiles_;
};

struct CsmfSummary {
    std::vector<double> mean;
    std::optional<std::vector<double>> sd;
    std::optional<std::vector<double>> lower;
    std::optional<std::vector<double>> median;
    std::optional<std::vector<double>> upper;
};

// Per sub-population mortality fractions over a shared cause list.
class CSMFEstimate {
  public:
    CSMFEstimate() = default;
    CSMFEstimate(std::vector<std::string> causes, std::vector<std::string> groups,
                 std::vector<CsmfSummary> values);
    static CSMFEstimate single(std::vector<std::string> causes, std::vector<double> fractions,
                               std::string group = "all");

    const std::vector<std::string> &causes() const noexcept { return causes_; }
    const std::vector<std::string> &groups() const noexcept { return groups_; }
    const std::vector<CsmfSummary> &values() const noexcept { return values_; }
    const CsmfSummary &group(std::size_t g) const { return values_[g]; }
    const CsmfSummary &group(std::string_view label) const;
    bool has_uncertainty() const noexcept;

  private:
    std::vector<std::string> causes_;
    std::vector<std::string> groups_;
    std::vector<CsmfSummary> values_;
};

// Per-record list of causes that remain possible (row-major N x C).
struct ImpossibilityMask {
    std::size_t causes = 0;
    std::vector<std::uint8_t> possible;
    bool is_possible(std::size_t record, std::size_t cause) const {
        return possible.empty() || possible[record * causes + cause] != 0;
    }
};

enum class FindingKind { DuplicateId, EmptyId, AllMissingRow, AllMissingColumn, SymptomNameCollision };

struct Finding {
    FindingKind kind;
    std::string subject;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const noexcept { return findings.empty(); }
    // Duplicate/empty IDs and name collisions break the type invariants;
    // all-missing rows and columns are advisory.
    bool has_errors() const noexcept;
    std::string describe() const;
};

std::string_view to_string(FindingKind kind) noexcept;

ValidationReport validate_dataset(const SymptomMatrix &data);
// Throws ValidationError on invariant-breaking findings.
void require_valid(const SymptomMatrix &data);

struct AlignedPair {
    SymptomMatrix data;
    CondProbMatrix probs;
    std::vector<std::string> dropped_from_data;
    std::vector<std::string> dropped_from_probs;
};

// Restricts both sides to their shared symptoms, in the order of `probs`.
AlignedPair align(const SymptomMatrix &data, const CondProbMatrix &probs);
// Column indices into `data` for each symptom of `symptoms` (which must all exist).
std::vector<std::size_t> column_map(const SymptomMatrix &data,
                                    const std::vector<std::string> &symptoms);

// Canonical CSV: first column "ID", cells "Y" / "" / ".".
SymptomMatrix read_symptom_csv(const std::string &path);
SymptomMatrix symptom_matrix_from_table(const Table &table);
Table symptom_matrix_to_table(const SymptomMatrix &data);
void write_symptom_csv(const std::string &path, const SymptomMatrix &data);

} // namespace va
