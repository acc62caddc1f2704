#pragma once

#include "va/core.hpp"
#include "va/csv.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace va {

enum class Relation { NotAsk, Ancestor };

struct HierarchyRule {
    std::string symptom;
    Relation relation = Relation::NotAsk;
    std::string higher;
    // NotAsk: value of `higher` that makes `symptom` nonsensical.
    SymptomValue trigger = SymptomValue::Yes;
    // Ancestor: value forced onto `higher` when `symptom` holds its substantive value.
    SymptomValue implied = SymptomValue::Yes;
};

// notask/anc relations, neonate-only symptoms and substantive values.
class SymptomHierarchy {
  public:
    SymptomHierarchy() = default;
    SymptomHierarchy(std::vector<HierarchyRule> rules, std::vector<std::string> neonate_only,
                     std::map<std::string, SymptomValue> substantive = {});

    // Header: symptom,relation,higher_symptom,trigger_value,implied_value,neonate_only
    // with an optional trailing `substantive` column. relation may be empty or
    // "none" for rows that only flag a symptom.
    static SymptomHierarchy from_table(const Table &table);
    static SymptomHierarchy from_csv(const std::string &path);

    const std::vector<HierarchyRule> &rules() const noexcept { return rules_; }
    const std::vector<std::string> &neonate_only() const noexcept { return neonate_only_; }
    SymptomValue substantive(const std::string &symptom) const;

    // Longest chain of dependent updates; throws ConfigError on a cycle.
    std::size_t depth() const;
    // Throws ConfigError when a relation names a symptom not in `symptoms`,
    // when a symptom is its own ancestor, or when depth exceeds 2.
    void validate(const std::vector<std::string> &symptoms) const;

  private:
    std::vector<HierarchyRule> rules_;
    std::vector<std::string> neonate_only_;
    std::map<std::string, SymptomValue> substantive_;
};

enum class CheckVariant { InterVA4, InterVA5, InSilico };

struct CheckPolicy {
    CheckVariant variant = CheckVariant::InterVA4;
    // Record-level neonate indicator used for neonate-only clearing.
    std::string neonate_symptom = "neonate";

    SymptomValue imputed() const noexcept {
        return variant == CheckVariant::InterVA4 ? SymptomValue::No : SymptomValue::Missing;
    }
};

CheckVariant parse_check_variant(std::string_view name);

struct CellChange {
    std::size_t row = 0;
    std::size_t col = 0;
    SymptomValue before = SymptomValue::Missing;
    SymptomValue after = SymptomValue::Missing;
};

struct CheckResult {
    SymptomMatrix data;
    // One entry per cell whose final value differs from the input.
    std::vector<CellChange> changes;
};

CheckResult data_check(const SymptomMatrix &data, const SymptomHierarchy &hierarchy,
                       const CheckPolicy &policy, int passes = 2);

Table change_log_table(const SymptomMatrix &data, const std::vector<CellChange> &changes);

// ---------------------------------------------------------------------------

const std::vector<std::string> &default_demographic_symptoms();

struct ImpossibleCauses {
    // Causes kept for the population, as indices into probs.causes().
    std::vector<std::size_t> kept;
    std::vector<std::string> kept_names;
    std::vector<std::string> removed;
    // N x kept.size(); records whose every cause was impossible are reset to all-possible.
    ImpossibilityMask mask;
    std::vector<std::size_t> reset_records;
};

// Cause k is impossible for record i when P(s=1|k) = 0 for a demographic
// symptom s that is Yes for i. Demographic symptoms absent from either side
// are ignored unless `strict`, in which case they raise ConfigError.
ImpossibleCauses remove_impossible_causes(const SymptomMatrix &data, const CondProbMatrix &probs,
                                          const std::vector<std::string> &demographic,
                                          bool strict = false);

// Full-cause-list mask (no population removal), for coders that keep every cause.
ImpossibilityMask expand_mask(const ImpossibleCauses &impossible, std::size_t records,
                              std::size_t causes);

} // namespace va
