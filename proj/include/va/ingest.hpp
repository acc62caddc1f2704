#pragma once

#include "va/core.hpp"
#include "va/csv.hpp"

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace va {

enum class TokenPolicy { Strict, Lenient };

struct ParseStats {
    // Cells whose token was not recognized and became Missing (lenient mode).
    std::size_t unrecognized = 0;
};

inline constexpr std::size_t kWho2012Columns = 246;
inline constexpr std::size_t kWho2016Columns = 354;

// InterVA-4 input: ID + 245 indicators; "Y" / "" / ".".
SymptomMatrix parse_who2012(std::string_view csv, TokenPolicy policy = TokenPolicy::Lenient,
                            ParseStats *stats = nullptr);
// InterVA-5 input: ID + 353 indicators; Y/y, N/n, everything else Missing.
SymptomMatrix parse_who2016(std::string_view csv, TokenPolicy policy = TokenPolicy::Lenient,
                            ParseStats *stats = nullptr);
SymptomMatrix parse_who2012(const Table &table, TokenPolicy policy = TokenPolicy::Lenient,
                            ParseStats *stats = nullptr);
SymptomMatrix parse_who2016(const Table &table, TokenPolicy policy = TokenPolicy::Lenient,
                            ParseStats *stats = nullptr);

struct LabelMap {
    std::set<std::string> yes;
    std::set<std::string> no;
    std::set<std::string> missing;

    // Throws ConfigError unless the three sets are nonempty and disjoint.
    void validate() const;
};

struct ConvertedData {
    SymptomMatrix data;
    std::optional<std::vector<std::string>> causes;
    ParseStats stats;
};

// First column is the ID; `cause_column` (if present in the header) is split off.
ConvertedData convert_custom(const Table &table, const LabelMap &labels,
                             TokenPolicy policy = TokenPolicy::Strict,
                             std::string_view cause_column = "Cause");

// ---------------------------------------------------------------------------
// PHMRC

enum class PhmrcModule { Adult, Child, Neonate };
enum class CutoffMode { Default, Adapt };

PhmrcModule parse_phmrc_module(std::string_view name);
std::string_view to_string(PhmrcModule module) noexcept;

enum class Comparator { Categorical, Equal, Greater, GreaterEqual, Less, LessEqual };

struct PhmrcRule {
    std::string symptom;
    std::string source_column;
    Comparator comparator = Comparator::Categorical;
    // Numeric threshold for ordered comparators; the matching string for "==".
    std::string cutoff;
};

// Rules are OR-combined per symptom: Yes if any rule says Yes, else No if any
// says No, else Missing. Symptoms appear in first-mention order.
struct PhmrcCutoffTable {
    std::vector<PhmrcRule> rules;
    CutoffMode mode = CutoffMode::Default;

    static PhmrcCutoffTable from_table(const Table &table);
    static PhmrcCutoffTable from_csv(const std::string &path);
    Table to_table() const;
    std::vector<std::string> symptoms() const;
};

Comparator parse_comparator(std::string_view text);
std::string_view to_string(Comparator comparator) noexcept;

// Tokens that mean "no answer" in raw PHMRC exports.
bool is_phmrc_missing_token(std::string_view token) noexcept;

struct PhmrcConversion {
    SymptomMatrix data;
    std::vector<std::string> causes;
    // Cutoffs actually applied (adapt mode replaces numeric thresholds).
    PhmrcCutoffTable applied;
    SymptomTally tally;
};

// The first raw column is the site; IDs are assigned 1..N. In adapt mode each
// numeric cutoff becomes the median over causes of the cause-specific mean of
// the source column.
PhmrcConversion convert_phmrc(const Table &raw, PhmrcModule module, const PhmrcCutoffTable &rules,
                              CutoffMode mode, std::string_view cause_column);

inline constexpr std::size_t kPhmrcAdultColumns = 946;

std::string phmrc_url(PhmrcModule module);

struct FetchOptions {
    std::optional<std::string> url;
    std::optional<std::size_t> row_limit;
    int timeout_seconds = 60;
};

// Downloads a raw PHMRC table. With a row limit the transfer stops once that
// many data records have arrived.
Table fetch_phmrc(PhmrcModule module, const FetchOptions &options = {});

} // namespace va
