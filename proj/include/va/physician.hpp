#pragma once

#include "va/core.hpp"
#include "va/csv.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace va {

struct PhysicianCode {
    std::string physician;
    std::string category;
};

struct PhysicianCodes {
    std::vector<std::string> ids;
    std::vector<std::vector<PhysicianCode>> codes;
    // Substantive categories; the Unknown label is kept apart.
    std::vector<std::string> categories;
    std::string unknown = "Unknown";

    // Layout `ID, code1, rev1, code2, rev2, ...`; blank or NA cells are skipped.
    // With `categories` empty, the sorted set of observed codes is used.
    static PhysicianCodes from_table(const Table &table, std::vector<std::string> categories = {},
                                     std::string unknown = "Unknown");
};

struct DebiasOptions {
    double tol = 1e-4;
    int max_itr = 100;
    double init_diagonal = 0.8;
};

struct DebiasResult {
    std::vector<std::string> ids;
    std::vector<std::string> categories;
    // N x K category posteriors; rows without informative codes hold the marginal.
    Matrix posterior;
    std::vector<bool> informative;
    std::vector<double> marginal;
    // physician -> K x K matrix P(code = column | true = row)
    std::map<std::string, Matrix> confusion;
    // Log-likelihood after each EM iteration.
    std::vector<double> loglik;
    int iterations = 0;
    bool converged = false;
};

DebiasResult physician_debias(const PhysicianCodes &codes, const DebiasOptions &options = {});

// Fine-cause membership of each broad category.
struct CategoryMap {
    std::vector<std::string> causes;
    std::vector<std::string> category;

    // CSV `cause,category`.
    static CategoryMap from_table(const Table &table);
    static CategoryMap from_csv(const std::string &path);
};

// N x causes.size() prior: category mass split equally over member causes.
// Uninformative deaths get the uniform distribution.
Matrix map_to_causes(const DebiasResult &debias, const CategoryMap &map,
                     const std::vector<std::string> &causes);

// ID, one column per category, then the Unknown column (1 for deaths with no
// informative code, whose category columns are 0).
Table debias_table(const DebiasResult &debias, const std::string &unknown = "Unknown");

// Per-death category prior as read back from debias_table output.
struct CategoryPrior {
    std::vector<std::string> ids;
    std::vector<std::string> categories;
    Matrix mass;                 // N x K
    std::vector<double> unknown; // N
    static CategoryPrior from_table(const Table &table, const std::string &unknown = "Unknown");
    static CategoryPrior from_debias(const DebiasResult &debias);
};

// Maps a category prior onto fine causes; Unknown mass spreads uniformly.
Matrix category_prior_to_causes(const CategoryPrior &prior, const CategoryMap &map,
                                const std::vector<std::string> &causes);

// Deaths whose External mass reaches `threshold` may only be assigned causes
// mapped to the External category; all other deaths keep every cause.
ImpossibilityMask external_mask(const CategoryPrior &prior, const CategoryMap &map,
                                const std::vector<std::string> &causes,
                                const std::string &external = "External", double threshold = 0.5);

} // namespace va
