#include "va/physician.hpp"
#include "va/error.hpp"
#include "va/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace va {

namespace {

bool blank(const std::string &s) { return s.empty() || s == "NA" || s == "<NA>" || s == "."; }

} // namespace

PhysicianCodes PhysicianCodes::from_table(const Table &table, std::vector<std::string> categories,
                                          std::string unknown) {
    if (table.width() < 3 || (table.width() - 1) % 2 != 0) {
        throw FormatError("physician table must be ID followed by (code, reviewer) column pairs");
    }
    PhysicianCodes out;
    out.unknown = std::move(unknown);
    std::set<std::string> seen;
    for (const auto &row : table.rows) {
        out.ids.push_back(row[0]);
        std::vector<PhysicianCode> codes;
        for (std::size_t c = 1; c + 1 < row.size(); c += 2) {
            const auto &code = row[c];
            const auto &rev = row[c + 1];
            if (blank(code)) {
                continue;
            }
            if (blank(rev)) {
                throw FormatError("death '" + row[0] + "' has code '" + code +
                                  "' without a physician ID");
            }
            codes.push_back({rev, code});
            if (code != out.unknown) {
                seen.insert(code);
            }
        }
        out.codes.push_back(std::move(codes));
    }
    if (categories.empty()) {
        out.categories.assign(seen.begin(), seen.end());
    } else {
        out.categories.clear();
        for (auto &c : categories) {
            if (c != out.unknown) {
                out.categories.push_back(std::move(c));
            }
        }
    }
    return out;
}

DebiasResult physician_debias(const PhysicianCodes &codes, const DebiasOptions &options) {
    if (!(options.tol > 0.0)) {
        throw ConfigError("debias tolerance must be positive");
    }
    if (options.max_itr < 1) {
        throw ConfigError("debias max iterations must be at least 1");
    }
    if (!(options.init_diagonal > 0.0 && options.init_diagonal <= 1.0)) {
        throw ConfigError("initial confusion diagonal must lie in (0, 1]");
    }
    const std::size_t N = codes.ids.size();
    const std::size_t K = codes.categories.size();
    if (K == 0) {
        throw ValidationError("no substantive physician categories");
    }
    std::map<std::string, std::size_t> cat_index;
    for (std::size_t k = 0; k < K; ++k) {
        cat_index.emplace(codes.categories[k], k);
    }
    std::set<std::string> physician_set;
    for (const auto &list : codes.codes) {
        for (const auto &c : list) {
            physician_set.insert(c.physician);
        }
    }
    std::vector<std::string> physicians(physician_set.begin(), physician_set.end());
    std::map<std::string, std::size_t> phy_index;
    for (std::size_t p = 0; p < physicians.size(); ++p) {
        phy_index.emplace(physicians[p], p);
    }

    struct Obs {
        std::size_t phy;
        std::size_t cat;
    };
    std::vector<std::vector<Obs>> obs(N);
    std::size_t informative = 0;
    for (std::size_t i = 0; i < N; ++i) {
        for (const auto &c : codes.codes[i]) {
            if (c.category == codes.unknown) {
                continue;
            }
            auto it = cat_index.find(c.category);
            if (it == cat_index.end()) {
                throw ValidationError("death '" + codes.ids[i] + "': category '" + c.category +
                                      "' is not in the declared category list");
            }
            obs[i].push_back({phy_index.at(c.physician), it->second});
        }
        // Canonical order keeps results independent of column order.
        std::sort(obs[i].begin(), obs[i].end(), [](const Obs &a, const Obs &b) {
            return a.phy != b.phy ? a.phy < b.phy : a.cat < b.cat;
        });
        if (!obs[i].empty()) {
            ++informative;
        }
    }
    if (informative == 0) {
        throw ValidationError("no death carries an informative physician code");
    }

    const auto Ki = static_cast<Eigen::Index>(K);
    std::vector<Matrix> conf(physicians.size());
    for (auto &m : conf) {
        double off = K > 1 ? (1.0 - options.init_diagonal) / static_cast<double>(K - 1) : 0.0;
        m = Matrix::Constant(Ki, Ki, off);
        for (Eigen::Index k = 0; k < Ki; ++k) {
            m(k, k) = K > 1 ? options.init_diagonal : 1.0;
        }
    }
    std::vector<double> marginal(K, 1.0 / static_cast<double>(K));

    DebiasResult result;
    result.ids = codes.ids;
    result.categories = codes.categories;
    result.posterior = Matrix::Zero(static_cast<Eigen::Index>(N), Ki);
    result.informative.resize(N);

    std::vector<double> logw(K);
    for (int it = 1; it <= options.max_itr; ++it) {
        // E-step.
        double ll = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (obs[i].empty()) {
                continue;
            }
            for (std::size_t k = 0; k < K; ++k) {
                logw[k] = std::log(marginal[k]);
                for (const auto &o : obs[i]) {
                    logw[k] += std::log(conf[o.phy](static_cast<Eigen::Index>(k),
                                                    static_cast<Eigen::Index>(o.cat)));
                }
            }
            ll += log_sum_exp(logw);
            normalize_log(logw);
            for (std::size_t k = 0; k < K; ++k) {
                result.posterior(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    logw[k];
            }
        }
        result.loglik.push_back(ll);
        result.iterations = it;
        if (it > 1) {
            double prev = result.loglik[result.loglik.size() - 2];
            double denom = std::max(std::abs(prev), 1e-300);
            if (std::abs(ll - prev) / denom < options.tol) {
                result.converged = true;
                break;
            }
        }
        if (it == options.max_itr) {
            break;
        }
        // M-step: maximum-likelihood marginals and confusion rows.
        std::vector<double> m_new(K, 0.0);
        std::vector<Matrix> num(physicians.size(), Matrix::Zero(Ki, Ki));
        for (std::size_t i = 0; i < N; ++i) {
            if (obs[i].empty()) {
                continue;
            }
            for (std::size_t k = 0; k < K; ++k) {
                double t = result.posterior(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                m_new[k] += t;
                for (const auto &o : obs[i]) {
                    num[o.phy](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(o.cat)) += t;
                }
            }
        }
        for (std::size_t k = 0; k < K; ++k) {
            marginal[k] = m_new[k] / static_cast<double>(informative);
        }
        for (std::size_t p = 0; p < physicians.size(); ++p) {
            for (Eigen::Index k = 0; k < Ki; ++k) {
                double row = num[p].row(k).sum();
                if (row > 0.0) {
                    conf[p].row(k) = num[p].row(k) / row;
                }
            }
        }
    }

    for (std::size_t i = 0; i < N; ++i) {
        result.informative[i] = !obs[i].empty();
        if (obs[i].empty()) {
            for (std::size_t k = 0; k < K; ++k) {
                result.posterior(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    marginal[k];
            }
        }
    }
    result.marginal = marginal;
    for (std::size_t p = 0; p < physicians.size(); ++p) {
        result.confusion.emplace(physicians[p], conf[p]);
    }
    return result;
}

CategoryMap CategoryMap::from_table(const Table &table) {
    auto cc = table.require_column("cause");
    auto gc = table.require_column("category");
    CategoryMap m;
    std::set<std::string> seen;
    for (const auto &row : table.rows) {
        if (!seen.insert(row[cc]).second) {
            throw ConfigError("cause '" + row[cc] + "' is mapped to more than one category");
        }
        m.causes.push_back(row[cc]);
        m.category.push_back(row[gc]);
    }
    return m;
}

CategoryMap CategoryMap::from_csv(const std::string &path) { return from_table(read_csv_file(path)); }

namespace {

// members[g] = indices into `causes` of the causes mapped to category g.
std::vector<std::vector<std::size_t>> category_members(const std::vector<std::string> &categories,
                                                       const CategoryMap &map,
                                                       const std::vector<std::string> &causes) {
    std::map<std::string, std::string> cause_cat;
    for (std::size_t c = 0; c < map.causes.size(); ++c) {
        cause_cat.emplace(map.causes[c], map.category[c]);
    }
    std::set<std::string> mapped_categories(map.category.begin(), map.category.end());
    for (const auto &g : categories) {
        if (!mapped_categories.count(g)) {
            throw ConfigError("category '" + g + "' has no causes in the category map");
        }
    }
    std::vector<std::vector<std::size_t>> members(categories.size());
    for (std::size_t k = 0; k < causes.size(); ++k) {
        auto it = cause_cat.find(causes[k]);
        if (it == cause_cat.end()) {
            throw ConfigError("cause '" + causes[k] + "' is not in the category map");
        }
        auto g = std::find(categories.begin(), categories.end(), it->second);
        if (g != categories.end()) {
            members[static_cast<std::size_t>(g - categories.begin())].push_back(k);
        }
    }
    return members;
}

void normalize_row_or_uniform(Matrix &m, Eigen::Index i) {
    double total = m.row(i).sum();
    if (total > 0.0) {
        m.row(i) /= total;
    } else {
        m.row(i).setConstant(1.0 / static_cast<double>(m.cols()));
    }
}

} // namespace

Matrix category_prior_to_causes(const CategoryPrior &prior, const CategoryMap &map,
                                const std::vector<std::string> &causes) {
    auto members = category_members(prior.categories, map, causes);
    const auto N = static_cast<Eigen::Index>(prior.ids.size());
    const auto C = static_cast<Eigen::Index>(causes.size());
    Matrix out = Matrix::Zero(N, C);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (std::size_t g = 0; g < members.size(); ++g) {
            if (members[g].empty()) {
                continue;
            }
            double share = prior.mass(i, static_cast<Eigen::Index>(g)) /
                           static_cast<double>(members[g].size());
            for (auto k : members[g]) {
                out(i, static_cast<Eigen::Index>(k)) += share;
            }
        }
        double u = prior.unknown[static_cast<std::size_t>(i)] / static_cast<double>(C);
        out.row(i).array() += u;
        normalize_row_or_uniform(out, i);
    }
    return out;
}

Matrix map_to_causes(const DebiasResult &debias, const CategoryMap &map,
                     const std::vector<std::string> &causes) {
    return category_prior_to_causes(CategoryPrior::from_debias(debias), map, causes);
}

CategoryPrior CategoryPrior::from_debias(const DebiasResult &debias) {
    CategoryPrior p;
    p.ids = debias.ids;
    p.categories = debias.categories;
    p.mass = debias.posterior;
    p.unknown.assign(debias.ids.size(), 0.0);
    for (std::size_t i = 0; i < debias.ids.size(); ++i) {
        if (!debias.informative[i]) {
            p.mass.row(static_cast<Eigen::Index>(i)).setZero();
            p.unknown[i] = 1.0;
        }
    }
    return p;
}

Table debias_table(const DebiasResult &debias, const std::string &unknown) {
    auto prior = CategoryPrior::from_debias(debias);
    Table t;
    t.header.push_back("ID");
    t.header.insert(t.header.end(), prior.categories.begin(), prior.categories.end());
    t.header.push_back(unknown);
    for (std::size_t i = 0; i < prior.ids.size(); ++i) {
        std::vector<std::string> row{prior.ids[i]};
        for (Eigen::Index k = 0; k < prior.mass.cols(); ++k) {
            row.push_back(format_double(prior.mass(static_cast<Eigen::Index>(i), k)));
        }
        row.push_back(format_double(prior.unknown[i]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CategoryPrior CategoryPrior::from_table(const Table &table, const std::string &unknown) {
    if (table.width() < 2) {
        throw FormatError("debias table needs an ID column and category columns");
    }
    CategoryPrior p;
    auto ucol = table.column(unknown);
    std::vector<std::size_t> cols;
    for (std::size_t j = 1; j < table.width(); ++j) {
        if (ucol && j == *ucol) {
            continue;
        }
        cols.push_back(j);
        p.categories.push_back(table.header[j]);
    }
    p.mass = Matrix::Zero(static_cast<Eigen::Index>(table.height()),
                          static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < table.height(); ++i) {
        const auto &row = table.rows[i];
        p.ids.push_back(row[0]);
        auto num = [&](const std::string &s) {
            try {
                double v = std::stod(s);
                if (!(v >= 0.0)) {
                    throw std::invalid_argument("negative");
                }
                return v;
            } catch (const std::exception &) {
                throw FormatError("debias table: death '" + row[0] + "' has invalid mass '" + s +
                                  "'");
            }
        };
        for (std::size_t c = 0; c < cols.size(); ++c) {
            p.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = num(row[cols[c]]);
        }
        p.unknown.push_back(ucol ? num(row[*ucol]) : 0.0);
    }
    return p;
}

ImpossibilityMask external_mask(const CategoryPrior &prior, const CategoryMap &map,
                                const std::vector<std::string> &causes, const std::string &external,
                                double threshold) {
    const std::size_t N = prior.ids.size();
    const std::size_t C = causes.size();
    ImpossibilityMask mask{C, std::vector<std::uint8_t>(N * C, 1)};
    auto col = std::find(prior.categories.begin(), prior.categories.end(), external);
    if (col == prior.categories.end()) {
        return mask;
    }
    auto g = static_cast<Eigen::Index>(col - prior.categories.begin());
    std::vector<std::uint8_t> is_external(C, 0);
    bool any = false;
    for (std::size_t k = 0; k < C; ++k) {
        for (std::size_t m = 0; m < map.causes.size(); ++m) {
            if (map.causes[m] == causes[k] && map.category[m] == external) {
                is_external[k] = 1;
                any = true;
            }
        }
    }
    if (!any) {
        throw ConfigError("category '" + external + "' has no member causes");
    }
    for (std::size_t i = 0; i < N; ++i) {
        if (prior.mass(static_cast<Eigen::Index>(i), g) >= threshold) {
            std::copy(is_external.begin(), is_external.end(),
                      mask.possible.begin() + static_cast<std::ptrdiff_t>(i * C));
        }
    }
    return mask;
}

} // namespace va
