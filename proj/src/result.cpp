#include "va/result.hpp"
#include "va/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <map>

namespace va {

namespace fs = std::filesystem;

std::string_view to_string(ModelKind model) noexcept {
    switch (model) {
    case ModelKind::InterVA:
        return "interva";
    case ModelKind::NBC:
        return "nbc";
    case ModelKind::Tariff:
        return "tariff";
    case ModelKind::InSilico:
        return "insilico";
    }
    return "unknown";
}

ModelKind parse_model(std::string_view name) {
    for (auto m : {ModelKind::InterVA, ModelKind::NBC, ModelKind::Tariff, ModelKind::InSilico}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    throw ConfigError("unknown model '" + std::string(name) +
                      "' (expected interva, nbc, tariff or insilico)");
}

CodingResult from_interva(const IntervaFit &fit, bool rule) {
    CodingResult r;
    r.model = ModelKind::InterVA;
    const auto &indiv = rule ? fit.post : fit.raw;
    r.ids = indiv.ids();
    r.causes = indiv.causes();
    r.indiv = indiv;
    r.csmf = rule ? fit.csmf : fit.csmf_raw;
    return r;
}

CodingResult from_nbc(const NbcFit &fit) {
    CodingResult r;
    r.model = ModelKind::NBC;
    r.ids = fit.indiv.ids();
    r.causes = fit.indiv.causes();
    r.indiv = fit.indiv;
    r.csmf = fit.csmf;
    return r;
}

CodingResult from_tariff(const TariffFit &fit) {
    CodingResult r;
    r.model = ModelKind::Tariff;
    r.ids = fit.ids;
    r.causes = fit.causes;
    r.ranks = fit.ranks;
    r.csmf = fit.csmf;
    return r;
}

namespace {

// Column positions of `kept` within `all`.
std::vector<std::size_t> positions(const std::vector<std::string> &kept,
                                   const std::vector<std::string> &all) {
    std::vector<std::size_t> pos;
    for (const auto &c : kept) {
        auto it = std::find(all.begin(), all.end(), c);
        pos.push_back(static_cast<std::size_t>(it - all.begin()));
    }
    return pos;
}

Matrix widen(const Matrix &m, const std::vector<std::size_t> &pos, std::size_t cols) {
    Matrix out = Matrix::Zero(m.rows(), static_cast<Eigen::Index>(cols));
    for (std::size_t k = 0; k < pos.size(); ++k) {
        out.col(static_cast<Eigen::Index>(pos[k])) = m.col(static_cast<Eigen::Index>(k));
    }
    return out;
}

std::vector<double> widen(const std::vector<double> &v, const std::vector<std::size_t> &pos,
                          std::size_t cols) {
    std::vector<double> out(cols, 0.0);
    for (std::size_t k = 0; k < pos.size(); ++k) {
        out[pos[k]] = v[k];
    }
    return out;
}

nlohmann::json diagnostics_json(const PosteriorSample &s) {
    nlohmann::json j;
    j["model"] = "insilico";
    j["nsim"] = s.nsim;
    j["burn_in"] = s.burn;
    j["thin"] = s.thin;
    j["draws"] = s.draws();
    j["doublings"] = s.doublings;
    j["groups"] = s.groups;
    j["removed_causes"] = s.removed_causes;
    j["acceptance"] = s.acceptance;
    j["levels_reestimated"] = s.levels_reestimated;
    if (s.levels_reestimated && s.levels.rows() > 0) {
        nlohmann::json levels = nlohmann::json::object();
        for (std::size_t l = 0; l < s.level_labels.size(); ++l) {
            levels[s.level_labels[l]] = s.levels.col(static_cast<Eigen::Index>(l)).mean();
        }
        j["level_means"] = levels;
    }
    nlohmann::json conv;
    conv["conclusive"] = s.convergence.conclusive;
    conv["passed"] = s.convergence.passed;
    nlohmann::json details = nlohmann::json::array();
    for (const auto &d : s.convergence.details) {
        details.push_back({{"group", d.group},
                           {"cause", d.cause},
                           {"conclusive", d.result.conclusive},
                           {"passed", d.result.passed},
                           {"statistic", d.result.statistic},
                           {"discarded", d.result.discarded}});
    }
    conv["details"] = details;
    j["convergence"] = conv;
    return j;
}

} // namespace

CodingResult from_insilico(const InsilicoFit &fit, double indiv_ci, double csmf_ci) {
    const auto &s = fit.sample();
    const auto &all = s.input_causes.empty() ? s.causes : s.input_causes;
    auto pos = positions(s.causes, all);
    const std::size_t C = all.size();

    CodingResult r;
    r.model = ModelKind::InSilico;
    r.ids = fit.ids();
    r.causes = all;
    auto indiv = fit.indiv_summary(indiv_ci);
    const auto &q = *indiv.quantiles();
    IndivQuantiles wide{widen(q.mean, pos, C), widen(q.median, pos, C), widen(q.lower, pos, C),
                        widen(q.upper, pos, C)};
    r.indiv = IndivProbResult(r.ids, all, widen(indiv.point(), pos, C), std::move(wide));

    auto csmf = fit.csmf(csmf_ci);
    std::vector<CsmfSummary> values;
    for (const auto &v : csmf.values()) {
        CsmfSummary w;
        w.mean = widen(v.mean, pos, C);
        w.sd = widen(*v.sd, pos, C);
        w.lower = widen(*v.lower, pos, C);
        w.median = widen(*v.median, pos, C);
        w.upper = widen(*v.upper, pos, C);
        values.push_back(std::move(w));
    }
    r.csmf = CSMFEstimate(all, csmf.groups(), std::move(values));
    r.diagnostics = diagnostics_json(s).dump(2) + "\n";
    return r;
}

// ---------------------------------------------------------------------------
// Tables

namespace {

double parse_number(const std::string &cell, const std::string &what) {
    double v = 0.0;
    const char *first = cell.data();
    const char *last = cell.data() + cell.size();
    if (cell == "inf" || cell == "Inf") {
        return std::numeric_limits<double>::infinity();
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw FormatError("non-numeric value '" + cell + "' in " + what);
    }
    return v;
}

Table matrix_table(const std::vector<std::string> &ids, const std::vector<std::string> &causes,
                   const Matrix &m) {
    Table t;
    t.header.push_back("ID");
    t.header.insert(t.header.end(), causes.begin(), causes.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::vector<std::string> row{ids[i]};
        for (std::size_t k = 0; k < causes.size(); ++k) {
            row.push_back(format_double(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

struct MatrixFile {
    std::vector<std::string> ids;
    std::vector<std::string> causes;
    Matrix values;
};

MatrixFile read_matrix(const fs::path &path) {
    auto t = read_csv_file(path);
    if (t.width() < 2 || t.header[0] != "ID") {
        throw FormatError(path.string() + ": expected an ID column followed by cause columns");
    }
    MatrixFile f;
    f.causes.assign(t.header.begin() + 1, t.header.end());
    f.values.resize(static_cast<Eigen::Index>(t.height()), static_cast<Eigen::Index>(f.causes.size()));
    for (std::size_t i = 0; i < t.height(); ++i) {
        f.ids.push_back(t.rows[i][0]);
        for (std::size_t k = 0; k < f.causes.size(); ++k) {
            f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                parse_number(t.rows[i][k + 1], path.string());
        }
    }
    return f;
}

} // namespace

Table csmf_table(const CSMFEstimate &csmf) {
    Table t;
    t.header = {"group", "cause", "Mean"};
    bool full = csmf.has_uncertainty();
    if (full) {
        t.header.insert(t.header.end(), {"Std.Error", "Lower", "Median", "Upper"});
    }
    for (std::size_t g = 0; g < csmf.groups().size(); ++g) {
        const auto &v = csmf.group(g);
        for (std::size_t k = 0; k < csmf.causes().size(); ++k) {
            std::vector<std::string> row{csmf.groups()[g], csmf.causes()[k], format_double(v.mean[k])};
            if (full) {
                row.push_back(format_double((*v.sd)[k]));
                row.push_back(format_double((*v.lower)[k]));
                row.push_back(format_double((*v.median)[k]));
                row.push_back(format_double((*v.upper)[k]));
            }
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

CSMFEstimate csmf_from_table(const Table &t) {
    auto gcol = t.require_column("group");
    auto ccol = t.require_column("cause");
    auto mcol = t.require_column("Mean");
    auto sd = t.column("Std.Error");
    auto lo = t.column("Lower");
    auto md = t.column("Median");
    auto up = t.column("Upper");
    bool full = sd && lo && md && up;
    std::vector<std::string> groups;
    std::vector<std::string> causes;
    std::map<std::string, std::size_t> gidx;
    std::vector<CsmfSummary> values;
    std::vector<std::vector<std::string>> group_causes;
    for (const auto &row : t.rows) {
        auto [it, fresh] = gidx.emplace(row[gcol], groups.size());
        if (fresh) {
            groups.push_back(row[gcol]);
            values.emplace_back();
            group_causes.emplace_back();
            if (full) {
                values.back().sd.emplace();
                values.back().lower.emplace();
                values.back().median.emplace();
                values.back().upper.emplace();
            }
        }
        auto &v = values[it->second];
        group_causes[it->second].push_back(row[ccol]);
        v.mean.push_back(parse_number(row[mcol], "csmf.csv"));
        if (full) {
            v.sd->push_back(parse_number(row[*sd], "csmf.csv"));
            v.lower->push_back(parse_number(row[*lo], "csmf.csv"));
            v.median->push_back(parse_number(row[*md], "csmf.csv"));
            v.upper->push_back(parse_number(row[*up], "csmf.csv"));
        }
    }
    if (groups.empty()) {
        throw FormatError("csmf.csv holds no rows");
    }
    causes = group_causes[0];
    for (std::size_t g = 1; g < groups.size(); ++g) {
        if (group_causes[g] != causes) {
            throw FormatError("csmf.csv: group '" + groups[g] + "' lists different causes");
        }
    }
    return CSMFEstimate(std::move(causes), std::move(groups), std::move(values));
}

Table draws_table(const PosteriorSample &sample) {
    Table t;
    t.header = {"group", "draw"};
    t.header.insert(t.header.end(), sample.causes.begin(), sample.causes.end());
    for (const auto &label : sample.level_labels) {
        if (sample.levels_reestimated) {
            t.header.push_back("level:" + label);
        }
    }
    for (std::size_t g = 0; g < sample.groups.size(); ++g) {
        const Matrix &pi = sample.pi[g];
        for (Eigen::Index d = 0; d < pi.rows(); ++d) {
            std::vector<std::string> row{sample.groups[g], std::to_string(d + 1)};
            for (Eigen::Index k = 0; k < pi.cols(); ++k) {
                row.push_back(format_double(pi(d, k)));
            }
            if (sample.levels_reestimated) {
                for (Eigen::Index l = 0; l < sample.levels.cols(); ++l) {
                    row.push_back(format_double(sample.levels(d, l)));
                }
            }
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

std::vector<fs::path> write_result(const fs::path &dir, const CodingResult &result,
                                   const ResultWriteOptions &options) {
    std::vector<fs::path> written;
    auto put = [&](const std::string &name, const std::string &contents) {
        fs::path p = dir / name;
        write_file_atomic(p, contents);
        written.push_back(p);
    };
    put("csmf.csv", to_csv_string(csmf_table(result.csmf)));

    Table top;
    if (result.model == ModelKind::Tariff) {
        const Matrix &ranks = *result.ranks;
        top.header = {"ID", "cause", "rank"};
        for (std::size_t i = 0; i < result.ids.size(); ++i) {
            std::vector<double> row(ranks.row(static_cast<Eigen::Index>(i)).begin(),
                                    ranks.row(static_cast<Eigen::Index>(i)).end());
            auto k = best_rank(row);
            top.rows.push_back({result.ids[i], result.causes[k], format_double(row[k])});
        }
        put("ranks.csv", to_csv_string(matrix_table(result.ids, result.causes, ranks)));
    } else {
        const auto &indiv = *result.indiv;
        top.header = {"ID", "cause", "probability"};
        for (std::size_t i = 0; i < indiv.rows(); ++i) {
            auto k = indiv.ranking(i).front();
            top.rows.push_back({indiv.ids()[i], indiv.causes()[k],
                                format_double(indiv.point()(static_cast<Eigen::Index>(i),
                                                            static_cast<Eigen::Index>(k)))});
        }
        if (result.model == ModelKind::InSilico && indiv.quantiles()) {
            const auto &q = *indiv.quantiles();
            put("indiv_prob_mean.csv", to_csv_string(matrix_table(indiv.ids(), indiv.causes(), q.mean)));
            put("indiv_prob_median.csv",
                to_csv_string(matrix_table(indiv.ids(), indiv.causes(), q.median)));
            put("indiv_prob_lower.csv", to_csv_string(matrix_table(indiv.ids(), indiv.causes(), q.lower)));
            put("indiv_prob_upper.csv", to_csv_string(matrix_table(indiv.ids(), indiv.causes(), q.upper)));
        } else {
            put("indiv_prob.csv", to_csv_string(matrix_table(indiv.ids(), indiv.causes(), indiv.point())));
        }
    }
    put("top_cod.csv", to_csv_string(top));
    if (options.draws) {
        put("draws.csv", to_csv_string(draws_table(*options.draws)));
    }
    if (!result.diagnostics.empty()) {
        put("diagnostics.json", result.diagnostics);
    }
    return written;
}

CodingResult read_result(const fs::path &dir) {
    if (!fs::is_directory(dir)) {
        throw IoError("result directory " + dir.string() + " does not exist");
    }
    CodingResult r;
    r.csmf = csmf_from_table(read_csv_file(dir / "csmf.csv"));
    if (fs::exists(dir / "ranks.csv")) {
        auto m = read_matrix(dir / "ranks.csv");
        r.model = ModelKind::Tariff;
        r.ids = std::move(m.ids);
        r.causes = std::move(m.causes);
        r.ranks = std::move(m.values);
    } else if (fs::exists(dir / "indiv_prob_mean.csv")) {
        auto mean = read_matrix(dir / "indiv_prob_mean.csv");
        auto median = read_matrix(dir / "indiv_prob_median.csv");
        auto lower = read_matrix(dir / "indiv_prob_lower.csv");
        auto upper = read_matrix(dir / "indiv_prob_upper.csv");
        r.model = ModelKind::InSilico;
        r.ids = mean.ids;
        r.causes = mean.causes;
        Matrix point = mean.values;
        r.indiv = IndivProbResult(r.ids, r.causes, std::move(point),
                                  IndivQuantiles{std::move(mean.values), std::move(median.values),
                                                 std::move(lower.values), std::move(upper.values)});
        if (fs::exists(dir / "diagnostics.json")) {
            r.diagnostics = read_file(dir / "diagnostics.json");
        }
    } else {
        auto m = read_matrix(dir / "indiv_prob.csv");
        r.model = !m.causes.empty() && m.causes.back() == kUndetermined ? ModelKind::InterVA
                                                                         : ModelKind::NBC;
        r.ids = m.ids;
        r.causes = m.causes;
        r.indiv = IndivProbResult(std::move(m.ids), std::move(m.causes), std::move(m.values));
    }
    return r;
}

} // namespace va
