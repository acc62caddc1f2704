#include "va/cli.hpp"
#include "va/consistency.hpp"
#include "va/error.hpp"
#include "va/ingest.hpp"
#include "va/insilico.hpp"
#include "va/interva.hpp"
#include "va/metrics.hpp"
#include "va/nbc.hpp"
#include "va/parallel.hpp"
#include "va/physician.hpp"
#include "va/plot.hpp"
#include "va/result.hpp"
#include "va/tariff.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace va {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string &bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 computation failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

std::string sha256_file(const fs::path &path) { return sha256_hex(read_file(path)); }

// ---------------------------------------------------------------------------
// Pipeline configuration

PipelineConfig PipelineConfig::from_json(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception &e) {
        throw ConfigError(std::string("pipeline config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("pipeline config must be a JSON object");
    }
    PipelineConfig c;
    try {
        if (j.contains("seed")) {
            c.seed = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("threads")) {
            c.threads = j.at("threads").get<int>();
        }
        if (j.contains("stages")) {
            for (const auto &s : j.at("stages")) {
                PipelineStage stage;
                stage.name = s.at("name").get<std::string>();
                stage.command = s.at("command").get<std::string>();
                if (s.contains("args")) {
                    stage.args = s.at("args").get<std::vector<std::string>>();
                }
                if (s.contains("depends_on")) {
                    stage.depends_on = s.at("depends_on").get<std::vector<std::string>>();
                }
                c.stages.push_back(std::move(stage));
            }
        }
    } catch (const json::exception &e) {
        throw ConfigError(std::string("malformed pipeline config: ") + e.what());
    }
    return c;
}

std::vector<std::size_t> PipelineConfig::order() const {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].name.empty()) {
            throw ConfigError("pipeline stage " + std::to_string(i + 1) + " has no name");
        }
        if (!index.emplace(stages[i].name, i).second) {
            throw ConfigError("duplicate pipeline stage name '" + stages[i].name + "'");
        }
    }
    std::vector<std::vector<std::size_t>> deps(stages.size());
    for (std::size_t i = 0; i < stages.size(); ++i) {
        for (const auto &d : stages[i].depends_on) {
            auto it = index.find(d);
            if (it == index.end()) {
                throw ConfigError("stage '" + stages[i].name + "' depends on unknown stage '" + d + "'");
            }
            deps[i].push_back(it->second);
        }
    }
    std::vector<std::size_t> out;
    std::vector<bool> done(stages.size(), false);
    while (out.size() < stages.size()) {
        bool progressed = false;
        for (std::size_t i = 0; i < stages.size(); ++i) {
            if (done[i]) {
                continue;
            }
            bool ready = std::all_of(deps[i].begin(), deps[i].end(), [&](std::size_t d) { return done[d]; });
            if (ready) {
                done[i] = true;
                out.push_back(i);
                progressed = true;
                break;
            }
        }
        if (!progressed) {
            std::string cycle;
            for (std::size_t i = 0; i < stages.size(); ++i) {
                if (!done[i]) {
                    cycle += (cycle.empty() ? "" : ", ") + stages[i].name;
                }
            }
            throw ConfigError("pipeline stages form a dependency cycle: " + cycle);
        }
    }
    return out;
}

namespace {

struct Globals {
    std::uint64_t seed = 1;
    bool seed_given = false;
    int threads = 0;
    bool quiet = false;
    std::string manifest_dir;
};

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty() || !out.empty()) {
        out.push_back(cur);
    }
    return out;
}

// Everything a subcommand reports for its manifest.
struct RunRecord {
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    // Directory output (manifest.json inside) or file output (<file>.manifest.json).
    std::optional<fs::path> manifest_anchor;
    bool anchor_is_dir = false;
};

void require_file(const std::string &path, const std::string &what) {
    if (!fs::exists(path)) {
        throw IoError(what + " '" + path + "' does not exist");
    }
}

fs::path data_file(const std::string &name) { return fs::path(VA_DATA_DIR) / name; }

// Splits named columns off a table.
std::map<std::string, std::vector<std::string>> take_columns(Table &t, const std::vector<std::string> &names,
                                                             bool required) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto &name : names) {
        auto col = t.column(name);
        if (!col) {
            if (required) {
                throw SchemaError("column '" + name + "' not found in " + (t.header.empty() ? "" : "table"));
            }
            continue;
        }
        if (*col == 0) {
            throw SchemaError("column '" + name + "' cannot be the ID column");
        }
        std::vector<std::string> values;
        for (auto &row : t.rows) {
            values.push_back(row[*col]);
            row.erase(row.begin() + static_cast<std::ptrdiff_t>(*col));
        }
        t.header.erase(t.header.begin() + static_cast<std::ptrdiff_t>(*col));
        out.emplace(name, std::move(values));
    }
    return out;
}

struct LabeledData {
    SymptomMatrix data;
    std::vector<std::string> labels;
};

LabeledData read_training(const std::string &path, const std::string &cause_column) {
    require_file(path, "training file");
    Table t = read_csv_file(path);
    auto cols = take_columns(t, {cause_column}, true);
    return {symptom_matrix_from_table(t), cols.at(cause_column)};
}

// ---------------------------------------------------------------------------
// fetch

struct FetchArgs {
    std::string source;
    std::string module = "adult";
    std::size_t rows = 0;
    std::string url;
    int timeout = 60;
    std::string output;
};

void cmd_fetch(const FetchArgs &a, const Globals &g, RunRecord &rec, std::ostream &out) {
    if (a.source != "phmrc") {
        throw ConfigError("unknown fetch source '" + a.source + "' (expected phmrc)");
    }
    auto module = parse_phmrc_module(a.module);
    FetchOptions opt;
    if (!a.url.empty()) {
        opt.url = a.url;
    }
    if (a.rows > 0) {
        opt.row_limit = a.rows;
    }
    opt.timeout_seconds = a.timeout;
    Table t = fetch_phmrc(module, opt);
    write_file_atomic(a.output, to_csv_string(t));
    rec.outputs.push_back(a.output);
    rec.manifest_anchor = a.output;
    if (!g.quiet) {
        out << "fetched " << t.height() << " records (" << t.width() << " columns) to " << a.output << "\n";
    }
}

// ---------------------------------------------------------------------------
// convert

struct ConvertArgs {
    std::string from;
    std::string cutoff = "default";
    std::string rules;
    std::string yes;
    std::string no;
    std::string missing;
    std::string cause_column = "Cause";
    bool lenient = false;
    std::string input;
    std::string output;
    std::string tally_output;
};

std::string tally_line(const SymptomTally &t) {
    return "Yes=" + std::to_string(t.yes) + " No=" + std::to_string(t.no) +
           " NotKnown=" + std::to_string(t.missing);
}

void cmd_convert(const ConvertArgs &a, const Globals &g, RunRecord &rec, std::ostream &out) {
    require_file(a.input, "input file");
    rec.inputs.push_back(a.input);
    auto policy = a.lenient ? TokenPolicy::Lenient : TokenPolicy::Strict;
    Table result;
    SymptomTally tally;
    if (a.from == "who2012" || a.from == "who2016") {
        Table raw = read_csv_file(a.input);
        auto data = a.from == "who2012" ? parse_who2012(raw, policy) : parse_who2016(raw, policy);
        tally = data.tally();
        result = symptom_matrix_to_table(data);
    } else if (a.from == "custom") {
        LabelMap labels;
        for (const auto &s : split_list(a.yes)) {
            labels.yes.insert(s);
        }
        for (const auto &s : split_list(a.no)) {
            labels.no.insert(s);
        }
        for (const auto &s : split_list(a.missing)) {
            labels.missing.insert(s);
        }
        labels.validate();
        auto conv = convert_custom(read_csv_file(a.input), labels, policy, a.cause_column);
        tally = conv.data.tally();
        result = symptom_matrix_to_table(conv.data);
        if (conv.causes) {
            result.header.push_back(a.cause_column);
            for (std::size_t i = 0; i < result.rows.size(); ++i) {
                result.rows[i].push_back((*conv.causes)[i]);
            }
        }
        if (!g.quiet && conv.stats.unrecognized > 0) {
            out << conv.stats.unrecognized << " unrecognized cells set to Missing\n";
        }
    } else if (a.from.rfind("phmrc-", 0) == 0) {
        auto module = parse_phmrc_module(a.from.substr(6));
        std::string rules_path = a.rules;
        if (rules_path.empty()) {
            rules_path = data_file("phmrc/" + std::string(to_string(module)) + "_rules.csv").string();
        }
        require_file(rules_path, "cutoff table");
        rec.inputs.push_back(rules_path);
        CutoffMode mode;
        if (a.cutoff == "default") {
            mode = CutoffMode::Default;
        } else if (a.cutoff == "adapt") {
            mode = CutoffMode::Adapt;
        } else {
            throw ConfigError("unknown cutoff mode '" + a.cutoff + "' (expected default or adapt)");
        }
        auto conv = convert_phmrc(read_csv_file(a.input), module, PhmrcCutoffTable::from_csv(rules_path), mode,
                                  a.cause_column);
        tally = conv.tally;
        result = symptom_matrix_to_table(conv.data);
        result.header.push_back(a.cause_column);
        for (std::size_t i = 0; i < result.rows.size(); ++i) {
            result.rows[i].push_back(conv.causes[i]);
        }
        if (!a.tally_output.empty()) {
            write_file_atomic(a.tally_output, to_csv_string(conv.applied.to_table()));
            rec.outputs.push_back(a.tally_output);
        }
    } else {
        throw ConfigError("unknown input format '" + a.from +
                          "' (expected who2012, who2016, phmrc-adult, phmrc-child, phmrc-neonate or custom)");
    }
    write_file_atomic(a.output, to_csv_string(result));
    rec.outputs.push_back(a.output);
    rec.manifest_anchor = a.output;
    if (!g.quiet) {
        out << tally_line(tally) << "\n";
    }
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
    std::string hierarchy;
    std::string policy = "interva4";
    int passes = 2;
    std::string neonate = "neonate";
    std::string keep = "Cause";
    std::string input;
    std::string output;
    std::string log;
};

void cmd_check(const CheckArgs &a, const Globals &g, RunRecord &rec, std::ostream &out) {
    require_file(a.input, "input file");
    std::string hpath = a.hierarchy.empty() ? data_file("hierarchy_example.csv").string() : a.hierarchy;
    require_file(hpath, "hierarchy file");
    rec.inputs.push_back(a.input);
    rec.inputs.push_back(hpath);
    if (a.passes < 1) {
        throw ConfigError("--passes must be at least 1");
    }
    Table t = read_csv_file(a.input);
    auto keep = split_list(a.keep);
    auto kept = take_columns(t, keep, false);
    auto data = symptom_matrix_from_table(t);
    require_valid(data);
    auto hierarchy = SymptomHierarchy::from_csv(hpath);
    hierarchy.validate(data.symptoms());
    CheckPolicy policy{parse_check_variant(a.policy), a.neonate};
    auto checked = data_check(data, hierarchy, policy, a.passes);
    Table result = symptom_matrix_to_table(checked.data);
    for (const auto &name : keep) {
        auto it = kept.find(name);
        if (it == kept.end()) {
            continue;
        }
        result.header.push_back(name);
        for (std::size_t i = 0; i < result.rows.size(); ++i) {
            result.rows[i].push_back(it->second[i]);
        }
    }
    write_file_atomic(a.output, to_csv_string(result));
    rec.outputs.push_back(a.output);
    if (!a.log.empty()) {
        write_file_atomic(a.log, to_csv_string(change_log_table(data, checked.changes)));
        rec.outputs.push_back(a.log);
    }
    rec.manifest_anchor = a.output;
    if (!g.quiet) {
        out << checked.changes.size() << " cells changed\n";
    }
}

// ---------------------------------------------------------------------------
// code

struct CodeArgs {
    std::string model;
    std::string input;
    std::string output;
    std::string train;
    std::string train_causes = "Cause";
    std::string data_causes = "Cause";
    std::string probbase;
    std::string prior;
    std::string grades;
    std::string convert_type = "quantile";
    bool no_remove_impossible = false;
    std::string demographic;
    // InterVA
    std::string version = "4.03";
    std::string hiv = "h";
    std::string malaria = "h";
    std::string prevalence_tags;
    bool no_rule = false;
    // NBC
    double alpha = 1.0;
    std::string nbc_missing = "absent";
    bool uniform_prior = false;
    // Tariff
    std::size_t bootstrap = 100;
    // InSilicoVA
    std::size_t nsim = 10000;
    std::size_t burn = 0;
    std::size_t thin = 20;
    bool auto_length = false;
    double indiv_ci = 0.95;
    double csmf_ci = 0.95;
    std::string subpop;
    std::string levels = "auto";
    bool draws = false;
    std::string phy_debias;
    std::string phy_cat;
    std::string phy_external = "External";
    std::string phy_unknown = "Unknown";
};

GradeTable load_grades(const CodeArgs &a, RunRecord &rec) {
    if (a.grades.empty()) {
        return GradeTable::defaults();
    }
    require_file(a.grades, "grade table");
    rec.inputs.push_back(a.grades);
    return GradeTable::from_csv(a.grades);
}

std::vector<std::string> demographic_list(const CodeArgs &a) {
    return a.demographic.empty() ? default_demographic_symptoms() : split_list(a.demographic);
}

ImpossibilityMask impossible_mask(const CodeArgs &a, const SymptomMatrix &data, const CondProbMatrix &probs) {
    if (a.no_remove_impossible) {
        return {};
    }
    auto imp = remove_impossible_causes(data, probs, demographic_list(a), !a.demographic.empty());
    return expand_mask(imp, data.rows(), probs.num_causes());
}

void cmd_code(const CodeArgs &a, const Globals &g, RunRecord &rec, std::ostream &out) {
    auto model = parse_model(a.model);
    require_file(a.input, "data file");
    rec.inputs.push_back(a.input);
    Table t = read_csv_file(a.input);
    std::vector<std::string> subpop_cols = split_list(a.subpop);
    std::vector<std::string> groups;
    if (!subpop_cols.empty()) {
        if (model != ModelKind::InSilico) {
            throw ConfigError("--subpop is only supported by the insilico model");
        }
        groups = subpop_labels(t, subpop_cols);
        take_columns(t, subpop_cols, true);
    }
    take_columns(t, {a.data_causes}, false);
    SymptomMatrix data = symptom_matrix_from_table(t);
    require_valid(data);

    std::optional<LabeledData> train;
    if (!a.train.empty()) {
        train = read_training(a.train, a.train_causes);
        rec.inputs.push_back(a.train);
        require_valid(train->data);
    }

    CodingResult result;
    const PosteriorSample *draws = nullptr;
    std::optional<InsilicoFit> insilico;
    switch (model) {
    case ModelKind::InterVA: {
        auto grades = load_grades(a, rec);
        CondProbMatrix probs;
        if (!a.probbase.empty()) {
            require_file(a.probbase, "probability table");
            rec.inputs.push_back(a.probbase);
            probs = read_condprob_csv(a.probbase, grades);
        } else if (train) {
            probs = train_condprob(train->data, train->labels, grades, parse_convert_type(a.convert_type));
        } else {
            throw ValidationError("InterVA requires built-in probability data (--probbase) or training data (--train)",
                                  "missing-training");
        }
        PriorCSMF prior = PriorCSMF::uniform(probs.num_causes());
        if (!a.prior.empty()) {
            require_file(a.prior, "prior file");
            rec.inputs.push_back(a.prior);
            prior = read_prior_csv(a.prior, probs.causes());
        }
        IntervaConfig config;
        config.version = a.version;
        if (a.version != "4.02" && a.version != "4.03" && a.version != "5") {
            throw ConfigError("unknown InterVA version '" + a.version + "' (expected 4.02, 4.03 or 5)");
        }
        config.hiv = parse_prevalence(a.hiv);
        config.malaria = parse_prevalence(a.malaria);
        if (!a.prevalence_tags.empty()) {
            require_file(a.prevalence_tags, "prevalence tag file");
            rec.inputs.push_back(a.prevalence_tags);
            config.tags = PrevalenceTags::from_csv(a.prevalence_tags);
        }
        ImpossibilityMask mask =
            train ? impossible_mask(a, data, empirical_condprob(train->data, train->labels, &probs.causes()))
                  : impossible_mask(a, data, probs);
        auto fit = interva_code(data, probs, prior, config, mask.possible.empty() ? nullptr : &mask);
        result = from_interva(fit, !a.no_rule);
        if (!g.quiet && !fit.degenerate_ids.empty()) {
            out << fit.degenerate_ids.size() << " records had zero likelihood under every cause\n";
        }
        break;
    }
    case ModelKind::NBC: {
        if (!train) {
            throw ValidationError("NBC requires training data", "missing-training");
        }
        auto nbc = nbc_train(train->data, train->labels, a.alpha);
        NbcOptions opt;
        if (a.nbc_missing == "absent") {
            opt.missing = NbcMissing::AsAbsent;
        } else if (a.nbc_missing == "skip") {
            opt.missing = NbcMissing::Skip;
        } else {
            throw ConfigError("unknown --nbc-missing '" + a.nbc_missing + "' (expected absent or skip)");
        }
        opt.uniform_prior = a.uniform_prior;
        auto mask = impossible_mask(a, data, empirical_condprob(train->data, train->labels, &nbc.probs.causes()));
        result = from_nbc(nbc_code(data, nbc, opt, mask.possible.empty() ? nullptr : &mask));
        break;
    }
    case ModelKind::Tariff: {
        if (!train) {
            throw ValidationError("Tariff requires training data", "missing-training");
        }
        if (a.bootstrap < 1) {
            throw ConfigError("--bootstrap must be at least 1");
        }
        auto tm = tariff_train(train->data, train->labels, a.bootstrap, g.seed);
        auto mask = impossible_mask(a, data, empirical_condprob(train->data, train->labels, &tm.causes));
        result = from_tariff(tariff_code(data, tm, mask.possible.empty() ? nullptr : &mask));
        break;
    }
    case ModelKind::InSilico: {
        auto grades = load_grades(a, rec);
        InsilicoInput input;
        if (!a.probbase.empty()) {
            require_file(a.probbase, "probability table");
            rec.inputs.push_back(a.probbase);
            input.probs = read_condprob_csv(a.probbase, grades);
        } else if (train) {
            input.probs = train_condprob(train->data, train->labels, grades, parse_convert_type(a.convert_type));
        } else {
            throw ValidationError("InSilicoVA requires a probability table (--probbase) or training data (--train)",
                                  "missing-training");
        }
        input.data = data;
        input.groups = groups;
        InsilicoConfig config;
        config.nsim = a.nsim;
        if (a.burn > 0) {
            config.burn = a.burn;
        }
        config.thin = a.thin;
        config.auto_length = a.auto_length;
        config.indiv_ci = a.indiv_ci;
        config.csmf_ci = a.csmf_ci;
        config.seed = g.seed;
        config.remove_impossible = !a.no_remove_impossible;
        if (!a.demographic.empty()) {
            config.demographic = split_list(a.demographic);
        }
        if (a.levels == "auto") {
            config.levels = LevelMode::Auto;
        } else if (a.levels == "fixed") {
            config.levels = LevelMode::Fixed;
        } else if (a.levels == "reestimate") {
            config.levels = LevelMode::Reestimate;
        } else {
            throw ConfigError("unknown --levels '" + a.levels + "' (expected auto, fixed or reestimate)");
        }
        if (!a.phy_debias.empty() || !a.phy_cat.empty()) {
            if (a.phy_debias.empty() || a.phy_cat.empty()) {
                throw ConfigError("--phy-debias and --phy-cat must be given together");
            }
            require_file(a.phy_debias, "physician prior");
            require_file(a.phy_cat, "category map");
            rec.inputs.push_back(a.phy_debias);
            rec.inputs.push_back(a.phy_cat);
            auto prior = CategoryPrior::from_table(read_csv_file(a.phy_debias), a.phy_unknown);
            auto map = CategoryMap::from_csv(a.phy_cat);
            const auto &causes = input.probs.causes();
            Matrix by_prior = category_prior_to_causes(prior, map, causes);
            auto ext = external_mask(prior, map, causes, a.phy_external);
            const auto N = static_cast<Eigen::Index>(data.rows());
            const auto C = static_cast<Eigen::Index>(causes.size());
            Matrix phy = Matrix::Constant(N, C, 1.0 / static_cast<double>(C));
            ImpossibilityMask mask{causes.size(), std::vector<std::uint8_t>(data.rows() * causes.size(), 1)};
            std::map<std::string, std::size_t> row_of;
            for (std::size_t i = 0; i < prior.ids.size(); ++i) {
                row_of.emplace(prior.ids[i], i);
            }
            for (std::size_t i = 0; i < data.rows(); ++i) {
                auto it = row_of.find(data.ids()[i]);
                if (it == row_of.end()) {
                    continue;
                }
                phy.row(static_cast<Eigen::Index>(i)) = by_prior.row(static_cast<Eigen::Index>(it->second));
                for (std::size_t k = 0; k < causes.size(); ++k) {
                    mask.possible[i * causes.size() + k] = ext.possible[it->second * causes.size() + k];
                }
            }
            input.physician = std::move(phy);
            input.mask = std::move(mask);
        }
        insilico = insilico_fit(input, config);
        result = from_insilico(*insilico, a.indiv_ci, a.csmf_ci);
        if (a.draws) {
            draws = &insilico->sample();
        }
        if (!g.quiet && !insilico->sample().convergence.passed) {
            out << "warning: the chain did not pass the stationarity check";
            out << (a.auto_length ? " after " + std::to_string(insilico->sample().doublings) + " doublings\n"
                                  : "; consider --auto-length or a larger --nsim\n");
        }
        break;
    }
    }
    auto written = write_result(a.output, result, ResultWriteOptions{draws});
    rec.outputs.insert(rec.outputs.end(), written.begin(), written.end());
    rec.manifest_anchor = a.output;
    rec.anchor_is_dir = true;
    if (!g.quiet) {
        out << "coded " << result.ids.size() << " records with " << to_string(model) << "; wrote "
            << written.size() << " files to " << a.output << "\n";
    }
}

// ---------------------------------------------------------------------------
// debias

struct DebiasArgs {
    std::string input;
    std::string output;
    std::string categories;
    std::string unknown = "Unknown";
    double tol = 1e-4;
    int max_itr = 100;
};

void cmd_debias(const DebiasArgs &a, const Globals &g, RunRecord &rec, std::ostream &out) {
    require_file(a.input, "physician code file");
    rec.inputs.push_back(a.input);
    if (!(a.tol > 0.0) || a.max_itr < 1) {
        throw ConfigError("--tol must be positive and --max-itr at least 1");
    }
    auto codes = PhysicianCodes::from_table(read_csv_file(a.input), split_list(a.categories), a.unknown);
    DebiasOptions opt;
    opt.tol = a.tol;
    opt.max_itr = a.max_itr;
    auto res = physician_debias(codes, opt);
    write_file_atomic(a.output, to_csv_string(debias_table(res, a.unknown)));
    rec.outputs.push_back(a.output);
    rec.manifest_anchor = a.output;
    if (!g.quiet) {
        out << "EM " << (res.converged ? "converged" : "stopped without converging") << " after "
            << res.iterations << " iterations\n";
    }
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string truth_causes = "Cause";
    std::string undetermined = "renormalize";
    std::vector<std::string> paths;
    std::string output;
};

void cmd_evaluate(const EvaluateArgs &a, const Globals &g, RunRecord &rec, std::ostream &out) {
    if (a.paths.size() < 2) {
        throw ConfigError("evaluate needs at least one result directory and a truth file");
    }
    UndeterminedMode mode;
    if (a.undetermined == "renormalize") {
        mode = UndeterminedMode::Renormalize;
    } else if (a.undetermined == "spread") {
        mode = UndeterminedMode::Spread;
    } else {
        throw ConfigError("unknown --undetermined '" + a.undetermined + "' (expected renormalize or spread)");
    }
    const std::string &truth_path = a.paths.back();
    require_file(truth_path, "truth file");
    rec.inputs.push_back(truth_path);
    Table truth = read_csv_file(truth_path);
    auto col = truth.require_column(a.truth_causes);
    std::vector<std::string> labels;
    for (const auto &row : truth.rows) {
        labels.push_back(row[col]);
    }
    Table report;
    report.header = {"result", "model", "csmf_accuracy"};
    for (std::size_t r = 0; r + 1 < a.paths.size(); ++r) {
        fs::path dir = a.paths[r];
        auto res = read_result(dir);
        rec.inputs.push_back(dir / "csmf.csv");
        std::vector<double> est;
        if (res.csmf.groups().size() == 1) {
            est = res.csmf.group(0).mean;
        } else {
            const Matrix &p = res.indiv->point();
            Vector m = p.colwise().mean().transpose();
            est.assign(m.data(), m.data() + m.size());
        }
        std::vector<std::string> causes;
        for (const auto &c : res.csmf.causes()) {
            if (c != kUndetermined) {
                causes.push_back(c);
            }
        }
        auto tc = truth_csmf(labels, causes);
        double acc = csmf_accuracy(res.csmf.causes(), est, causes, tc, std::string(kUndetermined), mode);
        report.rows.push_back({dir.string(), std::string(to_string(res.model)), format_double(acc)});
        if (!g.quiet) {
            out << dir.string() << "\t" << to_string(res.model) << "\t" << format_double(acc, 4) << "\n";
        }
    }
    if (!a.output.empty()) {
        write_file_atomic(a.output, to_csv_string(report));
        rec.outputs.push_back(a.output);
        rec.manifest_anchor = a.output;
    }
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
    std::string kind = "bar";
    std::size_t top = 10;
    std::string grouping;
    std::string order_group;
    std::string causelist;
    std::string which_sub;
    std::string title;
    bool no_undetermined = false;
    std::vector<std::string> results;
    std::string output;
};

void cmd_plot(const PlotArgs &a, const Globals &g, RunRecord &rec, std::ostream &out) {
    PlotOptions opt;
    opt.kind = parse_plot_kind(a.kind);
    opt.top = a.top;
    opt.causelist = split_list(a.causelist);
    if (!a.which_sub.empty()) {
        opt.which_sub = a.which_sub;
    }
    opt.title = a.title;
    std::optional<CauseGrouping> grouping;
    if (!a.grouping.empty()) {
        require_file(a.grouping, "grouping file");
        rec.inputs.push_back(a.grouping);
        grouping = CauseGrouping::from_csv(a.grouping).with_undetermined();
    }
    std::vector<PlotSeries> series;
    for (const auto &r : a.results) {
        fs::path dir = r;
        auto res = read_result(dir);
        rec.inputs.push_back(dir / "csmf.csv");
        CSMFEstimate csmf = get_csmf(res, !a.no_undetermined);
        if (grouping) {
            csmf = aggregate_csmf(csmf, *grouping, split_list(a.order_group));
        }
        std::string prefix = a.results.size() > 1 ? dir.filename().string() : "";
        if (prefix.empty() && a.results.size() > 1) {
            prefix = dir.parent_path().filename().string();
        }
        auto s = series_from_csmf(csmf, prefix);
        series.insert(series.end(), s.begin(), s.end());
    }
    auto plot = emit_plot(series, opt);
    fs::path dir = a.output;
    write_file_atomic(dir / (a.kind + ".svg"), plot.svg);
    write_file_atomic(dir / (a.kind + ".csv"), to_csv_string(plot.data));
    rec.outputs.push_back(dir / (a.kind + ".svg"));
    rec.outputs.push_back(dir / (a.kind + ".csv"));
    rec.manifest_anchor = dir;
    rec.anchor_is_dir = true;
    if (!g.quiet) {
        out << "wrote " << (dir / (a.kind + ".svg")).string() << "\n";
    }
}

// ---------------------------------------------------------------------------
// manifest

void write_manifest(const Globals &g, const std::string &command, const CLI::App &sub,
                    const std::vector<std::string> &args, const RunRecord &rec, const std::string &started) {
    fs::path path;
    if (!g.manifest_dir.empty()) {
        path = fs::path(g.manifest_dir) / ("manifest-" + command + ".json");
    } else if (rec.manifest_anchor) {
        path = rec.anchor_is_dir ? *rec.manifest_anchor / "manifest.json"
                                 : fs::path(rec.manifest_anchor->string() + ".manifest.json");
    } else {
        return;
    }
    json j;
    j["tool"] = "va";
    j["version"] = kToolVersion;
    j["subcommand"] = command;
    j["argv"] = args;
    j["seed"] = g.seed;
    json options = json::object();
    for (const auto *opt : sub.get_options()) {
        if (opt->count() > 0 && !opt->get_name().empty()) {
            options[opt->get_name()] = opt->results();
        }
    }
    j["options"] = options;
    json inputs = json::array();
    std::set<fs::path> seen;
    for (const auto &p : rec.inputs) {
        if (!seen.insert(p).second || !fs::is_regular_file(p)) {
            continue;
        }
        inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
    }
    j["inputs"] = inputs;
    json outputs = json::array();
    for (const auto &p : rec.outputs) {
        outputs.push_back(p.string());
    }
    j["outputs"] = outputs;
    j["started"] = started;
    j["finished"] = utc_now();
    write_file_atomic(path, j.dump(2) + "\n");
}

int exit_code(const Error &e) { return e.category() == ErrorCategory::Io ? 2 : 1; }

int run_pipeline(const std::string &config_path, const Globals &g, std::ostream &out, std::ostream &err) {
    if (!fs::exists(config_path)) {
        throw IoError("pipeline config '" + config_path + "' does not exist");
    }
    auto config = PipelineConfig::from_json(read_file(config_path));
    auto order = config.order();
    for (auto i : order) {
        const auto &stage = config.stages[i];
        if (stage.command == "pipeline") {
            throw ConfigError("stage '" + stage.name + "' cannot run a nested pipeline");
        }
        bool needs_seed = false;
        if (stage.command == "code") {
            for (std::size_t k = 0; k + 1 < stage.args.size(); ++k) {
                if (stage.args[k] == "--model" && (stage.args[k + 1] == "insilico" || stage.args[k + 1] == "tariff")) {
                    needs_seed = true;
                }
            }
            for (const auto &arg : stage.args) {
                if (arg == "--model=insilico" || arg == "--model=tariff") {
                    needs_seed = true;
                }
            }
        }
        bool has_seed = config.seed.has_value() ||
                        std::find(stage.args.begin(), stage.args.end(), "--seed") != stage.args.end();
        if (needs_seed && !has_seed) {
            throw ConfigError("stage '" + stage.name + "' runs a stochastic coder and needs a seed");
        }
    }
    for (auto i : order) {
        const auto &stage = config.stages[i];
        std::vector<std::string> args;
        if (config.seed) {
            args.push_back("--seed");
            args.push_back(std::to_string(*config.seed));
        }
        if (config.threads) {
            args.push_back("--threads");
            args.push_back(std::to_string(*config.threads));
        } else if (g.threads > 0) {
            args.push_back("--threads");
            args.push_back(std::to_string(g.threads));
        }
        if (g.quiet) {
            args.push_back("--quiet");
        }
        args.push_back(stage.command);
        args.insert(args.end(), stage.args.begin(), stage.args.end());
        if (!g.quiet) {
            out << "[" << stage.name << "] va";
            for (const auto &s : args) {
                out << " " << s;
            }
            out << "\n";
        }
        int code = run(args, out, err);
        if (code != 0) {
            err << "error[stage]: pipeline stage '" << stage.name << "' failed with exit code " << code << "\n";
            return code;
        }
    }
    if (!g.quiet) {
        out << "pipeline finished: " << order.size() << " stages\n";
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Verbal autopsy cause-of-death coding", "va"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed for stochastic coders");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");
    app.add_option("--manifest-dir", g.manifest_dir, "Directory for run manifests");

    FetchArgs fa;
    auto *fetch = app.add_subcommand("fetch", "Download a raw PHMRC table");
    fetch->add_option("source", fa.source, "Data source (phmrc)")->required();
    fetch->add_option("--module", fa.module, "adult, child or neonate");
    fetch->add_option("--rows", fa.rows, "Stop after this many records");
    fetch->add_option("--url", fa.url, "Override the download URL");
    fetch->add_option("--timeout", fa.timeout, "Timeout in seconds");
    fetch->add_option("-o,--output", fa.output, "Output CSV")->required();

    ConvertArgs ca;
    auto *convert = app.add_subcommand("convert", "Convert raw VA data to the canonical symptom CSV");
    convert->add_option("--from", ca.from, "who2012, who2016, phmrc-adult, phmrc-child, phmrc-neonate, custom")
        ->required();
    convert->add_option("--cutoff", ca.cutoff, "PHMRC cutoff mode: default or adapt");
    convert->add_option("--rules", ca.rules, "PHMRC cutoff table CSV");
    convert->add_option("--yes", ca.yes, "Comma-separated Yes tokens (custom)");
    convert->add_option("--no", ca.no, "Comma-separated No tokens (custom)");
    convert->add_option("--missing", ca.missing, "Comma-separated Missing tokens (custom)");
    convert->add_option("--cause-column", ca.cause_column, "Cause label column");
    convert->add_flag("--lenient", ca.lenient, "Unrecognized tokens become Missing");
    convert->add_option("--applied-cutoffs", ca.tally_output, "Write the cutoffs actually applied (PHMRC)");
    convert->add_option("input", ca.input, "Input CSV")->required();
    convert->add_option("-o,--output", ca.output, "Output CSV")->required();

    CheckArgs ka;
    auto *check = app.add_subcommand("check", "Apply the hierarchy consistency check");
    check->add_option("--hierarchy", ka.hierarchy, "Hierarchy CSV");
    check->add_option("--policy", ka.policy, "interva4, interva5 or insilico");
    check->add_option("--passes", ka.passes, "Number of passes");
    check->add_option("--neonate-symptom", ka.neonate, "Record-level neonate indicator");
    check->add_option("--keep", ka.keep, "Comma-separated non-symptom columns carried through unchanged");
    check->add_option("input", ka.input, "Canonical symptom CSV")->required();
    check->add_option("-o,--output", ka.output, "Checked CSV")->required();
    check->add_option("--log", ka.log, "Change log CSV");

    CodeArgs da;
    auto *code = app.add_subcommand("code", "Assign causes of death");
    code->add_option("--model", da.model, "interva, nbc, tariff or insilico")->required();
    code->add_option("input", da.input, "Canonical symptom CSV")->required();
    code->add_option("-o,--output", da.output, "Output directory")->required();
    code->add_option("--train", da.train, "Labeled training CSV");
    code->add_option("--train-causes", da.train_causes, "Cause column of the training CSV");
    code->add_option("--data-causes", da.data_causes, "Label column dropped from the data if present");
    code->add_option("--probbase", da.probbase, "Conditional probability table CSV");
    code->add_option("--prior", da.prior, "Prior CSV (cause,prior)");
    code->add_option("--grades", da.grades, "Grade table CSV");
    code->add_option("--convert-type", da.convert_type, "quantile, fixed or empirical");
    code->add_flag("--no-remove-impossible", da.no_remove_impossible, "Keep demographically impossible causes");
    code->add_option("--demographic", da.demographic, "Comma-separated demographic symptoms");
    code->add_option("--version", da.version, "InterVA version: 4.02, 4.03 or 5");
    code->add_option("--hiv", da.hiv, "HIV prevalence: h, l or v");
    code->add_option("--malaria", da.malaria, "Malaria prevalence: h, l or v");
    code->add_option("--prevalence-tags", da.prevalence_tags, "CSV cause,tag (hiv or malaria)");
    code->add_flag("--no-rule", da.no_rule, "Skip InterVA post-processing (no Undetermined)");
    code->add_option("--alpha", da.alpha, "NBC Laplace smoothing");
    code->add_option("--nbc-missing", da.nbc_missing, "absent or skip");
    code->add_flag("--uniform-prior", da.uniform_prior, "NBC with a uniform cause prior");
    code->add_option("--bootstrap", da.bootstrap, "Tariff reference resamples per cause");
    code->add_option("--nsim", da.nsim, "InSilicoVA iterations");
    code->add_option("--burn", da.burn, "Burn-in iterations (default nsim/2)");
    code->add_option("--thin", da.thin, "Thinning interval");
    code->add_flag("--auto-length", da.auto_length, "Double the chain until it passes the stationarity check");
    code->add_option("--indiv-ci", da.indiv_ci, "Individual credible interval level");
    code->add_option("--csmf-ci", da.csmf_ci, "CSMF credible interval level");
    code->add_option("--subpop", da.subpop, "Comma-separated sub-population columns");
    code->add_option("--levels", da.levels, "auto, fixed or reestimate");
    code->add_flag("--draws", da.draws, "Write draws.csv");
    code->add_option("--phy-debias", da.phy_debias, "Debiased physician prior CSV");
    code->add_option("--phy-cat", da.phy_cat, "Category map CSV (cause,category)");
    code->add_option("--phy-external", da.phy_external, "External category label");
    code->add_option("--phy-unknown", da.phy_unknown, "Unknown category label");

    DebiasArgs ba;
    auto *debias = app.add_subcommand("debias", "Combine physician codes into per-death category priors");
    debias->add_option("input", ba.input, "CSV ID, code1, rev1, code2, rev2, ...")->required();
    debias->add_option("-o,--output", ba.output, "Output CSV")->required();
    debias->add_option("--categories", ba.categories, "Comma-separated category list");
    debias->add_option("--unknown", ba.unknown, "Unknown category label");
    debias->add_option("--tol", ba.tol, "Relative log-likelihood tolerance");
    debias->add_option("--max-itr", ba.max_itr, "Maximum EM iterations");

    EvaluateArgs ea;
    auto *evaluate = app.add_subcommand("evaluate", "CSMF accuracy against labeled data");
    evaluate->add_option("--truth-causes", ea.truth_causes, "Cause column of the truth CSV");
    evaluate->add_option("--undetermined", ea.undetermined, "renormalize or spread");
    evaluate->add_option("paths", ea.paths, "Result directories followed by the truth CSV")->required();
    evaluate->add_option("-o,--output", ea.output, "Report CSV");

    PlotArgs pa;
    auto *plot = app.add_subcommand("plot", "Plot CSMFs as SVG with the plotted numbers as CSV");
    plot->add_option("--kind", pa.kind, "bar, stacked, dodge, compare or subpop");
    plot->add_option("--top", pa.top, "Causes per series");
    plot->add_option("--grouping", pa.grouping, "Cause grouping CSV (cause,group)");
    plot->add_option("--order-group", pa.order_group, "Comma-separated group order");
    plot->add_option("--causelist", pa.causelist, "Comma-separated causes to plot");
    plot->add_option("--which-sub", pa.which_sub, "Sub-population to plot");
    plot->add_option("--title", pa.title, "Plot title");
    plot->add_flag("--no-undetermined", pa.no_undetermined, "Drop Undetermined and renormalize");
    plot->add_option("results", pa.results, "Result directories")->required();
    plot->add_option("-o,--output", pa.output, "Output directory")->required();

    std::string pipeline_config;
    auto *pipeline = app.add_subcommand("pipeline", "Run stages from a JSON config");
    pipeline->add_option("config", pipeline_config, "Pipeline config JSON")->required();

    std::vector<std::string> argv_storage{"va"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto &s : argv_storage) {
        argv.push_back(s.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return 0;
        }
        err << "error[usage]: " << e.what() << "\n";
        err << app.help();
        return 1;
    }
    g.seed_given = app.count("--seed") > 0;

    std::string started = utc_now();
    try {
        set_thread_count(g.threads > 0 ? static_cast<std::size_t>(g.threads)
                                       : std::max(1u, std::thread::hardware_concurrency()));
        RunRecord rec;
        CLI::App *sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "fetch") {
            cmd_fetch(fa, g, rec, out);
        } else if (name == "convert") {
            cmd_convert(ca, g, rec, out);
        } else if (name == "check") {
            cmd_check(ka, g, rec, out);
        } else if (name == "code") {
            cmd_code(da, g, rec, out);
        } else if (name == "debias") {
            cmd_debias(ba, g, rec, out);
        } else if (name == "evaluate") {
            cmd_evaluate(ea, g, rec, out);
        } else if (name == "plot") {
            cmd_plot(pa, g, rec, out);
        } else if (name == "pipeline") {
            int code = run_pipeline(pipeline_config, g, out, err);
            if (code == 0 && !g.manifest_dir.empty()) {
                rec.inputs.push_back(pipeline_config);
                write_manifest(g, name, *sub, args, rec, started);
            }
            return code;
        }
        write_manifest(g, name, *sub, args, rec, started);
        return 0;
    } catch (const Error &e) {
        err << "error[" << e.code() << "]: " << e.what() << "\n";
        return exit_code(e);
    } catch (const fs::filesystem_error &e) {
        err << "error[io]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        err << "error[internal]: " << e.what() << "\n";
        return 1;
    }
}

} // namespace va
