#pragma once

#include "va/core.hpp"
#include "va/insilico.hpp"
#include "va/interva.hpp"
#include "va/nbc.hpp"
#include "va/tariff.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace va {

enum class ModelKind { InterVA, NBC, Tariff, InSilico };

std::string_view to_string(ModelKind model) noexcept;
ModelKind parse_model(std::string_view name);

// A coder's output in a model-independent shape. Every coder reports over its
// full cause list; causes removed as impossible carry zero mass.
struct CodingResult {
    ModelKind model = ModelKind::InterVA;
    std::vector<std::string> ids;
    std::vector<std::string> causes;
    // Per-death distributions (InterVA with a trailing Undetermined column,
    // NBC, InSilicoVA with quantiles). Absent for Tariff.
    std::optional<IndivProbResult> indiv;
    // N x C ranks, Tariff only.
    std::optional<Matrix> ranks;
    CSMFEstimate csmf;
    // Serialized JSON (InSilicoVA sampler diagnostics); empty otherwise.
    std::string diagnostics;
};

// `rule` = false reports the raw posteriors without the Undetermined column.
CodingResult from_interva(const IntervaFit &fit, bool rule = true);
CodingResult from_nbc(const NbcFit &fit);
CodingResult from_tariff(const TariffFit &fit);
CodingResult from_insilico(const InsilicoFit &fit, double indiv_ci, double csmf_ci);

struct ResultWriteOptions {
    // InSilicoVA: also write draws.csv.
    const PosteriorSample *draws = nullptr;
};

// Writes csmf.csv, top_cod.csv and indiv_prob.csv / ranks.csv /
// indiv_prob_{mean,median,lower,upper}.csv (+ diagnostics.json) under `dir`.
// Returns the written paths.
std::vector<std::filesystem::path> write_result(const std::filesystem::path &dir,
                                                const CodingResult &result,
                                                const ResultWriteOptions &options = {});
CodingResult read_result(const std::filesystem::path &dir);

// csmf.csv: group,cause,Mean[,Std.Error,Lower,Median,Upper].
Table csmf_table(const CSMFEstimate &csmf);
CSMFEstimate csmf_from_table(const Table &table);
Table draws_table(const PosteriorSample &sample);

} // namespace va
