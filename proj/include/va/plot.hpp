#pragma once

#include "va/core.hpp"
#include "va/csv.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace va {

enum class PlotKind { Bar, Stacked, Dodge, Compare, Subpop };
PlotKind parse_plot_kind(std::string_view name);

struct PlotSeries {
    std::string label;
    std::vector<std::string> causes;
    std::vector<double> values;
    std::optional<std::vector<double>> lower;
    std::optional<std::vector<double>> upper;
};

// One series per group; labels are "<prefix> <group>" when a prefix is given
// and there is more than one group, else the group or the prefix alone.
std::vector<PlotSeries> series_from_csmf(const CSMFEstimate &csmf, const std::string &prefix = "");

struct PlotOptions {
    PlotKind kind = PlotKind::Bar;
    std::size_t top = 10;
    // Restricts the plotted causes, in this order.
    std::vector<std::string> causelist;
    // Selects one series by label.
    std::optional<std::string> which_sub;
    std::string title;
};

struct PlotOutput {
    std::string svg;
    // series,cause_or_group,value[,lower,upper]
    Table data;
};

// Bar: top-k causes of one series, descending. Compare: union of each
// series' top-k, grouped by cause. Dodge: every cause, grouped. Stacked: one
// bar per series with segments normalized to unit sum. Subpop: bar of
// `which_sub`, or compare over all series.
PlotOutput emit_plot(const std::vector<PlotSeries> &series, const PlotOptions &options);

} // namespace va
