#include "va/plot.hpp"
#include "va/error.hpp"

#include <algorithm>
#include <numeric>

namespace va {

PlotKind parse_plot_kind(std::string_view name) {
    if (name == "bar") {
        return PlotKind::Bar;
    }
    if (name == "stacked") {
        return PlotKind::Stacked;
    }
    if (name == "dodge") {
        return PlotKind::Dodge;
    }
    if (name == "compare") {
        return PlotKind::Compare;
    }
    if (name == "subpop") {
        return PlotKind::Subpop;
    }
    throw ConfigError("unknown plot kind '" + std::string(name) +
                      "' (expected bar, stacked, dodge, compare or subpop)");
}

std::vector<PlotSeries> series_from_csmf(const CSMFEstimate &csmf, const std::string &prefix) {
    std::vector<PlotSeries> out;
    const bool many = csmf.groups().size() > 1;
    for (std::size_t g = 0; g < csmf.groups().size(); ++g) {
        const auto &v = csmf.group(g);
        PlotSeries s;
        if (prefix.empty()) {
            s.label = csmf.groups()[g];
        } else {
            s.label = many ? prefix + " " + csmf.groups()[g] : prefix;
        }
        s.causes = csmf.causes();
        s.values = v.mean;
        s.lower = v.lower;
        s.upper = v.upper;
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

constexpr const char *kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
                                    "#a6761d", "#666666", "#1f78b4", "#b2df8a", "#fb9a99", "#cab2d6"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

constexpr double kLeft = 230.0;
constexpr double kPlotWidth = 420.0;
constexpr double kRight = 70.0;
constexpr double kTop = 40.0;
constexpr double kBar = 12.0;
constexpr double kGap = 8.0;

std::string num(double v) { return format_double(v, 6); }

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out.push_back(c);
        }
    }
    return out;
}

struct Svg {
    std::string body;
    double width = kLeft + kPlotWidth + kRight;

    void rect(double x, double y, double w, double h, const char *fill) {
        body += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
                num(h) + "\" fill=\"" + fill + "\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2) {
        body += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
                num(y2) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    }
    void text(double x, double y, std::string_view s, const char *anchor = "start", int size = 11) {
        body += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
                "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
    }
    std::string finish(double height, const std::string &title) const {
        std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
                          "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
                          num(height) + "\" font-family=\"sans-serif\">\n";
        out += "<rect x=\"0\" y=\"0\" width=\"" + num(width) + "\" height=\"" + num(height) +
               "\" fill=\"#ffffff\"/>\n";
        if (!title.empty()) {
            out += "<text x=\"" + num(width / 2) + "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" +
                   escape(title) + "</text>\n";
        }
        return out + body + "</svg>\n";
    }
};

const PlotSeries &select(const std::vector<PlotSeries> &series, const std::string &label) {
    for (const auto &s : series) {
        if (s.label == label) {
            return s;
        }
    }
    std::string valid;
    for (const auto &s : series) {
        valid += (valid.empty() ? "" : ", ") + s.label;
    }
    throw ConfigError("unknown sub-population '" + label + "' (valid: " + valid + ")");
}

// Indices into s.causes of the plotted causes, honoring the causelist.
std::vector<std::size_t> candidate_causes(const PlotSeries &s, const std::vector<std::string> &causelist) {
    std::vector<std::size_t> idx;
    if (causelist.empty()) {
        idx.resize(s.causes.size());
        std::iota(idx.begin(), idx.end(), 0);
        return idx;
    }
    for (const auto &c : causelist) {
        auto it = std::find(s.causes.begin(), s.causes.end(), c);
        if (it == s.causes.end()) {
            throw ConfigError("cause '" + c + "' is not in series '" + s.label + "'");
        }
        idx.push_back(static_cast<std::size_t>(it - s.causes.begin()));
    }
    return idx;
}

std::vector<std::size_t> top_causes(const PlotSeries &s, const PlotOptions &o) {
    auto idx = candidate_causes(s, o.causelist);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return s.values[a] > s.values[b]; });
    if (o.top > 0 && idx.size() > o.top) {
        idx.resize(o.top);
    }
    return idx;
}

double value_of(const PlotSeries &s, const std::string &cause, std::size_t *pos = nullptr) {
    auto it = std::find(s.causes.begin(), s.causes.end(), cause);
    if (it == s.causes.end()) {
        throw ConfigError("cause '" + cause + "' is missing from series '" + s.label + "'");
    }
    if (pos) {
        *pos = static_cast<std::size_t>(it - s.causes.begin());
    }
    return s.values[static_cast<std::size_t>(it - s.causes.begin())];
}

// Horizontal grouped bars: one block per cause, one bar per series.
PlotOutput grouped(const std::vector<const PlotSeries *> &series, const std::vector<std::string> &causes,
                   const std::string &title) {
    PlotOutput out;
    bool intervals = std::all_of(series.begin(), series.end(),
                                 [](const PlotSeries *s) { return s->lower && s->upper; });
    out.data.header = {"series", "cause_or_group", "value"};
    if (intervals) {
        out.data.header.insert(out.data.header.end(), {"lower", "upper"});
    }
    double vmax = 0.0;
    for (const auto *s : series) {
        for (const auto &c : causes) {
            std::size_t k = 0;
            double v = value_of(*s, c, &k);
            vmax = std::max(vmax, intervals ? std::max(v, (*s->upper)[k]) : v);
        }
    }
    if (!(vmax > 0.0)) {
        vmax = 1.0;
    }
    Svg svg;
    const double block = static_cast<double>(series.size()) * kBar + kGap;
    double y = kTop;
    for (const auto &c : causes) {
        svg.text(kLeft - 6, y + block / 2 - kGap / 2 + 4, c, "end");
        for (std::size_t j = 0; j < series.size(); ++j) {
            const auto &s = *series[j];
            std::size_t k = 0;
            double v = value_of(s, c, &k);
            double by = y + static_cast<double>(j) * kBar;
            svg.rect(kLeft, by + 1, v / vmax * kPlotWidth, kBar - 2, kPalette[j % kPaletteSize]);
            std::vector<std::string> row{s.label, c, format_double(v)};
            if (intervals) {
                double lo = (*s.lower)[k];
                double hi = (*s.upper)[k];
                svg.line(kLeft + lo / vmax * kPlotWidth, by + kBar / 2, kLeft + hi / vmax * kPlotWidth,
                         by + kBar / 2);
                row.push_back(format_double(lo));
                row.push_back(format_double(hi));
            }
            svg.text(kLeft + v / vmax * kPlotWidth + 4, by + kBar - 2, num(v), "start", 9);
            out.data.rows.push_back(std::move(row));
        }
        y += block;
    }
    svg.line(kLeft, kTop, kLeft, y);
    y += 10;
    if (series.size() > 1) {
        for (std::size_t j = 0; j < series.size(); ++j) {
            svg.rect(kLeft, y, 10, 10, kPalette[j % kPaletteSize]);
            svg.text(kLeft + 16, y + 9, series[j]->label);
            y += 16;
        }
    }
    out.svg = svg.finish(y + 10, title);
    return out;
}

PlotOutput stacked(const std::vector<PlotSeries> &series, const PlotOptions &o) {
    PlotOutput out;
    out.data.header = {"series", "cause_or_group", "value"};
    Svg svg;
    double y = kTop;
    const auto &causes = series.front().causes;
    for (const auto &s : series) {
        auto idx = candidate_causes(s, o.causelist);
        double total = 0.0;
        for (auto k : idx) {
            total += s.values[k];
        }
        svg.text(kLeft - 6, y + 14, s.label, "end");
        double x = kLeft;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            double share = total > 0.0 ? s.values[idx[j]] / total : 0.0;
            svg.rect(x, y, share * kPlotWidth, 20, kPalette[j % kPaletteSize]);
            x += share * kPlotWidth;
            out.data.rows.push_back({s.label, s.causes[idx[j]], format_double(share)});
        }
        y += 28;
    }
    y += 10;
    auto idx = candidate_causes(series.front(), o.causelist);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        svg.rect(kLeft, y, 10, 10, kPalette[j % kPaletteSize]);
        svg.text(kLeft + 16, y + 9, causes[idx[j]]);
        y += 16;
    }
    out.svg = svg.finish(y + 10, o.title);
    return out;
}

} // namespace

PlotOutput emit_plot(const std::vector<PlotSeries> &series, const PlotOptions &o) {
    if (series.empty()) {
        throw ValidationError("nothing to plot: no result series");
    }
    for (const auto &s : series) {
        if (s.causes.size() != s.values.size()) {
            throw ValidationError("series '" + s.label + "' has mismatched causes and values");
        }
    }
    std::vector<const PlotSeries *> chosen;
    if (o.which_sub) {
        chosen.push_back(&select(series, *o.which_sub));
    } else {
        for (const auto &s : series) {
            chosen.push_back(&s);
        }
    }
    PlotKind kind = o.kind;
    if (kind == PlotKind::Subpop) {
        kind = chosen.size() == 1 ? PlotKind::Bar : PlotKind::Compare;
    }
    switch (kind) {
    case PlotKind::Bar: {
        if (chosen.size() != 1) {
            std::string valid;
            for (const auto &s : series) {
                valid += (valid.empty() ? "" : ", ") + s.label;
            }
            throw ConfigError("a bar plot shows one series; choose one with which_sub (valid: " + valid +
                              ")");
        }
        std::vector<std::string> causes;
        for (auto k : top_causes(*chosen[0], o)) {
            causes.push_back(chosen[0]->causes[k]);
        }
        return grouped(chosen, causes, o.title);
    }
    case PlotKind::Compare: {
        if (chosen.size() < 2 && !o.which_sub) {
            throw ConfigError("a compare plot needs at least two series or a which_sub label");
        }
        std::vector<std::string> causes;
        for (const auto *s : chosen) {
            for (auto k : top_causes(*s, o)) {
                if (std::find(causes.begin(), causes.end(), s->causes[k]) == causes.end()) {
                    causes.push_back(s->causes[k]);
                }
            }
        }
        return grouped(chosen, causes, o.title);
    }
    case PlotKind::Dodge: {
        const auto &first = *chosen.front();
        std::vector<std::string> causes;
        for (auto k : candidate_causes(first, o.causelist)) {
            causes.push_back(first.causes[k]);
        }
        return grouped(chosen, causes, o.title);
    }
    case PlotKind::Stacked: {
        std::vector<PlotSeries> copies;
        for (const auto *s : chosen) {
            copies.push_back(*s);
        }
        return stacked(copies, o);
    }
    case PlotKind::Subpop:
        break;
    }
    throw ConfigError("unsupported plot kind");
}

} // namespace va
