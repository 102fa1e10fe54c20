#pragma once

#include <algorithm>
#include <iomanip>
#include <numeric>

#include "segmentor/trainer.hpp"

namespace seg {

// Mean boundary losses (frames, tau = 0) plus tolerance-table rows: for each
// threshold t (ms), the proportion of items whose onset / offset / both
// boundary errors fall at or below t.
struct EvalReport {
    std::string model_id;
    std::string split;
    std::size_t items = 0;
    double mean_onset = 0.0, mean_offset = 0.0, mean_cd = 0.0;
    std::vector<double> tolerances_ms;
    std::vector<double> onset_prop, offset_prop, both_prop;
    std::vector<std::string> item_ids;  // sorted
};

inline EvalReport evaluate(const SegmenterModel& model, const LoadedDataset& ds,
                           std::vector<double> tolerances_ms, const std::string& model_id,
                           const std::string& split) {
    if (ds.seqs.empty()) throw DataError("evaluate: empty split");
    std::sort(tolerances_ms.begin(), tolerances_ms.end());

    // canonical item order makes the report independent of manifest order
    std::vector<std::size_t> order(ds.seqs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ds.seqs[a].source_id < ds.seqs[b].source_id;
    });

    EvalReport rep;
    rep.model_id = model_id;
    rep.split = split;
    rep.items = ds.seqs.size();
    rep.tolerances_ms = tolerances_ms;
    rep.onset_prop.assign(tolerances_ms.size(), 0.0);
    rep.offset_prop.assign(tolerances_ms.size(), 0.0);
    rep.both_prop.assign(tolerances_ms.size(), 0.0);

    for (std::size_t idx : order) {
        const FeatureSequence& seq = ds.seqs[idx];
        rep.item_ids.push_back(seq.source_id);
        TimingPair pred = predict_pair(model, seq);
        CdLoss frames = cd_loss(ds.labels[idx], pred, 0);
        rep.mean_onset += frames.onset;
        rep.mean_offset += frames.offset;
        double onset_ms = frames.onset * seq.frame_period_ms;
        double offset_ms = frames.offset * seq.frame_period_ms;
        for (std::size_t k = 0; k < tolerances_ms.size(); ++k) {
            bool on_ok = onset_ms <= tolerances_ms[k];
            bool off_ok = offset_ms <= tolerances_ms[k];
            rep.onset_prop[k] += on_ok;
            rep.offset_prop[k] += off_ok;
            rep.both_prop[k] += on_ok && off_ok;
        }
    }
    const double n = static_cast<double>(rep.items);
    rep.mean_onset /= n;
    rep.mean_offset /= n;
    rep.mean_cd = rep.mean_onset + rep.mean_offset;
    for (std::size_t k = 0; k < tolerances_ms.size(); ++k) {
        rep.onset_prop[k] /= n;
        rep.offset_prop[k] /= n;
        rep.both_prop[k] /= n;
    }
    return rep;
}

namespace detail {

inline std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline void require_comparable(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw DataError("no reports to compare");
    for (const auto& r : reports) {
        if (r.split != reports[0].split)
            throw DataError("cannot compare reports across splits: " + r.split + " vs " +
                            reports[0].split);
        if (r.items != reports[0].items || r.item_ids != reports[0].item_ids)
            throw DataError("cannot compare reports over different item sets");
        if (r.tolerances_ms != reports[0].tolerances_ms)
            throw DataError("cannot compare reports with different tolerance lists");
    }
}

struct ComparisonRow {
    std::string label;
    std::vector<double> values;  // one per model
};

inline std::vector<ComparisonRow> comparison_rows(const std::vector<EvalReport>& reports) {
    require_comparable(reports);
    std::vector<ComparisonRow> rows;
    auto collect = [&](const std::string& label, auto&& get) {
        ComparisonRow row{label, {}};
        for (const auto& r : reports) row.values.push_back(get(r));
        rows.push_back(std::move(row));
    };
    collect("Onset", [](const EvalReport& r) { return r.mean_onset; });
    collect("Offset", [](const EvalReport& r) { return r.mean_offset; });
    collect("CD", [](const EvalReport& r) { return r.mean_cd; });
    for (std::size_t k = 0; k < reports[0].tolerances_ms.size(); ++k) {
        char tbuf[32];
        std::snprintf(tbuf, sizeof(tbuf), "t<=%gms", reports[0].tolerances_ms[k]);
        std::string t = tbuf;
        collect("onset " + t, [k](const EvalReport& r) { return r.onset_prop[k]; });
        collect("offset " + t, [k](const EvalReport& r) { return r.offset_prop[k]; });
        collect("both " + t, [k](const EvalReport& r) { return r.both_prop[k]; });
    }
    return rows;
}

}  // namespace detail

// Tab-separated grid: header row of model ids, then one row per metric,
// floats with 4 decimals. A single report is a one-column comparison.
inline std::string render_tsv(const std::vector<EvalReport>& reports) {
    auto rows = detail::comparison_rows(reports);
    std::ostringstream os;
    os << "metric";
    for (const auto& r : reports) os << '\t' << r.model_id;
    os << '\n';
    os << "items";
    for (const auto& r : reports) os << '\t' << r.items;
    os << '\n';
    for (const auto& row : rows) {
        os << row.label;
        for (double v : row.values) os << '\t' << detail::fixed4(v);
        os << '\n';
    }
    return os.str();
}

inline std::string render_tsv(const EvalReport& report) { return render_tsv(std::vector{report}); }

// Human-readable aligned table with the same content: mean Onset/Offset/CD
// rows (frames), then the tolerance block (proportions).
inline std::string render_text(const std::vector<EvalReport>& reports) {
    auto rows = detail::comparison_rows(reports);
    std::size_t label_w = 8;
    for (const auto& row : rows) label_w = std::max(label_w, row.label.size());
    std::vector<std::size_t> col_w;
    for (const auto& r : reports) col_w.push_back(std::max<std::size_t>(8, r.model_id.size()));

    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(label_w + 2)) << "metric";
    for (std::size_t c = 0; c < reports.size(); ++c)
        os << std::right << std::setw(static_cast<int>(col_w[c] + 2)) << reports[c].model_id;
    os << '\n';
    os << std::left << std::setw(static_cast<int>(label_w + 2)) << "items";
    for (std::size_t c = 0; c < reports.size(); ++c)
        os << std::right << std::setw(static_cast<int>(col_w[c] + 2)) << reports[c].items;
    os << '\n';
    auto hr = [&](std::size_t n) {
        os << std::string(n, '-') << '\n';
    };
    std::size_t total_w = label_w + 2;
    for (std::size_t c = 0; c < reports.size(); ++c) total_w += col_w[c] + 2;
    hr(total_w);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 3) hr(total_w);  // split means from the tolerance block
        os << std::left << std::setw(static_cast<int>(label_w + 2)) << rows[i].label;
        for (std::size_t c = 0; c < reports.size(); ++c)
            os << std::right << std::setw(static_cast<int>(col_w[c] + 2))
               << detail::fixed4(rows[i].values[c]);
        os << '\n';
    }
    return os.str();
}

inline std::string render_text(const EvalReport& report) {
    return render_text(std::vector{report});
}

inline const std::vector<double>& default_tolerances_ms() {
    static const std::vector<double> t{2.0, 5.0, 10.0, 15.0, 25.0, 50.0};
    return t;
}

}  // namespace seg
