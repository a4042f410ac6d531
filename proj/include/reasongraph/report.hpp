#pragma once
// Batch analytics over metric rows: per-condition aggregates, step-count
// distributions, and Pearson correlations between graph metrics and task
// correctness. Output shapes are documented in FORMATS.md.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "reasongraph/errors.hpp"
#include "reasongraph/metrics.hpp"
#include "reasongraph/util.hpp"

namespace reasongraph {

struct GroupKey {
    std::string model_id;
    PromptRegime prompt_regime = PromptRegime::zero_shot;
    unsigned shot_count = 0;

    auto tie() const { return std::tie(model_id, prompt_regime, shot_count); }
    bool operator<(const GroupKey& other) const { return tie() < other.tie(); }
    bool operator==(const GroupKey& other) const { return tie() == other.tie(); }

    std::string label() const {
        std::string raw = model_id + "_" + to_string(prompt_regime) + "_" + std::to_string(shot_count);
        for (char& c : raw)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') c = '-';
        return raw;
    }
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // sample std (n-1); 0 when n < 2
    size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& values) {
    MeanStd s;
    s.n = values.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

struct ConditionAggregate {
    GroupKey key;
    size_t n_traces = 0;
    size_t n_labeled = 0;
    std::optional<double> accuracy; // absent when no row has a correctness label
    MeanStd rho_e;                  // over rows where density is defined
    MeanStd gamma_b;
    MeanStd gamma_c;
    MeanStd linearity;
    double mean_steps = 0.0;
    std::optional<double> mean_total_tokens; // present only when rows carry token counts
};

inline std::vector<ConditionAggregate> aggregate(const std::vector<MetricRow>& rows) {
    if (rows.empty()) throw Error("aggregate: rows must be nonempty");
    std::map<GroupKey, std::vector<const MetricRow*>> groups;
    for (const auto& row : rows)
        groups[{row.model_id, row.prompt_regime, row.shot_count}].push_back(&row);

    std::vector<ConditionAggregate> out;
    for (const auto& [key, members] : groups) {
        ConditionAggregate agg;
        agg.key = key;
        agg.n_traces = members.size();
        std::vector<double> rho, gb, gc, lin, steps, tokens;
        size_t correct_count = 0;
        for (const auto* row : members) {
            if (row->rho_e) rho.push_back(*row->rho_e);
            gb.push_back(row->gamma_b);
            gc.push_back(row->gamma_c);
            lin.push_back(row->linearity);
            steps.push_back(static_cast<double>(row->step_count));
            if (row->total_tokens) tokens.push_back(*row->total_tokens);
            if (row->correct) {
                agg.n_labeled++;
                if (*row->correct) ++correct_count;
            }
        }
        if (agg.n_labeled > 0)
            agg.accuracy = static_cast<double>(correct_count) / static_cast<double>(agg.n_labeled);
        agg.rho_e = mean_std(rho);
        agg.gamma_b = mean_std(gb);
        agg.gamma_c = mean_std(gc);
        agg.linearity = mean_std(lin);
        agg.mean_steps = mean_std(steps).mean;
        if (!tokens.empty()) agg.mean_total_tokens = mean_std(tokens).mean;
        out.push_back(std::move(agg));
    }
    return out;
}

struct PearsonResult {
    double r = 0.0;
    std::optional<double> p; // two-sided, t-distribution with n-2 df; absent for n < 3
    size_t n = 0;
};

// Textbook two-pass sample Pearson coefficient.
inline PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error("pearson: series lengths differ");
    size_t n = x.size();
    if (n < 2) throw Error("pearson: need at least 2 points");

    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("pearson: constant series");

    PearsonResult result;
    result.n = n;
    result.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (n >= 3) {
        double denom = 1.0 - result.r * result.r;
        if (denom <= 0.0) {
            result.p = 0.0;
        } else {
            double t = result.r * std::sqrt(static_cast<double>(n - 2) / denom);
            boost::math::students_t dist(static_cast<double>(n - 2));
            result.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
        }
    }
    return result;
}

struct MetricCorrelation {
    std::string metric;
    std::optional<PearsonResult> result; // absent when the series was degenerate
};

struct CorrelationReport {
    std::string unit; // "per_trace" or "per_condition"
    size_t n = 0;
    std::vector<MetricCorrelation> metrics;
};

namespace detail {

inline CorrelationReport correlate_series(
    const std::vector<std::pair<std::string, std::vector<std::optional<double>>>>& metric_series,
    const std::vector<double>& target, const std::string& unit) {
    CorrelationReport report;
    report.unit = unit;
    report.n = target.size();
    for (const auto& [name, series] : metric_series) {
        std::vector<double> xs, ys;
        for (size_t i = 0; i < series.size(); ++i) {
            if (series[i]) {
                xs.push_back(*series[i]);
                ys.push_back(target[i]);
            }
        }
        MetricCorrelation mc;
        mc.metric = name;
        try {
            if (xs.size() >= 2) mc.result = pearson(xs, ys);
        } catch (const DegenerateInput&) {
            // reported as absent
        }
        report.metrics.push_back(std::move(mc));
    }
    return report;
}

} // namespace detail

// Point-biserial Pearson of each metric against the binary correctness
// label, over labeled rows. Throws DegenerateInput when fewer than 3 labeled
// rows exist or every label is identical.
inline CorrelationReport correlate_metrics_with_accuracy(const std::vector<MetricRow>& rows) {
    std::vector<const MetricRow*> labeled;
    for (const auto& row : rows)
        if (row.correct) labeled.push_back(&row);
    if (labeled.size() < 3) throw DegenerateInput("correlation needs at least 3 labeled rows");

    std::vector<double> target;
    bool any_true = false, any_false = false;
    for (const auto* row : labeled) {
        target.push_back(*row->correct ? 1.0 : 0.0);
        (*row->correct ? any_true : any_false) = true;
    }
    if (!any_true || !any_false) throw DegenerateInput("correctness labels are constant");

    std::vector<std::pair<std::string, std::vector<std::optional<double>>>> series{
        {"rho_E", {}}, {"gamma_B", {}}, {"gamma_C", {}}, {"linearity", {}}};
    for (const auto* row : labeled) {
        series[0].second.push_back(row->rho_e);
        series[1].second.push_back(row->gamma_b);
        series[2].second.push_back(row->gamma_c);
        series[3].second.push_back(row->linearity);
    }
    return detail::correlate_series(series, target, "per_trace");
}

// Condition-level variant: group means against group accuracy.
inline CorrelationReport correlate_conditions_with_accuracy(const std::vector<ConditionAggregate>& aggs) {
    std::vector<const ConditionAggregate*> labeled;
    for (const auto& a : aggs)
        if (a.accuracy) labeled.push_back(&a);
    if (labeled.size() < 3) throw DegenerateInput("condition-level correlation needs at least 3 labeled groups");

    std::vector<double> target;
    for (const auto* a : labeled) target.push_back(*a->accuracy);

    std::vector<std::pair<std::string, std::vector<std::optional<double>>>> series{
        {"rho_E", {}}, {"gamma_B", {}}, {"gamma_C", {}}, {"linearity", {}}};
    for (const auto* a : labeled) {
        series[0].second.push_back(a->rho_e.n > 0 ? std::optional<double>(a->rho_e.mean) : std::nullopt);
        series[1].second.push_back(a->gamma_b.mean);
        series[2].second.push_back(a->gamma_c.mean);
        series[3].second.push_back(a->linearity.mean);
    }
    return detail::correlate_series(series, target, "per_condition");
}

struct StepCountDistribution {
    GroupKey key;
    std::map<size_t, size_t> histogram; // step count -> trace count
    size_t total = 0;
};

inline StepCountDistribution step_count_distribution(const std::vector<MetricRow>& rows, const GroupKey& key) {
    StepCountDistribution dist;
    dist.key = key;
    for (const auto& row : rows) {
        if (GroupKey{row.model_id, row.prompt_regime, row.shot_count} == key) {
            dist.histogram[row.step_count]++;
            dist.total++;
        }
    }
    if (dist.total == 0) throw Error("step_count_distribution: no rows for group " + key.label());
    return dist;
}

// Plot-ready CSV: cumulative fraction reaches exactly 1.0 on the last row.
inline std::string distribution_to_csv(const StepCountDistribution& dist) {
    std::string out = "step_count,count,cdf\n";
    size_t seen = 0;
    for (const auto& [k, count] : dist.histogram) {
        seen += count;
        out += std::to_string(k) + "," + std::to_string(count) + "," +
               format_general(static_cast<double>(seen) / static_cast<double>(dist.total)) + "\n";
    }
    return out;
}

inline nlohmann::ordered_json correlation_report_to_json(const CorrelationReport& report) {
    nlohmann::ordered_json doc;
    doc["unit"] = report.unit;
    doc["n"] = report.n;
    auto metrics = nlohmann::ordered_json::object();
    for (const auto& mc : report.metrics) {
        if (mc.result) {
            nlohmann::ordered_json entry;
            entry["r"] = mc.result->r;
            if (mc.result->p) entry["p"] = *mc.result->p;
            else entry["p"] = nullptr;
            entry["n"] = mc.result->n;
            metrics[mc.metric] = std::move(entry);
        } else {
            metrics[mc.metric] = nullptr; // degenerate series
        }
    }
    doc["metrics"] = std::move(metrics);
    return doc;
}

enum class ReportFormat { csv, json, markdown_table };

namespace detail {

inline std::string fmt_or_dash(const std::optional<double>& v, int decimals) {
    return v ? format_double(*v, decimals) : std::string("-");
}

inline std::string aggregate_table_markdown(const std::vector<ConditionAggregate>& aggs) {
    std::string out;
    out += "| Model | Prompt | Shots | Traces | Acc (%) | rho_E | gamma_B | gamma_C | linearity | Mean Steps |\n";
    out += "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& a : aggs) {
        out += "| " + a.key.model_id + " | " + to_string(a.key.prompt_regime) + " | " +
               std::to_string(a.key.shot_count) + " | " + std::to_string(a.n_traces) + " | " +
               (a.accuracy ? format_double(*a.accuracy * 100.0, 1) : std::string("-")) + " | " +
               (a.rho_e.n > 0 ? format_double(a.rho_e.mean, 3) : std::string("-")) + " | " +
               format_double(a.gamma_b.mean, 3) + " | " + format_double(a.gamma_c.mean, 3) + " | " +
               format_double(a.linearity.mean, 3) + " | " + format_double(a.mean_steps, 1) + " |\n";
    }
    return out;
}

inline std::string aggregate_table_csv(const std::vector<ConditionAggregate>& aggs) {
    std::string out =
        "model_id,prompt_regime,shot_count,n_traces,n_labeled,accuracy,rho_E_mean,rho_E_std,"
        "gamma_B_mean,gamma_B_std,gamma_C_mean,gamma_C_std,linearity_mean,linearity_std,"
        "mean_steps,mean_total_tokens\n";
    for (const auto& a : aggs) {
        out += csv_escape(a.key.model_id) + "," + to_string(a.key.prompt_regime) + "," +
               std::to_string(a.key.shot_count) + "," + std::to_string(a.n_traces) + "," +
               std::to_string(a.n_labeled) + "," +
               (a.accuracy ? format_general(*a.accuracy) : std::string()) + "," +
               (a.rho_e.n > 0 ? format_general(a.rho_e.mean) : std::string()) + "," +
               (a.rho_e.n > 0 ? format_general(a.rho_e.std) : std::string()) + "," +
               format_general(a.gamma_b.mean) + "," + format_general(a.gamma_b.std) + "," +
               format_general(a.gamma_c.mean) + "," + format_general(a.gamma_c.std) + "," +
               format_general(a.linearity.mean) + "," + format_general(a.linearity.std) + "," +
               format_general(a.mean_steps) + "," +
               (a.mean_total_tokens ? format_general(*a.mean_total_tokens) : std::string()) + "\n";
    }
    return out;
}

inline nlohmann::ordered_json aggregate_to_json(const ConditionAggregate& a) {
    nlohmann::ordered_json doc;
    doc["model_id"] = a.key.model_id;
    doc["prompt_regime"] = to_string(a.key.prompt_regime);
    doc["shot_count"] = a.key.shot_count;
    doc["n_traces"] = a.n_traces;
    doc["n_labeled"] = a.n_labeled;
    doc["accuracy"] = a.accuracy ? nlohmann::ordered_json(*a.accuracy) : nlohmann::ordered_json(nullptr);
    auto stat = [](const MeanStd& s) -> nlohmann::ordered_json {
        if (s.n == 0) return nullptr;
        return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}};
    };
    doc["rho_E"] = stat(a.rho_e);
    doc["gamma_B"] = stat(a.gamma_b);
    doc["gamma_C"] = stat(a.gamma_c);
    doc["linearity"] = stat(a.linearity);
    doc["mean_steps"] = a.mean_steps;
    doc["mean_total_tokens"] =
        a.mean_total_tokens ? nlohmann::ordered_json(*a.mean_total_tokens) : nlohmann::ordered_json(nullptr);
    return doc;
}

} // namespace detail

struct ReportBundle {
    std::vector<std::filesystem::path> written;
};

// Writes the condition table (in the requested format), the correlation
// report, per-group step-count CDF data, and a small plot spec describing the
// CDF series.
inline ReportBundle render_report(const std::vector<ConditionAggregate>& aggregates,
                                  const std::optional<CorrelationReport>& per_trace,
                                  const std::optional<CorrelationReport>& per_condition,
                                  const std::vector<StepCountDistribution>& distributions,
                                  ReportFormat format, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create report directory " + out_dir.string());

    ReportBundle bundle;
    auto write_file = [&](const std::filesystem::path& name, const std::string& content) {
        auto path = out_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << content;
        bundle.written.push_back(path);
    };

    if (format == ReportFormat::markdown_table) {
        std::string md = "# Reasoning graph report\n\n## Per-condition metrics\n\n";
        md += detail::aggregate_table_markdown(aggregates);
        md += "\n## Correlations with correctness\n\n";
        if (per_trace) {
            md += "Per-trace (point-biserial Pearson, two-sided t-test):\n\n";
            md += "| Metric | r | p | n |\n|---|---|---|---|\n";
            for (const auto& mc : per_trace->metrics) {
                if (mc.result) {
                    md += "| " + mc.metric + " | " + format_double(mc.result->r, 4) + " | " +
                          (mc.result->p ? format_general(*mc.result->p) : std::string("-")) + " | " +
                          std::to_string(mc.result->n) + " |\n";
                } else {
                    md += "| " + mc.metric + " | - | - | - |\n";
                }
            }
        } else {
            md += "Not available: no (or constant) correctness labels in the corpus.\n";
        }
        if (per_condition) {
            md += "\nCondition-level (group means vs group accuracy):\n\n";
            md += "| Metric | r | p | n |\n|---|---|---|---|\n";
            for (const auto& mc : per_condition->metrics) {
                if (mc.result) {
                    md += "| " + mc.metric + " | " + format_double(mc.result->r, 4) + " | " +
                          (mc.result->p ? format_general(*mc.result->p) : std::string("-")) + " | " +
                          std::to_string(mc.result->n) + " |\n";
                } else {
                    md += "| " + mc.metric + " | - | - | - |\n";
                }
            }
        }
        md += "\n## Step-count distributions\n\n";
        for (const auto& dist : distributions)
            md += "- `cdf_" + dist.key.label() + ".csv` (" + std::to_string(dist.total) + " traces)\n";
        write_file("report.md", md);
    } else if (format == ReportFormat::csv) {
        write_file("report.csv", detail::aggregate_table_csv(aggregates));
    } else {
        nlohmann::ordered_json doc;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& a : aggregates) arr.push_back(detail::aggregate_to_json(a));
        doc["aggregates"] = std::move(arr);
        doc["correlations"] = nlohmann::ordered_json::object();
        if (per_trace) doc["correlations"]["per_trace"] = correlation_report_to_json(*per_trace);
        if (per_condition) doc["correlations"]["per_condition"] = correlation_report_to_json(*per_condition);
        write_file("report.json", doc.dump(2) + "\n");
    }

    {
        nlohmann::ordered_json doc = nlohmann::ordered_json::object();
        if (per_trace) doc["per_trace"] = correlation_report_to_json(*per_trace);
        else doc["per_trace"] = nullptr;
        if (per_condition) doc["per_condition"] = correlation_report_to_json(*per_condition);
        else doc["per_condition"] = nullptr;
        write_file("correlations.json", doc.dump(2) + "\n");
    }

    nlohmann::ordered_json plots = nlohmann::ordered_json::array();
    for (const auto& dist : distributions) {
        std::string name = "cdf_" + dist.key.label() + ".csv";
        write_file(name, distribution_to_csv(dist));
        plots.push_back({{"kind", "cdf"},
                         {"file", name},
                         {"x", "step_count"},
                         {"y", "cdf"},
                         {"series", dist.key.label()}});
    }
    write_file("plots.json", plots.dump(2) + "\n");
    return bundle;
}

} // namespace reasongraph
