#include "latentpath/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace latentpath {

std::string stars(double p, StarConvention convention) {
    if (std::isnan(p)) return "";
    const double one = convention == StarConvention::Default ? 0.1 : 0.05;
    const double two = convention == StarConvention::Default ? 0.05 : 0.01;
    if (p < 0.001) return "***";
    if (p < two) return "**";
    if (p < one) return "*";
    return "";
}

std::string fixed(double value, int decimals) {
    if (std::isnan(value)) return "NA";
    std::string s = fmt::format("{:.{}f}", value, decimals);
    // Avoid "-0.000".
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string TextTable::render() const {
    const std::size_t cols = std::max<std::size_t>(
        header.size(), rows.empty() ? 0 : std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
                                               return a.size() < b.size();
                                           })->size());
    std::vector<std::size_t> width(cols, 0);
    auto measure = [&](const std::vector<std::string>& row) {
        for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
    };
    measure(header);
    for (const auto& r : rows) measure(r);

    std::string out;
    if (!title.empty()) out += title + "\n";
    auto line = [&](const std::vector<std::string>& row) {
        std::string s;
        for (std::size_t j = 0; j < cols; ++j) {
            const std::string cell = j < row.size() ? row[j] : "";
            if (j > 0) s += "  ";
            s += j == 0 ? fmt::format("{:<{}}", cell, width[j]) : fmt::format("{:>{}}", cell, width[j]);
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        out += s + "\n";
    };
    std::size_t total = 0;
    for (auto w : width) total += w;
    total += cols > 0 ? 2 * (cols - 1) : 0;
    if (!header.empty()) {
        line(header);
        out += std::string(total, '-') + "\n";
    }
    for (const auto& r : rows) line(r);
    return out;
}

TextTable regression_weights(const FitResult& result, StarConvention convention) {
    TextTable t{"Regression weights", {"Path", "Estimate", "S.E.", "C.R.", "P", "", "Label"}, {}};
    for (const auto& e : result.estimates) {
        if (e.kind != ParameterKind::Path && e.kind != ParameterKind::Loading) continue;
        const std::string path = e.kind == ParameterKind::Path ? fmt::format("{} <--- {}", e.lhs, e.rhs)
                                                               : fmt::format("{} <--- {}", e.rhs, e.lhs);
        const bool has_se = !result.se.empty() && !std::isnan(e.se);
        t.rows.push_back({path, fixed(e.estimate), has_se ? fixed(e.se) : "", has_se ? fixed(e.z) : "",
                          has_se ? fixed(e.p_value) : "", has_se ? stars(e.p_value, convention) : "", e.label});
    }
    return t;
}

TextTable fit_summary(const FitIndexReport& report) {
    TextTable t{"Model fit", {"Item", "Value", "Standard", "Meets?"}, {}};
    t.rows.push_back({"Chi-square", fixed(report.chi_square), "", ""});
    t.rows.push_back({"DF", std::to_string(report.df), "", ""});
    for (const auto& c : report.checks) {
        t.rows.push_back({c.name, c.value ? fixed(*c.value) : "undefined", c.standard,
                          c.value ? (c.meets ? "Yes" : "No") : "-"});
    }
    return t;
}

TextTable reliability_table(const std::vector<ConstructReliability>& constructs, StarConvention convention) {
    TextTable t{"Reliability and sampling adequacy",
                {"Construct", "Items", "Cronbach's alpha", "KMO", "Bartlett chi-square", "df", "Sig."},
                {}};
    for (const auto& c : constructs) {
        t.rows.push_back({c.name, std::to_string(c.items.size()), fixed(c.alpha), c.kmo ? fixed(*c.kmo) : "undefined",
                          c.bartlett ? fixed(c.bartlett->chi_square) : "", c.bartlett ? std::to_string(c.bartlett->df) : "",
                          c.bartlett ? stars(c.bartlett->p_value, convention) : ""});
    }
    return t;
}

TextTable convergent_validity(const std::vector<ConstructReliability>& constructs) {
    TextTable t{"Convergent validity", {"Construct", "Item", "Std. loading", "CR", "AVE"}, {}};
    for (const auto& c : constructs) {
        for (std::size_t i = 0; i < c.items.size(); ++i) {
            const bool first = i == 0;
            t.rows.push_back({first ? c.name : "", c.items[i], i < c.loadings.size() ? fixed(c.loadings[i]) : "",
                              first ? fixed(c.cr, 4) : "", first ? fixed(c.ave, 4) : ""});
        }
    }
    return t;
}

TextTable discriminant_validity(const FornellLarcker& table) {
    TextTable t{"Discriminant validity (diagonal: square root of AVE)", {""}, {}};
    for (const auto& n : table.names) t.header.push_back(n);
    t.header.push_back("Passes?");
    for (std::size_t i = 0; i < table.names.size(); ++i) {
        std::vector<std::string> row{table.names[i]};
        for (std::size_t j = 0; j < table.names.size(); ++j) {
            row.push_back(j <= i ? fixed(table.table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) : "");
        }
        row.push_back(table.passes[i] ? "Yes" : "No");
        t.rows.push_back(std::move(row));
    }
    return t;
}

TextTable component_matrix(const LoadingMatrix& loadings, double suppress_below) {
    TextTable t{loadings.rotated ? "Rotated component matrix" : "Component matrix", {"Item"}, {}};
    for (int j = 0; j < loadings.factors(); ++j) t.header.push_back(std::to_string(j + 1));
    for (const auto& r : rotated_component_table(loadings, suppress_below)) {
        std::vector<std::string> row{r.item};
        for (const auto& c : r.cells) row.push_back(c ? fixed(*c) : "");
        t.rows.push_back(std::move(row));
    }
    return t;
}

TextTable variance_explained(const LoadingMatrix& loadings) {
    TextTable t{"Total variance explained", {"Component", "Eigenvalue", "% of variance", "Cumulative %"}, {}};
    const double p = static_cast<double>(loadings.eigenvalues.size());
    double cumulative = 0.0;
    for (Eigen::Index i = 0; i < loadings.eigenvalues.size(); ++i) {
        const double pct = 100.0 * loadings.eigenvalues(i) / p;
        cumulative += pct;
        t.rows.push_back({std::to_string(i + 1), fixed(loadings.eigenvalues(i)), fixed(pct), fixed(cumulative)});
    }
    return t;
}

TextTable effects_table(const std::vector<EffectDecomposition>& decompositions) {
    TextTable t{"Effect decomposition",
                {"Hypothesis", "Effect", "Estimate", "Lower", "Upper"},
                {}};
    for (const auto& d : decompositions) {
        const std::string name = d.path.label.empty() ? d.path.describe() : d.path.label + ": " + d.path.describe();
        const std::pair<const char*, const Interval*> parts[] = {
            {"Total", &d.total}, {"Direct", &d.direct}, {"Indirect", &d.indirect}};
        bool first = true;
        for (const auto& [what, iv] : parts) {
            t.rows.push_back({first ? name : "", what, fixed(iv->estimate), fixed(iv->lower), fixed(iv->upper)});
            first = false;
        }
    }
    if (!decompositions.empty()) {
        const auto& d = decompositions.front();
        t.title += fmt::format(" ({:g}% {} interval", 100.0 * d.level, d.method);
        if (d.replicates > 0) t.title += fmt::format(", {} replicates, {} dropped", d.replicates, d.failed);
        t.title += ")";
    }
    return t;
}

TextTable additivity_table(const std::vector<AdditivityCheck>& checks) {
    TextTable t{"Additivity check (total - direct - indirect)", {"Hypothesis", "Gap", "Consistent?"}, {}};
    for (const auto& c : checks) t.rows.push_back({c.label, fixed(c.gap), c.ok ? "Yes" : "No"});
    return t;
}

TextTable hypotheses_table(const std::vector<HypothesisVerdict>& verdicts) {
    TextTable t{"Hypotheses", {"Hypothesis", "Relationship", "Estimate", "P", "Mediation", "Supported?"}, {}};
    for (const auto& v : verdicts) {
        t.rows.push_back({v.label, v.description, fixed(v.estimate), v.p_value ? fixed(*v.p_value) : "",
                          v.mediation ? to_string(*v.mediation) : "", v.supported ? "Yes" : "No"});
    }
    return t;
}

TextTable frequency_table_text(const std::string& variable, const std::vector<FrequencyRow>& rows) {
    TextTable t{fmt::format("Frequencies of {}", variable), {"Level", "Count", "Percent"}, {}};
    for (const auto& r : rows) t.rows.push_back({r.level, std::to_string(r.count), fixed(r.percentage, 2)});
    return t;
}

using nlohmann::ordered_json;

namespace {

ordered_json number(double v) {
    if (std::isnan(v) || std::isinf(v)) return nullptr;
    return v;
}

ordered_json optional_number(const std::optional<double>& v) { return v ? number(*v) : ordered_json(nullptr); }

const char* multiplier_name(ChiSquareMultiplier m) { return m == ChiSquareMultiplier::N ? "n" : "n-1"; }

}  // namespace

ordered_json to_json(const Eigen::MatrixXd& matrix) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) row.push_back(number(matrix(i, j)));
        out.push_back(std::move(row));
    }
    return out;
}

ordered_json to_json(const FitResult& result) {
    ordered_json out;
    out["converged"] = result.converged;
    out["message"] = result.message;
    out["iterations"] = result.iterations;
    out["gradient_norm"] = number(result.gradient_norm);
    out["f_min"] = number(result.f_min);
    out["chi_square"] = number(result.chi_square);
    out["chi_square_multiplier"] = multiplier_name(result.multiplier);
    out["df"] = result.df;
    out["n"] = result.n;
    out["free_parameters"] = result.model.free_count();
    ordered_json est = ordered_json::array();
    for (const auto& e : result.estimates) {
        ordered_json j;
        j["name"] = e.name;
        j["label"] = e.label;
        j["kind"] = to_string(e.kind);
        j["lhs"] = e.lhs;
        j["rhs"] = e.rhs;
        j["estimate"] = number(e.estimate);
        j["se"] = result.se.empty() ? ordered_json(nullptr) : number(e.se);
        j["z"] = result.se.empty() ? ordered_json(nullptr) : number(e.z);
        j["p_value"] = result.se.empty() ? ordered_json(nullptr) : number(e.p_value);
        j["standardized"] = number(e.standardized);
        j["heywood"] = e.heywood;
        est.push_back(std::move(j));
    }
    out["estimates"] = std::move(est);
    out["heywood"] = result.heywood;
    out["variables"] = result.model.variable_order;
    out["implied_covariance"] = to_json(result.implied);
    ordered_json latents = ordered_json::array();
    for (const auto& n : result.model.eta) latents.push_back(n);
    for (const auto& n : result.model.xi) latents.push_back(n);
    out["latents"] = std::move(latents);
    out["latent_correlation"] = to_json(result.standardized.latent_correlation);
    return out;
}

ordered_json to_json(const FitIndexReport& report) {
    ordered_json out;
    out["chi_square"] = number(report.chi_square);
    out["df"] = report.df;
    out["p_value"] = number(report.p_value);
    out["null_chi_square"] = number(report.null_chi_square);
    out["null_df"] = report.null_df;
    out["chi_square_ratio"] = optional_number(report.chi_square_ratio);
    out["rmsea"] = optional_number(report.rmsea);
    out["gfi"] = optional_number(report.gfi);
    out["agfi"] = optional_number(report.agfi);
    out["nfi"] = optional_number(report.nfi);
    out["tli"] = optional_number(report.tli);
    out["cfi"] = optional_number(report.cfi);
    out["pnfi"] = optional_number(report.pnfi);
    out["pcfi"] = optional_number(report.pcfi);
    out["pgfi"] = optional_number(report.pgfi);
    ordered_json checks = ordered_json::array();
    for (const auto& c : report.checks) {
        ordered_json j;
        j["name"] = c.name;
        j["value"] = optional_number(c.value);
        j["standard"] = c.standard;
        j["meets"] = c.meets;
        checks.push_back(std::move(j));
    }
    out["checks"] = std::move(checks);
    out["undefined"] = report.undefined;
    return out;
}

ordered_json to_json(const ConstructReliability& c) {
    ordered_json out;
    out["name"] = c.name;
    out["items"] = c.items;
    ordered_json loadings = ordered_json::array();
    for (double v : c.loadings) loadings.push_back(number(v));
    out["standardized_loadings"] = std::move(loadings);
    out["cronbach_alpha"] = number(c.alpha);
    out["kmo"] = optional_number(c.kmo);
    if (c.bartlett) {
        out["bartlett"] = {{"chi_square", number(c.bartlett->chi_square)},
                           {"df", c.bartlett->df},
                           {"p_value", number(c.bartlett->p_value)}};
    } else {
        out["bartlett"] = nullptr;
    }
    out["composite_reliability"] = number(c.cr);
    out["average_variance_extracted"] = number(c.ave);
    return out;
}

ordered_json to_json(const FornellLarcker& table) {
    ordered_json out;
    out["names"] = table.names;
    out["table"] = to_json(table.table);
    out["passes"] = table.passes;
    return out;
}

ordered_json to_json(const LoadingMatrix& l) {
    ordered_json out;
    out["items"] = l.items;
    out["rotated"] = l.rotated;
    out["factors"] = l.factors();
    out["loadings"] = to_json(l.loadings);
    ordered_json ev = ordered_json::array();
    for (Eigen::Index i = 0; i < l.eigenvalues.size(); ++i) ev.push_back(number(l.eigenvalues(i)));
    out["eigenvalues"] = std::move(ev);
    ordered_json comm = ordered_json::array();
    for (Eigen::Index i = 0; i < l.communalities.size(); ++i) comm.push_back(number(l.communalities(i)));
    out["communalities"] = std::move(comm);
    out["rotation"] = to_json(l.rotation);
    out["sweeps"] = l.sweeps;
    return out;
}

ordered_json to_json(const EffectDecomposition& d) {
    auto interval = [](const Interval& iv) {
        return ordered_json{{"estimate", number(iv.estimate)}, {"lower", number(iv.lower)}, {"upper", number(iv.upper)}};
    };
    ordered_json out;
    out["label"] = d.path.label;
    out["source"] = d.path.source;
    out["mediator"] = d.path.mediator;
    out["target"] = d.path.target;
    out["total"] = interval(d.total);
    out["direct"] = interval(d.direct);
    out["indirect"] = interval(d.indirect);
    out["level"] = d.level;
    out["method"] = d.method;
    out["replicates"] = d.replicates;
    out["failed"] = d.failed;
    out["mediation"] = to_string(classify_mediation(d));
    return out;
}

ordered_json to_json(const HypothesisVerdict& v) {
    ordered_json out;
    out["label"] = v.label;
    out["description"] = v.description;
    out["kind"] = v.kind;
    out["estimate"] = number(v.estimate);
    out["p_value"] = optional_number(v.p_value);
    out["mediation"] = v.mediation ? ordered_json(to_string(*v.mediation)) : ordered_json(nullptr);
    out["supported"] = v.supported;
    return out;
}

ordered_json to_json(const AdditivityCheck& c) {
    return ordered_json{{"label", c.label}, {"gap", number(c.gap)}, {"ok", c.ok}};
}

ordered_json make_document(const ordered_json& provenance) {
    ordered_json out;
    out["schema"] = 1;
    out["provenance"] = provenance;
    return out;
}

}  // namespace latentpath
