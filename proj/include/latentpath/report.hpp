#pragma once

#include "latentpath/dataset.hpp"
#include "latentpath/efa.hpp"
#include "latentpath/fit_indices.hpp"
#include "latentpath/mediation.hpp"
#include "latentpath/psychometrics.hpp"
#include "latentpath/sem.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace latentpath {

/// Default: * < 0.1, ** < 0.05, *** < 0.001. Conventional: 0.05 / 0.01 / 0.001.
enum class StarConvention { Default, Conventional };

std::string stars(double p, StarConvention convention = StarConvention::Default);

/// Fixed-point text with the given decimals; "NA" for NaN.
std::string fixed(double value, int decimals = 3);

struct TextTable {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column-aligned text: first column left, the rest right-aligned.
    std::string render() const;
};

// Measurement quality of one construct.
struct ConstructReliability {
    std::string name;
    std::vector<std::string> items;
    std::vector<double> loadings;  // standardized
    double alpha = 0.0;
    std::optional<double> kmo;     // empty when undefined
    std::optional<BartlettResult> bartlett;
    double cr = 0.0;
    double ave = 0.0;
};

TextTable regression_weights(const FitResult& result, StarConvention convention = StarConvention::Default);
TextTable fit_summary(const FitIndexReport& report);
TextTable reliability_table(const std::vector<ConstructReliability>& constructs,
                            StarConvention convention = StarConvention::Default);
TextTable convergent_validity(const std::vector<ConstructReliability>& constructs);
TextTable discriminant_validity(const FornellLarcker& table);
TextTable component_matrix(const LoadingMatrix& loadings, double suppress_below);
TextTable variance_explained(const LoadingMatrix& loadings);
TextTable effects_table(const std::vector<EffectDecomposition>& decompositions);
TextTable additivity_table(const std::vector<AdditivityCheck>& checks);
TextTable hypotheses_table(const std::vector<HypothesisVerdict>& verdicts);
TextTable frequency_table_text(const std::string& variable, const std::vector<FrequencyRow>& rows);

// JSON fragments; full precision, stable key order.
nlohmann::ordered_json to_json(const FitResult& result);
nlohmann::ordered_json to_json(const FitIndexReport& report);
nlohmann::ordered_json to_json(const ConstructReliability& construct);
nlohmann::ordered_json to_json(const FornellLarcker& table);
nlohmann::ordered_json to_json(const LoadingMatrix& loadings);
nlohmann::ordered_json to_json(const EffectDecomposition& decomposition);
nlohmann::ordered_json to_json(const HypothesisVerdict& verdict);
nlohmann::ordered_json to_json(const AdditivityCheck& check);
nlohmann::ordered_json to_json(const Eigen::MatrixXd& matrix);

/// Top-level document: {"schema": 1, "provenance": ..., <sections>}.
nlohmann::ordered_json make_document(const nlohmann::ordered_json& provenance);

}  // namespace latentpath
