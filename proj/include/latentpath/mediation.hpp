#pragma once

#include "latentpath/dataset.hpp"
#include "latentpath/model_spec.hpp"
#include "latentpath/sem.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace latentpath {

/// Effects of xi on eta and among eta. Rows are targets, columns sources.
struct EffectMatrices {
    Eigen::MatrixXd total_xi, direct_xi, indirect_xi;     // |eta| x |xi|
    Eigen::MatrixXd total_eta, direct_eta, indirect_eta;  // |eta| x |eta|
};

/// total = (I - B)^-1 Gamma, direct = Gamma, indirect = total - direct; among
/// eta, total = (I - B)^-1 - I and direct = B. Throws NumericalError when
/// I - B is singular.
EffectMatrices decompose(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& gamma);

/// First-order variance of the product gamma * b of two independent estimates:
/// gamma^2 var_b + b^2 var_gamma + var_gamma var_b.
double delta_variance(double gamma, double b, double var_gamma, double var_b);

/// A mediation hypothesis source -> mediator -> target.
struct EffectPath {
    std::string source;
    std::string mediator;
    std::string target;
    std::string label;

    /// Parses "SRC:MED:DST" or "LABEL=SRC:MED:DST".
    static EffectPath parse(const std::string& text);
    std::string describe() const;
};

struct EffectPoint {
    double total = 0.0;
    double direct = 0.0;
    double indirect = 0.0;
};

/// Effects of one path at a parameter vector. Indirect is total - direct,
/// i.e. everything that flows through intermediate latents.
EffectPoint effect_of(const ParamMatrices& m, std::span<const double> theta, const EffectPath& path);

/// Throws ModelError unless source, mediator and target are latents with the
/// mediator on a directed path from source to target.
void validate_effect(const ParamMatrices& m, const EffectPath& path);

struct Interval {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;

    bool excludes_zero() const { return lower > 0.0 || upper < 0.0; }
};

struct EffectDecomposition {
    EffectPath path;
    Interval total, direct, indirect;
    double level = 0.95;
    std::string method;  // "percentile bootstrap" or "delta"
    int replicates = 0;  // requested
    int failed = 0;      // dropped for non-convergence
};

struct BootstrapOptions {
    int replicates = 2000;
    double level = 0.95;
    std::uint64_t seed = 0;
    int workers = 1;
    double max_failure_fraction = 0.2;
    EstimationOptions estimation;
};

/// Nonparametric case-resampling bootstrap with percentile intervals. Replicate
/// r draws from an engine seeded with (seed, r), so output is independent of the worker count.
/// Throws ConvergenceError when more than max_failure_fraction of replicates fail.
std::vector<EffectDecomposition> bootstrap_ci(const Dataset& data, const ModelSpec& spec,
                                              const std::vector<EffectPath>& effects, const BootstrapOptions& options);

/// Normal-theory interval for the indirect effect using delta_variance; total
/// and direct use their own standard errors. Single-mediator paths only.
EffectDecomposition delta_interval(const FitResult& result, const EffectPath& path, double level = 0.95);

/// Linear-interpolation (type 7) quantile of a sample.
double quantile(std::vector<double> values, double q);

enum class Mediation { None, Partial, Full };

const char* to_string(Mediation m);

/// Sign-pattern rule: indirect spans zero -> none; indirect and direct both
/// exclude zero -> partial; only indirect excludes zero -> full.
Mediation classify_mediation(const EffectDecomposition& d);

struct HypothesisVerdict {
    std::string label;
    std::string description;
    std::string kind;  // "path" or "mediation"
    double estimate = 0.0;
    std::optional<double> p_value;
    std::optional<Mediation> mediation;
    bool supported = false;
};

/// Labelled structural paths are supported iff p < alpha; labelled effect
/// decompositions are classified by classify_mediation and supported unless
/// the class is none. Throws ModelError when nothing carries a label.
std::vector<HypothesisVerdict> classify_hypotheses(const FitResult& result,
                                                   const std::vector<EffectDecomposition>& decompositions,
                                                   double alpha = 0.05);

struct AdditivityCheck {
    std::string label;
    double gap = 0.0;  // total - direct - indirect
    bool ok = false;
};

/// Flags decompositions whose point estimates do not add up within tolerance.
std::vector<AdditivityCheck> check_additivity(const std::vector<EffectDecomposition>& decompositions,
                                              double tolerance = 0.002);

}  // namespace latentpath
