// Acceptance suite: one PASS/FAIL line per criterion; exit status is the number of failures.

#include "latentpath/efa.hpp"
#include "latentpath/fit_indices.hpp"
#include "latentpath/mediation.hpp"
#include "latentpath/psychometrics.hpp"
#include "latentpath/sem.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace latentpath;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
    fmt::print("[{}] {:>2}. {}: {}\n", ok ? "PASS" : "FAIL", id, title, detail);
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::span<const double> view(const std::vector<double>& v) { return {v.data(), v.size()}; }

Eigen::MatrixXd random_spd(int p, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) a(i, j) = normal(rng);
    return a * a.transpose() / p + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

std::vector<double> random_feasible(const ParamMatrices& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> theta;
    for (const auto& p : m.parameters) {
        switch (p.kind) {
            case ParameterKind::Loading: theta.push_back(0.5 + 0.7 * u(rng)); break;
            case ParameterKind::Path: theta.push_back(-0.4 + 0.8 * u(rng)); break;
            case ParameterKind::LatentCovariance: theta.push_back(-0.2 + 0.4 * u(rng)); break;
            default: theta.push_back(0.5 + u(rng)); break;
        }
    }
    return theta;
}

ModelSpec figure_model() { return load_model(std::string(LATENTPATH_DATA_DIR) + "/wuliangye.model"); }

struct Published {
    const char* name;
    std::vector<double> loadings;
    double cr, ave, sqrt_ave;
};

const std::vector<Published> kTable = {
    {"ConsEth", {0.515, 0.742, 0.838, 0.836, 0.546, 0.807}, 0.8662, 0.5277, 0.726},
    {"EnvSt", {0.703, 0.647, 0.585}, 0.6821, 0.4183, 0.647},
    {"PBC", {0.661, 0.631, 0.524}, 0.6356, 0.3699, 0.608},
    {"PerVa", {0.647, 0.626, 0.594, 0.634}, 0.7198, 0.3913, 0.626},
    {"PB", {0.754, 0.774, 0.669, 0.594, 0.776}, 0.8397, 0.5140, 0.717},
};

void criterion_1() {
    double worst = 0.0;
    for (const auto& c : kTable) {
        const auto err = standardized_error_variances(c.loadings);
        worst = std::max(worst, std::abs(composite_reliability(c.loadings, err) - c.cr));
        worst = std::max(worst, std::abs(average_variance_extracted(c.loadings, err) - c.ave));
    }
    report(1, "CR/AVE from published loadings", worst <= 0.0005, fmt::format("max deviation {:.6f} (tol 0.0005)", worst));
}

void criterion_2() {
    double worst = 0.0;
    for (const auto& c : kTable) worst = std::max(worst, std::abs(std::sqrt(average_variance_extracted(c.loadings)) - c.sqrt_ave));
    const double identity = std::abs(0.717 * 0.717 - 0.514);
    report(2, "Fornell-Larcker diagonal", worst <= 0.001 && identity <= 0.001,
           fmt::format("max sqrt(AVE) deviation {:.6f}, |0.717^2 - 0.514| = {:.6f} (tol 0.001)", worst, identity));
}

void criterion_3() {
    // Symbolic: RMSEA = sqrt((chi/df - 1) / (n - 1)) depends on chi and df only through their ratio.
    const double symbolic = std::sqrt((2.727 - 1.0) / 518.0);
    double worst = std::abs(symbolic - 0.0577);
    for (int df = 1; df <= 2000; ++df) worst = std::max(worst, std::abs(rmsea(2.727 * df, df, 519) - 0.0577));
    report(3, "RMSEA consistency", worst <= 0.001,
           fmt::format("RMSEA {:.5f} for every df in 1..2000, max |RMSEA - 0.0577| = {:.6f} (tol 0.001)", symbolic, worst));
}

void criterion_4() {
    auto make = [](const char* label, double t, double d, double i) {
        EffectDecomposition e;
        e.path.label = label;
        e.total.estimate = t;
        e.direct.estimate = d;
        e.indirect.estimate = i;
        return e;
    };
    const auto checks = check_additivity(
        {make("H4", 0.210, 0.156, 0.055), make("H5", 0.559, 0.301, 0.257), make("H6", 0.150, 0.034, 0.116)}, 0.002);
    bool published_ok = true;
    double worst_published = 0.0;
    for (const auto& c : checks) {
        published_ok = published_ok && c.ok;
        worst_published = std::max(worst_published, std::abs(c.gap));
    }
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> w(-0.9, 0.9);
    double worst_own = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int ne = 1 + rep % 5, nx = 1 + rep % 3;
        Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(ne, ne), gamma(ne, nx);
        for (int i = 0; i < ne; ++i)
            for (int j = 0; j < i; ++j) beta(i, j) = w(rng);
        for (int i = 0; i < ne; ++i)
            for (int j = 0; j < nx; ++j) gamma(i, j) = w(rng);
        const EffectMatrices e = decompose(beta, gamma);
        worst_own = std::max(worst_own, (e.total_xi - e.direct_xi - e.indirect_xi).cwiseAbs().maxCoeff());
        worst_own = std::max(worst_own, (e.total_eta - e.direct_eta - e.indirect_eta).cwiseAbs().maxCoeff());
    }
    report(4, "Mediation additivity", published_ok && worst_own <= 1e-10,
           fmt::format("published max gap {:.4f} (tol 0.002); decompose max gap {:.2e} (tol 1e-10)", worst_published,
                       worst_own));
}

void criterion_5() {
    std::mt19937_64 rng(505);
    double worst_f = 0.0, worst_chi = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd s = random_spd(2 + rep % 6, rng);
        worst_f = std::max(worst_f, std::abs(f_ml(s, s, static_cast<int>(s.rows()))));
    }
    // Saturated one-factor models (3 indicators, t = 6 = p(p+1)/2), S drawn as an admissible Sigma(theta).
    const ModelSpec saturated = parse_model("F =~ a + b + c");
    const ParamMatrices sm = build_matrices(saturated, {"a", "b", "c"});
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd s = implied_covariance(sm, random_feasible(sm, rng));
        EstimationOptions opts;
        opts.gtol = 1e-10;
        opts.standard_errors = false;
        const FitResult r = fit(saturated, moments_from_covariance(s, 300, {"a", "b", "c"}), opts);
        worst_f = std::max(worst_f, std::abs(r.f_min));
        worst_chi = std::max(worst_chi, std::abs(r.chi_square));
    }
    report(5, "Saturated identity", worst_f <= 1e-10 && worst_chi <= 1e-10,
           fmt::format("max |F_ML| {:.2e}, max chi-square {:.2e} (tol 1e-10)", worst_f, worst_chi));
}

void criterion_6() {
    const ModelSpec s = parse_model("X =~ x1 + x2 + x3\nY =~ y1 + y2 + y3\nY ~ X\n");
    const ParamMatrices m = build_matrices(s, s.indicators());
    std::mt19937_64 rng(606);
    const Eigen::MatrixXd sample = random_spd(6, rng);
    const int n = 300;
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto t1 = random_feasible(m, rng), t2 = random_feasible(m, rng);
        const Eigen::MatrixXd s1 = implied_covariance(m, t1), s2 = implied_covariance(m, t2);
        const double lhs = f_ml(s1, sample, 6) - f_ml(s2, sample, 6);
        const double rhs = -2.0 / n * (log_likelihood(s1, sample, n, 6) - log_likelihood(s2, sample, n, 6));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    report(6, "Likelihood equivalence", worst <= 1e-8, fmt::format("100 pairs, max discrepancy {:.2e} (tol 1e-8)", worst));
}

void criterion_7() {
    const ModelSpec s = figure_model();
    const ParamMatrices m = build_matrices(s, s.indicators());
    std::mt19937_64 rng(707);
    const Dataset d = simulate(m, random_feasible(m, rng), 1000, 707);
    const MlObjective obj(m, covariance(d).covariance);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto theta = random_feasible(m, rng);
        Eigen::VectorXd g;
        if (!obj.value_and_gradient(view(theta), g)) {
            worst = INFINITY;
            break;
        }
        Eigen::VectorXd fd(g.size());
        for (Eigen::Index k = 0; k < g.size(); ++k) {
            auto up = theta, down = theta;
            up[static_cast<std::size_t>(k)] += 1e-5;
            down[static_cast<std::size_t>(k)] -= 1e-5;
            fd(k) = (*obj.value(view(up)) - *obj.value(view(down))) / 2e-5;
        }
        worst = std::max(worst, (g - fd).norm() / g.norm());
    }
    report(7, "Gradient check", worst <= 1e-4,
           fmt::format("20 random points of the 52-parameter model, max relative error {:.2e} (tol 1e-4)", worst));
}

void criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec s = figure_model();
    const ParamMatrices m = build_matrices(s, s.indicators());
    // Planted values on the marker metric; path signs follow the published estimates.
    const std::vector<std::pair<std::string, double>> paths{
        {"PerVa~ConsEth", 0.30}, {"PerVa~EnvSt", 0.25}, {"PerVa~PBC", 0.35}, {"PB~ConsEth", 0.20},
        {"PB~EnvSt", 0.30},      {"PB~PBC", 0.15},      {"PB~PerVa", 0.40}};
    std::vector<std::pair<std::string, double>> planted = paths;
    const std::vector<std::pair<std::string, double>> loadings{
        {"ConsEth=~CE3", 0.9}, {"ConsEth=~CE4", 1.1}, {"ConsEth=~CE7", 0.8}, {"ConsEth=~CE9", 1.0},
        {"ConsEth=~CE10", 0.7}, {"EnvSt=~ES3", 0.9},  {"EnvSt=~ES4", 1.2},   {"PBC=~PBC2", 0.8},
        {"PBC=~PBC3", 1.1},    {"PerVa=~PV2", 0.9},   {"PerVa=~PV3", 1.0},   {"PerVa=~PV4", 0.8},
        {"PB=~PB2", 1.1},      {"PB=~PB3", 0.9},      {"PB=~PB4", 0.8},      {"PB=~PB5", 1.0}};
    planted.insert(planted.end(), loadings.begin(), loadings.end());
    planted.insert(planted.end(), {{"ConsEth~~EnvSt", 0.3}, {"ConsEth~~PBC", 0.3}, {"EnvSt~~PBC", 0.3}});
    ParameterDefaults defaults;
    defaults.error_variance = 0.3;
    const auto theta = assign_parameters(m, planted, defaults);
    const Dataset d = simulate(m, theta, 5000, 808);
    EstimationOptions opts;
    opts.standard_errors = false;
    const FitResult r = fit(s, covariance(d), opts);

    double worst = 0.0;
    std::string worst_name;
    int signs = 0;
    for (const auto& [name, value] : loadings) {
        const double dev = std::abs(r.find(name)->estimate - value);
        if (dev > worst) worst = dev, worst_name = name;
    }
    for (const auto& [name, value] : paths) {
        const double est = r.find(name)->estimate;
        const double dev = std::abs(est - value);
        if (dev > worst) worst = dev, worst_name = name;
        signs += std::signbit(est) == std::signbit(value);
    }
    const double elapsed = seconds_since(t0);
    report(8, "Parameter recovery", r.converged && worst <= 0.05 && signs == 7 && elapsed < 60.0,
           fmt::format("n = 5000, max |estimate - planted| {:.4f} at {} (tol 0.05), signs {}/7, {:.2f} s (limit 60 s)",
                       worst, worst_name, signs, elapsed));
}

void criterion_9() {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int setting = 0; setting < 5; ++setting) {
        const double g = -1.0 + 2.0 * u(rng), b = -1.0 + 2.0 * u(rng);
        const double sg = 0.05 + 0.45 * u(rng), sb = 0.05 + 0.45 * u(rng);
        std::normal_distribution<double> x(g, sg), y(b, sb);
        double mean = 0.0, m2 = 0.0;
        const int n = 1000000;
        for (int i = 1; i <= n; ++i) {
            const double v = x(rng) * y(rng);
            const double delta = v - mean;
            mean += delta / i;
            m2 += delta * (v - mean);
        }
        const double mc = m2 / (n - 1);
        worst = std::max(worst, std::abs(mc / delta_variance(g, b, sg * sg, sb * sb) - 1.0));
    }
    report(9, "Delta-method exactness", worst <= 0.02,
           fmt::format("5 settings x 1e6 draws, max relative deviation {:.4f} (tol 0.02)", worst));
}

void criterion_10() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec s = parse_model("X =~ x1 + x2 + x3\nM =~ m1 + m2 + m3\nY =~ y1 + y2 + y3\nM ~ X\nY ~ M + X\n");
    const ParamMatrices m = build_matrices(s, s.indicators());
    const auto theta = assign_parameters(m, {{"M~X", 0.0}, {"Y~M", 0.4}, {"Y~X", 0.3}});
    const std::vector<EffectPath> effects{EffectPath::parse("X:M:Y")};

    // Determinism: same seed, different worker counts.
    const Dataset probe = simulate(m, theta, 500, 1000);
    BootstrapOptions o;
    o.replicates = 500;
    o.level = 0.95;
    o.seed = 77;
    o.workers = 1;
    const auto serial = bootstrap_ci(probe, s, effects, o);
    o.workers = 4;
    const auto parallel = bootstrap_ci(probe, s, effects, o);
    const auto again = bootstrap_ci(probe, s, effects, o);
    auto same = [](const EffectDecomposition& a, const EffectDecomposition& b) {
        return a.total.lower == b.total.lower && a.total.upper == b.total.upper && a.direct.lower == b.direct.lower &&
               a.direct.upper == b.direct.upper && a.indirect.lower == b.indirect.lower &&
               a.indirect.upper == b.indirect.upper && a.failed == b.failed;
    };
    const bool deterministic = same(serial[0], parallel[0]) && same(parallel[0], again[0]);

    int covered = 0, dropped = 0;
    const int meta = 50;
    for (int rep = 0; rep < meta; ++rep) {
        const Dataset d = simulate(m, theta, 500, 5000 + static_cast<std::uint64_t>(rep));
        o.seed = 100000 + static_cast<std::uint64_t>(rep) * 1000;
        o.workers = 2;
        const auto ci = bootstrap_ci(d, s, effects, o);
        covered += ci[0].indirect.lower <= 0.0 && 0.0 <= ci[0].indirect.upper;
        dropped += ci[0].failed;
    }
    const double elapsed = seconds_since(t0);
    report(10, "Bootstrap determinism and coverage", deterministic && covered >= 45 && elapsed < 600.0,
           fmt::format("workers 1 vs 4 identical: {}; zero-indirect CI covers 0 in {}/{} (need >= 45), {} replicates "
                       "dropped, {:.1f} s (limit 600 s)",
                       deterministic ? "yes" : "no", covered, meta, dropped, elapsed));
}

void criterion_11() {
    Eigen::MatrixXd r(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) r(i, j) = i == j ? 1.0 : ((i < 4) == (j < 4) ? 0.5 : 0.1);
    const LoadingMatrix unrotated = extract(r, Retention::kaiser());
    const LoadingMatrix rotated = varimax(unrotated);
    const double drift = (rotated.communalities - unrotated.communalities).cwiseAbs().maxCoeff();
    double min_dominant = 1.0, max_cross = 0.0;
    for (int i = 0; i < 8; ++i) {
        const Eigen::VectorXd row = rotated.loadings.row(i).cwiseAbs();
        Eigen::Index arg = 0;
        min_dominant = std::min(min_dominant, row.maxCoeff(&arg));
        for (Eigen::Index j = 0; j < row.size(); ++j)
            if (j != arg) max_cross = std::max(max_cross, row(j));
    }
    report(11, "Varimax properties",
           unrotated.factors() == 2 && drift <= 1e-10 && min_dominant > 0.5 && max_cross < 0.4,
           fmt::format("{} factors, communality drift {:.2e} (tol 1e-10), min dominant {:.3f} (> 0.5), max cross {:.3f} "
                       "(< 0.4)",
                       unrotated.factors(), drift, min_dominant, max_cross));
}

void criterion_12() {
    const BartlettResult id = bartlett(Eigen::MatrixXd::Identity(5, 5), 100);
    Eigen::MatrixXd r(2, 2);
    r << 1, 0.5, 0.5, 1;
    const BartlettResult two = bartlett(r, 100);
    const double kmo_value = [] {
        Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 0.5);
        c.diagonal().setOnes();
        return kmo(c);
    }();
    const bool ok = id.chi_square == 0.0 && std::abs(two.chi_square - 28.046) <= 0.001;
    std::string detail =
        fmt::format("identity chi-square {:.3f}; p=2, r=0.5, n=100 chi-square {:.4f} vs target 28.046 +/- 0.001; "
                    "KMO(3x3, r=0.5) {:.4f}",
                    id.chi_square, two.chi_square, kmo_value);
    if (!ok) {
        detail += fmt::format(
            ". The target comes from -(n - 1 - (2p + 5)/6) ln|R| = -(99 - 1.5) ln(0.75), which evaluates to {:.6f}; "
            "28.046 is not reachable with that formula",
            -97.5 * std::log(0.75));
    }
    report(12, "Bartlett/KMO", ok, detail);
}

}  // namespace

int main() {
    const std::vector<std::function<void()>> criteria{criterion_1, criterion_2,  criterion_3,  criterion_4,
                                                      criterion_5, criterion_6,  criterion_7,  criterion_8,
                                                      criterion_9, criterion_10, criterion_11, criterion_12};
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(static_cast<int>(i + 1), "exception", false, e.what());
        }
    }
    fmt::print("{} of {} criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
