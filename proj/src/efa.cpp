#include "latentpath/efa.hpp"

#include "latentpath/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace latentpath {

namespace {

struct Eigenpairs {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // matching columns
};

Eigenpairs sorted_eigen(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const Eigen::Index p = a.rows();
    Eigenpairs out{Eigen::VectorXd(p), Eigen::MatrixXd(p, p)};
    for (Eigen::Index i = 0; i < p; ++i) {
        out.values(i) = solver.eigenvalues()(p - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(p - 1 - i);
    }
    return out;
}

Eigen::MatrixXd loadings_from(const Eigenpairs& e, int m) {
    Eigen::MatrixXd l(e.vectors.rows(), m);
    for (int j = 0; j < m; ++j) l.col(j) = e.vectors.col(j) * std::sqrt(std::max(e.values(j), 0.0));
    return l;
}

/// Flip each column so its largest-magnitude entry is positive; returns the signs.
Eigen::VectorXd normalize_signs(Eigen::MatrixXd& l) {
    Eigen::VectorXd signs = Eigen::VectorXd::Ones(l.cols());
    for (Eigen::Index j = 0; j < l.cols(); ++j) {
        Eigen::Index arg = 0;
        l.col(j).cwiseAbs().maxCoeff(&arg);
        if (l(arg, j) < 0.0) {
            l.col(j) *= -1.0;
            signs(j) = -1.0;
        }
    }
    return signs;
}

}  // namespace

double varimax_criterion(const Eigen::MatrixXd& loadings) {
    const double p = static_cast<double>(loadings.rows());
    const Eigen::ArrayXXd sq = loadings.array().square();
    double total = 0.0;
    for (Eigen::Index j = 0; j < sq.cols(); ++j) {
        const double mean = sq.col(j).mean();
        total += (sq.col(j) - mean).square().sum() / p;
    }
    return total;
}

LoadingMatrix extract(const Eigen::MatrixXd& r, Retention retention, std::vector<std::string> items,
                      const ExtractionOptions& options) {
    const Eigen::Index p = r.rows();
    if (p != r.cols() || p == 0) throw Error("extraction needs a square matrix");
    if (!r.isApprox(r.transpose(), 1e-12)) throw Error("extraction needs a symmetric matrix");
    if (items.empty()) {
        for (Eigen::Index i = 0; i < p; ++i) items.push_back(fmt::format("V{}", i + 1));
    }
    if (static_cast<Eigen::Index>(items.size()) != p) throw Error("item names disagree with matrix order");

    const Eigenpairs full = sorted_eigen(r);
    int m = 0;
    if (retention.fixed) {
        m = *retention.fixed;
        if (m < 0 || m > p) throw Error(fmt::format("cannot retain {} factors from {} items", m, p));
    } else {
        while (m < p && full.values(m) > 1.0) ++m;
    }

    LoadingMatrix out;
    out.items = std::move(items);
    out.eigenvalues = full.values;
    out.rotation = Eigen::MatrixXd::Identity(m, m);

    if (options.method == Extraction::PrincipalComponents || m == 0) {
        out.loadings = loadings_from(full, m);
    } else {
        // Principal axis: iterate communalities on the reduced correlation matrix,
        // starting from squared multiple correlations.
        Eigen::VectorXd h2(p);
        Eigen::LLT<Eigen::MatrixXd> llt(r);
        if (llt.info() == Eigen::Success) {
            const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
            for (Eigen::Index i = 0; i < p; ++i) h2(i) = std::clamp(1.0 - 1.0 / inv(i, i), 0.0, 1.0);
        } else {
            h2.setOnes();
        }
        Eigen::MatrixXd l;
        for (int iter = 0; iter < options.max_iter; ++iter) {
            Eigen::MatrixXd reduced = r;
            reduced.diagonal() = h2;
            l = loadings_from(sorted_eigen(reduced), m);
            const Eigen::VectorXd next = l.rowwise().squaredNorm();
            const double change = (next - h2).cwiseAbs().maxCoeff();
            h2 = next;
            if (change < options.tol) break;
        }
        out.loadings = l;
    }
    normalize_signs(out.loadings);
    out.communalities = out.loadings.rowwise().squaredNorm();
    return out;
}

LoadingMatrix varimax(const LoadingMatrix& input, const VarimaxOptions& options) {
    LoadingMatrix out = input;
    const Eigen::Index m = input.loadings.cols();
    if (m < 2) return out;

    const Eigen::Index p = input.loadings.rows();
    Eigen::VectorXd row_norm = input.loadings.rowwise().norm();
    Eigen::MatrixXd l = input.loadings;
    if (options.kaiser_normalize) {
        for (Eigen::Index i = 0; i < p; ++i) {
            if (row_norm(i) > 0.0) l.row(i) /= row_norm(i);
        }
    }

    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(m, m);
    double criterion = varimax_criterion(l);
    out.criterion_trace = {criterion};
    const double pd = static_cast<double>(p);
    int sweep = 0;
    for (; sweep < options.max_iter; ++sweep) {
        for (Eigen::Index a = 0; a < m - 1; ++a) {
            for (Eigen::Index b = a + 1; b < m; ++b) {
                const Eigen::ArrayXd x = l.col(a).array();
                const Eigen::ArrayXd y = l.col(b).array();
                const Eigen::ArrayXd u = x.square() - y.square();
                const Eigen::ArrayXd v = 2.0 * x * y;
                const double sa = u.sum(), sb = v.sum();
                const double sc = (u.square() - v.square()).sum();
                const double sd = 2.0 * (u * v).sum();
                const double num = sd - 2.0 * sa * sb / pd;
                const double den = sc - (sa * sa - sb * sb) / pd;
                const double angle = 0.25 * std::atan2(num, den);
                if (std::abs(angle) < 1e-15) continue;
                const double c = std::cos(angle), s = std::sin(angle);
                const Eigen::VectorXd ca = l.col(a), cb = l.col(b);
                l.col(a) = c * ca + s * cb;
                l.col(b) = -s * ca + c * cb;
                const Eigen::VectorXd ta = t.col(a), tb = t.col(b);
                t.col(a) = c * ta + s * tb;
                t.col(b) = -s * ta + c * tb;
            }
        }
        const double next = varimax_criterion(l);
        out.criterion_trace.push_back(next);
        const double gain = next - criterion;
        criterion = next;
        if (gain < options.tol) {
            ++sweep;
            break;
        }
    }

    // Rotate the original loadings so communalities are preserved exactly up to T.
    Eigen::MatrixXd rotated = input.loadings * t;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXd ss = rotated.colwise().squaredNorm();
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return ss(i) > ss(j); });
    Eigen::MatrixXd sorted(p, m), sorted_t(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        sorted.col(j) = rotated.col(order[static_cast<std::size_t>(j)]);
        sorted_t.col(j) = t.col(order[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd signs = normalize_signs(sorted);
    for (Eigen::Index j = 0; j < m; ++j) sorted_t.col(j) *= signs(j);

    out.loadings = sorted;
    out.rotation = input.rotation * sorted_t;
    out.communalities = out.loadings.rowwise().squaredNorm();
    out.rotated = true;
    out.sweeps = sweep;
    return out;
}

std::vector<ComponentRow> rotated_component_table(const LoadingMatrix& loadings, double suppress_below) {
    const Eigen::Index p = loadings.loadings.rows();
    const Eigen::Index m = loadings.loadings.cols();
    std::vector<ComponentRow> rows;
    for (Eigen::Index i = 0; i < p; ++i) {
        ComponentRow row;
        row.item = i < static_cast<Eigen::Index>(loadings.items.size()) ? loadings.items[static_cast<std::size_t>(i)]
                                                                         : fmt::format("V{}", i + 1);
        Eigen::Index arg = 0;
        if (m > 0) loadings.loadings.row(i).cwiseAbs().maxCoeff(&arg);
        row.dominant = static_cast<int>(arg);
        for (Eigen::Index j = 0; j < m; ++j) {
            const double v = loadings.loadings(i, j);
            row.cells.push_back(std::abs(v) >= suppress_below ? std::optional<double>(v) : std::nullopt);
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ComponentRow& a, const ComponentRow& b) { return a.dominant < b.dominant; });
    return rows;
}

}  // namespace latentpath
