#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/corrected_lasso.hpp"
#include "core/dantzig.hpp"
#include "core/error.hpp"
#include "core/forest.hpp"
#include "core/parallel.hpp"
#include "core/working.hpp"

namespace mknock {

Statistic parse_statistic(const std::string& name) {
    if (name == "lasso" || name == "lasso_coef") return Statistic::LassoCoef;
    if (name == "lasso_order" || name == "order") return Statistic::LassoOrder;
    if (name == "rf" || name == "forest") return Statistic::RandomForest;
    if (name == "gds") return Statistic::GDS;
    if (name == "gmus") return Statistic::GMUS;
    if (name == "corrected_lasso" || name == "cl") return Statistic::CorrectedLasso;
    throw ConfigError("unknown statistic '" + name + "'");
}

std::string to_string(Statistic s) {
    switch (s) {
        case Statistic::LassoCoef: return "lasso";
        case Statistic::LassoOrder: return "lasso_order";
        case Statistic::RandomForest: return "rf";
        case Statistic::GDS: return "gds";
        case Statistic::GMUS: return "gmus";
        case Statistic::CorrectedLasso: return "corrected_lasso";
    }
    return "?";
}

bool uses_error_cov(Statistic s) { return s == Statistic::GMUS || s == Statistic::CorrectedLasso; }

namespace {

struct Fold {
    Matrix xtr, xte;
    Vector ytr, yte;
};

}  // namespace

struct StatEngine::Impl {
    const AugmentedDesign& design;
    std::optional<Matrix> sigma_eps;
    StatOptions opt;
    Stream rng;
    Standardized st;
    std::optional<LassoCv> cv;
    std::vector<Fold> folds;

    Impl(const AugmentedDesign& d, std::optional<Matrix> s, StatOptions o, Stream r)
        : design(d), sigma_eps(std::move(s)), opt(o), rng(r), st(standardize(d.columns)) {}

    const LassoCv& lasso() {
        if (!cv) {
            Stream fr = derive(rng, Role::Folds);
            cv = lasso_cv(st.x, design.y, design.family, opt.cv, fr, opt.lasso);
            const int k = opt.cv.folds;
            folds.resize(k);
            for (int f = 0; f < k; ++f) {
                std::vector<int> train, test;
                for (std::size_t i = 0; i < cv->folds.size(); ++i)
                    (cv->folds[i] == f ? test : train).push_back(static_cast<int>(i));
                folds[f] = {take_rows(st.x, train), take_rows(st.x, test), take_rows(design.y, train),
                            take_rows(design.y, test)};
            }
        }
        return *cv;
    }

    Matrix error_cov() const {
        const Eigen::Index p = design.p(), d = 2 * p;
        Matrix out = Matrix::Zero(d, d);
        if (!sigma_eps) return out;
        const Matrix& s = *sigma_eps;
        MKNOCK_REQUIRE(s.rows() == p && s.cols() == p, ConfigError, "error covariance must be p x p");
        for (Eigen::Index a = 0; a < d; ++a) {
            const int oa = design.perm[a];
            if (oa >= p) continue;
            for (Eigen::Index b = 0; b < d; ++b) {
                const int ob = design.perm[b];
                if (ob >= p) continue;
                out(a, b) = s(oa, ob) / (st.scale(a) * st.scale(b));
            }
        }
        return out;
    }

    double delta(double mean_weight) const {
        if (opt.gmus_delta) return *opt.gmus_delta;
        const Matrix s = error_cov();
        const double sd = std::sqrt(std::max(0.0, s.diagonal().maxCoeff()));
        const double n = static_cast<double>(design.n());
        const double d = static_cast<double>(2 * design.p());
        return mean_weight * sd * std::sqrt(2.0 * std::log(d) / n);
    }

    StatPair finish(Statistic s, const Vector& solver_vals) const {
        const Vector aug = unpermute(design, solver_vals.cwiseAbs());
        StatPair out;
        const Eigen::Index p = design.p();
        out.z = aug.head(p);
        out.z_tilde = aug.tail(p);
        out.statistic = s;
        out.interleave_key = design.interleave_key;
        for (Eigen::Index j = 0; j < aug.size(); ++j)
            if (!std::isfinite(aug(j))) throw SolverError("statistic " + to_string(s) + " is not finite");
        return out;
    }

    double heldout(const WorkingProblem& wp, const Vector& beta, const Fold& f) const {
        const Vector eta = (f.xte * beta).array() + wp.intercept(beta);
        return deviance(design.family, f.yte, eta);
    }

    // Cross-validated Dantzig (delta == 0) or matrix-uncertainty selector.
    StatPair dantzig(Statistic which) {
        const LassoCv& c = lasso();
        const WorkingProblem full = linearize(st.x, design.y, design.family, &c.best_fit());
        const double dlt = which == Statistic::GMUS ? delta(full.mean_weight) : 0.0;
        const double top = full.c.cwiseAbs().maxCoeff();
        StatPair out;
        if (!(top > 0)) {
            out = finish(which, Vector::Zero(st.x.cols()));
        } else {
            const auto grid = log_grid(top, opt.cv.lambda_min_ratio, opt.cv.n_lambda);
            const auto g = static_cast<Eigen::Index>(grid.size());
            std::vector<Vector> fold_dev(folds.size());
            parallel_for(folds.size(), opt.threads, [&](std::size_t f) {
                const WorkingProblem wp = linearize(folds[f].xtr, folds[f].ytr, design.family, &c.fold_best[f]);
                DantzigLp lp(wp.gram, wp.c, dlt);
                Vector dev(g);
                for (Eigen::Index k = 0; k < g; ++k) {
                    const Vector& beta = lp.solve(grid[k]);
                    dev(k) = heldout(wp, beta, folds[f]);
                }
                fold_dev[f] = std::move(dev);
            });
            Vector total = Vector::Zero(g);
            for (const auto& v : fold_dev) total += v;
            Eigen::Index best = 0;
            total.minCoeff(&best);
            DantzigLp lp(full.gram, full.c, dlt);
            const Vector beta = lp.solve(grid[best]);
            out = finish(which, beta);
            out.tuning = grid[best];
        }
        out.tuning_name = "lambda";
        out.delta = dlt;
        return out;
    }

    StatPair corrected() {
        const LassoCv& c = lasso();
        const double r0 = c.best_fit().beta.lpNorm<1>();
        const Eigen::Index d = st.x.cols();
        StatPair out;
        if (!(r0 > 0)) {
            out = finish(Statistic::CorrectedLasso, Vector::Zero(d));
            out.tuning_name = "d";
            return out;
        }
        const Matrix sig = error_cov();
        std::vector<double> radii = log_grid(opt.d_high * r0, opt.d_low / opt.d_high, opt.d_points);
        std::reverse(radii.begin(), radii.end());
        const auto g = static_cast<Eigen::Index>(radii.size());
        const double inf = std::numeric_limits<double>::infinity();

        std::vector<Vector> fold_dev(folds.size());
        parallel_for(folds.size(), opt.threads, [&](std::size_t f) {
            const WorkingProblem wp = linearize(folds[f].xtr, folds[f].ytr, design.family, &c.fold_best[f]);
            const Matrix q = wp.gram - wp.mean_weight * sig;
            Vector start = Vector::Zero(d);
            Vector dev(g);
            for (Eigen::Index k = 0; k < g; ++k) {
                const CorrectedFit fit = corrected_lasso_fit(q, wp.c, radii[k], start);
                if (fit.rejected) {
                    dev(k) = inf;
                    continue;
                }
                start = fit.beta;
                dev(k) = heldout(wp, fit.beta, folds[f]);
            }
            fold_dev[f] = std::move(dev);
        });
        Vector total = Vector::Zero(g);
        for (const auto& v : fold_dev) total += v;

        const WorkingProblem full = linearize(st.x, design.y, design.family, &c.best_fit());
        const Matrix q = full.gram - full.mean_weight * sig;
        std::vector<Eigen::Index> order(g);
        for (Eigen::Index k = 0; k < g; ++k) order[k] = k;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return total(a) < total(b); });
        for (Eigen::Index k : order) {
            if (!std::isfinite(total(k))) break;
            const CorrectedFit fit = corrected_lasso_fit(q, full.c, radii[k], Vector::Zero(d));
            if (fit.rejected) continue;
            out = finish(Statistic::CorrectedLasso, fit.beta);
            out.tuning_name = "d";
            out.tuning = radii[k];
            return out;
        }
        throw SolverError("corrected lasso: every radius was rejected");
    }

    StatPair forest() {
        ForestParams fp;
        fp.trees = opt.trees;
        fp.mtry = opt.mtry;
        fp.criterion = design.family == Family::Binomial ? SplitCriterion::Gini : SplitCriterion::Variance;
        fp.threads = opt.threads;
        const Vector imp = forest_importance(design.columns, design.y, fp, derive(rng, Role::Forest));
        StatPair out = finish(Statistic::RandomForest, imp);
        return out;
    }
};

StatEngine::StatEngine(const AugmentedDesign& design, std::optional<Matrix> sigma_eps, StatOptions opt, Stream rng)
    : impl_(std::make_unique<Impl>(design, std::move(sigma_eps), opt, rng)) {
    MKNOCK_REQUIRE(static_cast<Eigen::Index>(design.perm.size()) == design.columns.cols(), ConfigError,
                   "design permutation has the wrong length");
}

StatEngine::~StatEngine() = default;

const LassoCv& StatEngine::lasso() const { return impl_->lasso(); }
const Matrix& StatEngine::standardized() const { return impl_->st.x; }
Matrix StatEngine::augmented_error_cov() const { return impl_->error_cov(); }

double StatEngine::gmus_delta() const {
    double w = 1.0;
    if (impl_->design.family == Family::Binomial && !impl_->opt.gmus_delta)
        w = linearize(impl_->st.x, impl_->design.y, Family::Binomial, &impl_->lasso().best_fit()).mean_weight;
    return impl_->delta(w);
}

StatPair StatEngine::compute(Statistic s) {
    if (uses_error_cov(s))
        MKNOCK_REQUIRE(impl_->sigma_eps.has_value(), ConfigError,
                       "statistic " + to_string(s) + " needs an error covariance");
    switch (s) {
        case Statistic::LassoCoef: {
            const LassoCv& c = impl_->lasso();
            StatPair out = impl_->finish(s, c.best_fit().beta);
            out.tuning_name = "lambda";
            out.tuning = c.best_lambda();
            return out;
        }
        case Statistic::LassoOrder: {
            const LassoCv& c = impl_->lasso();
            StatPair out = impl_->finish(s, entry_lambdas(c.full, impl_->st.x.cols()));
            out.tuning_name = "lambda";
            return out;
        }
        case Statistic::RandomForest: return impl_->forest();
        case Statistic::GDS:
        case Statistic::GMUS: return impl_->dantzig(s);
        case Statistic::CorrectedLasso: return impl_->corrected();
    }
    throw ConfigError("unknown statistic");
}

StatPair stat_lasso_coef(const AugmentedDesign& design, const Stream& rng, StatOptions opt) {
    return StatEngine(design, std::nullopt, opt, rng).compute(Statistic::LassoCoef);
}
StatPair stat_lasso_order(const AugmentedDesign& design, const Stream& rng, StatOptions opt) {
    return StatEngine(design, std::nullopt, opt, rng).compute(Statistic::LassoOrder);
}
StatPair stat_rf(const AugmentedDesign& design, const Stream& rng, StatOptions opt) {
    return StatEngine(design, std::nullopt, opt, rng).compute(Statistic::RandomForest);
}
StatPair stat_gds(const AugmentedDesign& design, const Stream& rng, StatOptions opt) {
    return StatEngine(design, std::nullopt, opt, rng).compute(Statistic::GDS);
}
StatPair stat_gmus(const AugmentedDesign& design, const Matrix& sigma_eps, const Stream& rng, StatOptions opt) {
    return StatEngine(design, sigma_eps, opt, rng).compute(Statistic::GMUS);
}
StatPair stat_corrected_lasso(const AugmentedDesign& design, const Matrix& sigma_eps, const Stream& rng,
                              StatOptions opt) {
    return StatEngine(design, sigma_eps, opt, rng).compute(Statistic::CorrectedLasso);
}

DantzigFit dantzig_at(const Matrix& x_std, const Vector& y, Family family, const LassoFit* prelim, double lambda,
                      double delta) {
    const WorkingProblem wp = linearize(x_std, y, family, prelim);
    DantzigLp lp(wp.gram, wp.c, delta);
    DantzigFit out;
    out.beta = lp.solve(lambda);
    out.intercept = wp.intercept(out.beta);
    return out;
}

}  // namespace mknock
