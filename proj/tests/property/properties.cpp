#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "core/corrected_lasso.hpp"
#include "core/dantzig.hpp"
#include "core/datagen.hpp"
#include "core/filter.hpp"
#include "core/harness.hpp"
#include "core/impute.hpp"
#include "core/knockoff.hpp"
#include "core/lasso.hpp"
#include "core/report.hpp"
#include "core/stats.hpp"
#include "core/working.hpp"

namespace mknock::props {

namespace {

// Small generator helpers over the library stream.
int uniform_int(Stream& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double normal(Stream& rng) {
    double u1 = rng.uniform();
    while (u1 <= 0.0) u1 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * rng.uniform());
}

Matrix normal_matrix(Stream& rng, Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
}

Outcome fail(Outcome o, const std::string& msg) {
    o.ok = false;
    if (o.detail.empty()) o.detail = msg;
    return o;
}

// Brute force: recount every prefix from scratch.
// q is given in hundredths so the comparison is exact.
int scan_cutoff(const std::vector<double>& p, int q_pct, int c) {
    int best = 0;
    for (std::size_t k = 1; k <= p.size(); ++k) {
        int above = 0, below = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (p[i] > 0.5)
                ++above;
            else
                ++below;
        }
        if (100 * (c + above) <= q_pct * std::max(below, 1)) best = static_cast<int>(k);
    }
    return best;
}

// Knockoff(+) threshold on signed statistics W, selecting W_j >= T.
std::vector<int> knockoff_filter(const Vector& w, int q_pct, int offset) {
    std::vector<double> ts;
    for (Eigen::Index j = 0; j < w.size(); ++j)
        if (w(j) != 0) ts.push_back(std::abs(w(j)));
    std::sort(ts.begin(), ts.end());
    double threshold = std::numeric_limits<double>::infinity();
    for (double t : ts) {
        int neg = 0, pos = 0;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            if (w(j) <= -t) ++neg;
            if (w(j) >= t) ++pos;
        }
        if (100 * (offset + neg) <= q_pct * std::max(pos, 1)) {
            threshold = t;
            break;
        }
    }
    std::vector<int> sel;
    for (Eigen::Index j = 0; j < w.size(); ++j)
        if (w(j) >= threshold) sel.push_back(static_cast<int>(j));
    return sel;
}

}  // namespace

Outcome seqstep_matches_scan(std::uint64_t seed, int cases) {
    Outcome out;
    Stream rng(seed);
    const int qs[] = {5, 10, 20, 30, 50};
    for (int t = 0; t < cases; ++t) {
        const int len = uniform_int(rng, 1, 150);
        const int K = uniform_int(rng, 1, 10);
        const int q_pct = qs[uniform_int(rng, 0, 4)];
        const double q = q_pct / 100.0;
        const int c = uniform_int(rng, 0, 1);
        // Mostly small p-values, as in a list ordered by signal strength.
        std::vector<double> p(len);
        for (int i = 0; i < len; ++i) {
            const int hits = rng.uniform() < 0.7 ? 0 : uniform_int(rng, 0, K);
            p[i] = (1.0 + hits) / (1.0 + K);
        }
        ++out.cases;
        const SeqStepResult r = seqstep(p, q, c);
        const int expect = scan_cutoff(p, q_pct, c);
        if (r.k_hat != expect) {
            std::ostringstream os;
            os << "case " << t << ": k_hat " << r.k_hat << " vs scan " << expect;
            return fail(out, os.str());
        }
        if (static_cast<int>(r.fdp_curve.size()) != len) return fail(out, "fdp curve length");
    }
    return out;
}

Outcome single_copy_matches_knockoff_filter(std::uint64_t seed, int cases) {
    Outcome out;
    Stream rng(seed);
    for (int t = 0; t < cases; ++t) {
        const int p = uniform_int(rng, 20, 200);
        const int q_pct = uniform_int(rng, 5, 35);
        const double q = q_pct / 100.0;
        Vector z(p), zt(p);
        for (int j = 0; j < p; ++j) {
            const double shift = rng.uniform() < 0.3 ? 3.0 * rng.uniform() + 1.0 : 0.0;
            z(j) = std::abs(normal(rng) + shift);
            zt(j) = std::abs(normal(rng));
        }
        StatTensor tensor(1, 1, p);
        tensor.set(0, 0, z, zt);
        Vector w(p);
        for (int j = 0; j < p; ++j) w(j) = (z(j) > zt(j) ? 1.0 : -1.0) * std::max(z(j), zt(j));
        for (int c = 0; c <= 1; ++c) {
            ++out.cases;
            const SelectionReport r = select(tensor, q, OrderMode::MaxMax, c);
            if (r.selected() != knockoff_filter(w, q_pct, c)) {
                std::ostringstream os;
                os << "tensor " << t << " offset " << c << ": " << r.selected().size() << " selected vs oracle "
                   << knockoff_filter(w, q_pct, c).size();
                return fail(out, os.str());
            }
        }
    }
    return out;
}

Outcome knockoff_joint_covariance(std::uint64_t seed, int n, int p, double tol) {
    Outcome out;
    Stream rng(seed);
    const Matrix sigma = ar_cov({1.0, 0.5, p});
    Stream xs = rng.derive("x");
    const Matrix x = sample_gaussian_rows(n, psd_factor(sigma), xs);
    double worst = 0.0;
    for (SSolver solver : {SSolver::Equi, SSolver::Block}) {
        ++out.cases;
        const KnockoffPlan plan = make_plan(fit_gaussian(x, 0.0), solver, 5);
        const Matrix xk = sample_knockoffs(x, plan, rng.derive("knockoffs"));
        Matrix joint(n, 2 * p);
        joint << x, xk;
        const Matrix emp = sample_covariance(joint);
        const Matrix& s = plan.model.sigma;
        Matrix target(2 * p, 2 * p);
        const Matrix off = s - Matrix(plan.s.asDiagonal());
        target << s, off, off, s;
        const double err = (emp - target).cwiseAbs().maxCoeff();
        worst = std::max(worst, err);
        if (err > tol) {
            std::ostringstream os;
            os << (solver == SSolver::Equi ? "equi" : "block") << " max deviation " << err;
            return fail(out, os.str());
        }
    }
    std::ostringstream os;
    os << "max deviation " << worst;
    out.detail = os.str();
    return out;
}

Outcome lasso_orthonormal_soft_threshold(std::uint64_t seed, int cases, double tol) {
    Outcome out;
    Stream rng(seed);
    double worst = 0.0;
    for (int t = 0; t < cases; ++t) {
        const int n = uniform_int(rng, 30, 300);
        const int p = uniform_int(rng, 2, std::min(25, n - 2));
        Matrix g = normal_matrix(rng, n, p);
        g.rowwise() -= g.colwise().mean();
        const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(n, p);
        const Matrix x = q * std::sqrt(static_cast<double>(n));
        Vector beta_true = Vector::Zero(p);
        for (int j = 0; j < p; j += 2) beta_true(j) = 2.0 * normal(rng);
        Vector y = x * beta_true + 1.5 * Vector::Ones(n);
        for (int i = 0; i < n; ++i) y(i) += normal(rng);
        const Vector score = x.transpose() * (y.array() - y.mean()).matrix() / n;
        LassoOptions opt;
        opt.tol = 1e-14;
        CoordinateDescent cd(x, y, Family::Gaussian, opt);
        for (double frac : {0.9, 0.5, 0.2, 0.05}) {
            ++out.cases;
            const double lam = frac * score.cwiseAbs().maxCoeff();
            const LassoFit fit = cd.fit(lam);
            for (int j = 0; j < p; ++j) {
                const double a = std::abs(score(j)) - lam;
                const double expect = a > 0 ? std::copysign(a, score(j)) : 0.0;
                worst = std::max(worst, std::abs(fit.beta(j) - expect));
            }
            worst = std::max(worst, std::abs(fit.intercept - y.mean()));
        }
        if (worst > tol) {
            std::ostringstream os;
            os << "case " << t << ": deviation " << worst;
            return fail(out, os.str());
        }
    }
    std::ostringstream os;
    os << "max deviation " << worst;
    out.detail = os.str();
    return out;
}

Outcome gmus_zero_delta_is_gds(std::uint64_t seed, int cases) {
    Outcome out;
    Stream rng(seed);
    for (int t = 0; t < cases; ++t) {
        ++out.cases;
        const int n = 150, p = 8;
        const Matrix w = normal_matrix(rng, n, p);
        const Matrix wk = normal_matrix(rng, n, p);
        Vector y(n);
        for (int i = 0; i < n; ++i) y(i) = rng.uniform() < sigmoid(1.5 * w(i, 0) - w(i, 1)) ? 1.0 : 0.0;
        const AugmentedDesign d = make_design(w, wk, y, Family::Binomial, rng.derive("design"));
        StatOptions opt;
        opt.cv.n_lambda = 30;
        opt.gmus_delta = 0.0;
        const Stream s = rng.derive("stat");
        const StatPair a = stat_gds(d, s, opt);
        const StatPair b = stat_gmus(d, Matrix::Identity(p, p) * 0.5, s, opt);
        if (a.z != b.z || a.z_tilde != b.z_tilde || a.tuning != b.tuning) {
            std::ostringstream os;
            os << "design " << t << ": statistics differ by "
               << std::max((a.z - b.z).cwiseAbs().maxCoeff(), (a.z_tilde - b.z_tilde).cwiseAbs().maxCoeff());
            return fail(out, os.str());
        }
    }
    return out;
}

Outcome corrected_gradient_finite_difference(std::uint64_t seed, int cases, double tol) {
    Outcome out;
    Stream rng(seed);
    double worst = 0.0;
    for (int t = 0; t < cases; ++t) {
        ++out.cases;
        const int d = uniform_int(rng, 1, 30);
        const Matrix a = normal_matrix(rng, d, d);
        // Corrected Gram matrices are symmetric but may be indefinite.
        const Matrix q = 0.5 * (a + a.transpose());
        const Vector c = normal_matrix(rng, d, 1);
        const Vector beta = normal_matrix(rng, d, 1);
        const Vector g = corrected_gradient(q, c, beta);
        Vector fd(d);
        const double h = 1e-5;
        for (int j = 0; j < d; ++j) {
            Vector up = beta, dn = beta;
            up(j) += h;
            dn(j) -= h;
            fd(j) = (corrected_objective(q, c, up) - corrected_objective(q, c, dn)) / (2 * h);
        }
        const double rel = (g - fd).norm() / std::max(g.norm(), 1e-12);
        worst = std::max(worst, rel);
        if (rel > tol) {
            std::ostringstream os;
            os << "case " << t << ": relative error " << rel;
            return fail(out, os.str());
        }
    }
    std::ostringstream os;
    os << "max relative error " << worst;
    out.detail = os.str();
    return out;
}

Outcome imputation_preserves_observed(std::uint64_t seed, int cases) {
    Outcome out;
    ScenarioConfig sc;
    sc.n = 150;
    sc.p = 12;
    sc.pi_mis = 0.5;
    sc.p_mis = 0.3;
    const ImputeMethod engines[] = {ImputeMethod::HalfMin, ImputeMethod::Mean, ImputeMethod::ChainedDefault,
                                    ImputeMethod::ChainedCart, ImputeMethod::ChainedPMM};
    for (int t = 0; t < cases; ++t) {
        const Scenario s = generate_scenario(sc, Stream(seed), static_cast<std::uint64_t>(t));
        ObservedData obs = observed_from(s.datasets[0]);
        if (obs.complete()) return fail(out, "generated data has no missing cells");
        for (ImputeMethod m : engines) {
            for (bool with_y : {true, false}) {
                ++out.cases;
                ImputeConfig cfg;
                cfg.method = m;
                cfg.K = 2;
                cfg.sweeps = 3;
                cfg.include_outcome = with_y;
                const CompletedSet cs = impute(obs, cfg, Stream(seed + 1));
                for (const Matrix& copy : cs.copies) {
                    for (Eigen::Index j = 0; j < obs.p(); ++j)
                        for (Eigen::Index i = 0; i < obs.n(); ++i) {
                            if (!std::isfinite(copy(i, j)))
                                return fail(out, to_string(m) + ": non-finite completed cell");
                            if (obs.r(i, j) == 1 && copy(i, j) != obs.w(i, j))
                                return fail(out, to_string(m) + ": observed cell changed");
                        }
                }
            }
        }
    }
    return out;
}

Outcome reports_repeatable(std::uint64_t seed) {
    Outcome out;
    SimConfig cfg;
    cfg.scenario.n = 200;
    cfg.scenario.p = 12;
    cfg.replicates = 2;
    cfg.seed = seed;
    cfg.pipeline.impute.K = 2;
    cfg.pipeline.impute.sweeps = 3;
    cfg.pipeline.statistics = {Statistic::LassoCoef, Statistic::LassoOrder};
    cfg.pipeline.stat.cv.n_lambda = 40;

    ++out.cases;
    const std::string first = run_summary_json(run_replicates(cfg));
    if (run_summary_json(run_replicates(cfg)) != first) return fail(out, "simulation summaries differ between runs");

    // The worker count is part of the recorded config; everything else must match.
    ++out.cases;
    cfg.threads = 2;
    RunSummary threaded = run_replicates(cfg);
    threaded.config.threads = 1;
    if (run_summary_json(threaded) != first) return fail(out, "simulation summaries depend on the worker count");

    ++out.cases;
    const Scenario s = generate_scenario(cfg.scenario, Stream(seed), 0);
    ScreenOptions opt;
    opt.pipeline = cfg.pipeline;
    opt.stability = 2;
    const std::vector<ObservedData> data{observed_from(s.datasets[0])};
    const std::string a = screen_json(screen_observed(data, opt, Stream(seed)));
    const std::string b = screen_json(screen_observed(data, opt, Stream(seed)));
    if (a != b) return fail(out, "screen reports differ between runs");
    return out;
}

}  // namespace mknock::props
