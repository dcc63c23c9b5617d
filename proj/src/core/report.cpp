#include "core/report.hpp"

#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/csv.hpp"

namespace mknock {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

std::string feature_name(const SelectionReport& r, Eigen::Index j) {
    if (static_cast<std::size_t>(j) < r.feature_names.size()) return r.feature_names[j];
    return "x" + std::to_string(j + 1);
}

ordered selection_object(const SelectionReport& r, const StabilityReport* st) {
    const Eigen::Index p = r.p_values.size();
    std::vector<int> rank(p, 0);
    for (std::size_t i = 0; i < r.order.size(); ++i) rank[r.order[i]] = static_cast<int>(i + 1);
    std::vector<char> s0(p, 0), s1(p, 0);
    for (int j : r.selected_0) s0[j] = 1;
    for (int j : r.selected_1) s1[j] = 1;
    ordered o;
    o["q"] = r.q;
    o["c"] = r.c;
    o["mode"] = to_string(r.mode);
    o["k_hat_0"] = r.k_hat_0;
    o["k_hat_1"] = r.k_hat_1;
    o["fdp_estimate_0"] = r.fdp_estimate_0;
    o["fdp_estimate_1"] = r.fdp_estimate_1;
    ordered sel = ordered::array();
    for (int j : r.selected()) sel.push_back(feature_name(r, j));
    o["selected"] = sel;
    if (st) {
        o["stability_repetitions"] = st->R;
        o["stability_threshold"] = st->threshold;
        ordered stable = ordered::array();
        for (int j : st->stable(st->threshold)) stable.push_back(feature_name(r, j));
        o["stable"] = stable;
    }
    ordered feats = ordered::array();
    for (Eigen::Index j = 0; j < p; ++j) {
        ordered f;
        f["index"] = j + 1;
        f["name"] = feature_name(r, j);
        f["p_value"] = r.p_values(j);
        f["order_rank"] = rank[j];
        f["selected_0"] = s0[j] != 0;
        f["selected_1"] = s1[j] != 0;
        if (st) f["frequency"] = st->frequency(j);
        feats.push_back(f);
    }
    o["features"] = feats;
    return o;
}

}  // namespace

std::string selection_json(const SelectionReport& r, const StabilityReport* stability) {
    return selection_object(r, stability).dump(2) + "\n";
}

std::string selection_csv(const SelectionReport& r, const StabilityReport* stability) {
    const Eigen::Index p = r.p_values.size();
    std::vector<int> rank(p, 0);
    for (std::size_t i = 0; i < r.order.size(); ++i) rank[r.order[i]] = static_cast<int>(i + 1);
    std::vector<char> s0(p, 0), s1(p, 0);
    for (int j : r.selected_0) s0[j] = 1;
    for (int j : r.selected_1) s1[j] = 1;
    std::ostringstream out;
    out << "index,name,p,order_rank,selected_0,selected_1,frequency\n";
    for (Eigen::Index j = 0; j < p; ++j) {
        out << j + 1 << ',' << csv_escape(feature_name(r, j)) << ',' << format_double(r.p_values(j)) << ','
            << rank[j] << ',' << int(s0[j]) << ',' << int(s1[j]) << ',';
        if (stability) out << format_double(stability->frequency(j));
        out << '\n';
    }
    return out.str();
}

std::string screen_json(const ScreenResult& r) {
    ordered o;
    ordered methods = ordered::object();
    for (const auto& [stat, rep] : r.main.reports) {
        const StabilityReport* st = nullptr;
        for (const auto& [s2, sr] : r.stability)
            if (s2 == stat) st = &sr;
        methods[to_string(stat)] = selection_object(rep, st);
    }
    o["methods"] = methods;
    o["dropped_features"] = r.dropped_features;
    if (r.error_cov) {
        o["error_cov"] = {{"rank_deficient", r.error_cov->rank_deficient},
                          {"diagonal", r.error_cov->diagonal},
                          {"repaired", r.error_cov->repaired}};
    }
    o["warnings"] = r.warnings;
    return o.dump(2) + "\n";
}

std::string run_summary_json(const RunSummary& s) {
    ordered o;
    o["config"] = ordered::parse(sim_config_json(s.config));
    o["requested"] = s.requested;
    o["completed"] = s.completed;
    o["aborted"] = s.aborted;
    if (s.config.include_timing) o["wall_seconds"] = s.wall_seconds;
    ordered methods = ordered::array();
    for (const auto& m : s.methods) {
        ordered mo;
        mo["statistic"] = to_string(m.statistic);
        mo["mean_fdp"] = m.mean_fdp;
        mo["se_fdp"] = m.se_fdp;
        mo["mean_power"] = m.power_replicates > 0 ? ordered(m.mean_power) : ordered(nullptr);
        mo["se_power"] = m.power_replicates > 0 ? ordered(m.se_power) : ordered(nullptr);
        mo["replicates"] = m.replicates;
        methods.push_back(mo);
    }
    o["methods"] = methods;
    ordered recs = ordered::array();
    for (const auto& rec : s.records) {
        ordered ro;
        ro["replicate"] = rec.replicate;
        if (rec.aborted) {
            ro["aborted"] = true;
            ro["error"] = rec.error;
        } else {
            ordered per = ordered::array();
            for (std::size_t i = 0; i < rec.per_method.size(); ++i) {
                per.push_back({{"fdp", rec.per_method[i].fdp},
                               {"power", rec.per_method[i].power ? ordered(*rec.per_method[i].power) : ordered(nullptr)},
                               {"selected", rec.n_selected[i]}});
            }
            ro["methods"] = per;
        }
        recs.push_back(ro);
    }
    o["replicates"] = recs;
    return o.dump(2) + "\n";
}

std::string run_summary_csv(const RunSummary& s) {
    std::ostringstream out;
    const auto& sc = s.config.scenario;
    out << "setting,n,p,a_beta,sigma2_eps,pi_mis,p_mis,mis_basis,impute,statistic,mean_fdp,se_fdp,mean_power,"
           "se_power,replicates,aborted\n";
    for (const auto& m : s.methods) {
        out << to_string(sc.setting) << ',' << sc.n << ',' << sc.p << ',' << format_double(sc.a_beta) << ','
            << format_double(sc.sigma2_eps) << ',' << format_double(sc.pi_mis) << ',' << format_double(sc.p_mis)
            << ',' << to_string(sc.mis_basis) << ',' << to_string(s.config.pipeline.impute.method) << ','
            << to_string(m.statistic) << ',' << format_double(m.mean_fdp) << ',' << format_double(m.se_fdp) << ',';
        if (m.power_replicates > 0)
            out << format_double(m.mean_power) << ',' << format_double(m.se_power);
        else
            out << "NA,NA";
        out << ',' << m.replicates << ',' << s.aborted << '\n';
    }
    return out.str();
}

std::string run_summary_text(const RunSummary& s) {
    const auto& sc = s.config.scenario;
    std::vector<std::string> head{"setting", "n", "p", "sigma2_eps", "p_mis", "impute"};
    std::ostringstream v;
    std::vector<std::string> row{to_string(sc.setting), std::to_string(sc.n), std::to_string(sc.p),
                                 format_double(sc.sigma2_eps), format_double(sc.p_mis),
                                 to_string(s.config.pipeline.impute.method)};
    auto fixed = [](double x) {
        std::ostringstream o;
        o << std::fixed << std::setprecision(3) << x;
        return o.str();
    };
    for (const auto& m : s.methods) {
        head.push_back(to_string(m.statistic) + " FDP");
        head.push_back(to_string(m.statistic) + " Power");
        row.push_back(fixed(m.mean_fdp) + " (" + fixed(m.se_fdp) + ")");
        row.push_back(m.power_replicates > 0 ? fixed(m.mean_power) + " (" + fixed(m.se_power) + ")" : "NA");
    }
    std::ostringstream out;
    std::vector<std::size_t> width(head.size());
    for (std::size_t i = 0; i < head.size(); ++i) width[i] = std::max(head[i].size(), row[i].size());
    for (std::size_t i = 0; i < head.size(); ++i)
        out << (i ? "  " : "") << std::left << std::setw(static_cast<int>(width[i])) << head[i];
    out << '\n';
    for (std::size_t i = 0; i < head.size(); ++i)
        out << (i ? "  " : "") << std::left << std::setw(static_cast<int>(width[i])) << row[i];
    out << '\n';
    out << "replicates: " << s.completed << " completed, " << s.aborted << " aborted\n";
    return out.str();
}

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& names) {
    std::ostringstream out;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        out << csv_escape(static_cast<std::size_t>(j) < names.size() ? names[j] : "x" + std::to_string(j + 1));
    }
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    return out.str();
}

std::string completed_csv(const CompletedSet& cs, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "imputation";
    const Eigen::Index p = cs.copies.empty() ? 0 : cs.copies[0].cols();
    for (Eigen::Index j = 0; j < p; ++j)
        out << ',' << csv_escape(static_cast<std::size_t>(j) < names.size() ? names[j] : "x" + std::to_string(j + 1));
    out << '\n';
    for (std::size_t k = 0; k < cs.copies.size(); ++k)
        for (Eigen::Index i = 0; i < cs.copies[k].rows(); ++i) {
            out << k + 1;
            for (Eigen::Index j = 0; j < p; ++j) out << ',' << format_double(cs.copies[k](i, j));
            out << '\n';
        }
    return out.str();
}

}  // namespace mknock
