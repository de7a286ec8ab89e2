#include "misi/commands.hpp"

#include "misi/csv.hpp"
#include "misi/curve.hpp"
#include "misi/error.hpp"
#include "misi/ranking.hpp"
#include "misi/seeding.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace misi {

namespace {

using ojson = nlohmann::ordered_json;

std::uint64_t base_seed(const RunConfig& cfg, const CommandOptions& opt) {
    return opt.seed.value_or(cfg.analysis.base_seed);
}

IoDataset load_dataset(const RunConfig& cfg) {
    const auto table = csv::read_file(cfg.model.dataset_path);
    IoDataset data;
    const auto add = [&](const std::string& name, Role role) {
        const auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end()) throw UnknownColumn("dataset has no column '" + name + "'");
        data.add(SampleColumn(name, table.columns[static_cast<std::size_t>(it - table.header.begin())]), role);
    };
    for (const auto& c : cfg.cvs) add(c, Role::cv);
    for (const auto& q : cfg.qois) add(q, Role::qoi);
    return data;
}

// The rows an adjusted ranking, bootstrap corpus or sample command sees.
IoDataset obtain_data(const RunConfig& cfg, const std::optional<Prior>& prior, std::size_t rows,
                      std::uint64_t seed) {
    if (cfg.model.kind == ModelConfig::Kind::dataset) return load_dataset(cfg);
    return generate(*prior, *cfg.make_model(), rows, derive_seed(seed, "data"));
}

ojson estimate_json(const MisiEstimate& e) {
    ojson bw = ojson::object();
    for (const auto& [name, h] : e.bandwidths_used.values()) bw[name] = h;
    return {{"label", e.label()},
            {"cvs", e.cv_labels},
            {"kind", std::string(to_string(e.kind))},
            {"value", e.value},
            {"std_error", e.std_error},
            {"bandwidths", bw},
            {"near_functional", e.near_functional},
            {"underflow_clamped", e.underflow_clamped},
            {"degenerate", e.degenerate}};
}

ojson adjusted_result(const IoDataset& data, const std::vector<std::string>& cvs, const std::string& qoi,
                      const RunConfig& cfg) {
    EstimatorOptions eopt;
    eopt.evaluation = cfg.analysis.evaluation;
    const auto est = estimate_indices(data, cvs, qoi, cfg.analysis.order, eopt);

    ojson out;
    out["qoi"] = qoi;
    out["order"] = cfg.analysis.order;
    out["algorithm"] = "adjusted";
    out["sample_count"] = data.rows();
    ojson estimates = ojson::array();
    for (const auto& e : est) estimates.push_back(estimate_json(e));
    out["estimates"] = estimates;
    ojson notes = ojson::array();

    const auto zero_sigmas = std::count_if(est.begin(), est.end(), [](const auto& e) { return e.std_error == 0.0; });
    ojson ranking = ojson::array();
    ojson pairs = ojson::array();
    if (est.size() >= 2 && zero_sigmas >= 2) {
        // The comparison level needs at most one vanishing standard error.
        std::vector<std::size_t> order(est.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) {
            if (est[a].value != est[b].value) return est[a].value > est[b].value;
            return est[a].label() < est[b].label();
        });
        out["z_level"] = nullptr;
        out["newton_iters"] = 0;
        out["gamma_bar"] = cfg.analysis.gamma_bar;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& e = est[order[k]];
            ranking.push_back({{"rank", k + 1},
                               {"label", e.label()},
                               {"value", e.value},
                               {"std_error", e.std_error},
                               {"lower", nullptr},
                               {"upper", nullptr}});
        }
        for (std::size_t k = 0; k < order.size(); ++k)
            for (std::size_t l = k + 1; l < order.size(); ++l)
                pairs.push_back({{"higher", est[order[k]].label()}, {"lower", est[order[l]].label()}, {"resolved", false}});
        notes.push_back(std::to_string(zero_sigmas) +
                        " standard errors are zero; the comparison level is undefined and no pair is resolved");
    } else {
        const auto rep = ranked_report(est, cfg.analysis.gamma_bar);
        out["z_level"] = rep.z_level;
        out["newton_iters"] = rep.newton_iters;
        out["gamma_bar"] = rep.gamma_bar;
        for (std::size_t k = 0; k < rep.theta.size(); ++k)
            ranking.push_back({{"rank", k + 1},
                               {"label", rep.ordered_labels[k]},
                               {"value", rep.theta[k]},
                               {"std_error", rep.sigma[k]},
                               {"lower", rep.intervals[k].first},
                               {"upper", rep.intervals[k].second}});
        for (const auto& p : rep.pairs)
            pairs.push_back({{"higher", rep.ordered_labels[p.k]},
                             {"lower", rep.ordered_labels[p.l]},
                             {"resolved", p.resolved}});
    }
    for (const auto& e : est) {
        if (e.near_functional) notes.push_back(e.label() + ": near-functional dependence; the value is resolution-bound");
        if (e.degenerate) notes.push_back(e.label() + ": constant column; reported as exactly zero");
        if (e.underflow_clamped) notes.push_back(e.label() + ": some densities were clamped before taking logs");
    }
    out["ranking"] = ranking;
    out["pairs"] = pairs;
    out["notes"] = notes;
    return out;
}

ojson percentile_result(const RunConfig& cfg, const std::optional<Prior>& prior,
                        const std::vector<std::string>& cvs, const std::string& qoi, std::uint64_t seed) {
    PercentileOptions po;
    po.replications = cfg.analysis.replications;
    po.rows = cfg.analysis.samples;
    po.delta = cfg.analysis.delta;
    po.base_seed = derive_seed(seed, "replications");
    po.qoi = qoi;
    po.cvs = cvs;
    po.order = cfg.analysis.order;
    po.estimator.evaluation = cfg.analysis.evaluation;

    RankDistribution dist;
    const std::size_t rows = po.rows;
    if (cfg.analysis.mode == ReplicationMode::bootstrap) {
        const BootstrapSource source(obtain_data(cfg, prior, cfg.analysis.samples, seed));
        dist = rank_percentiles(source, po);
    } else {
        if (cfg.model.kind == ModelConfig::Kind::dataset)
            throw ConfigError("fresh replications need a model; use mode = \"bootstrap\" with a dataset");
        const ModelSource source(*prior, cfg.make_model());
        dist = rank_percentiles(source, po);
    }

    const std::size_t p = dist.labels.size();
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (dist.mean_rank[a] != dist.mean_rank[b]) return dist.mean_rank[a] < dist.mean_rank[b];
        return dist.labels[a] < dist.labels[b];
    });

    ojson out;
    out["qoi"] = qoi;
    out["order"] = cfg.analysis.order;
    out["algorithm"] = "percentile";
    out["mode"] = cfg.analysis.mode == ReplicationMode::fresh ? "fresh" : "bootstrap";
    out["sample_count"] = rows;
    out["replications"] = dist.replications;
    out["delta"] = dist.delta;
    ojson ranking = ojson::array();
    for (std::size_t k = 0; k < p; ++k) {
        const auto j = order[k];
        std::vector<std::size_t> counts(p, 0);
        for (std::size_t n = 0; n < dist.replications; ++n) ++counts[static_cast<std::size_t>(dist.rank(n, j) - 1)];
        ranking.push_back({{"rank", k + 1},
                           {"label", dist.labels[j]},
                           {"mean_rank", dist.mean_rank[j]},
                           {"lower", dist.lower[j]},
                           {"upper", dist.upper[j]},
                           {"rank_counts", counts}});
    }
    ojson pairs = ojson::array();
    for (std::size_t k = 0; k < p; ++k)
        for (std::size_t l = k + 1; l < p; ++l)
            pairs.push_back({{"higher", dist.labels[order[k]]},
                             {"lower", dist.labels[order[l]]},
                             {"resolved", dist.upper[order[k]] < dist.lower[order[l]]}});
    out["ranking"] = ranking;
    out["pairs"] = pairs;
    out["notes"] = ojson::array();
    return out;
}

ojson rank_one(const RunConfig& cfg, const std::optional<Prior>& prior, const std::vector<std::string>& cvs,
               const std::string& qoi, std::uint64_t seed, const IoDataset* shared) {
    if (cfg.analysis.algorithm == Algorithm::percentile) return percentile_result(cfg, prior, cvs, qoi, seed);
    if (shared) return adjusted_result(*shared, cvs, qoi, cfg);
    return adjusted_result(obtain_data(cfg, prior, cfg.analysis.samples, seed), cvs, qoi, cfg);
}

ojson config_summary(const RunConfig& cfg) {
    ojson model;
    switch (cfg.model.kind) {
    case ModelConfig::Kind::builtin:
        model = {{"kind", "builtin"}, {"name", cfg.model.builtin}};
        break;
    case ModelConfig::Kind::external:
        model = {{"kind", "external"}, {"command", cfg.model.external.command}};
        break;
    case ModelConfig::Kind::dataset:
        model = {{"kind", "dataset"}, {"path", cfg.model.dataset_path}};
        break;
    case ModelConfig::Kind::none:
        model = {{"kind", "none"}};
        break;
    }
    const auto& a = cfg.analysis;
    return {{"model", model},
            {"cvs", cfg.cvs},
            {"qois", cfg.qois},
            {"order", a.order},
            {"samples", a.samples},
            {"algorithm", a.algorithm == Algorithm::adjusted ? "adjusted" : "percentile"},
            {"mode", a.mode == ReplicationMode::fresh ? "fresh" : "bootstrap"},
            {"gamma_bar", a.gamma_bar},
            {"delta", a.delta},
            {"replications", a.replications},
            {"evaluation", std::string(to_string(a.evaluation))}};
}

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

void require_model(const RunConfig& cfg, const char* what) {
    if (cfg.model.kind == ModelConfig::Kind::none) throw ConfigError(std::string(what) + " needs a model or dataset");
}

}  // namespace

std::string cmd_sample(const RunConfig& cfg, const CommandOptions& opt) {
    if (cfg.model.kind == ModelConfig::Kind::dataset) throw ConfigError("sample needs a prior, not a dataset");
    const auto seed = base_seed(cfg, opt);
    const auto prior = cfg.effective_prior();
    IoDataset data;
    if (cfg.model.kind == ModelConfig::Kind::none)
        data = prior.sample(cfg.sample_count, derive_seed(derive_seed(seed, "data"), "inputs"));
    else
        data = obtain_data(cfg, prior, cfg.sample_count, seed);
    csv::Table table;
    for (const auto& c : data.columns()) {
        table.header.push_back(c.name());
        table.columns.emplace_back(c.values().begin(), c.values().end());
    }
    std::ostringstream os;
    csv::write(os, table);
    return os.str();
}

std::string cmd_rank(const RunConfig& cfg, const CommandOptions& opt) {
    require_model(cfg, "rank");
    if (cfg.qois.empty()) throw ConfigError("rank needs at least one QoI");
    if (cfg.analysis.order == 2 && cfg.qois.size() != 1)
        throw ConfigError("second-order ranking takes exactly one QoI; set roles.qoi");
    const auto seed = base_seed(cfg, opt);
    std::optional<Prior> prior;
    if (cfg.prior) prior = cfg.effective_prior();

    std::optional<IoDataset> shared;
    if (cfg.analysis.algorithm == Algorithm::adjusted)
        shared = obtain_data(cfg, prior, cfg.analysis.samples, seed);

    ojson results = ojson::array();
    for (const auto& q : cfg.qois) results.push_back(rank_one(cfg, prior, cfg.cvs, q, seed, shared ? &*shared : nullptr));

    ojson doc;
    doc["report"] = "rank";
    doc["version"] = kReportVersion;
    doc["seed"] = seed;
    doc["config"] = config_summary(cfg);
    ojson sub = ojson::object();
    for (const auto& [name, r] : cfg.subspace) sub[name] = {r.lo, r.hi};
    doc["subspace"] = sub;
    doc["results"] = results;
    return dump(doc);
}

std::string cmd_curve(const RunConfig& cfg, const CommandOptions& opt) {
    require_model(cfg, "curve");
    const auto cv = opt.curve_cv.empty() ? cfg.curve.cv : opt.curve_cv;
    const auto qoi = opt.curve_qoi.empty() ? cfg.curve.qoi : opt.curve_qoi;
    const auto bins = opt.curve_bins.value_or(cfg.curve.bins);
    if (cv.empty() || qoi.empty()) throw ConfigError("curve needs a CV and a QoI (curve.cv / curve.qoi or --cv / --qoi)");
    const auto seed = base_seed(cfg, opt);
    IoDataset data;
    if (cfg.model.kind == ModelConfig::Kind::dataset)
        data = load_dataset(cfg);
    else
        data = generate(cfg.effective_prior(), *cfg.make_model(), cfg.curve.samples, derive_seed(seed, "curve"));
    const auto curve = response_curve(data, cv, qoi, bins);

    std::ostringstream os;
    os << "kind," << cv << ',' << qoi << ",count\n";
    for (const auto& [x, y] : curve.scatter) os << "point," << csv::format_double(x) << ',' << csv::format_double(y) << ",1\n";
    for (const auto& b : curve.bins)
        os << "bin," << csv::format_double(b.center) << ',' << (b.mean ? csv::format_double(*b.mean) : "") << ','
           << b.count << '\n';
    return os.str();
}

std::string cmd_loop(const RunConfig& cfg, const CommandOptions& opt) {
    require_model(cfg, "loop");
    if (cfg.model.kind == ModelConfig::Kind::dataset || !cfg.prior)
        throw ConfigError("loop needs a prior; dataset mode cannot draw inside a subspace");
    const auto target = cfg.loop.target.empty() ? (cfg.qois.size() == 1 ? cfg.qois.front() : std::string{})
                                                : cfg.loop.target;
    if (target.empty()) throw ConfigError("loop needs loop.target when several QoIs are configured");
    if (cfg.loop.top_k > 0 && cfg.analysis.order != 1) throw ConfigError("loop.top_k applies to first-order rankings");
    const auto seed = base_seed(cfg, opt);

    const std::optional<Prior> outer_prior = *cfg.prior;
    const std::optional<Prior> inner_prior = cfg.effective_prior();
    const auto outer = rank_one(cfg, outer_prior, cfg.cvs, target, derive_seed(seed, "outer"), nullptr);

    std::vector<std::string> inner_cvs = cfg.cvs;
    if (cfg.loop.top_k > 0 && cfg.loop.top_k < cfg.cvs.size()) {
        inner_cvs.clear();
        for (std::size_t k = 0; k < cfg.loop.top_k; ++k)
            inner_cvs.push_back(outer["ranking"][k]["label"].get<std::string>());
    }
    const auto inner = rank_one(cfg, inner_prior, inner_cvs, target, derive_seed(seed, "inner"), nullptr);

    std::map<std::string, std::size_t> outer_rank;
    for (const auto& r : outer["ranking"]) outer_rank[r["label"].get<std::string>()] = r["rank"].get<std::size_t>();
    ojson changes = ojson::array();
    ojson annotations = ojson::array();
    bool changed = false;
    // Ranks among the CVs kept in the inner ranking.
    std::vector<std::pair<std::size_t, std::string>> kept;
    for (const auto& r : inner["ranking"]) kept.emplace_back(outer_rank.at(r["label"].get<std::string>()), r["label"]);
    std::sort(kept.begin(), kept.end());
    std::map<std::string, std::size_t> outer_among_kept;
    for (std::size_t i = 0; i < kept.size(); ++i) outer_among_kept[kept[i].second] = i + 1;
    for (const auto& r : inner["ranking"]) {
        const auto label = r["label"].get<std::string>();
        const auto before = outer_among_kept.at(label);
        const auto after = r["rank"].get<std::size_t>();
        const auto shift = static_cast<long long>(before) - static_cast<long long>(after);
        changes.push_back({{"label", label}, {"outer_rank", before}, {"inner_rank", after}, {"shift", shift}});
        if (shift != 0) {
            changed = true;
            annotations.push_back(label + ": rank " + std::to_string(before) + " -> " + std::to_string(after) +
                                  (shift > 0 ? " (more important inside the subspace)"
                                             : " (less important inside the subspace)"));
        }
    }

    ojson doc;
    doc["report"] = "loop";
    doc["version"] = kReportVersion;
    doc["seed"] = seed;
    doc["config"] = config_summary(cfg);
    doc["target"] = target;
    ojson sub = ojson::object();
    for (const auto& [name, r] : cfg.subspace) sub[name] = {r.lo, r.hi};
    doc["subspace"] = sub;
    doc["top_k"] = cfg.loop.top_k;
    doc["outer"] = outer;
    doc["inner"] = inner;
    doc["rank_changes"] = changes;
    doc["changed"] = changed;
    doc["annotations"] = annotations;
    return dump(doc);
}

std::string report_table(const std::string& json_report) {
    const auto doc = ojson::parse(json_report);
    std::ostringstream os;
    const auto print_result = [&](const ojson& r, const std::string& title) {
        os << title << "QoI " << r["qoi"].get<std::string>() << " (" << r["algorithm"].get<std::string>()
           << ", order " << r["order"].get<int>() << ", M = " << r["sample_count"].get<std::size_t>() << ")\n";
        const bool adjusted = r["algorithm"] == "adjusted";
        if (adjusted) {
            os << "  z_level = " << (r["z_level"].is_null() ? std::string("undefined") : r["z_level"].dump()) << "\n";
            os << "  rank  label                 value        std_error    interval\n";
        } else {
            os << "  rank  label                 mean_rank    percentile interval\n";
        }
        for (const auto& row : r["ranking"]) {
            os << "  " << std::setw(4) << row["rank"].get<std::size_t>() << "  " << std::left << std::setw(20)
               << row["label"].get<std::string>() << std::right << "  ";
            if (adjusted) {
                os << std::setw(11) << std::setprecision(5) << row["value"].get<double>() << "  " << std::setw(11)
                   << row["std_error"].get<double>() << "  ";
                if (row["lower"].is_null())
                    os << "-";
                else
                    os << "[" << row["lower"].get<double>() << ", " << row["upper"].get<double>() << "]";
            } else {
                os << std::setw(11) << std::setprecision(5) << row["mean_rank"].get<double>() << "  ["
                   << row["lower"].get<double>() << ", " << row["upper"].get<double>() << "]";
            }
            os << "\n";
        }
        std::size_t resolved = 0;
        for (const auto& p : r["pairs"]) resolved += p["resolved"].get<bool>() ? 1 : 0;
        os << "  resolved pairs: " << resolved << " of " << r["pairs"].size() << "\n";
    };
    if (doc["report"] == "rank") {
        for (const auto& r : doc["results"]) print_result(r, "");
    } else {
        print_result(doc["outer"], "outer: ");
        print_result(doc["inner"], "inner: ");
        for (const auto& a : doc["annotations"]) os << "  " << a.get<std::string>() << "\n";
    }
    return os.str();
}

}  // namespace misi
