#include "misi/config.hpp"

#include "misi/error.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace misi {

namespace {

using json = nlohmann::json;

json from_toml(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = from_toml(v);
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(from_toml(v));
        return out;
    }
    if (const auto* s = node.as_string()) return s->get();
    if (const auto* i = node.as_integer()) return i->get();
    if (const auto* f = node.as_floating_point()) return f->get();
    if (const auto* b = node.as_boolean()) return b->get();
    throw ConfigError("dates and times are not valid config values");
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("[" + where + "] must be a table");
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError("unknown key '" + k + "' in [" + where + "]");
    }
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number(const json& obj, const char* key, double fallback, const std::string& where) {
    const auto* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(where + "." + key + " must be a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
    return x;
}

std::uint64_t unsigned_int(const json& obj, const char* key, std::uint64_t fallback, const std::string& where) {
    const auto* v = find(obj, key);
    if (!v) return fallback;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
    throw ConfigError(where + "." + key + " must be a nonnegative integer");
}

std::string string(const json& obj, const char* key, const std::string& fallback, const std::string& where) {
    const auto* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(where + "." + key + " must be a string");
    return v->get<std::string>();
}

bool boolean(const json& obj, const char* key, bool fallback, const std::string& where) {
    const auto* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
    return v->get<bool>();
}

std::vector<std::string> strings(const json& obj, const char* key, const std::string& where) {
    const auto* v = find(obj, key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(where + "." + key + " must be an array of strings");
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(where + "." + key + " must be an array of strings");
        if (!seen.insert(e.get<std::string>()).second)
            throw ConfigError(where + "." + key + " lists '" + e.get<std::string>() + "' twice");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::vector<double> numbers(const json& obj, const char* key, const std::string& where) {
    const auto* v = find(obj, key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Interval range(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(where + " must be a [min, max] pair");
    return {v[0].get<double>(), v[1].get<double>()};
}

std::string resolve(const std::string& base, const std::string& path) {
    if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
    return (std::filesystem::path(base) / path).lexically_normal().string();
}

void apply_constants(PhysicalConstants& c, const json& obj, const std::string& where) {
    check_keys(obj, {"R", "F", "k_B", "e", "epsilon", "z", "nu", "V", "phi_ecm", "C_H", "phi_min"}, where);
    c.R = number(obj, "R", c.R, where);
    c.F = number(obj, "F", c.F, where);
    c.k_B = number(obj, "k_B", c.k_B, where);
    c.e = number(obj, "e", c.e, where);
    c.epsilon = number(obj, "epsilon", c.epsilon, where);
    c.z = number(obj, "z", c.z, where);
    c.nu = number(obj, "nu", c.nu, where);
    c.V = number(obj, "V", c.V, where);
    c.phi_ecm = number(obj, "phi_ecm", c.phi_ecm, where);
    c.C_H = number(obj, "C_H", c.C_H, where);
    c.phi_min = number(obj, "phi_min", c.phi_min, where);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + " is not valid JSON: " + e.what());
    }
}

void parse_model(RunConfig& cfg, const json& m) {
    check_keys(m,
               {"kind", "name", "coefficients", "region_coefficients", "noise", "a", "b", "value", "inputs",
                "region", "command", "outputs", "timeout_s", "path", "assemble"},
               "model");
    auto& mc = cfg.model;
    const auto kind = string(m, "kind", "builtin", "model");
    if (kind == "builtin") {
        mc.kind = ModelConfig::Kind::builtin;
        mc.builtin = string(m, "name", "linear_gaussian", "model");
        try {
            mc.params = BuiltinParams::defaults(mc.builtin);
        } catch (const UnknownBuiltin& e) {
            throw ConfigError(e.what());
        }
        if (find(m, "coefficients")) mc.params.coefficients = numbers(m, "coefficients", "model");
        if (find(m, "region_coefficients"))
            mc.params.region_coefficients = numbers(m, "region_coefficients", "model");
        mc.params.noise = number(m, "noise", mc.params.noise, "model");
        mc.params.a = number(m, "a", mc.params.a, "model");
        mc.params.b = number(m, "b", mc.params.b, "model");
        mc.params.value = number(m, "value", mc.params.value, "model");
        if (find(m, "inputs")) mc.params.inputs = unsigned_int(m, "inputs", 3, "model");
        if (const auto* r = find(m, "region")) {
            const auto iv = range(*r, "model.region");
            mc.params.region_lo = iv.lo;
            mc.params.region_hi = iv.hi;
        }
    } else if (kind == "external") {
        mc.kind = ModelConfig::Kind::external;
        mc.external.command = string(m, "command", "", "model");
        mc.external.inputs = strings(m, "inputs", "model");
        mc.external.outputs = strings(m, "outputs", "model");
        const double t = number(m, "timeout_s", 300.0, "model");
        if (!(t > 0.0)) throw ConfigError("model.timeout_s must be positive");
        mc.external.timeout = std::chrono::milliseconds(static_cast<long long>(t * 1000.0));
        if (mc.external.command.empty()) throw ConfigError("external model needs model.command");
        if (mc.external.outputs.empty()) throw ConfigError("external model needs model.outputs");
    } else if (kind == "dataset") {
        mc.kind = ModelConfig::Kind::dataset;
        mc.dataset_path = resolve(cfg.base_dir, string(m, "path", "", "model"));
        if (mc.dataset_path.empty()) throw ConfigError("dataset mode needs model.path");
    } else if (kind == "none") {
        mc.kind = ModelConfig::Kind::none;
    } else {
        throw ConfigError("model.kind must be builtin, external, dataset or none");
    }
    const auto assemble = string(m, "assemble", "", "model");
    if (!assemble.empty() && assemble != "deff") throw ConfigError("model.assemble must be \"deff\"");
    mc.assemble_deff = assemble == "deff";
    if (mc.assemble_deff && mc.kind == ModelConfig::Kind::dataset)
        throw ConfigError("model.assemble needs a model, not a dataset");
}

void parse_prior(RunConfig& cfg, const json* p) {
    const json empty = json::object();
    const json& pr = p ? *p : empty;
    check_keys(pr, {"kind", "T", "cin", "r", "omega", "emit", "constants_file", "constants", "variables"}, "prior");
    const std::string fallback = cfg.model.kind == ModelConfig::Kind::builtin ? "builtin" : "edlc";
    const auto kind = string(pr, "kind", fallback, "prior");
    try {
        if (kind == "edlc") {
            PriorSpec spec;
            if (const auto* v = find(pr, "T")) spec.T = range(*v, "prior.T");
            if (const auto* v = find(pr, "cin")) spec.cin = range(*v, "prior.cin");
            if (const auto* v = find(pr, "r")) spec.r = range(*v, "prior.r");
            if (const auto* v = find(pr, "omega")) spec.omega = range(*v, "prior.omega");
            if (find(pr, "emit")) {
                const auto emit = strings(pr, "emit", "prior");
                for (const auto& e : emit)
                    if (e != "lambda_D" && e != "phi_G" && e != "l_por")
                        throw ConfigError("prior.emit accepts lambda_D, phi_G and l_por, not '" + e + "'");
                const auto has = [&](const char* n) { return std::find(emit.begin(), emit.end(), n) != emit.end(); };
                spec.emit_lambda_D = has("lambda_D");
                spec.emit_phi_G = has("phi_G");
                spec.emit_l_por = has("l_por");
            }
            PhysicalConstants constants;
            const auto file = string(pr, "constants_file", "", "prior");
            if (!file.empty()) constants = load_constants_file(resolve(cfg.base_dir, file));
            if (const auto* c = find(pr, "constants")) apply_constants(constants, *c, "prior.constants");
            cfg.prior = Prior::edlc(spec, constants);
        } else if (kind == "builtin") {
            if (cfg.model.kind != ModelConfig::Kind::builtin)
                throw ConfigError("prior.kind = \"builtin\" needs a builtin model");
            cfg.prior = builtin_prior(cfg.model.builtin, cfg.model.params);
        } else if (kind == "generic") {
            const auto* vars = find(pr, "variables");
            if (!vars || !vars->is_array()) throw ConfigError("generic prior needs [[prior.variables]]");
            std::vector<VariablePrior> out;
            for (const auto& v : *vars) {
                check_keys(v, {"name", "kind", "mean", "sd", "min", "max"}, "prior.variables");
                VariablePrior vp;
                vp.name = string(v, "name", "", "prior.variables");
                const auto vk = string(v, "kind", "normal", "prior.variables");
                if (vk == "normal") {
                    vp.kind = VariablePrior::Kind::normal;
                    vp.a = number(v, "mean", 0.0, "prior.variables");
                    vp.b = number(v, "sd", 1.0, "prior.variables");
                } else if (vk == "uniform") {
                    vp.kind = VariablePrior::Kind::uniform;
                    if (!find(v, "min") || !find(v, "max"))
                        throw ConfigError("uniform prior variables need min and max");
                    vp.a = number(v, "min", 0.0, "prior.variables");
                    vp.b = number(v, "max", 1.0, "prior.variables");
                } else {
                    throw ConfigError("prior variable kind must be normal or uniform");
                }
                out.push_back(vp);
            }
            cfg.prior = Prior::generic(std::move(out));
        } else {
            throw ConfigError("prior.kind must be edlc, builtin or generic");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid prior: ") + e.what());
    }
}

void parse_analysis(RunConfig& cfg, const json& a) {
    check_keys(a,
               {"order", "samples", "gamma_bar", "delta", "replications", "base_seed", "algorithm", "mode",
                "evaluation"},
               "analysis");
    auto& an = cfg.analysis;
    const auto order = unsigned_int(a, "order", 1, "analysis");
    if (order != 1 && order != 2) throw ConfigError("analysis.order must be 1 or 2");
    an.order = static_cast<int>(order);
    an.samples = unsigned_int(a, "samples", an.samples, "analysis");
    if (an.samples < 8) throw ConfigError("analysis.samples must be at least 8");
    an.gamma_bar = number(a, "gamma_bar", an.gamma_bar, "analysis");
    if (!(an.gamma_bar > 0.0 && an.gamma_bar < 1.0)) throw ConfigError("analysis.gamma_bar must lie in (0, 1)");
    an.delta = number(a, "delta", an.delta, "analysis");
    if (!(an.delta > 0.0 && an.delta < 1.0)) throw ConfigError("analysis.delta must lie in (0, 1)");
    an.replications = unsigned_int(a, "replications", an.replications, "analysis");
    if (an.replications < 1) throw ConfigError("analysis.replications must be at least 1");
    an.base_seed = unsigned_int(a, "base_seed", an.base_seed, "analysis");
    const auto alg = string(a, "algorithm", "adjusted", "analysis");
    if (alg == "adjusted")
        an.algorithm = Algorithm::adjusted;
    else if (alg == "percentile")
        an.algorithm = Algorithm::percentile;
    else
        throw ConfigError("analysis.algorithm must be adjusted or percentile");
    const auto mode = string(a, "mode", "fresh", "analysis");
    if (mode == "fresh")
        an.mode = ReplicationMode::fresh;
    else if (mode == "bootstrap")
        an.mode = ReplicationMode::bootstrap;
    else
        throw ConfigError("analysis.mode must be fresh or bootstrap");
    const auto ev = string(a, "evaluation", "bias_corrected", "analysis");
    if (ev == "bias_corrected")
        an.evaluation = Evaluation::bias_corrected;
    else if (ev == "leave_one_out")
        an.evaluation = Evaluation::leave_one_out;
    else if (ev == "resubstitution")
        an.evaluation = Evaluation::resubstitution;
    else
        throw ConfigError("analysis.evaluation must be bias_corrected, leave_one_out or resubstitution");
}

std::vector<std::string> dataset_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
}

void require_subset(const std::vector<std::string>& names, const std::vector<std::string>& pool,
                    const std::string& what) {
    for (const auto& n : names)
        if (std::find(pool.begin(), pool.end(), n) == pool.end())
            throw ConfigError(what + " '" + n + "' is not available");
}

}  // namespace

PhysicalConstants load_constants_file(const std::string& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    const auto doc = parse_json_text(text, "constants file '" + path + "'");
    PhysicalConstants c;
    json body = doc;
    if (doc.is_object() && doc.contains("constants")) body = doc.at("constants");
    apply_constants(c, body, "constants");
    try {
        c.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return c;
}

Prior RunConfig::effective_prior() const {
    if (!prior) throw ConfigError("this command needs a prior; dataset mode has none");
    return prior->restrict(subspace);
}

ModelHandle RunConfig::make_model() const {
    ModelHandle m;
    switch (model.kind) {
    case ModelConfig::Kind::builtin:
        m = builtin_model(model.builtin, model.params);
        break;
    case ModelConfig::Kind::external: {
        auto ext = model.external;
        if (ext.inputs.empty() && prior) ext.inputs = prior->labels();
        m = external_model(ext);
        break;
    }
    case ModelConfig::Kind::dataset:
        throw ConfigError("dataset mode has no model to query");
    case ModelConfig::Kind::none:
        throw ConfigError("no model is configured");
    }
    if (model.assemble_deff) m = deff_assembly(m, prior ? prior->constants() : PhysicalConstants{});
    return m;
}

RunConfig parse_config(const std::string& text, bool is_json, const std::string& base_dir) {
    json doc;
    if (is_json) {
        doc = parse_json_text(text, "config");
    } else {
        try {
            doc = from_toml(toml::parse(text));
        } catch (const toml::parse_error& e) {
            std::ostringstream msg;
            msg << "config is not valid TOML: " << e.description() << " at line " << e.source().begin.line;
            throw ConfigError(msg.str());
        }
    }
    check_keys(doc, {"model", "prior", "roles", "analysis", "subspace", "sample", "curve", "loop", "output"},
               "top level");

    RunConfig cfg;
    cfg.base_dir = base_dir;
    const json empty = json::object();
    const auto section = [&](const char* name) -> const json& {
        const auto* s = find(doc, name);
        if (s && !s->is_object()) throw ConfigError(std::string("[") + name + "] must be a table");
        return s ? *s : empty;
    };

    parse_model(cfg, section("model"));
    if (cfg.model.kind != ModelConfig::Kind::dataset)
        parse_prior(cfg, find(doc, "prior"));
    else if (find(doc, "prior"))
        throw ConfigError("dataset mode takes no [prior]");
    parse_analysis(cfg, section("analysis"));

    const auto& roles = section("roles");
    check_keys(roles, {"cv", "qoi"}, "roles");
    cfg.cvs = strings(roles, "cv", "roles");
    cfg.qois = strings(roles, "qoi", "roles");

    const auto& sub = section("subspace");
    for (const auto& [k, v] : sub.items()) cfg.subspace[k] = range(v, "subspace." + k);

    const auto& smp = section("sample");
    check_keys(smp, {"count"}, "sample");
    cfg.sample_count = unsigned_int(smp, "count", cfg.sample_count, "sample");
    if (cfg.sample_count < 1) throw ConfigError("sample.count must be at least 1");

    const auto& cur = section("curve");
    check_keys(cur, {"cv", "qoi", "bins", "samples"}, "curve");
    cfg.curve.cv = string(cur, "cv", "", "curve");
    cfg.curve.qoi = string(cur, "qoi", "", "curve");
    cfg.curve.bins = unsigned_int(cur, "bins", cfg.curve.bins, "curve");
    cfg.curve.samples = unsigned_int(cur, "samples", cfg.curve.samples, "curve");
    if (cfg.curve.bins < 2) throw ConfigError("curve.bins must be at least 2");
    if (cfg.curve.samples < 2) throw ConfigError("curve.samples must be at least 2");

    const auto& lp = section("loop");
    check_keys(lp, {"target", "top_k"}, "loop");
    cfg.loop.target = string(lp, "target", "", "loop");
    cfg.loop.top_k = unsigned_int(lp, "top_k", 0, "loop");

    const auto& out = section("output");
    check_keys(out, {"path", "table"}, "output");
    cfg.output_path = resolve(base_dir, string(out, "path", "", "output"));
    cfg.output_table = boolean(out, "table", false, "output");

    // roles against what the model or dataset provides
    std::vector<std::string> cv_pool, qoi_pool;
    if (cfg.model.kind == ModelConfig::Kind::dataset) {
        if (!cfg.subspace.empty()) throw ConfigError("[subspace] needs a prior; dataset mode has none");
        if (cfg.cvs.empty() || cfg.qois.empty()) throw ConfigError("dataset mode needs roles.cv and roles.qoi");
        const auto header = dataset_header(cfg.model.dataset_path);
        require_subset(cfg.cvs, header, "CV column");
        require_subset(cfg.qois, header, "QoI column");
    } else if (cfg.model.kind == ModelConfig::Kind::none) {
        cv_pool = cfg.prior->labels();
        if (cfg.cvs.empty()) cfg.cvs = cv_pool;
        require_subset(cfg.cvs, cv_pool, "CV");
        if (!cfg.qois.empty()) throw ConfigError("roles.qoi needs a model");
        cfg.effective_prior();
    } else {
        ModelHandle model;
        try {
            model = cfg.make_model();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("invalid model: ") + e.what());
        }
        cv_pool = cfg.prior->labels();
        require_subset(model->input_labels(), cv_pool, "model input");
        qoi_pool = model->output_labels();
        if (cfg.cvs.empty()) cfg.cvs = cv_pool;
        if (cfg.qois.empty()) cfg.qois = qoi_pool;
        require_subset(cfg.cvs, cv_pool, "CV");
        require_subset(cfg.qois, qoi_pool, "QoI");
        cfg.effective_prior();  // subspace checks, before any query
    }
    for (const auto& q : cfg.qois)
        if (std::find(cfg.cvs.begin(), cfg.cvs.end(), q) != cfg.cvs.end())
            throw ConfigError("'" + q + "' cannot be both a CV and a QoI");
    if (cfg.analysis.order == 2 && cfg.cvs.size() < 2) throw ConfigError("order 2 needs at least two CVs");
    if (!cfg.loop.target.empty()) require_subset({cfg.loop.target}, cfg.qois, "loop target");
    if (!cfg.curve.cv.empty()) require_subset({cfg.curve.cv}, cfg.cvs, "curve CV");
    if (!cfg.curve.qoi.empty()) require_subset({cfg.curve.qoi}, cfg.qois, "curve QoI");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    const auto text = read_text(path);
    const bool is_json = std::filesystem::path(path).extension() == ".json";
    auto parent = std::filesystem::path(path).parent_path().string();
    if (parent.empty()) parent = ".";
    return parse_config(text, is_json, parent);
}

}  // namespace misi
