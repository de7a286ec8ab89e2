#include "misi/models.hpp"

#include "misi/error.hpp"
#include "misi/normal.hpp"
#include "misi/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace misi {

Model::Model(std::vector<std::string> inputs, std::vector<std::string> outputs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
    if (inputs_.empty() || outputs_.empty()) throw InvalidArgument("a model needs inputs and outputs");
    std::set<std::string> seen;
    for (const auto& l : inputs_)
        if (l.empty() || !seen.insert(l).second) throw InvalidArgument("model labels must be unique and nonempty");
    for (const auto& l : outputs_)
        if (l.empty() || !seen.insert(l).second)
            throw InvalidArgument("model input and output labels must be unique and disjoint");
}

namespace {

std::vector<std::string> x_labels(std::size_t p) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= p; ++i) out.push_back("x" + std::to_string(i));
    return out;
}

std::vector<double> standard_normals(std::size_t n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "noise"));
    std::vector<double> out(n);
    for (auto& x : out) x = normal::quantile((static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53);
    return out;
}

// Applies f(row inputs, noise) -> y over every row.
class AnalyticModel final : public Model {
public:
    using Fn = double (*)(const BuiltinParams&, std::span<const double>, double);

    AnalyticModel(std::size_t p, BuiltinParams params, Fn fn, bool noisy)
        : Model(x_labels(p), {"y"}), params_(std::move(params)), fn_(fn), noisy_(noisy) {}

    IoDataset query(const IoDataset& inputs, std::uint64_t seed) const override {
        const auto& labels = input_labels();
        std::vector<std::span<const double>> cols;
        for (const auto& l : labels) cols.push_back(inputs.column(l).values());
        const std::size_t n = inputs.rows();
        const auto eps = noisy_ ? standard_normals(n, seed) : std::vector<double>(n, 0.0);
        std::vector<double> y(n), row(labels.size());
        for (std::size_t m = 0; m < n; ++m) {
            for (std::size_t j = 0; j < cols.size(); ++j) row[j] = cols[j][m];
            y[m] = fn_(params_, row, eps[m]);
        }
        IoDataset out;
        out.add(SampleColumn("y", std::move(y)), Role::qoi);
        return out;
    }

private:
    BuiltinParams params_;
    Fn fn_;
    bool noisy_;
};

double dot(std::span<const double> a, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * x[i];
    return s;
}

double linear_fn(const BuiltinParams& p, std::span<const double> x, double eps) {
    return dot(p.coefficients, x) + p.noise * eps;
}

double ishigami_fn(const BuiltinParams& p, std::span<const double> x, double) {
    const double s1 = std::sin(x[0]);
    const double s2 = std::sin(x[1]);
    const double x3 = x[2] * x[2];
    return s1 + p.a * s2 * s2 + p.b * x3 * x3 * s1;
}

double product_fn(const BuiltinParams& p, std::span<const double> x, double eps) {
    return x[0] * x[1] + dot(p.coefficients, x) + p.noise * eps;
}

double constant_fn(const BuiltinParams& p, std::span<const double>, double) { return p.value; }

double regional_fn(const BuiltinParams& p, std::span<const double> x, double eps) {
    const bool inside = x[0] >= p.region_lo && x[0] <= p.region_hi;
    return dot(inside ? p.region_coefficients : p.coefficients, x) + p.noise * eps;
}

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + " must be finite");
}

}  // namespace

BuiltinParams BuiltinParams::defaults(const std::string& name) {
    BuiltinParams p;
    if (name == "linear_gaussian") {
        p.coefficients = {4.0, 2.0, 1.0};
    } else if (name == "product_gaussian") {
        p.coefficients = {0.0, 0.0, 0.1};
    } else if (name == "regional_linear") {
        p.coefficients = {4.0, 1.0};
        p.region_coefficients = {0.5, 4.0};
        p.noise = 0.1;
    } else if (name != "ishigami" && name != "constant") {
        throw UnknownBuiltin("no builtin model named '" + name + "'");
    }
    return p;
}

ModelHandle builtin_model(const std::string& name, const BuiltinParams& params) {
    require_finite(params.coefficients, "coefficients");
    require_finite(params.region_coefficients, "region coefficients");
    if (!(params.noise >= 0.0) || !std::isfinite(params.noise))
        throw InvalidArgument("noise level must be finite and nonnegative");
    if (name == "linear_gaussian") {
        if (params.coefficients.empty()) throw InvalidArgument("linear_gaussian needs coefficients");
        return std::make_shared<AnalyticModel>(params.coefficients.size(), params, linear_fn, true);
    }
    if (name == "ishigami") return std::make_shared<AnalyticModel>(3, params, ishigami_fn, false);
    if (name == "product_gaussian") {
        if (params.coefficients.size() < 2) throw InvalidArgument("product_gaussian needs at least two inputs");
        return std::make_shared<AnalyticModel>(params.coefficients.size(), params, product_fn, true);
    }
    if (name == "constant") {
        if (params.inputs < 1) throw InvalidArgument("constant model needs at least one input");
        if (!std::isfinite(params.value)) throw InvalidArgument("constant value must be finite");
        return std::make_shared<AnalyticModel>(params.inputs, params, constant_fn, false);
    }
    if (name == "regional_linear") {
        if (params.coefficients.empty() || params.coefficients.size() != params.region_coefficients.size())
            throw InvalidArgument("regional_linear needs equally many coefficients inside and outside the region");
        if (!(params.region_lo < params.region_hi)) throw InvalidArgument("empty region");
        return std::make_shared<AnalyticModel>(params.coefficients.size(), params, regional_fn, true);
    }
    throw UnknownBuiltin("no builtin model named '" + name + "'");
}

Prior builtin_prior(const std::string& name, const BuiltinParams& params) {
    const auto model = builtin_model(name, params);
    std::vector<VariablePrior> vars;
    for (const auto& l : model->input_labels()) {
        VariablePrior v;
        v.name = l;
        if (name == "ishigami") {
            v.kind = VariablePrior::Kind::uniform;
            v.a = -std::numbers::pi;
            v.b = std::numbers::pi;
        } else if (name == "regional_linear") {
            v.kind = VariablePrior::Kind::uniform;
            v.a = 0.0;
            v.b = 1.0;
        }
        vars.push_back(v);
    }
    return Prior::generic(std::move(vars));
}

namespace {

class DeffAssembly final : public Model {
public:
    DeffAssembly(ModelHandle inner, PhysicalConstants constants)
        : Model(inner->input_labels(), {"keff", "t_plus"}), inner_(std::move(inner)), constants_(constants) {
        const auto& in = inner_->input_labels();
        for (const char* need : {"T", "cin"})
            if (std::find(in.begin(), in.end(), need) == in.end())
                throw InvalidArgument(std::string("Deff assembly needs input '") + need + "'");
        const auto& out = inner_->output_labels();
        for (const char* need : {"deff_plus", "deff_minus"})
            if (std::find(out.begin(), out.end(), need) == out.end())
                throw InvalidArgument(std::string("Deff assembly needs output '") + need + "'");
    }

    IoDataset query(const IoDataset& inputs, std::uint64_t seed) const override {
        const auto raw = inner_->query(inputs, seed);
        const auto dp = raw.column("deff_plus").values();
        const auto dm = raw.column("deff_minus").values();
        const auto T = inputs.column("T").values();
        const auto cin = inputs.column("cin").values();
        std::vector<double> keff(inputs.rows()), tp(inputs.rows());
        for (std::size_t m = 0; m < inputs.rows(); ++m) {
            const auto q = qoi_from_deff(dp[m], dm[m], cin[m], T[m], constants_);
            keff[m] = q.keff;
            tp[m] = q.t_plus;
        }
        IoDataset out;
        out.add(SampleColumn("keff", std::move(keff), "mS/cm"), Role::qoi);
        out.add(SampleColumn("t_plus", std::move(tp), "1"), Role::qoi);
        return out;
    }

private:
    ModelHandle inner_;
    PhysicalConstants constants_;
};

}  // namespace

ModelHandle deff_assembly(ModelHandle inner, PhysicalConstants constants) {
    if (!inner) throw InvalidArgument("no model to wrap");
    return std::make_shared<DeffAssembly>(std::move(inner), constants);
}

IoDataset generate(const Prior& prior, const Model& model, std::size_t rows, std::uint64_t seed) {
    auto data = prior.sample(rows, derive_seed(seed, "inputs"));
    const auto outputs = model.query(data, derive_seed(seed, "model"));
    if (outputs.rows() != rows)
        throw ModelFailure("model returned " + std::to_string(outputs.rows()) + " rows for " +
                           std::to_string(rows) + " inputs");
    data.merge(outputs);
    return data;
}

ModelSource::ModelSource(Prior prior, ModelHandle model) : prior_(std::move(prior)), model_(std::move(model)) {
    if (!model_) throw InvalidArgument("no model");
    const auto labels = prior_.labels();
    for (const auto& l : model_->input_labels())
        if (std::find(labels.begin(), labels.end(), l) == labels.end())
            throw InvalidArgument("model input '" + l + "' is not drawn by the prior");
}

IoDataset ModelSource::draw(std::uint64_t seed, std::size_t rows) const {
    return generate(prior_, *model_, rows, seed);
}

}  // namespace misi
