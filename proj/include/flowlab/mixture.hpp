#ifndef FLOWLAB_MIXTURE_HPP
#define FLOWLAB_MIXTURE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowlab/distributions.hpp"
#include "flowlab/errors.hpp"
#include "flowlab/histogram.hpp"

namespace flowlab {

struct WeightedComponent {
    double weight = 0;
    Component component;
};

/// Weighted list of components plus the dataset sum the model describes.
/// Immutable once constructed; weights are validated and renormalized.
class MixtureModel {
public:
    inline static constexpr double weight_tolerance = 1e-6;

    MixtureModel(std::uint64_t sum, std::vector<WeightedComponent> components)
        : sum_(sum), components_(std::move(components)) {
        if (components_.empty()) throw ValidationError("mixture has no components");
        double total = 0;
        for (const auto& c : components_) {
            if (!(c.weight >= 0) || !std::isfinite(c.weight)) throw ValidationError("mixture weight must be >= 0");
            validate(c.component);
            total += c.weight;
        }
        if (std::abs(total - 1.0) > weight_tolerance)
            throw ValidationError("mixture weights sum to " + std::to_string(total));
        cumulative_.reserve(components_.size());
        double acc = 0;
        for (auto& c : components_) {
            c.weight /= total;
            acc += c.weight;
            cumulative_.push_back(acc);
        }
        cumulative_.back() = 1.0;
    }

    std::uint64_t sum() const noexcept { return sum_; }
    const std::vector<WeightedComponent>& components() const noexcept { return components_; }
    std::size_t size() const noexcept { return components_.size(); }

    double pdf(double x) const {
        if (!(x > 0)) throw DomainError("mixture pdf needs x > 0");
        double p = 0;
        for (const auto& c : components_) p += c.weight * flowlab::pdf(c.component, x);
        return p;
    }

    double cdf(double x) const {
        if (!(x > 0)) return 0.0;
        double p = 0;
        for (const auto& c : components_) p += c.weight * flowlab::cdf(c.component, x);
        return std::min(p, 1.0);
    }

    template <class Rng>
    double sample(Rng& rng) const {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), components_.size() - 1);
        return flowlab::sample(components_[i].component, rng);
    }

private:
    std::uint64_t sum_;
    std::vector<WeightedComponent> components_;
    std::vector<double> cumulative_;
};

// ---------------------------------------------------------------------------
// JSON interchange: {"sum": N, "mix": [[weight, name, [params]], ...]}
// Parameter vectors use scipy.stats shape/loc/scale conventions.
// ---------------------------------------------------------------------------

namespace detail {

struct ScipyParams {
    std::vector<double> shapes;
    double loc = 0;
    double scale = 1;
};

inline ScipyParams split_params(const std::vector<double>& p, std::size_t n_shapes, const std::string& name) {
    if (p.size() < n_shapes || p.size() > n_shapes + 2)
        throw ValidationError(name + " expects " + std::to_string(n_shapes) + " shape parameter(s) plus optional loc, scale");
    ScipyParams out;
    out.shapes.assign(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_shapes));
    if (p.size() > n_shapes) out.loc = p[n_shapes];
    if (p.size() > n_shapes + 1) out.scale = p[n_shapes + 1];
    if (!(out.scale > 0)) throw ValidationError(name + " scale must be > 0");
    return out;
}

inline Component component_from_scipy(const std::string& name, const std::vector<double>& p) {
    auto zero_loc = [&](const ScipyParams& s) {
        if (s.loc != 0) throw ValidationError(name + " with non-zero loc is not supported");
        return s;
    };
    if (name == "uniform") {
        auto s = split_params(p, 0, name);
        return Uniform{s.loc, s.loc + s.scale};
    }
    if (name == "lognorm") {
        auto s = zero_loc(split_params(p, 1, name));
        return LogNormal{std::log(s.scale), s.shapes[0]};
    }
    if (name == "norm") {
        auto s = split_params(p, 0, name);
        return Normal{s.loc, s.scale};
    }
    if (name == "pareto") {
        auto s = zero_loc(split_params(p, 1, name));
        return Pareto{s.shapes[0], s.scale};
    }
    if (name == "weibull_min") {
        auto s = zero_loc(split_params(p, 1, name));
        return Weibull{s.shapes[0], s.scale};
    }
    if (name == "gamma") {
        auto s = zero_loc(split_params(p, 1, name));
        return Gamma{s.shapes[0], s.scale};
    }
    throw NameError("unknown distribution name '" + name + "'");
}

inline std::pair<std::string, std::vector<double>> component_to_scipy(const Component& c) {
    struct V {
        std::pair<std::string, std::vector<double>> operator()(const Uniform& d) const { return {"uniform", {d.lo, d.hi - d.lo}}; }
        std::pair<std::string, std::vector<double>> operator()(const LogNormal& d) const {
            return {"lognorm", {d.sigma, 0.0, std::exp(d.mu)}};
        }
        std::pair<std::string, std::vector<double>> operator()(const Normal& d) const { return {"norm", {d.mu, d.sigma}}; }
        std::pair<std::string, std::vector<double>> operator()(const Pareto& d) const { return {"pareto", {d.alpha, 0.0, d.xm}}; }
        std::pair<std::string, std::vector<double>> operator()(const Weibull& d) const {
            return {"weibull_min", {d.k, 0.0, d.lambda}};
        }
        std::pair<std::string, std::vector<double>> operator()(const Gamma& d) const { return {"gamma", {d.k, 0.0, d.theta}}; }
    };
    return std::visit(V{}, c);
}

} // namespace detail

inline nlohmann::json to_json(const MixtureModel& m) {
    nlohmann::json mix = nlohmann::json::array();
    for (const auto& c : m.components()) {
        auto [name, params] = detail::component_to_scipy(c.component);
        mix.push_back(nlohmann::json::array({c.weight, name, params}));
    }
    return nlohmann::json{{"sum", m.sum()}, {"mix", mix}};
}

inline MixtureModel model_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object() || !j.contains("sum") || !j.contains("mix"))
            throw ValidationError("model JSON needs 'sum' and 'mix' fields");
        const auto& sum = j.at("sum");
        std::uint64_t s = 0;
        if (sum.is_number_unsigned() || sum.is_number_integer()) {
            if (sum.get<std::int64_t>() < 0) throw ValidationError("'sum' must be non-negative");
            s = sum.get<std::uint64_t>();
        } else if (sum.is_number_float() && sum.get<double>() >= 0 && std::floor(sum.get<double>()) == sum.get<double>()) {
            s = static_cast<std::uint64_t>(sum.get<double>());
        } else {
            throw ValidationError("'sum' must be a non-negative integer");
        }
        std::vector<WeightedComponent> comps;
        for (const auto& entry : j.at("mix")) {
            if (!entry.is_array() || entry.size() != 3) throw ValidationError("mix entries must be [weight, name, [params]]");
            auto params = entry[2].get<std::vector<double>>();
            comps.push_back({entry[0].get<double>(), detail::component_from_scipy(entry[1].get<std::string>(), params)});
        }
        return MixtureModel(s, std::move(comps));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model JSON: ") + e.what());
    }
}

inline MixtureModel read_model_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model JSON: ") + e.what());
    }
    return model_from_json(j);
}

inline void write_model_json(const MixtureModel& m, std::ostream& out) { out << to_json(m).dump() << '\n'; }

inline MixtureModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_model_json(in);
}

inline void save_model(const MixtureModel& m, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_model_json(m, out);
}

// ---------------------------------------------------------------------------
// ModelSet: {flows, packets, octets} x {length, size} for one traffic class,
// stored on disk as <dir>/<feature>/<target>.json.
// ---------------------------------------------------------------------------

class ModelSet {
public:
    void set(Feature f, Target t, MixtureModel m) { models_.insert_or_assign({f, t}, std::move(m)); }

    const MixtureModel* find(Feature f, Target t) const {
        auto it = models_.find({f, t});
        return it == models_.end() ? nullptr : &it->second;
    }

    const MixtureModel& at(Feature f, Target t) const {
        if (auto* m = find(f, t)) return *m;
        throw ValidationError("model set has no " + std::string(to_string(t)) + "(" + std::string(to_string(f)) + ") model");
    }

    std::size_t size() const noexcept { return models_.size(); }

    static ModelSet load(const std::filesystem::path& dir) {
        ModelSet ms;
        for (auto f : {Feature::length, Feature::size})
            for (auto t : {Target::flows, Target::packets, Target::octets}) {
                auto p = dir / std::string(to_string(f)) / (std::string(to_string(t)) + ".json");
                if (std::filesystem::exists(p)) ms.set(f, t, load_model(p));
            }
        if (ms.size() == 0) throw ValidationError("no models found under " + dir.string());
        return ms;
    }

    void save(const std::filesystem::path& dir) const {
        for (const auto& [key, m] : models_)
            save_model(m, dir / std::string(to_string(key.first)) / (std::string(to_string(key.second)) + ".json"));
    }

private:
    std::map<std::pair<Feature, Target>, MixtureModel> models_;
};

} // namespace flowlab

#endif // FLOWLAB_MIXTURE_HPP
