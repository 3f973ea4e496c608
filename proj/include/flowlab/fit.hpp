#ifndef FLOWLAB_FIT_HPP
#define FLOWLAB_FIT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "flowlab/distributions.hpp"
#include "flowlab/errors.hpp"
#include "flowlab/histogram.hpp"
#include "flowlab/mixture.hpp"

namespace flowlab {

struct FitConfig {
    Target target = Target::flows;
    int uniform_count = 6;
    int lognormal_count = 4;
    int normal_count = 0;
    int pareto_count = 0;
    int weibull_count = 0;
    int gamma_count = 0;
    int max_iters = 2000;
    double rel_tol = 1e-8;
    double min_weight = 1e-12;
    std::optional<MixtureModel> initial;
    unsigned threads = 1;

    int continuous_count() const noexcept {
        return lognormal_count + normal_count + pareto_count + weibull_count + gamma_count;
    }

    void validate() const {
        if (uniform_count < 0 || lognormal_count < 0 || normal_count < 0 || pareto_count < 0 || weibull_count < 0 ||
            gamma_count < 0)
            throw ValidationError("component counts must be >= 0");
        if (uniform_count + continuous_count() < 1) throw ValidationError("at least one component is required");
        if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
        if (!(rel_tol > 0)) throw ValidationError("rel_tol must be > 0");
        if (!(min_weight >= 0)) throw ValidationError("min_weight must be >= 0");
    }
};

struct EMState {
    MixtureModel model;
    std::vector<double> loglik_trace;
    int iteration = 0;
    bool converged = false;
    std::vector<bool> frozen;
    std::vector<std::string> warnings;
};

/// One histogram bin as seen by the fitter: the continuous interval
/// (lo, hi] whose draws round to the bin's integers under floor(x) + 1,
/// weighted by the chosen target column.
struct Observation {
    double lo = 0;
    double hi = 1;
    double weight = 0;
};

inline std::vector<Observation> observations(const Histogram& h, Target target) {
    std::vector<Observation> obs;
    obs.reserve(h.bins().size());
    for (const auto& [lo, s] : h.bins()) {
        auto n = s.get(target);
        if (n == 0) continue;
        obs.push_back({static_cast<double>(lo - 1), static_cast<double>(h.spec().bin_hi(lo) - 1), static_cast<double>(n)});
    }
    return obs;
}

/// Weighted log-likelihood of binned data under the interval-mass convention.
inline double log_likelihood(const MixtureModel& m, const std::vector<Observation>& obs) {
    double total = 0;
    std::vector<double> lm(m.size());
    for (const auto& o : obs) {
        double mx = -math::inf;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto& c = m.components()[i];
            lm[i] = c.weight > 0 ? std::log(c.weight) + log_interval_mass(c.component, o.lo, o.hi) : -math::inf;
            mx = std::max(mx, lm[i]);
        }
        if (mx == -math::inf) return -math::inf;
        double acc = 0;
        for (double v : lm) acc += std::exp(v - mx);
        total += o.weight * (mx + std::log(acc));
    }
    return total;
}

// ---------------------------------------------------------------------------
// Numerical helpers (exposed for testing)
// ---------------------------------------------------------------------------

namespace fitdetail {

/// Mean and variance of a standard normal truncated to (a, b], given
/// log(Phi(b) - Phi(a)).
struct Moments {
    double mean = 0;
    double var = 0;
};

inline Moments truncated_std_normal(double a, double b, double log_mass) {
    if (b - a < 1e-3) {
        double c = 0.5 * (a + b), h = 0.5 * (b - a);
        return {c - c * h * h / 3.0, h * h / 3.0};
    }
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
    auto ratio = [&](double z) { return z == -math::inf || z == math::inf ? 0.0 : std::exp(-0.5 * z * z - log_norm - log_mass); };
    double ra = ratio(a), rb = ratio(b);
    double m = ra - rb;
    double za = a == -math::inf ? 0.0 : a * ra;
    double zb = b == math::inf ? 0.0 : b * rb;
    double v = 1.0 + za - zb - m * m;
    return {m, std::max(v, 0.0)};
}

/// E[Y] for Y ~ Exponential(rate) truncated to [a, b).
inline double truncated_exp_mean(double rate, double a, double b) {
    double d = b - a;
    double t = rate * d;
    if (t < 1e-6) return a + d / 2.0 - rate * d * d / 12.0;
    if (!std::isfinite(t)) return a + 1.0 / rate;
    return a + 1.0 / rate - d / std::expm1(t);
}

struct RootResult {
    double x = 0;
    bool converged = false;
};

/// Safeguarded Newton on an increasing or decreasing f bracketed by [lo, hi];
/// falls back to bisection whenever a Newton step leaves the bracket.
inline RootResult find_root(const std::function<double(double)>& f, const std::function<double(double)>& df, double lo,
                            double hi, double rel_tol = 1e-10, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0) return {lo, true};
    if (fhi == 0) return {hi, true};
    if ((flo > 0) == (fhi > 0)) return {0.5 * (lo + hi), false};
    double x = std::sqrt(lo * hi);
    for (int it = 0; it < max_iter; ++it) {
        double fx = f(x);
        if (fx == 0) return {x, true};
        if ((fx > 0) == (flo > 0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        double step = df ? fx / df(x) : 0.0;
        double next = x - step;
        if (!df || !std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= rel_tol * std::abs(next)) return {next, true};
        x = next;
    }
    return {x, false};
}

/// Weighted MLE of the Weibull scale for a fixed shape. For k = 1 this is
/// the weighted mean (exponential special case).
inline double weibull_scale_for_shape(const std::vector<double>& x, const std::vector<double>& w, double k) {
    double xmax = *std::max_element(x.begin(), x.end());
    double sw = 0, s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        sw += w[j];
        s += w[j] * std::pow(x[j] / xmax, k);
    }
    return xmax * std::pow(s / sw, 1.0 / k);
}

/// Weighted Weibull shape MLE: root of sum(w x^k ln x)/sum(w x^k) - 1/k - mean(ln x).
inline RootResult weibull_shape(const std::vector<double>& x, const std::vector<double>& w) {
    double xmax = *std::max_element(x.begin(), x.end());
    double sw = 0, sl = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        sw += w[j];
        sl += w[j] * std::log(x[j]);
    }
    double mean_ln = sl / sw;
    auto g = [&](double k) {
        double a = 0, b = 0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double t = w[j] * std::pow(x[j] / xmax, k);
            a += t * std::log(x[j]);
            b += t;
        }
        return a / b - 1.0 / k - mean_ln;
    };
    return find_root(g, nullptr, 1e-3, 1e3);
}

/// Weighted gamma shape MLE: root of ln k - digamma(k) = ln(mean) - mean(ln x).
inline RootResult gamma_shape(const std::vector<double>& x, const std::vector<double>& w) {
    double sw = 0, sx = 0, sl = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        sw += w[j];
        sx += w[j] * x[j];
        sl += w[j] * std::log(x[j]);
    }
    double s = std::log(sx / sw) - sl / sw;
    if (!(s > 1e-14)) return {1e10, false};
    auto f = [s](double k) { return std::log(k) - boost::math::digamma(k) - s; };
    auto df = [](double k) { return 1.0 / k - boost::math::trigamma(k); };
    return find_root(f, df, 1e-8, 1e10);
}

inline double weighted_mean(const std::vector<double>& x, const std::vector<double>& w) {
    double sw = 0, s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        sw += w[j];
        s += w[j] * x[j];
    }
    return s / sw;
}

} // namespace fitdetail

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Builds a starting mixture: uniforms U(0, i] for i = 1..uniform_count
/// weighted by the empirical mass at each small value, lognormals with mu
/// evenly spaced on [ln(uniform_count + 1), ln(max value)] and sigma = 1,
/// and any optional components seeded from quantile groups of the data
/// above the uniform range. Non-uniform components share the remaining
/// weight equally.
inline MixtureModel initialize(const Histogram& h, const FitConfig& cfg) {
    cfg.validate();
    auto obs = observations(h, cfg.target);
    if (obs.empty()) throw EmptyError("histogram has no mass in the target column");

    const int U = cfg.uniform_count;
    const int C = cfg.continuous_count();
    const double max_value = obs.back().lo + 1.0;
    if (C > 0 && max_value <= U)
        throw InitError("all data lie at values <= " + std::to_string(U) + "; nothing left for continuous components");
    if (C == 0 && max_value > U)
        throw InitError("data exceed the uniform range and no continuous component was requested");

    double total = 0;
    for (const auto& o : obs) total += o.weight;
    std::vector<double> small(static_cast<std::size_t>(U) + 1, 0.0);
    for (const auto& o : obs)
        if (o.hi - o.lo == 1.0 && o.hi <= U) small[static_cast<std::size_t>(o.hi)] += o.weight / total;
    double p_small = std::accumulate(small.begin(), small.end(), 0.0);

    std::vector<WeightedComponent> comps;
    for (int i = 1; i <= U; ++i) {
        double w = C == 0 ? (p_small > 0 ? small[static_cast<std::size_t>(i)] / p_small : 1.0 / U)
                          : small[static_cast<std::size_t>(i)];
        comps.push_back({w, Uniform{0.0, static_cast<double>(i)}});
    }
    const double share = C > 0 ? std::max(1.0 - p_small, 0.0) / C : 0.0;

    if (cfg.lognormal_count > 0) {
        double a = std::log(U + 1.0), b = std::log(max_value);
        for (int i = 0; i < cfg.lognormal_count; ++i) {
            double mu = cfg.lognormal_count == 1 ? 0.5 * (a + b) : a + (b - a) * i / (cfg.lognormal_count - 1);
            comps.push_back({share, LogNormal{mu, 1.0}});
        }
    }

    // Quantile groups of the data above the uniform range, by target mass.
    std::vector<Observation> upper;
    for (const auto& o : obs)
        if (o.lo >= U) upper.push_back(o);
    auto groups = [&](int count) {
        std::vector<std::vector<Observation>> g(static_cast<std::size_t>(count));
        double mass = 0;
        for (const auto& o : upper) mass += o.weight;
        double acc = 0;
        for (const auto& o : upper) {
            auto idx = std::min<std::size_t>(static_cast<std::size_t>(acc / mass * count), g.size() - 1);
            g[idx].push_back(o);
            acc += o.weight;
        }
        for (auto& gi : g)
            if (gi.empty()) gi = upper;
        return g;
    };
    auto moments = [](const std::vector<Observation>& g) {
        double sw = 0, s1 = 0, s2 = 0;
        for (const auto& o : g) {
            double x = 0.5 * (o.lo + o.hi);
            sw += o.weight;
            s1 += o.weight * x;
            s2 += o.weight * x * x;
        }
        double mean = s1 / sw;
        return std::pair{mean, std::max(s2 / sw - mean * mean, 1.0)};
    };
    // normals take the lowest of the joint groups, heavy tails are left to the other families
    if (cfg.normal_count > 0) {
        auto joint = groups(C);
        for (int i = 0; i < cfg.normal_count; ++i) {
            auto [mean, var] = moments(joint[static_cast<std::size_t>(i)]);
            comps.push_back({share, Normal{mean, std::sqrt(var)}});
        }
    }
    if (cfg.pareto_count > 0)
        for (const auto& g : groups(cfg.pareto_count)) {
            double xm = std::max({static_cast<double>(U), g.front().lo, 1e-3});
            double sw = 0, sl = 0;
            for (const auto& o : g) {
                double x = 0.5 * (o.lo + o.hi);
                if (x <= xm) continue;
                sw += o.weight;
                sl += o.weight * std::log(x / xm);
            }
            double alpha = sl > 0 ? sw / sl : 1.0;
            comps.push_back({share, Pareto{alpha, xm}});
        }
    if (cfg.weibull_count > 0)
        for (const auto& g : groups(cfg.weibull_count)) {
            auto [mean, var] = moments(g);
            comps.push_back({share, Weibull{1.0, mean}});
        }
    if (cfg.gamma_count > 0)
        for (const auto& g : groups(cfg.gamma_count)) {
            auto [mean, var] = moments(g);
            comps.push_back({share, Gamma{mean * mean / var, var / mean}});
        }

    // keep every component reachable by EM
    const double floor = 1e-4 / static_cast<double>(comps.size());
    double wsum = 0;
    for (auto& c : comps) {
        c.weight = std::max(c.weight, floor);
        wsum += c.weight;
    }
    for (auto& c : comps) c.weight /= wsum;
    return MixtureModel(h.totals().get(cfg.target), std::move(comps));
}

// ---------------------------------------------------------------------------
// EM
// ---------------------------------------------------------------------------

namespace fitdetail {

inline constexpr double sigma_floor = 1e-9;

class EmRunner {
public:
    EmRunner(std::vector<Observation> obs, const MixtureModel& init, const FitConfig& cfg)
        : obs_(std::move(obs)), cfg_(cfg), sum_(init.sum()) {
        for (const auto& c : init.components()) {
            w_.push_back(c.weight);
            comps_.push_back(c.component);
        }
        frozen_.assign(comps_.size(), false);
        const std::size_t cells = comps_.size() * obs_.size();
        resp_.assign(cells, 0.0);
        stat1_.assign(cells, 0.0);
        stat2_.assign(cells, 0.0);
        ll_.assign(obs_.size(), 0.0);
        total_ = 0;
        for (const auto& o : obs_) total_ += o.weight;
    }

    EMState run() {
        std::vector<double> trace;
        int iter = 0;
        bool converged = false;
        while (true) {
            double ll = e_step();
            trace.push_back(ll);
            std::size_t t = trace.size();
            if (t >= 2 && std::abs(trace[t - 1] - trace[t - 2]) <= cfg_.rel_tol * std::abs(trace[t - 1])) {
                converged = true;
                break;
            }
            if (iter >= cfg_.max_iters) break;
            m_step();
            ++iter;
        }
        std::vector<WeightedComponent> out;
        for (std::size_t i = 0; i < comps_.size(); ++i) out.push_back({w_[i], comps_[i]});
        EMState st{MixtureModel(sum_, std::move(out)), std::move(trace), iter, converged, frozen_, std::move(warnings_)};
        return st;
    }

private:
    std::size_t cell(std::size_t i, std::size_t j) const { return i * obs_.size() + j; }

    // Responsibilities (times bin weight) and per-kind conditional moments for
    // bins [begin, end), plus each bin's log-likelihood term.
    void e_range(std::size_t begin, std::size_t end) {
        const std::size_t K = comps_.size();
        std::vector<double> lm(K), lmass(K);
        for (std::size_t j = begin; j < end; ++j) {
            const auto& o = obs_[j];
            double mx = -math::inf;
            for (std::size_t i = 0; i < K; ++i) {
                lmass[i] = w_[i] > 0 ? log_interval_mass(comps_[i], o.lo, o.hi) : -math::inf;
                lm[i] = w_[i] > 0 ? std::log(w_[i]) + lmass[i] : -math::inf;
                mx = std::max(mx, lm[i]);
            }
            if (mx == -math::inf) {
                // No component reaches this bin: spread it evenly so the
                // sufficient statistics stay defined.
                for (std::size_t i = 0; i < K; ++i) resp_[cell(i, j)] = o.weight / static_cast<double>(K);
                ll_[j] = -math::inf;
                continue;
            }
            double acc = 0;
            for (std::size_t i = 0; i < K; ++i) acc += std::exp(lm[i] - mx);
            double lse = mx + std::log(acc);
            ll_[j] = o.weight * lse;
            for (std::size_t i = 0; i < K; ++i) {
                double r = o.weight * std::exp(lm[i] - lse);
                resp_[cell(i, j)] = r;
                if (r == 0 || frozen_[i]) continue;
                conditional_moments(i, j, lmass[i]);
            }
        }
    }

    void conditional_moments(std::size_t i, std::size_t j, double lmass) {
        const auto& o = obs_[j];
        if (auto* ln = std::get_if<LogNormal>(&comps_[i])) {
            double a = o.lo > 0 ? (std::log(o.lo) - ln->mu) / ln->sigma : -math::inf;
            double b = (std::log(o.hi) - ln->mu) / ln->sigma;
            auto mo = truncated_std_normal(a, b, lmass);
            stat1_[cell(i, j)] = ln->sigma * mo.mean;
            stat2_[cell(i, j)] = ln->sigma * ln->sigma * (mo.var + mo.mean * mo.mean);
        } else if (auto* nm = std::get_if<Normal>(&comps_[i])) {
            double a = (o.lo - nm->mu) / nm->sigma;
            double b = (o.hi - nm->mu) / nm->sigma;
            auto mo = truncated_std_normal(a, b, lmass);
            stat1_[cell(i, j)] = nm->sigma * mo.mean;
            stat2_[cell(i, j)] = nm->sigma * nm->sigma * (mo.var + mo.mean * mo.mean);
        } else if (auto* pa = std::get_if<Pareto>(&comps_[i])) {
            double a = std::max(o.lo, pa->xm);
            stat1_[cell(i, j)] = truncated_exp_mean(pa->alpha, std::log(a / pa->xm), std::log(o.hi / pa->xm));
        }
    }

    double e_step() {
        const std::size_t J = obs_.size();
        const unsigned threads = cfg_.threads;
        if (threads <= 1 || J < 1024 * threads) {
            e_range(0, J);
        } else {
            std::vector<std::jthread> workers;
            std::size_t chunk = (J + threads - 1) / threads;
            for (unsigned t = 0; t < threads; ++t) {
                std::size_t b = std::min(J, t * chunk), e = std::min(J, b + chunk);
                workers.emplace_back([this, b, e] { e_range(b, e); });
            }
        }
        // summed in bin order so the result does not depend on threads
        double ll = 0;
        for (double v : ll_) ll += v;
        return ll;
    }

    void m_step() {
        const std::size_t K = comps_.size(), J = obs_.size();
        std::vector<double> R(K, 0.0);
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < J; ++j) R[i] += resp_[cell(i, j)];

        for (std::size_t i = 0; i < K; ++i) {
            if (frozen_[i] || R[i] <= 0) continue;
            if (R[i] / total_ < cfg_.min_weight) {
                frozen_[i] = true;
                warnings_.push_back("component " + std::to_string(i) + " frozen: weight below min_weight");
                continue;
            }
            std::visit([&](auto& d) { update(i, R[i], d); }, comps_[i]);
        }

        double wsum = 0;
        for (std::size_t i = 0; i < K; ++i) wsum += R[i];
        for (std::size_t i = 0; i < K; ++i) w_[i] = R[i] / wsum;
    }

    void update(std::size_t, double, Uniform&) {}

    template <class D>
        requires std::same_as<D, LogNormal> || std::same_as<D, Normal>
    void update(std::size_t i, double R, D& d) {
        double s1 = 0, s2 = 0;
        for (std::size_t j = 0; j < obs_.size(); ++j) {
            double r = resp_[cell(i, j)];
            if (r == 0) continue;
            s1 += r * stat1_[cell(i, j)];
            s2 += r * stat2_[cell(i, j)];
        }
        double shift = s1 / R;
        double var = s2 / R - shift * shift;
        d.mu += shift;
        double sigma = std::sqrt(std::max(var, 0.0));
        if (!(sigma >= sigma_floor)) {
            sigma = sigma_floor;
            frozen_[i] = true;
            warnings_.push_back("component " + std::to_string(i) + " sigma collapsed; frozen at floor");
        }
        d.sigma = sigma;
    }

    void update(std::size_t i, double R, Pareto& d) {
        double s = 0;
        for (std::size_t j = 0; j < obs_.size(); ++j) s += resp_[cell(i, j)] * stat1_[cell(i, j)];
        if (s > 0) d.alpha = R / s;
    }

    // Generalized EM step: candidate from the weighted point-data MLE at bin
    // midpoints, accepted only if it raises this component's expected
    // interval log-likelihood (step-halving towards the old parameters).
    template <class D>
        requires std::same_as<D, Weibull> || std::same_as<D, Gamma>
    void update(std::size_t i, double, D& d) {
        std::vector<double> x, w;
        for (std::size_t j = 0; j < obs_.size(); ++j) {
            double r = resp_[cell(i, j)];
            if (r <= 0) continue;
            x.push_back(0.5 * (obs_[j].lo + obs_[j].hi));
            w.push_back(r);
        }
        if (x.empty()) return;
        D cand = d;
        if constexpr (std::same_as<D, Gamma>) {
            auto root = gamma_shape(x, w);
            if (!root.converged) {
                warnings_.push_back("component " + std::to_string(i) + " gamma shape solver did not converge; held");
                return;
            }
            cand = Gamma{root.x, weighted_mean(x, w) / root.x};
        } else {
            auto root = weibull_shape(x, w);
            if (!root.converged) {
                warnings_.push_back("component " + std::to_string(i) + " weibull shape solver did not converge; held");
                return;
            }
            cand = Weibull{root.x, weibull_scale_for_shape(x, w, root.x)};
        }
        auto q = [&](const D& p) {
            double s = 0;
            for (std::size_t j = 0; j < obs_.size(); ++j) {
                double r = resp_[cell(i, j)];
                if (r > 0) s += r * log_interval_mass(Component{p}, obs_[j].lo, obs_[j].hi);
            }
            return s;
        };
        const double q_old = q(d);
        D old = d;
        for (int halving = 0; halving < 30; ++halving) {
            double t = std::ldexp(1.0, -halving);
            D trial = old;
            if constexpr (std::same_as<D, Gamma>) {
                trial.k = old.k + t * (cand.k - old.k);
                trial.theta = old.theta + t * (cand.theta - old.theta);
            } else {
                trial.k = old.k + t * (cand.k - old.k);
                trial.lambda = old.lambda + t * (cand.lambda - old.lambda);
            }
            if (q(trial) >= q_old) {
                d = trial;
                return;
            }
        }
    }

    std::vector<Observation> obs_;
    FitConfig cfg_;
    std::uint64_t sum_;
    std::vector<double> w_;
    std::vector<Component> comps_;
    std::vector<bool> frozen_;
    std::vector<double> resp_, stat1_, stat2_, ll_;
    std::vector<std::string> warnings_;
    double total_ = 0;
};

} // namespace fitdetail

/// Fits a mixture to one column of a histogram by Expectation-Maximisation.
///
/// The likelihood treats each bin as the continuous interval that rounds
/// into it, so uniform atoms and continuous tails share one coherent
/// discrete likelihood. Uniform components keep their bounds; lognormal,
/// normal and Pareto components use exact interval-censored M-steps;
/// Weibull and gamma use a safeguarded generalized step. The returned trace
/// holds the log-likelihood of every visited parameter set, the last entry
/// belonging to the returned model.
inline EMState em_fit(const Histogram& h, const FitConfig& cfg) {
    cfg.validate();
    auto obs = observations(h, cfg.target);
    if (obs.empty()) throw EmptyError("histogram has no mass in the target column");
    const auto sum = h.totals().get(cfg.target);

    if (obs.size() == 1 && !cfg.initial) {
        MixtureModel single(sum, {{1.0, Uniform{obs[0].lo, obs[0].hi}}});
        return EMState{single, {log_likelihood(single, obs)}, 0, true, {false}, {}};
    }
    MixtureModel init = cfg.initial ? MixtureModel(sum, cfg.initial->components()) : initialize(h, cfg);
    return fitdetail::EmRunner(std::move(obs), init, cfg).run();
}

/// Repeats em_fit from perturbed starting points (restart 0 is the default
/// initializer) and keeps the highest final log-likelihood.
inline EMState em_fit_restarts(const Histogram& h, const FitConfig& cfg, int restarts, std::uint64_t seed) {
    EMState best = em_fit(h, cfg);
    if (restarts <= 1 || best.model.size() == 1) return best;
    const MixtureModel base = cfg.initial ? *cfg.initial : initialize(h, cfg);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (int r = 1; r < restarts; ++r) {
        std::vector<WeightedComponent> comps = base.components();
        for (auto& c : comps) {
            if (auto* ln = std::get_if<LogNormal>(&c.component)) {
                ln->mu += 0.5 * jitter(rng);
                ln->sigma *= std::exp(0.3 * jitter(rng));
            } else if (auto* nm = std::get_if<Normal>(&c.component)) {
                nm->mu += 0.25 * nm->sigma * jitter(rng);
            }
        }
        FitConfig c2 = cfg;
        c2.initial = MixtureModel(base.sum(), std::move(comps));
        EMState st = em_fit(h, c2);
        if (st.loglik_trace.back() > best.loglik_trace.back()) best = std::move(st);
    }
    return best;
}

} // namespace flowlab

#endif // FLOWLAB_FIT_HPP
