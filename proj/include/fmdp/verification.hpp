#pragma once

// Numeric checks of the concentration and decomposition inequalities the
// regret analysis relies on, evaluated by full enumeration or simulation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fmdp/core.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/rng.hpp"

namespace fmdp {

struct CheckResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

// ---------------------------------------------------------------------------
// Factored deviation

/// Two product distributions P, P' over S_1 x ... x S_m with per-factor slack
/// |P'_i(y) - P_i(y)| <= sqrt(P_i(y) xi_i) + xi'_i, and a nonnegative f over
/// the joint space (codec order).
struct DeviationInstance {
  std::vector<std::vector<double>> p;
  std::vector<std::vector<double>> p_prime;
  std::vector<double> xi;
  std::vector<double> xi_prime;
  std::vector<double> f;

  std::vector<Index> sizes() const {
    std::vector<Index> out;
    for (const auto& pi : p) out.push_back(pi.size());
    return out;
  }

  bool hypothesis_holds() const {
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t y = 0; y < p[i].size(); ++y) {
        if (std::abs(p_prime[i][y] - p[i][y]) > std::sqrt(p[i][y] * xi[i]) + xi_prime[i]) return false;
      }
    }
    return true;
  }

  void validate() const {
    const std::size_t m = p.size();
    if (m == 0 || p_prime.size() != m || xi.size() != m || xi_prime.size() != m) {
      throw precondition_error("deviation instance: inconsistent factor counts");
    }
    Index total = 1;
    for (std::size_t i = 0; i < m; ++i) {
      if (p[i].empty() || p_prime[i].size() != p[i].size()) throw precondition_error("deviation instance: bad factor size");
      for (const auto* dist : {&p[i], &p_prime[i]}) {
        double sum = 0.0;
        for (double v : *dist) {
          if (v < 0.0) throw precondition_error("deviation instance: negative probability");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw precondition_error("deviation instance: distribution does not sum to 1");
      }
      if (!(xi[i] > 0.0 && xi_prime[i] > 0.0)) throw precondition_error("deviation instance: slacks must be positive");
      total *= p[i].size();
    }
    if (f.size() != total) throw precondition_error("deviation instance: f has wrong size");
    if (std::any_of(f.begin(), f.end(), [](double v) { return v < 0.0; })) {
      throw precondition_error("deviation instance: f must be nonnegative");
    }
    if (!hypothesis_holds()) throw precondition_error("deviation instance: per-factor slack hypothesis violated");
  }
};

/// lhs = sum_y |P(y) - P'(y)| f(y);
/// rhs = max_{y in prod supp P_i} f(y) * sum_i sum_y sqrt(P_i(y) xi_i) + 3 max f * sum_i xi'_i S_i.
inline CheckResult check_factored_deviation(const DeviationInstance& inst) {
  inst.validate();
  const auto sizes = inst.sizes();
  const MixedRadix codec(sizes);
  std::vector<Value> y(sizes.size());
  double lhs = 0.0, max_f = 0.0, max_f_support = 0.0;
  for (Index k = 0; k < codec.size(); ++k) {
    codec.decode_into(k, y);
    double pk = 1.0, qk = 1.0;
    bool in_support = true;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      pk *= inst.p[i][y[i]];
      qk *= inst.p_prime[i][y[i]];
      if (inst.p[i][y[i]] <= 0.0) in_support = false;
    }
    lhs += std::abs(pk - qk) * inst.f[k];
    max_f = std::max(max_f, inst.f[k]);
    if (in_support) max_f_support = std::max(max_f_support, inst.f[k]);
  }
  double bern = 0.0, extra = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (double v : inst.p[i]) bern += std::sqrt(v * inst.xi[i]);
    extra += inst.xi_prime[i] * static_cast<double>(sizes[i]);
  }
  const double rhs = max_f_support * bern + 3.0 * max_f * extra;
  return {lhs, rhs, lhs <= rhs + 1e-12};
}

/// Random instance by rejection: draw P_i (with random zeros), slacks and a
/// perturbed P'_i = (1 - lambda) P_i + lambda Q_i, keep the first draw that
/// satisfies the slack hypothesis.
inline DeviationInstance random_deviation_instance(SplitMix64& rng, std::size_t max_factors = 3,
                                                   std::size_t max_size = 4) {
  auto draw_int = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng() % (hi - lo + 1)); };
  auto random_dist = [&](std::size_t n, double zero_prob) {
    std::vector<double> d(n);
    double sum = 0.0;
    for (auto& v : d) {
      v = rng.uniform() < zero_prob ? 0.0 : rng.uniform();
      sum += v;
    }
    if (sum <= 0.0) {
      d[draw_int(0, n - 1)] = 1.0;
      return d;
    }
    for (auto& v : d) v /= sum;
    return d;
  };
  for (int attempt = 0; attempt < 100000; ++attempt) {
    DeviationInstance inst;
    const std::size_t m = draw_int(1, max_factors);
    Index total = 1;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t n = draw_int(1, max_size);
      total *= n;
      inst.p.push_back(random_dist(n, 0.3));
      const auto q = random_dist(n, 0.0);
      const double lambda = std::pow(rng.uniform(), 2.0);
      std::vector<double> pp(n);
      for (std::size_t y = 0; y < n; ++y) pp[y] = (1.0 - lambda) * inst.p[i][y] + lambda * q[y];
      inst.p_prime.push_back(pp);
      inst.xi.push_back(1e-3 + 0.5 * rng.uniform());
      inst.xi_prime.push_back(1e-4 + 0.1 * rng.uniform());
    }
    inst.f.resize(total);
    for (auto& v : inst.f) v = 10.0 * rng.uniform();
    if (inst.hypothesis_holds()) return inst;
  }
  throw convergence_error("random_deviation_instance: rejection sampling exhausted");
}

// ---------------------------------------------------------------------------
// SqrtVar

struct SqrtVarResult {
  bool hypothesis = false;  // |x - y| <= sqrt(2 y (1-y) zeta) + zeta / 3
  double lhs = 0.0;         // sqrt(y (1-y))
  double rhs = 0.0;         // sqrt(x (1-x)) + 2.4 sqrt(zeta)
  bool holds = true;        // vacuously true when the hypothesis fails
};

inline SqrtVarResult check_sqrt_var(double x, double y, double zeta) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0) || !(zeta > 0.0)) {
    throw precondition_error("check_sqrt_var: need x, y in [0,1] and zeta > 0");
  }
  SqrtVarResult out;
  out.hypothesis = std::abs(x - y) <= std::sqrt(2.0 * y * (1.0 - y) * zeta) + zeta / 3.0;
  out.lhs = std::sqrt(y * (1.0 - y));
  out.rhs = std::sqrt(x * (1.0 - x)) + 2.4 * std::sqrt(zeta);
  out.holds = !out.hypothesis || out.lhs <= out.rhs + 1e-12;
  return out;
}

// ---------------------------------------------------------------------------
// Time-uniform Azuma-Hoeffding

/// (b - a) sqrt(0.5 (T + 1) log(sqrt(T + 1) / delta)).
inline double azuma_envelope(double T, double a, double b, double delta) {
  return (b - a) * std::sqrt(0.5 * (T + 1.0) * std::log(std::sqrt(T + 1.0) / delta));
}

/// True when the running sum of `next()` reaches the envelope at some T <= horizon.
inline bool crosses_envelope(const std::function<double()>& next, std::size_t horizon, double a, double b,
                             double delta) {
  double sum = 0.0;
  for (std::size_t T = 1; T <= horizon; ++T) {
    sum += next();
    if (sum >= azuma_envelope(static_cast<double>(T), a, b, delta)) return true;
  }
  return false;
}

struct CoverageResult {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double rate = 0.0;
  double bound = 0.0;  // delta + 2 sqrt(delta / trials)
  bool holds = true;
};

/// Rademacher (+-1) increments, the extreme centred law on [-1, 1].
inline CoverageResult check_azuma_coverage(std::size_t trials, std::size_t horizon, double delta, SplitMix64& rng) {
  if (trials < 1000) throw precondition_error("check_azuma_coverage: need at least 1000 trials");
  if (!(delta > 0.0 && delta < 1.0)) throw precondition_error("check_azuma_coverage: delta must lie in (0,1)");
  std::vector<double> envelope(horizon + 1);
  for (std::size_t T = 1; T <= horizon; ++T) envelope[T] = azuma_envelope(static_cast<double>(T), -1.0, 1.0, delta);
  CoverageResult out;
  out.trials = trials;
  for (std::size_t k = 0; k < trials; ++k) {
    double sum = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t T = 1; T <= horizon; ++T) {
      if ((T - 1) % 64 == 0) bits = rng();
      sum += (bits & 1ULL) ? 1.0 : -1.0;
      bits >>= 1;
      if (sum >= envelope[T]) {
        ++out.violations;
        break;
      }
    }
  }
  out.rate = static_cast<double>(out.violations) / static_cast<double>(trials);
  out.bound = delta + 2.0 * std::sqrt(delta / static_cast<double>(trials));
  out.holds = out.rate <= out.bound;
  return out;
}

// ---------------------------------------------------------------------------
// Factored count

/// For a trajectory of joint indices over X (codec of `factor_sizes`):
/// lhs = sum_i sum_{x in X} nu(x) alpha_i(x[Z_i]),
/// rhs = sum_i sum_{x' in X[Z_i]} nu_i(x') alpha_i(x'),
/// with nu the full-pair counts and nu_i the projected counts.
inline CheckResult check_factored_count(const std::vector<Index>& factor_sizes, std::span<const Index> trajectory,
                                        const std::vector<Scope>& scopes,
                                        const std::vector<std::vector<double>>& alpha) {
  const MixedRadix codec(factor_sizes);
  if (alpha.size() != scopes.size()) throw precondition_error("check_factored_count: one alpha per scope");
  std::vector<MixedRadix> scope_codecs;
  for (std::size_t i = 0; i < scopes.size(); ++i) {
    std::vector<Index> r;
    for (std::size_t j : scopes[i]) {
      if (j >= factor_sizes.size()) throw structural_error("check_factored_count: scope index out of range");
      r.push_back(factor_sizes[j]);
    }
    scope_codecs.emplace_back(r);
    if (alpha[i].size() != scope_codecs.back().size()) throw precondition_error("check_factored_count: alpha size");
    if (std::any_of(alpha[i].begin(), alpha[i].end(), [](double a) { return !(a > 0.0); })) {
      throw precondition_error("check_factored_count: alpha must be positive");
    }
  }
  auto project_code = [&](const std::vector<Value>& x, std::size_t i) {
    std::vector<Value> v;
    for (std::size_t j : scopes[i]) v.push_back(x[j]);
    return scope_codecs[i].encode(v);
  };

  std::vector<Index> full(codec.size(), 0);
  for (Index x : trajectory) {
    if (x >= codec.size()) throw structural_error("check_factored_count: trajectory index out of range");
    ++full[x];
  }
  std::vector<Value> x(factor_sizes.size());
  double lhs = 0.0;
  for (Index k = 0; k < codec.size(); ++k) {
    if (!full[k]) continue;
    codec.decode_into(k, x);
    for (std::size_t i = 0; i < scopes.size(); ++i) lhs += static_cast<double>(full[k]) * alpha[i][project_code(x, i)];
  }
  double rhs = 0.0;
  for (std::size_t i = 0; i < scopes.size(); ++i) {
    std::vector<Index> local(scope_codecs[i].size(), 0);
    for (Index t : trajectory) {
      codec.decode_into(t, x);
      ++local[project_code(x, i)];
    }
    for (Index v = 0; v < local.size(); ++v) rhs += static_cast<double>(local[v]) * alpha[i][v];
  }
  return {lhs, rhs, lhs <= rhs * (1.0 + 1e-12) + 1e-12};
}

// ---------------------------------------------------------------------------
// Suite runner

struct SuiteReport {
  std::string name;
  std::size_t cases = 0;
  std::size_t counterexamples = 0;
  std::string first_counterexample;
  std::string summary;

  bool passed() const { return counterexamples == 0; }
};

/// Randomized suites for all four checks, deterministic given `seed`.
inline std::vector<SuiteReport> run_lemma_suites(std::uint64_t seed = 20240101) {
  std::vector<SuiteReport> out;
  SplitMix64 rng(seed);

  {
    SuiteReport r;
    r.name = "factored-deviation";
    for (int k = 0; k < 200; ++k) {
      const auto inst = random_deviation_instance(rng);
      const auto c = check_factored_deviation(inst);
      ++r.cases;
      if (!c.holds) {
        if (!r.counterexamples++) {
          std::ostringstream os;
          os << "instance " << k << ": lhs=" << c.lhs << " rhs=" << c.rhs << " m=" << inst.p.size();
          r.first_counterexample = os.str();
        }
      }
    }
    out.push_back(r);
  }
  {
    SuiteReport r;
    r.name = "sqrt-var";
    std::size_t active = 0;
    for (double zeta : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
      for (int xi = 0; xi <= 100; ++xi) {
        for (int yi = 0; yi <= 100; ++yi) {
          const double x = xi / 100.0, y = yi / 100.0;
          const auto c = check_sqrt_var(x, y, zeta);
          ++r.cases;
          active += c.hypothesis ? 1 : 0;
          if (!c.holds && !r.counterexamples++) {
            std::ostringstream os;
            os << "x=" << x << " y=" << y << " zeta=" << zeta << ": " << c.lhs << " > " << c.rhs;
            r.first_counterexample = os.str();
          }
        }
      }
    }
    r.summary = std::to_string(active) + " grid points satisfy the hypothesis";
    out.push_back(r);
  }
  {
    SuiteReport r;
    r.name = "azuma-coverage";
    const auto c = check_azuma_coverage(2000, 10000, 0.5, rng);
    r.cases = 1;
    std::ostringstream os;
    os << "violation rate " << c.rate << " (bound " << c.bound << ")";
    r.summary = os.str();
    if (!c.holds) {
      r.counterexamples = 1;
      r.first_counterexample = r.summary;
    }
    out.push_back(r);
  }
  {
    SuiteReport r;
    r.name = "factored-count";
    for (int k = 0; k < 200; ++k) {
      const std::size_t n = 2 + rng() % 3;
      std::vector<Index> sizes(n);
      for (auto& s : sizes) s = 2 + rng() % 3;
      const MixedRadix codec(sizes);
      std::vector<Scope> scopes;
      const std::size_t count = 2 + rng() % 2;
      for (std::size_t i = 0; i < count; ++i) {
        Scope z;
        for (std::size_t j = 0; j < n; ++j) {
          if (rng.bernoulli(0.5)) z.push_back(j);
        }
        if (z.empty()) z.push_back(rng() % n);
        scopes.push_back(z);
      }
      std::vector<std::vector<double>> alpha;
      for (const auto& z : scopes) {
        Index size = 1;
        for (std::size_t j : z) size *= sizes[j];
        std::vector<double> a(size);
        for (auto& v : a) v = 0.01 + rng.uniform();
        alpha.push_back(a);
      }
      std::vector<Index> traj(100);
      for (auto& t : traj) t = rng() % codec.size();
      const auto c = check_factored_count(sizes, traj, scopes, alpha);
      ++r.cases;
      if (!c.holds && !r.counterexamples++) {
        std::ostringstream os;
        os << "trajectory " << k << ": lhs=" << c.lhs << " rhs=" << c.rhs;
        r.first_counterexample = os.str();
      }
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace fmdp
