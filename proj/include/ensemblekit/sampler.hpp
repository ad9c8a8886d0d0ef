#pragma once

// Microstate-level Monte Carlo. Chains run single-site Metropolis moves with
// proposals drawn from the prior, either tilted by exp[-n <beta, H_n>]
// (canonical), restricted to a thickened shell around a target value
// (conditioned), or both (mixed). An exact composition-class oracle computes
// shell and ball probabilities for small mean-field models.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ensemblekit/common.hpp"
#include "ensemblekit/macrostate.hpp"
#include "ensemblekit/model.hpp"
#include "ensemblekit/thermo.hpp"

namespace ek {

struct ChainConfig {
  enum Kind { Canonical, Shell, MixedShell } kind = Canonical;
  std::vector<double> beta;  // Canonical: sigma entries; MixedShell: {beta1}
  std::vector<double> u;     // Shell: sigma entries; MixedShell: {u2}
  double shell_halfwidth = 0.0;
  int sites = 64;
  long sweeps = 100000;
  long burnin = -1;  // < 0 selects sweeps / 10
  std::uint64_t seed = 0;
  int blocks = 32;
};

struct ChainResult {
  double accepted_fraction = 0.0;
  Macrostate mean_macrostate;
  double mean_magnetization = 0.0;
  double stderr_magnetization = 0.0;
  double mean_abs_magnetization = 0.0;
  double stderr_abs_magnetization = 0.0;
  std::vector<double> mean_h;
  double shell_occupancy = 1.0;
  std::vector<double> block_abs_magnetization;
  std::vector<Macrostate> block_macrostates;
  // Conservative bound on the largest single-move |dH_n|; shells narrower
  // than this may be frozen into disconnected components.
  double irreducibility_bound = 0.0;
  bool irreducibility_certified = true;
  long sweeps = 0;
  long burnin = 0;
  int sites = 0;
  std::uint64_t seed = 0;
};

// Per-sweep view handed to an optional observer (diagnostics, traces).
struct SweepView {
  long sweep = 0;
  const std::vector<int>* letters = nullptr;
  const std::vector<double>* h = nullptr;
  double magnetization = 0.0;
};
using SweepObserver = std::function<void(const SweepView&)>;

namespace detail {

inline int sample_letter(const std::vector<double>& prior, double uu) {
  double acc = 0.0;
  for (size_t j = 0; j < prior.size(); ++j) {
    acc += prior[j];
    if (uu < acc) return int(j);
  }
  return int(prior.size()) - 1;
}

// Incremental microstate state: current letters, conserved quantities, and
// the caches needed for O(alphabet) / O(n) move evaluation.
struct MicrostateEngine {
  const Model* model = nullptr;
  int n = 0;
  std::vector<int> letters;
  std::vector<double> h;  // sigma components

  // mean-field caches: counts and K x per quadratic component
  std::vector<long> counts;
  std::vector<std::vector<double>> kx;

  // lattice caches: site interaction table and per-site field
  std::vector<double> gtab;
  std::vector<double> field;
  double vsum = 0.0;  // sum of letter values over sites

  void init(const Model& m, std::vector<int> init_letters) {
    model = &m;
    letters = std::move(init_letters);
    n = int(letters.size());
    refresh();
  }

  void refresh() {
    const Model& m = *model;
    const int mlen = m.alphabet_size();
    vsum = 0.0;
    for (int k = 0; k < n; ++k) vsum += m.alphabet[size_t(letters[size_t(k)])];
    if (m.kind == ModelKind::MeanField) {
      counts.assign(size_t(mlen), 0);
      for (int k = 0; k < n; ++k) counts[size_t(letters[size_t(k)])]++;
      std::vector<double> x(size_t(mlen), 0.0);
      for (int j = 0; j < mlen; ++j) x[size_t(j)] = double(counts[size_t(j)]) / double(n);
      kx.assign(size_t(m.sigma), {});
      h.assign(size_t(m.sigma), 0.0);
      for (int i = 0; i < m.sigma; ++i) {
        const ReprTerm& t = m.repr[size_t(i)];
        kx[size_t(i)].assign(size_t(mlen), 0.0);
        if (!t.kernel.empty()) t.kernel.multiply(x.data(), kx[size_t(i)].data());
        double v = 0.0;
        for (int j = 0; j < mlen; ++j) {
          v += 0.5 * x[size_t(j)] * kx[size_t(i)][size_t(j)];
          if (!t.linear.empty()) v += t.linear[size_t(j)] * x[size_t(j)];
        }
        h[size_t(i)] = v;
      }
    } else {
      if (gtab.empty()) {
        gtab.resize(size_t(n));
        for (int d = 0; d < n; ++d)
          gtab[size_t(d)] = circle_green(double(d) / double(n), m.fourier_cutoff);
      }
      field.assign(size_t(n), 0.0);
      for (int k = 0; k < n; ++k) {
        double vk = m.alphabet[size_t(letters[size_t(k)])];
        for (int l = 0; l < n; ++l) {
          int d = k - l;
          if (d < 0) d += n;
          field[size_t(l)] += gtab[size_t(d)] * vk;
        }
      }
      h.assign(size_t(m.sigma), 0.0);
      double quad = 0.0;
      for (int k = 0; k < n; ++k) quad += field[size_t(k)] * m.alphabet[size_t(letters[size_t(k)])];
      h[0] = 0.5 * quad / (double(n) * double(n));
      for (int i = 1; i < m.sigma; ++i) {
        const std::vector<double>& coef = m.cell_linear[size_t(i) - 1];
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += coef[size_t(letters[size_t(k)])];
        h[size_t(i)] = s / double(n);
      }
    }
  }

  std::vector<double> move_delta(int site, int letter_new) const {
    const Model& m = *model;
    const int j = letters[size_t(site)];
    std::vector<double> d(size_t(m.sigma), 0.0);
    if (j == letter_new) return d;
    if (m.kind == ModelKind::MeanField) {
      for (int i = 0; i < m.sigma; ++i) {
        const ReprTerm& t = m.repr[size_t(i)];
        double dv = (kx[size_t(i)][size_t(letter_new)] - kx[size_t(i)][size_t(j)]) / double(n);
        if (!t.kernel.empty())
          dv += (t.kernel(letter_new, letter_new) - 2.0 * t.kernel(letter_new, j) + t.kernel(j, j)) /
                (2.0 * double(n) * double(n));
        if (!t.linear.empty())
          dv += (t.linear[size_t(letter_new)] - t.linear[size_t(j)]) / double(n);
        d[size_t(i)] = dv;
      }
      return d;
    }
    double v_old = m.alphabet[size_t(j)], v_new = m.alphabet[size_t(letter_new)];
    double dv = v_new - v_old;
    d[0] = dv * (field[size_t(site)] - gtab[0] * v_old) / (double(n) * double(n)) +
           gtab[0] * (v_new * v_new - v_old * v_old) / (2.0 * double(n) * double(n));
    for (int i = 1; i < m.sigma; ++i) {
      const std::vector<double>& coef = m.cell_linear[size_t(i) - 1];
      d[size_t(i)] = (coef[size_t(letter_new)] - coef[size_t(j)]) / double(n);
    }
    return d;
  }

  void commit(int site, int letter_new, const std::vector<double>& delta) {
    const Model& m = *model;
    const int j = letters[size_t(site)];
    if (j == letter_new) return;
    for (int i = 0; i < m.sigma; ++i) h[size_t(i)] += delta[size_t(i)];
    vsum += m.alphabet[size_t(letter_new)] - m.alphabet[size_t(j)];
    if (m.kind == ModelKind::MeanField) {
      counts[size_t(j)]--;
      counts[size_t(letter_new)]++;
      const int mlen = m.alphabet_size();
      for (int i = 0; i < m.sigma; ++i) {
        const ReprTerm& t = m.repr[size_t(i)];
        if (t.kernel.empty()) continue;
        for (int l = 0; l < mlen; ++l)
          kx[size_t(i)][size_t(l)] += (t.kernel(l, letter_new) - t.kernel(l, j)) / double(n);
      }
    } else {
      double dv = m.alphabet[size_t(letter_new)] - m.alphabet[size_t(j)];
      for (int l = 0; l < n; ++l) {
        int d = site - l;
        if (d < 0) d += n;
        field[size_t(l)] += gtab[size_t(d)] * dv;
      }
    }
    letters[size_t(site)] = letter_new;
  }

  double magnetization() const { return vsum / double(n); }
};

// Conservative bound on |dH_n| over all single-site moves from any state.
inline double single_move_bound(const Model& m, int n) {
  double bound = 0.0;
  if (m.kind == ModelKind::MeanField) {
    for (int i = 0; i < m.sigma; ++i) {
      const ReprTerm& t = m.repr[size_t(i)];
      double kmax = t.kernel.empty() ? 0.0 : t.kernel.max_abs();
      double amax = 0.0;
      for (double v : t.linear) amax = std::max(amax, std::fabs(v));
      bound = std::max(bound, (2.0 * kmax + 2.0 * amax) / double(n) +
                                  2.0 * kmax / (double(n) * double(n)));
    }
  } else {
    double ymax = 0.0;
    for (double y : m.alphabet) ymax = std::max(ymax, std::fabs(y));
    double g0 = circle_green(0.0, m.fourier_cutoff);
    double gsum_bound = g0;  // |g| is maximal at zero separation
    bound = 2.0 * ymax * ymax * (gsum_bound * double(n)) / (double(n) * double(n)) +
            g0 * ymax * ymax / (double(n) * double(n));
    for (int i = 1; i < m.sigma; ++i) {
      double lo = kInf, hi = -kInf;
      for (double v : m.cell_linear[size_t(i) - 1]) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      bound = std::max(bound, (hi - lo) / double(n));
    }
  }
  return bound;
}

inline std::vector<int> prior_random_letters(const Model& m, int n, std::mt19937_64& rng) {
  std::vector<int> letters(size_t(n), 0);
  for (int k = 0; k < n; ++k) letters[size_t(k)] = sample_letter(m.prior, unit_uniform(rng));
  return letters;
}

// Simulated annealing on the worst component residual until the state sits
// strictly inside the shell.
inline std::vector<int> anneal_into_shell(const Model& m, const std::vector<double>& target,
                                          const std::vector<int>& comps, double r,
                                          int n, std::mt19937_64& rng) {
  MicrostateEngine eng;
  eng.init(m, prior_random_letters(m, n, rng));
  auto dist = [&](const std::vector<double>& h) {
    double d = 0.0;
    for (size_t c = 0; c < comps.size(); ++c)
      d = std::max(d, std::fabs(h[size_t(comps[c])] - target[c]));
    return d;
  };
  double d = dist(eng.h);
  const long budget = 600L * n;
  double temp = std::max(d, 1e-3);
  const double cool = std::pow(1e-8, 1.0 / double(budget));
  for (long step = 0; step < budget && d > 0.5 * r; ++step) {
    int site = int(rng() % std::uint64_t(n));
    int letter = sample_letter(m.prior, unit_uniform(rng));
    auto delta = eng.move_delta(site, letter);
    std::vector<double> hn = eng.h;
    for (int i = 0; i < m.sigma; ++i) hn[size_t(i)] += delta[size_t(i)];
    double dn = dist(hn);
    if (dn <= d || unit_uniform(rng) < std::exp((d - dn) / temp)) {
      eng.commit(site, letter, delta);
      d = dn;
    }
    temp *= cool;
  }
  if (d > r)
    throw FeasibilityError("no microstate found inside the shell (best residual " +
                           format_double(d) + ", half-width " + format_double(r) + ")");
  return eng.letters;
}

}  // namespace detail

inline ChainResult run_chain(const Model& m, const ChainConfig& cfg,
                             const SweepObserver& observer = nullptr) {
  if (!m.has_microstate_layer()) throw ConfigError("model has no microstate layer");
  if (cfg.sites < 2) throw ConfigError("chain needs at least two sites");
  if (m.kind == ModelKind::Lattice && cfg.sites % m.cells != 0)
    throw ConfigError("site count must be divisible by the cell count");
  const int n = cfg.sites;

  std::vector<int> tilt_comps, shell_comps;
  std::vector<double> tilt_values, shell_targets;
  switch (cfg.kind) {
    case ChainConfig::Canonical:
      if (int(cfg.beta.size()) != m.sigma) throw ConfigError("canonical chain needs sigma multipliers");
      for (int i = 0; i < m.sigma; ++i) {
        tilt_comps.push_back(i);
        tilt_values.push_back(cfg.beta[size_t(i)]);
      }
      break;
    case ChainConfig::Shell:
      if (int(cfg.u.size()) != m.sigma) throw ConfigError("shell chain needs sigma target values");
      if (!(cfg.shell_halfwidth > 0.0)) throw ConfigError("shell chain needs r > 0");
      for (int i = 0; i < m.sigma; ++i) {
        shell_comps.push_back(i);
        shell_targets.push_back(cfg.u[size_t(i)]);
      }
      break;
    case ChainConfig::MixedShell:
      if (m.sigma != 2 || m.tau != 1) throw ConfigError("mixed chain needs sigma = 2, tau = 1");
      if (cfg.beta.size() != 1 || cfg.u.size() != 1)
        throw ConfigError("mixed chain needs one multiplier and one target");
      if (!(cfg.shell_halfwidth > 0.0)) throw ConfigError("mixed chain needs r > 0");
      tilt_comps = {0};
      tilt_values = {cfg.beta[0]};
      shell_comps = {1};
      shell_targets = {cfg.u[0]};
      break;
  }

  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x9d2c5680ULL));
  detail::MicrostateEngine eng;
  if (shell_comps.empty()) {
    eng.init(m, detail::prior_random_letters(m, n, rng));
  } else {
    eng.init(m, detail::anneal_into_shell(m, shell_targets, shell_comps, cfg.shell_halfwidth, n, rng));
  }

  const long burnin = cfg.burnin >= 0 ? cfg.burnin : cfg.sweeps / 10;
  const long total = burnin + cfg.sweeps;
  const int blocks = std::max(1, cfg.blocks);
  const long block_len = std::max(1L, cfg.sweeps / blocks);

  const int mlen = m.alphabet_size();
  const int q = (m.kind == ModelKind::Lattice) ? m.cells : 1;
  const int block_sites = n / q;

  ChainResult res;
  res.sweeps = cfg.sweeps;
  res.burnin = burnin;
  res.sites = n;
  res.seed = cfg.seed;
  res.irreducibility_bound = detail::single_move_bound(m, n);
  res.irreducibility_certified =
      shell_comps.empty() || cfg.shell_halfwidth >= res.irreducibility_bound;

  std::vector<double> cell_counts(size_t(q) * mlen, 0.0);
  std::vector<std::vector<double>> block_counts(size_t(blocks),
                                                std::vector<double>(size_t(q) * mlen, 0.0));
  std::vector<double> block_mag(size_t(blocks), 0.0);
  std::vector<double> block_signed(size_t(blocks), 0.0);
  std::vector<long> block_n(size_t(blocks), 0);
  std::vector<double> mean_h(size_t(m.sigma), 0.0);
  long accepted = 0, proposed = 0, measured = 0, out_of_shell = 0;
  long refresh_counter = 0;

  for (long sweep = 0; sweep < total; ++sweep) {
    for (int step = 0; step < n; ++step) {
      int site = int(rng() % std::uint64_t(n));
      int letter = detail::sample_letter(m.prior, detail::unit_uniform(rng));
      double uacc = detail::unit_uniform(rng);  // drawn unconditionally: stable stream
      ++proposed;
      auto delta = eng.move_delta(site, letter);
      bool ok = true;
      for (size_t c = 0; c < shell_comps.size(); ++c) {
        double hn = eng.h[size_t(shell_comps[c])] + delta[size_t(shell_comps[c])];
        if (std::fabs(hn - shell_targets[c]) > cfg.shell_halfwidth) ok = false;
      }
      if (ok && !tilt_comps.empty()) {
        double logw = 0.0;
        for (size_t c = 0; c < tilt_comps.size(); ++c)
          logw -= double(n) * tilt_values[c] * delta[size_t(tilt_comps[c])];
        if (logw < 0.0 && uacc >= std::exp(logw)) ok = false;
      }
      if (ok) {
        eng.commit(site, letter, delta);
        ++accepted;
      }
      if (++refresh_counter == 65536) {
        refresh_counter = 0;
        eng.refresh();
      }
    }
    if (sweep < burnin) continue;

    // measurement
    ++measured;
    double mag = eng.magnetization();
    long bi = std::min<long>((sweep - burnin) / block_len, blocks - 1);
    block_mag[size_t(bi)] += std::fabs(mag);
    block_signed[size_t(bi)] += mag;
    block_n[size_t(bi)]++;
    for (int k = 0; k < n; ++k)
      block_counts[size_t(bi)][size_t(k / block_sites) * mlen + eng.letters[size_t(k)]] += 1.0;
    for (int i = 0; i < m.sigma; ++i) mean_h[size_t(i)] += eng.h[size_t(i)];
    for (size_t c = 0; c < shell_comps.size(); ++c)
      if (std::fabs(eng.h[size_t(shell_comps[c])] - shell_targets[c]) > cfg.shell_halfwidth + 1e-9)
        ++out_of_shell;
    if (observer) {
      SweepView view;
      view.sweep = sweep - burnin;
      view.letters = &eng.letters;
      view.h = &eng.h;
      view.magnetization = mag;
      observer(view);
    }
  }

  if (!shell_comps.empty() && out_of_shell > 0)
    throw StatError("shell chain recorded " + std::to_string(out_of_shell) +
                    " samples outside the shell");

  res.accepted_fraction = proposed > 0 ? double(accepted) / double(proposed) : 0.0;
  res.shell_occupancy = shell_comps.empty() ? 1.0 : 1.0;
  for (int i = 0; i < m.sigma; ++i) mean_h[size_t(i)] /= double(std::max(1L, measured));
  res.mean_h = mean_h;

  double mag_mean = 0.0, signed_mean = 0.0;
  std::vector<double> block_means, signed_means;
  for (int b = 0; b < blocks; ++b) {
    if (block_n[size_t(b)] == 0) continue;
    double bm = block_mag[size_t(b)] / double(block_n[size_t(b)]);
    double bs = block_signed[size_t(b)] / double(block_n[size_t(b)]);
    block_means.push_back(bm);
    signed_means.push_back(bs);
    signed_mean += bs * double(block_n[size_t(b)]);
    res.block_abs_magnetization.push_back(bm);
    std::vector<double> w = block_counts[size_t(b)];
    for (double& v : w) v /= double(block_n[size_t(b)] * block_sites);
    Macrostate bx = Macrostate::cell_matrix(q, mlen, std::move(w));
    if (q == 1) bx.cells = 1;
    res.block_macrostates.push_back(std::move(bx));
    mag_mean += bm * double(block_n[size_t(b)]);
  }
  mag_mean /= double(std::max(1L, measured));
  signed_mean /= double(std::max(1L, measured));
  res.mean_abs_magnetization = mag_mean;
  res.mean_magnetization = signed_mean;
  auto block_stderr = [](const std::vector<double>& means) {
    if (means.size() < 2) return 0.0;
    double mu = 0.0;
    for (double v : means) mu += v;
    mu /= double(means.size());
    double var = 0.0;
    for (double v : means) var += (v - mu) * (v - mu);
    var /= double(means.size() - 1);
    return std::sqrt(var / double(means.size()));
  };
  res.stderr_abs_magnetization = block_stderr(block_means);
  res.stderr_magnetization = block_stderr(signed_means);

  for (int b = 0; b < blocks; ++b)
    for (size_t k = 0; k < cell_counts.size(); ++k) cell_counts[k] += block_counts[size_t(b)][k];
  for (double& v : cell_counts) v /= double(std::max(1L, measured) * block_sites);
  res.mean_macrostate = Macrostate::cell_matrix(q, mlen, std::move(cell_counts));
  if (q == 1) res.mean_macrostate.cells = 1;
  return res;
}

inline ChainResult run_canonical_chain(const Model& m, ChainConfig cfg,
                                       const SweepObserver& obs = nullptr) {
  cfg.kind = ChainConfig::Canonical;
  return run_chain(m, cfg, obs);
}

inline ChainResult run_shell_chain(const Model& m, ChainConfig cfg,
                                   const SweepObserver& obs = nullptr) {
  if (cfg.kind != ChainConfig::MixedShell) cfg.kind = ChainConfig::Shell;
  return run_chain(m, cfg, obs);
}

// ---------------------------------------------------------------------------
// Exact composition-class oracle (mean-field models, small alphabets).

namespace detail {

inline void enumerate_compositions(int n, int parts,
                                   const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> counts(size_t(parts), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == parts - 1) {
      counts[size_t(pos)] = left;
      visit(counts);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      counts[size_t(pos)] = k;
      rec(pos + 1, left - k);
    }
  };
  rec(0, n);
}

inline double log_multinomial(int n, const std::vector<int>& counts) {
  double s = std::lgamma(double(n) + 1.0);
  for (int c : counts) s -= std::lgamma(double(c) + 1.0);
  return s;
}

inline void require_type_oracle(const Model& m, int n) {
  if (m.kind != ModelKind::MeanField)
    throw CapacityError("composition oracle needs a mean-field model");
  if (m.alphabet_size() > 3)
    throw CapacityError("composition oracle supports alphabets of size <= 3");
  double combos = 1.0;
  for (int j = 1; j < m.alphabet_size(); ++j) combos *= double(n + j) / double(j);
  if (combos > 2e6) throw CapacityError("composition count too large for exact enumeration");
}

}  // namespace detail

// log P_n{ H_n in prod_i [u_i - r, u_i + r] } under the prior product law.
inline double exact_shell_log_probability(const Model& m, const std::vector<double>& u, double r,
                                          int n) {
  detail::require_type_oracle(m, n);
  if (int(u.size()) != m.sigma) throw ShapeError("target length must equal sigma");
  const int mlen = m.alphabet_size();
  std::vector<double> terms;
  detail::enumerate_compositions(n, mlen, [&](const std::vector<int>& counts) {
    std::vector<double> x(size_t(mlen), 0.0);
    for (int j = 0; j < mlen; ++j) x[size_t(j)] = double(counts[size_t(j)]) / double(n);
    Macrostate state = Macrostate::simplex(x);
    for (int i = 0; i < m.sigma; ++i)
      if (std::fabs(repr_component(m, state, i) - u[size_t(i)]) > r) return;
    double lw = detail::log_multinomial(n, counts);
    for (int j = 0; j < mlen; ++j) lw += double(counts[size_t(j)]) * std::log(m.prior[size_t(j)]);
    terms.push_back(lw);
  });
  return log_sum_exp(terms);
}

inline double exact_shell_probability(const Model& m, const std::vector<double>& u, double r, int n) {
  double lp = exact_shell_log_probability(m, u, r, n);
  return std::isfinite(lp) ? std::exp(lp) : 0.0;
}

inline double exact_shell_probability(const Model& m, double u, double r, int n) {
  return exact_shell_probability(m, std::vector<double>{u}, r, n);
}

// ---------------------------------------------------------------------------
// Decay-rate estimation: the log-probability of a macrostate ball fitted
// against the site count, compared to the rate function at the center.

struct MacrostateBall {
  Macrostate center;
  double radius = 0.1;  // max-norm on the weight table

  // Closed ball with rounding slack, so states on the boundary stay members.
  bool contains(const Macrostate& x) const {
    return macrostate_distance(x, center) <= radius * (1.0 + 1e-12) + 1e-12;
  }
};

struct RateDecayResult {
  double slope = 0.0;
  double slope_stderr = 0.0;
  std::vector<int> site_counts;
  std::vector<double> log_probs;
  double rate_at_center = 0.0;   // I_beta(center)
  double rate_in_ball = kInf;    // min of I_beta over attained states in the ball
  bool approximate = false;      // chain occupancy rather than exact sums
};

namespace detail {

inline void fit_slope(const std::vector<int>& ns, const std::vector<double>& ys,
                      RateDecayResult* out) {
  const size_t k = ns.size();
  double xbar = 0.0, ybar = 0.0;
  for (size_t i = 0; i < k; ++i) {
    xbar += double(ns[i]);
    ybar += ys[i];
  }
  xbar /= double(k);
  ybar /= double(k);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < k; ++i) {
    sxx += (double(ns[i]) - xbar) * (double(ns[i]) - xbar);
    sxy += (double(ns[i]) - xbar) * (ys[i] - ybar);
  }
  out->slope = sxy / sxx;
  double ss = 0.0;
  for (size_t i = 0; i < k; ++i) {
    double r = ys[i] - ybar - out->slope * (double(ns[i]) - xbar);
    ss += r * r;
  }
  out->slope_stderr = k > 2 ? std::sqrt(ss / double(k - 2) / sxx) : 0.0;
}

}  // namespace detail

// Exact route: composition sums under the prior or the tilted law.
inline RateDecayResult estimate_rate_decay_exact(const Model& m, const std::vector<double>& beta,
                                                 const MacrostateBall& ball,
                                                 const std::vector<int>& site_counts,
                                                 const SolverOptions& opt = {}) {
  if (site_counts.size() < 3) throw ConfigError("rate-decay fit needs at least three site counts");
  const bool tilted = [&] {
    for (double b : beta) if (b != 0.0) return true;
    return false;
  }();
  RateDecayResult out;
  out.site_counts = site_counts;
  const int mlen = m.alphabet_size();

  for (int n : site_counts) {
    detail::require_type_oracle(m, n);
    std::vector<double> in_ball, all;
    detail::enumerate_compositions(n, mlen, [&](const std::vector<int>& counts) {
      std::vector<double> x(size_t(mlen), 0.0);
      for (int j = 0; j < mlen; ++j) x[size_t(j)] = double(counts[size_t(j)]) / double(n);
      Macrostate state = Macrostate::simplex(x);
      double lw = detail::log_multinomial(n, counts);
      for (int j = 0; j < mlen; ++j) lw += double(counts[size_t(j)]) * std::log(m.prior[size_t(j)]);
      if (tilted)
        for (int i = 0; i < m.sigma; ++i)
          lw -= double(n) * beta[size_t(i)] * repr_component(m, state, i);
      all.push_back(lw);
      if (ball.contains(state)) {
        in_ball.push_back(lw);
        if (n == site_counts.back()) {
          double rate = rate_value(m, state);
          if (tilted)
            for (int i = 0; i < m.sigma; ++i) rate += beta[size_t(i)] * repr_component(m, state, i);
          out.rate_in_ball = std::min(out.rate_in_ball, rate);
        }
      }
    });
    if (in_ball.empty())
      throw StatError("ball contains no composition class at n = " + std::to_string(n));
    out.log_probs.push_back(log_sum_exp(in_ball) - (tilted ? log_sum_exp(all) : 0.0));
  }

  double rate = rate_value(m, ball.center);
  if (tilted) {
    for (int i = 0; i < m.sigma; ++i) rate += beta[size_t(i)] * repr_component(m, ball.center, i);
    double phi = free_energy(m, beta, opt).value;
    rate -= phi;
    out.rate_in_ball -= phi;
  }
  out.rate_at_center = rate;
  detail::fit_slope(out.site_counts, out.log_probs, &out);
  return out;
}

// Chain route: ball occupancy under the requested ensemble; needs at least 50
// hits at the smallest size to be meaningful.
inline RateDecayResult estimate_rate_decay_chain(const Model& m, const ChainConfig& base,
                                                 const MacrostateBall& ball,
                                                 const std::vector<int>& site_counts,
                                                 const SolverOptions& opt = {}) {
  if (site_counts.size() < 3) throw ConfigError("rate-decay fit needs at least three site counts");
  RateDecayResult out;
  out.site_counts = site_counts;
  out.approximate = true;
  long min_hits = -1;
  for (int n : site_counts) {
    ChainConfig cfg = base;
    cfg.sites = n;
    long hits = 0, seen = 0;
    run_chain(m, cfg, [&](const SweepView& view) {
      ++seen;
      Macrostate x = coarse_grain(m, *view.letters);
      if (ball.contains(x)) ++hits;
    });
    if (min_hits < 0 || hits < min_hits) min_hits = hits;
    if (hits < 50)
      throw StatError("only " + std::to_string(hits) + " ball hits at n = " + std::to_string(n) +
                      "; need at least 50");
    out.log_probs.push_back(std::log(double(hits) / double(seen)));
  }
  double rate = rate_value(m, ball.center);
  bool tilted = false;
  for (double b : base.beta) tilted = tilted || b != 0.0;
  if (tilted && base.kind == ChainConfig::Canonical) {
    for (int i = 0; i < m.sigma; ++i) rate += base.beta[size_t(i)] * repr_component(m, ball.center, i);
    rate -= free_energy(m, base.beta, opt).value;
  }
  out.rate_at_center = rate;
  detail::fit_slope(out.site_counts, out.log_probs, &out);
  return out;
}

}  // namespace ek
