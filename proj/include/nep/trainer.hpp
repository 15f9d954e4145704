#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>
#include <utility>
#include <vector>

#include "nep/costs.hpp"
#include "nep/dynamics.hpp"
#include "nep/errors.hpp"
#include "nep/lattice.hpp"
#include "nep/relax.hpp"
#include "nep/rng.hpp"

namespace nep {

// One training example: pump amplitudes x (indexed through the input map)
// and a target over the output region. label < 0 means "no class label".
struct Sample {
  std::vector<double> x;
  std::vector<double> target;
  int label = -1;
};

// Immutable description of a physical network bound to a task.
struct System {
  Lattice lattice;
  GpeParams params;
  std::vector<int> input_map;  // empty = identity
  CostKind cost_kind = CostKind::Mse;
};

enum class NudgeEval { SelfConsistent, FrozenAtFree };
enum class ContrastScheme { Forward, Symmetric };

struct TrainConfig {
  double beta = 0.01;
  double lr_V = 0.1;
  double lr_w = 0.1;
  int batch_size = 1;
  int epochs = 50;
  bool train_V = true;
  bool train_w = true;
  NudgeEval nudge_eval = NudgeEval::SelfConsistent;
  ContrastScheme contrast_scheme = ContrastScheme::Forward;
  std::uint64_t rng_seed = 12345;
  int threads = 1;
  RelaxConfig relax;
  // Optional early stops (NaN disables).
  double stop_at_train_loss = std::numeric_limits<double>::quiet_NaN();
  double stop_at_val_accuracy = std::numeric_limits<double>::quiet_NaN();

  void validate() const {
    if (!(std::isfinite(beta)) || beta == 0.0) throw ConfigError("beta must be finite and nonzero");
    if (!(std::isfinite(lr_V) && std::isfinite(lr_w))) throw ConfigError("learning rates must be finite");
    if (train_V && lr_V <= 0.0) throw ConfigError("lr_V must be > 0 when train_V is set");
    if (train_w && lr_w <= 0.0) throw ConfigError("lr_w must be > 0 when train_w is set");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    relax.validate();
  }
};

// Free and nudged steady states for one sample, plus the finite-beta
// estimate dpsi_dbeta. Forward scheme: (nudged - free) / beta. Symmetric
// scheme additionally relaxes at -beta and uses (plus - minus) / (2 beta);
// nudged_minus stays empty under the forward scheme.
struct Contrast {
  SteadyState free;
  SteadyState nudged;
  SteadyState nudged_minus;
  ComplexField dpsi_dbeta;
  double beta_used = 0.0;

  bool symmetric() const { return !nudged_minus.psi.empty(); }
};

inline SteadyState free_steady(const System& sys, const Trainables& tr,
                               const std::vector<double>& x, const RelaxConfig& relax_cfg) {
  FreeRhs rhs(sys.params, tr, pump_field(x, tr, sys.lattice, sys.input_map), sys.lattice);
  return relax(zero_field(sys.lattice), rhs, relax_cfg);
}

// Two-phase protocol: free phase from zero, nudged phase warm-started from
// the free steady state.
inline Contrast run_two_phase(const System& sys, const Trainables& tr, const Sample& sample,
                              const TrainConfig& cfg) {
  if (cfg.beta == 0.0) throw ConfigError("run_two_phase requires beta != 0");
  Contrast con;
  con.beta_used = cfg.beta;
  ComplexField pump = pump_field(sample.x, tr, sys.lattice, sys.input_map);
  FreeRhs free_rhs(sys.params, tr, pump, sys.lattice);
  try {
    con.free = relax(zero_field(sys.lattice), free_rhs, cfg.relax);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string("free phase: ") + e.what(), e.step);
  }
  auto nudge_at = [&](double beta) {
    NudgeSpec spec{beta, sys.cost_kind, sample.target};
    NudgedRhs rhs(free_rhs, spec, sys.lattice);
    if (cfg.nudge_eval == NudgeEval::FrozenAtFree) rhs.freeze_at(con.free.psi, sys.lattice);
    try {
      return relax(con.free.psi, rhs, cfg.relax);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string("nudged phase: ") + e.what(), e.step);
    }
  };
  con.nudged = nudge_at(cfg.beta);
  const std::size_t n = con.free.psi.size();
  con.dpsi_dbeta.resize(n);
  if (cfg.contrast_scheme == ContrastScheme::Symmetric) {
    con.nudged_minus = nudge_at(-cfg.beta);
    for (std::size_t i = 0; i < n; ++i)
      con.dpsi_dbeta[i] = (con.nudged.psi[i] - con.nudged_minus.psi[i]) / (2.0 * cfg.beta);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      con.dpsi_dbeta[i] = (con.nudged.psi[i] - con.free.psi[i]) / cfg.beta;
  }
  return con;
}

// g_V[i] = d|psi_i|^2/dbeta estimated from the contrast; blocked sites pinned.
inline std::vector<double> grad_V(const Contrast& con, const Lattice& lat) {
  check_field(con.free.psi, lat, "grad_V free");
  check_field(con.nudged.psi, lat, "grad_V nudged");
  std::vector<double> g(lat.size());
  if (con.symmetric()) {
    for (int i = 0; i < lat.size(); ++i)
      g[i] = (std::norm(con.nudged.psi[i]) - std::norm(con.nudged_minus.psi[i])) /
             (2.0 * con.beta_used);
  } else {
    for (int i = 0; i < lat.size(); ++i)
      g[i] = (std::norm(con.nudged.psi[i]) - std::norm(con.free.psi[i])) / con.beta_used;
  }
  for (int s : lat.blocked_sites) g[s] = 0.0;
  return g;
}

// g_w[k] = 2 * x_{m(k)} * Im(dpsi_dbeta at input site k).
inline std::vector<double> grad_w(const Contrast& con, const Sample& sample, const System& sys) {
  const Lattice& lat = sys.lattice;
  check_field(con.dpsi_dbeta, lat, "grad_w contrast");
  std::vector<double> g(lat.input_sites.size());
  for (std::size_t k = 0; k < lat.input_sites.size(); ++k) {
    const int site = lat.input_sites[k];
    const int comp = sys.input_map.empty() ? static_cast<int>(k) : sys.input_map[k];
    if (comp < 0 || comp >= static_cast<int>(sample.x.size()))
      throw DimensionError("input_map component out of range in grad_w");
    g[k] = 2.0 * sample.x[comp] * con.dpsi_dbeta[site].imag();
  }
  return g;
}

// Plain SGD step; returns the updated copy.
inline Trainables apply_update(const Trainables& tr, const std::vector<double>& g_V,
                               const std::vector<double>& g_w, const TrainConfig& cfg) {
  if (g_V.size() != tr.potential.size() || g_w.size() != tr.pump_weights.size())
    throw DimensionError("gradient size mismatch in apply_update");
  Trainables out = tr;
  if (cfg.train_V) {
    for (std::size_t i = 0; i < out.potential.size(); ++i) {
      if (!std::isfinite(g_V[i]))
        throw ConfigError("non-finite gradient for V[" + std::to_string(i) + "]");
      out.potential[i] -= cfg.lr_V * g_V[i];
    }
  }
  if (cfg.train_w) {
    for (std::size_t k = 0; k < out.pump_weights.size(); ++k) {
      if (!std::isfinite(g_w[k]))
        throw ConfigError("non-finite gradient for w[" + std::to_string(k) + "]");
      out.pump_weights[k] -= cfg.lr_w * g_w[k];
    }
  }
  return out;
}

inline double sample_cost(CostKind kind, const std::vector<double>& readout,
                          const std::vector<double>& target) {
  return kind == CostKind::Mse ? mse_cost(readout, target) : cce_cost(readout, target);
}

// Run worker(begin, end) over [0, n), optionally split across threads.
// Exceptions from workers are rethrown on the caller thread.
template <class Worker>
inline void run_chunked(Worker&& worker, std::size_t n, int threads) {
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (nt <= 1) {
    worker(std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errs(nt);
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const std::size_t b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) continue;
    pool.emplace_back([&, t, b, e] {
      try {
        worker(b, e);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errs)
    if (err) std::rethrow_exception(err);
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<int>> confusion;   // [true][predicted], classification only
  std::vector<std::vector<double>> readouts; // per sample
  long nonconverged = 0;
};

// Inference: free relaxation only (beta = 0), trainables untouched.
inline EvalResult evaluate(const std::vector<Sample>& samples, const System& sys,
                           const Trainables& tr, const RelaxConfig& relax_cfg, int threads = 1) {
  EvalResult res;
  if (samples.empty()) return res;
  const std::size_t n = samples.size();
  res.readouts.resize(n);
  std::vector<double> losses(n, 0.0);
  std::vector<char> conv(n, 1);
  run_chunked(
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          SteadyState st = free_steady(sys, tr, samples[i].x, relax_cfg);
          conv[i] = st.converged ? 1 : 0;
          res.readouts[i] = output_readout(st.psi, sys.lattice.output_region);
          losses[i] = sample_cost(sys.cost_kind, res.readouts[i], samples[i].target);
        }
      },
      n, threads);
  res.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
  for (char c : conv)
    if (!c) ++res.nonconverged;
  if (sys.cost_kind == CostKind::Cce) {
    const int k = static_cast<int>(sys.lattice.output_region.size());
    res.confusion.assign(k, std::vector<int>(k, 0));
    long correct = 0, labeled = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (samples[i].label < 0) continue;
      const int pred = predict(res.readouts[i]);
      ++labeled;
      if (pred == samples[i].label) ++correct;
      if (samples[i].label < k) ++res.confusion[samples[i].label][pred];
    }
    if (labeled > 0) res.accuracy = static_cast<double>(correct) / static_cast<double>(labeled);
  }
  return res;
}

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

struct TrainResult {
  Trainables trainables;
  std::vector<EpochMetrics> history;
  long nonconverged = 0;
};

// Minibatch SGD with batch-mean gradients. Samples are revisited in a fresh
// seeded shuffle each epoch; gradient reduction follows the shuffled sample
// order, independent of thread count.
inline TrainResult train(const std::vector<Sample>& train_set, const System& sys,
                         const Trainables& init, const TrainConfig& cfg,
                         const std::vector<Sample>& val_set = {},
                         const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  cfg.validate();
  check_trainables(init, sys.lattice);
  if (train_set.empty()) throw ConfigError("empty training set");
  TrainResult res;
  res.trainables = init;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = Rng::derive(cfg.rng_seed, static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::size_t bs = stop - start;
      std::vector<std::vector<double>> gv(bs), gw(bs);
      std::vector<double> bl(bs, 0.0);
      std::vector<long> nc(bs, 0);
      run_chunked(
          [&](std::size_t b, std::size_t e) {
            for (std::size_t j = b; j < e; ++j) {
              const std::size_t id = order[start + j];
              const Sample& s = train_set[id];
              Contrast con;
              try {
                con = run_two_phase(sys, res.trainables, s, cfg);
              } catch (const DivergenceError& err) {
                throw DivergenceError("sample " + std::to_string(id) + ": " + err.what(), err.step);
              }
              if (!con.free.converged) ++nc[j];
              if (!con.nudged.converged) ++nc[j];
              gv[j] = grad_V(con, sys.lattice);
              gw[j] = grad_w(con, s, sys);
              bl[j] = sample_cost(sys.cost_kind,
                                  output_readout(con.free.psi, sys.lattice.output_region), s.target);
            }
          },
          bs, cfg.threads);
      std::vector<double> mean_gv(sys.lattice.size(), 0.0);
      std::vector<double> mean_gw(sys.lattice.input_sites.size(), 0.0);
      for (std::size_t j = 0; j < bs; ++j) {
        for (std::size_t i = 0; i < mean_gv.size(); ++i) mean_gv[i] += gv[j][i];
        for (std::size_t k = 0; k < mean_gw.size(); ++k) mean_gw[k] += gw[j][k];
        loss_sum += bl[j];
        res.nonconverged += nc[j];
      }
      const double inv = 1.0 / static_cast<double>(bs);
      for (double& v : mean_gv) v *= inv;
      for (double& v : mean_gw) v *= inv;
      res.trainables = apply_update(res.trainables, mean_gv, mean_gw, cfg);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(train_set.size());
    if (!val_set.empty()) {
      EvalResult ev = evaluate(val_set, sys, res.trainables, cfg.relax, cfg.threads);
      m.val_loss = ev.loss;
      m.val_accuracy = ev.accuracy;
      res.nonconverged += ev.nonconverged;
    }
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.history.push_back(m);
    if (on_epoch) on_epoch(m);
    if (std::isfinite(cfg.stop_at_train_loss) && m.train_loss <= cfg.stop_at_train_loss) break;
    if (std::isfinite(cfg.stop_at_val_accuracy) && std::isfinite(m.val_accuracy) &&
        m.val_accuracy >= cfg.stop_at_val_accuracy)
      break;
  }
  return res;
}

}  // namespace nep
