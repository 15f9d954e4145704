#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nep/checkpoint.hpp"
#include "nep/oracle.hpp"
#include "nep/tasks.hpp"

namespace fs = std::filesystem;

namespace {

using namespace nep;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Shortest round-trip decimal form; keeps artifacts diff-able without
// losing a single bit.
std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

bool is_mnist(const std::string& task) { return task == "mnist5" || task == "mnist10"; }

// Everything a run needs, exactly as given on the command line. Sentinels
// (NaN / -1 / empty) mean "use the task default"; resolve() folds those in.
struct RunConfig {
  std::string task = "xor9";
  std::string images, labels;
  std::vector<int> digits;
  int samples_per_digit = 100;
  int cell_edge = 5;
  int n_components = 25;
  double w_init = kNaN;
  std::string nonlinearity;
  double g = kNaN, gamma = kNaN, v_block = kNaN;
  double beta = 0.01;
  double lr_V = kNaN, lr_w = kNaN;
  int batch = -1;
  int epochs = -1;
  std::string train_flags;
  std::string nudge_eval = "self-consistent";
  std::string contrast = "forward";
  double dt = 0.1;
  long max_steps = 5000;
  double tol = 1e-9;
  double stop_train_loss = kNaN;
  double stop_val_acc = kNaN;
  double v_noise = 0.0;
  std::uint64_t v_noise_seed = 0;
  std::uint64_t seed = 12345;
  int threads = 1;
  std::string out_dir = "run";
};

struct Resolved {
  TaskSpec task;
  TrainConfig tcfg;
  RunConfig cfg;  // sentinel-free copy; this is what gets persisted
};

Resolved resolve(const RunConfig& raw) {
  Resolved r;
  r.cfg = raw;
  RunConfig& c = r.cfg;

  if (is_mnist(c.task)) {
    if (c.images.empty() || c.labels.empty())
      throw ConfigError(c.task + " needs --images and --labels");
    MnistOptions opt;
    if (!c.digits.empty()) {
      opt.digits = c.digits;
    } else if (c.task == "mnist10") {
      opt.digits.resize(10);
      std::iota(opt.digits.begin(), opt.digits.end(), 0);
    }
    opt.cell_edge = c.cell_edge;
    opt.n_components = c.n_components;
    opt.samples_per_digit = c.samples_per_digit;
    opt.seed = c.seed;
    if (std::isfinite(c.w_init)) opt.w_init = c.w_init;
    r.task = build_mnist_task(load_idx(c.images, c.labels), opt);
    c.digits = opt.digits;
    c.w_init = opt.w_init;
  } else {
    const XorVariant variant = c.task == "xor9v"  ? XorVariant::NineVOnly
                               : c.task == "xor7" ? XorVariant::SevenAsym
                                                  : XorVariant::Nine;
    r.task = build_xor_task(variant);
  }
  c.task = r.task.name;

  GpeParams& p = r.task.system.params;
  if (!c.nonlinearity.empty())
    p.nonlinearity = c.nonlinearity == "density" ? Nonlinearity::Density : Nonlinearity::Saturation;
  c.nonlinearity = to_string(p.nonlinearity);
  if (std::isfinite(c.g)) p.g = c.g; else c.g = p.g;
  if (std::isfinite(c.gamma)) p.gamma = c.gamma; else c.gamma = p.gamma;
  if (std::isfinite(c.v_block)) p.v_block = c.v_block; else c.v_block = p.v_block;
  p.validate();

  if (!std::isfinite(c.lr_V)) c.lr_V = r.task.default_lr_V;
  if (!std::isfinite(c.lr_w)) c.lr_w = r.task.default_lr_w;
  if (c.batch < 0) c.batch = r.task.default_batch;
  if (c.epochs < 0) c.epochs = r.task.default_epochs;

  if (c.train_flags.empty()) {
    c.train_flags = r.task.train_V ? (r.task.train_w ? "vw" : "v") : "w";
  } else {
    if (c.train_flags == "on") c.train_flags = "vw";
    if (c.train_flags == "off") c.train_flags = "v";
  }
  if (c.train_flags == "vw") {
    r.task.train_V = true;
    r.task.train_w = true;
  } else if (c.train_flags == "v") {
    r.task.train_V = true;
    r.task.train_w = false;
  } else if (c.train_flags == "w") {
    r.task.train_V = false;
    r.task.train_w = true;
  } else {
    throw ConfigError("train flags must be vw, v, w, on, or off");
  }

  TrainConfig& t = r.tcfg;
  t.beta = c.beta;
  t.lr_V = c.lr_V;
  t.lr_w = c.lr_w;
  t.batch_size = c.batch;
  t.epochs = c.epochs;
  t.train_V = r.task.train_V;
  t.train_w = r.task.train_w;
  if (c.nudge_eval == "self-consistent") t.nudge_eval = NudgeEval::SelfConsistent;
  else if (c.nudge_eval == "frozen") t.nudge_eval = NudgeEval::FrozenAtFree;
  else throw ConfigError("nudge-eval must be self-consistent or frozen");
  if (c.contrast == "forward") t.contrast_scheme = ContrastScheme::Forward;
  else if (c.contrast == "symmetric") t.contrast_scheme = ContrastScheme::Symmetric;
  else throw ConfigError("contrast must be forward or symmetric");
  t.rng_seed = c.seed;
  t.threads = c.threads;
  t.relax = RelaxConfig{c.dt, c.max_steps, c.tol};
  t.stop_at_train_loss = c.stop_train_loss;
  t.stop_at_val_accuracy = c.stop_val_acc;
  t.validate();

  // Frozen random perturbation of the initial potential; drawn once from its
  // own stream so the training shuffle sequence is unaffected.
  if (c.v_noise != 0.0) {
    if (c.v_noise < 0.0) throw ConfigError("--v-noise must be >= 0");
    if (c.v_noise_seed == 0) c.v_noise_seed = c.seed;
    Rng rng = Rng::derive(c.v_noise_seed, 0xb015e);
    for (int i = 0; i < r.task.system.lattice.size(); ++i)
      if (!r.task.system.lattice.blocked(i))
        r.task.init.potential[i] += rng.uniform(-c.v_noise, c.v_noise);
  }
  return r;
}

// key = value lines, option-name keys, so a run can be replayed with
// --config. Digest mode drops machine-local keys (paths, threads).
std::string config_text(const RunConfig& c, bool for_digest) {
  std::ostringstream os;
  auto kv = [&os](const char* k, const std::string& v) { os << k << " = " << v << "\n"; };
  kv("task", c.task);
  if (is_mnist(c.task)) {
    if (!for_digest) {
      kv("images", c.images);
      kv("labels", c.labels);
    }
    std::ostringstream ds;
    for (std::size_t i = 0; i < c.digits.size(); ++i) ds << (i ? " " : "") << c.digits[i];
    kv("digits", ds.str());
    kv("samples-per-digit", std::to_string(c.samples_per_digit));
    kv("cell-edge", std::to_string(c.cell_edge));
    kv("n-components", std::to_string(c.n_components));
    kv("w-init", fmt(c.w_init));
  }
  kv("nonlinearity", c.nonlinearity);
  kv("g", fmt(c.g));
  kv("gamma", fmt(c.gamma));
  kv("v-block", fmt(c.v_block));
  kv("beta", fmt(c.beta));
  kv("lr-v", fmt(c.lr_V));
  kv("lr-w", fmt(c.lr_w));
  kv("batch", std::to_string(c.batch));
  kv("epochs", std::to_string(c.epochs));
  kv("train", c.train_flags);
  kv("nudge-eval", c.nudge_eval);
  kv("contrast", c.contrast);
  kv("dt", fmt(c.dt));
  kv("max-steps", std::to_string(c.max_steps));
  kv("tol", fmt(c.tol));
  if (std::isfinite(c.stop_train_loss)) kv("stop-train-loss", fmt(c.stop_train_loss));
  if (std::isfinite(c.stop_val_acc)) kv("stop-val-acc", fmt(c.stop_val_acc));
  if (c.v_noise != 0.0) {
    kv("v-noise", fmt(c.v_noise));
    kv("v-noise-seed", std::to_string(c.v_noise_seed));
  }
  kv("seed", std::to_string(c.seed));
  if (!for_digest) {
    kv("threads", std::to_string(c.threads));
    kv("out-dir", c.out_dir);
  }
  return os.str();
}

std::string config_digest(const RunConfig& c) { return fnv1a_hex(config_text(c, true)); }

void write_config(const RunConfig& c, const std::string& digest) {
  const fs::path path = fs::path(c.out_dir) / "config.toml";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# nep resolved config (digest " << digest << ")\n" << config_text(c, false);
}

struct TrainOutcome {
  bool ok = false;
  std::string error;
  std::vector<EpochMetrics> history;
  long nonconverged = 0;
  double best_val_acc = kNaN;
};

// Shared by train and sweep: full run into cfg.out_dir with streamed
// metrics, so a failed or killed run still leaves a parseable prefix.
TrainOutcome do_train(const RunConfig& raw) {
  Resolved r = resolve(raw);
  fs::create_directories(r.cfg.out_dir);
  const std::string digest = config_digest(r.cfg);
  write_config(r.cfg, digest);
  if (relax_budget_warning(r.tcfg.relax, r.task.system.params.gamma))
    std::cerr << "warning: relaxation budget is under ten dissipation times\n";

  const fs::path dir(r.cfg.out_dir);
  std::ofstream metrics(dir / "metrics.csv");
  if (!metrics) throw Error("cannot write " + (dir / "metrics.csv").string());
  metrics << "epoch,train_loss,val_loss,val_accuracy,wall_time\n" << std::flush;

  TrainOutcome out;
  TrainResult res;
  try {
    res = train(r.task.train, r.task.system, r.task.init, r.tcfg, r.task.val,
                [&](const EpochMetrics& m) {
                  out.history.push_back(m);
                  metrics << m.epoch << ',' << fmt(m.train_loss) << ',' << fmt(m.val_loss) << ','
                          << fmt(m.val_accuracy) << ',' << fmt(m.wall_seconds) << '\n'
                          << std::flush;
                });
    out.ok = true;
    out.nonconverged = res.nonconverged;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  for (const EpochMetrics& m : out.history)
    if (std::isfinite(m.val_accuracy) && !(m.val_accuracy <= out.best_val_acc))
      out.best_val_acc = m.val_accuracy;

  if (out.ok) {
    Checkpoint ck;
    ck.epoch = static_cast<int>(out.history.size());
    ck.config_digest = digest;
    ck.rng_state = std::to_string(r.cfg.seed);
    ck.trainables = res.trainables;
    if (r.task.has_pca) {
      save_pca(r.task.pca, (dir / "pca.txt").string());
      ck.pca_ref = "pca.txt";
    }
    save_checkpoint(ck, (dir / "checkpoint.txt").string());
  }

  std::ofstream rep(dir / "report.txt");
  rep << "command train\n";
  rep << "status " << (out.ok ? "ok" : "failed") << "\n";
  if (!out.ok) rep << "error " << out.error << "\n";
  rep << "task " << r.cfg.task << "\n";
  rep << "digest " << digest << "\n";
  rep << "epochs_run " << out.history.size() << "\n";
  if (!out.history.empty()) {
    const EpochMetrics& last = out.history.back();
    rep << "final_train_loss " << fmt(last.train_loss) << "\n";
    rep << "final_val_loss " << fmt(last.val_loss) << "\n";
    rep << "final_val_accuracy " << fmt(last.val_accuracy) << "\n";
    rep << "best_val_accuracy " << fmt(out.best_val_acc) << "\n";
    rep << "wall_seconds " << fmt(last.wall_seconds) << "\n";
  }
  rep << "nonconverged_relaxations " << out.nonconverged << "\n";
  return out;
}

int cmd_train(const RunConfig& raw) {
  TrainOutcome o = do_train(raw);
  if (!o.ok) {
    std::cerr << "training failed: " << o.error << "\n";
    return 3;
  }
  std::cout << "train " << raw.task << ": epochs=" << o.history.size();
  if (!o.history.empty()) {
    std::cout << " train_loss=" << fmt(o.history.back().train_loss);
    if (std::isfinite(o.history.back().val_accuracy))
      std::cout << " val_accuracy=" << fmt(o.history.back().val_accuracy);
  }
  std::cout << " out=" << raw.out_dir << "\n";
  return 0;
}

int cmd_eval(const RunConfig& raw, const std::string& ck_path, const std::string& split,
             bool force) {
  Resolved r = resolve(raw);
  Checkpoint ck = load_checkpoint(ck_path);
  const std::string digest = config_digest(r.cfg);
  if (ck.config_digest != digest) {
    if (!force) {
      std::cerr << "error: checkpoint digest " << ck.config_digest
                << " does not match resolved config digest " << digest
                << "; the checkpoint was trained under a different configuration"
                << " (pass --force to evaluate anyway)\n";
      return 2;
    }
    std::cerr << "warning: digest mismatch overridden by --force\n";
  }
  check_trainables(ck.trainables, r.task.system.lattice);

  const std::vector<Sample>& samples = split == "train" ? r.task.train
                                       : split == "val" ? r.task.val
                                                        : r.task.test;
  if (samples.empty()) throw ConfigError("split '" + split + "' is empty for task " + r.cfg.task);
  EvalResult ev = evaluate(samples, r.task.system, ck.trainables, r.tcfg.relax, r.tcfg.threads);

  fs::create_directories(r.cfg.out_dir);
  write_config(r.cfg, digest);
  const fs::path dir(r.cfg.out_dir);
  const int k = static_cast<int>(r.task.system.lattice.output_region.size());

  {
    std::ofstream rc(dir / "readouts.csv");
    rc << "index,label";
    for (int j = 0; j < k; ++j) rc << ",readout" << j;
    for (int j = 0; j < k; ++j) rc << ",target" << j;
    rc << "\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      rc << i << ',' << samples[i].label;
      for (int j = 0; j < k; ++j) rc << ',' << fmt(ev.readouts[i][j]);
      for (int j = 0; j < k; ++j) rc << ',' << fmt(samples[i].target[j]);
      rc << "\n";
    }
  }

  if (r.task.system.cost_kind == CostKind::Cce) {
    std::vector<int> cls(r.cfg.digits);
    if (static_cast<int>(cls.size()) != k) {
      cls.resize(k);
      std::iota(cls.begin(), cls.end(), 0);
    }
    std::ofstream cc(dir / "confusion.csv");
    cc << "true";
    for (int j = 0; j < k; ++j) cc << ",pred" << cls[j];
    cc << "\n";
    for (int i = 0; i < k; ++i) {
      cc << cls[i];
      for (int j = 0; j < k; ++j) cc << ',' << ev.confusion[i][j];
      cc << "\n";
    }
  }

  std::ofstream rep(dir / "report.txt");
  rep << "command eval\n";
  rep << "status ok\n";
  rep << "task " << r.cfg.task << "\n";
  rep << "split " << split << "\n";
  rep << "checkpoint " << ck_path << "\n";
  rep << "digest " << digest << "\n";
  rep << "samples " << samples.size() << "\n";
  rep << "loss " << fmt(ev.loss) << "\n";
  rep << "accuracy " << fmt(ev.accuracy) << "\n";
  rep << "nonconverged_relaxations " << ev.nonconverged << "\n";
  if (r.task.system.cost_kind == CostKind::Mse) {
    rep << "outputs:\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      rep << "  x=(";
      for (std::size_t j = 0; j < samples[i].x.size(); ++j)
        rep << (j ? " " : "") << fmt(samples[i].x[j]);
      rep << ") readout=(";
      for (int j = 0; j < k; ++j) rep << (j ? " " : "") << fmt(ev.readouts[i][j]);
      rep << ") target=(";
      for (int j = 0; j < k; ++j) rep << (j ? " " : "") << fmt(samples[i].target[j]);
      rep << ")\n";
    }
  }

  std::cout << "eval " << r.cfg.task << " split=" << split << " n=" << samples.size()
            << " loss=" << fmt(ev.loss);
  if (std::isfinite(ev.accuracy)) std::cout << " accuracy=" << fmt(ev.accuracy);
  std::cout << "\n";
  return 0;
}

int cmd_gradcheck(const RunConfig& raw, double eps, int max_params, int gc_samples,
                  double min_cosine, double v_random) {
  Resolved r = resolve(raw);
  if (v_random > 0.0) {
    Rng rng = Rng::derive(r.cfg.seed, 0x5eed);
    for (int i = 0; i < r.task.system.lattice.size(); ++i)
      if (!r.task.system.lattice.blocked(i))
        r.task.init.potential[i] = rng.uniform(-v_random, v_random);
  }
  const std::size_t n =
      std::min<std::size_t>(r.task.train.size(), static_cast<std::size_t>(std::max(1, gc_samples)));
  const std::vector<Sample> samples(r.task.train.begin(), r.task.train.begin() + n);

  OracleConfig oc;
  oc.eps_V = oc.eps_w = eps;
  oc.max_params = max_params;
  oc.subset_seed = r.cfg.seed;
  const OracleReport report = compare_nep_to_oracle(r.task.system, r.task.init, samples, r.tcfg, oc);

  // Probe the near-equilibrium conditions at the most strongly pumped
  // sample, where the nonlinearity is actually engaged.
  std::size_t probe = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double a = 0.0;
    for (double x : samples[i].x) a += std::abs(x);
    if (a > best) { best = a; probe = i; }
  }
  const SteadyState st = free_steady(r.task.system, r.task.init, samples[probe].x, oc.relax);
  const auto [sym, asym] = jacobian_condition_residual(st.psi, r.task.system.params, r.task.init,
                                                       r.task.system.lattice);

  const bool pass = report.cosine_similarity >= min_cosine && sym <= 1e-8;

  fs::create_directories(r.cfg.out_dir);
  const std::string digest = config_digest(r.cfg);
  write_config(r.cfg, digest);
  const fs::path dir(r.cfg.out_dir);
  {
    std::ofstream gc(dir / "gradcheck.csv");
    gc << "param,nep_grad,fd_grad\n";
    for (const OracleRow& row : report.rows)
      gc << row.name << ',' << fmt(row.nep_grad) << ',' << fmt(row.fd_grad) << "\n";
  }
  std::ofstream rep(dir / "report.txt");
  rep << "command gradcheck\n";
  rep << "status " << (pass ? "ok" : "failed") << "\n";
  rep << "task " << r.cfg.task << "\n";
  rep << "digest " << digest << "\n";
  rep << "samples " << samples.size() << "\n";
  rep << "params_compared " << report.rows.size() << "\n";
  rep << "cosine_similarity " << fmt(report.cosine_similarity) << "\n";
  rep << "max_abs_err " << fmt(report.max_abs_err) << "\n";
  rep << "rel_err_l2 " << fmt(report.rel_err_l2) << "\n";
  rep << "jacobian_sym_residual " << fmt(sym) << "\n";
  rep << "jacobian_asym_residual " << fmt(asym) << "\n";
  rep << "min_cosine " << fmt(min_cosine) << "\n";

  std::printf("%-8s %22s %22s\n", "param", "nep_grad", "fd_grad");
  for (const OracleRow& row : report.rows)
    std::printf("%-8s %22.14e %22.14e\n", row.name.c_str(), row.nep_grad, row.fd_grad);
  std::printf("cosine_similarity %.12f (threshold %.3f)\n", report.cosine_similarity, min_cosine);
  std::printf("max_abs_err %.6e  rel_err_l2 %.6e\n", report.max_abs_err, report.rel_err_l2);
  std::printf("jacobian sym %.3e  asym %.3e  (gamma %s)\n", sym, asym,
              fmt(r.task.system.params.gamma).c_str());
  std::printf("gradcheck %s\n", pass ? "ok" : "FAILED");
  return pass ? 0 : 4;
}

void apply_sweep_value(RunConfig& c, const std::string& param, const std::string& v) {
  if (param == "train_flags") {
    c.train_flags = v;
    return;
  }
  double x = 0.0;
  std::size_t pos = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size()) throw ConfigError("bad numeric value '" + v + "' for sweep over " + param);
  if (param == "g") c.g = x;
  else if (param == "beta") c.beta = x;
  else if (param == "lr") { c.lr_V = x; c.lr_w = x; }
  else throw ConfigError("sweep parameter must be g, beta, lr, or train_flags");
}

int cmd_sweep(const RunConfig& raw, const std::string& param,
              const std::vector<std::string>& values) {
  if (values.empty()) {
    std::cout << "sweep: empty value list; nothing to do\n";
    return 0;
  }
  fs::create_directories(raw.out_dir);

  struct Row {
    std::string value;
    std::string status;
    TrainOutcome o;
  };
  std::vector<Row> rows;
  for (const std::string& v : values) {
    Row row;
    row.value = v;
    try {
      RunConfig sub = raw;
      apply_sweep_value(sub, param, v);
      sub.out_dir = (fs::path(raw.out_dir) / (param + "_" + v)).string();
      row.o = do_train(sub);
      row.status = row.o.ok ? "ok" : "failed";
      if (!row.o.ok) row.o.error = row.o.error.empty() ? "training failed" : row.o.error;
    } catch (const std::exception& e) {
      row.status = "failed";
      row.o.error = e.what();
    }
    if (row.status == "failed")
      std::cerr << "sweep " << param << "=" << v << " failed: " << row.o.error << "\n";
    rows.push_back(std::move(row));
  }

  const fs::path dir(raw.out_dir);
  std::ofstream sc(dir / "sweep.csv");
  sc << "param,value,status,epochs,final_train_loss,final_val_loss,final_val_accuracy,"
        "best_val_accuracy\n";
  for (const Row& row : rows) {
    sc << param << ',' << row.value << ',' << row.status << ',' << row.o.history.size();
    if (!row.o.history.empty()) {
      const EpochMetrics& last = row.o.history.back();
      sc << ',' << fmt(last.train_loss) << ',' << fmt(last.val_loss) << ','
         << fmt(last.val_accuracy) << ',' << fmt(row.o.best_val_acc);
    } else {
      sc << ",nan,nan,nan,nan";
    }
    sc << "\n";
  }

  std::ofstream rep(dir / "report.txt");
  rep << "command sweep\n";
  rep << "param " << param << "\n";
  rep << "runs " << rows.size() << "\n";
  std::printf("%-12s %-10s %-7s %7s %16s %16s\n", "param", "value", "status", "epochs",
              "final_train_loss", "final_val_acc");
  for (const Row& row : rows) {
    const double tl = row.o.history.empty() ? kNaN : row.o.history.back().train_loss;
    const double va = row.o.history.empty() ? kNaN : row.o.history.back().val_accuracy;
    std::printf("%-12s %-10s %-7s %7zu %16.8f %16.8f\n", param.c_str(), row.value.c_str(),
                row.status.c_str(), row.o.history.size(), tl, va);
    rep << param << "=" << row.value << " status=" << row.status
        << " epochs=" << row.o.history.size() << " final_train_loss=" << fmt(tl)
        << " final_val_accuracy=" << fmt(va) << "\n";
  }
  return 0;
}

// Common options live on the root app; subcommands reach them through
// fallthrough. Config files are top-level key = value, matching these names,
// and never override values given on the command line.
void add_common(CLI::App* s, RunConfig& c) {
  s->set_config("--config", "", "read options from a resolved config file");
  s->add_option("--task", c.task, "task: xor9, xor9v, xor7, mnist5, mnist10")
      ->check(CLI::IsMember({"xor9", "xor9v", "xor7", "mnist5", "mnist10"}))
      ->capture_default_str();
  s->add_option("--images", c.images, "idx image file (mnist tasks)")->envname("NEP_IMAGES");
  s->add_option("--labels", c.labels, "idx label file (mnist tasks)")->envname("NEP_LABELS");
  s->add_option("--digits", c.digits, "digit classes (mnist tasks)");
  s->add_option("--samples-per-digit", c.samples_per_digit, "training samples per class")
      ->capture_default_str();
  s->add_option("--cell-edge", c.cell_edge, "cell side length")->capture_default_str();
  s->add_option("--n-components", c.n_components, "pca components")->capture_default_str();
  s->add_option("--w-init", c.w_init, "uniform pump-weight init (mnist tasks)");
  s->add_option("--nonlinearity", c.nonlinearity, "density or saturation")
      ->check(CLI::IsMember({"density", "saturation"}));
  s->add_option("--g", c.g, "nonlinearity strength");
  s->add_option("--gamma", c.gamma, "dissipation rate");
  s->add_option("--v-block", c.v_block, "barrier potential");
  s->add_option("--beta", c.beta, "nudge strength")->capture_default_str();
  s->add_option("--lr-v", c.lr_V, "potential learning rate");
  s->add_option("--lr-w", c.lr_w, "pump-weight learning rate");
  s->add_option("--batch", c.batch, "minibatch size");
  s->add_option("--epochs", c.epochs, "training epochs");
  s->add_option("--train", c.train_flags, "trainables: vw, v, w (aliases on=vw, off=v)")
      ->check(CLI::IsMember({"vw", "v", "w", "on", "off"}));
  s->add_option("--nudge-eval", c.nudge_eval, "self-consistent or frozen")
      ->check(CLI::IsMember({"self-consistent", "frozen"}))
      ->capture_default_str();
  s->add_option("--contrast", c.contrast, "forward or symmetric")
      ->check(CLI::IsMember({"forward", "symmetric"}))
      ->capture_default_str();
  s->add_option("--dt", c.dt, "rk4 step")->capture_default_str();
  s->add_option("--max-steps", c.max_steps, "relaxation step budget")->capture_default_str();
  s->add_option("--tol", c.tol, "steady-state residual tolerance")->capture_default_str();
  s->add_option("--stop-train-loss", c.stop_train_loss, "stop once train loss reaches this");
  s->add_option("--stop-val-acc", c.stop_val_acc, "stop once val accuracy reaches this");
  s->add_option("--v-noise", c.v_noise, "frozen random potential noise amplitude")
      ->capture_default_str();
  s->add_option("--v-noise-seed", c.v_noise_seed, "noise stream seed (0 = --seed)");
  s->add_option("--seed", c.seed, "run seed")->capture_default_str()->envname("NEP_SEED");
  s->add_option("--threads", c.threads, "worker threads")
      ->capture_default_str()
      ->envname("NEP_THREADS");
  s->add_option("--out-dir", c.out_dir, "artifact directory")
      ->capture_default_str()
      ->envname("NEP_OUT_DIR");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"near-equilibrium propagation on driven-dissipative lattices"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string ck_path, split = "test";
  bool force = false;
  double eps = 1e-4, min_cosine = 0.9, v_random = 0.0;
  int max_params = 0, gc_samples = 3;
  std::string sw_param;
  std::vector<std::string> sw_values;

  add_common(&app, cfg);
  CLI::App* tr_cmd = app.add_subcommand("train", "train a task, write metrics and a checkpoint");
  CLI::App* ev_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a data split");
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "compare contrast gradients to the oracle");
  CLI::App* sw_cmd = app.add_subcommand("sweep", "train once per parameter value and compare");
  for (CLI::App* s : {tr_cmd, ev_cmd, gc_cmd, sw_cmd}) s->fallthrough();

  ev_cmd->add_option("--checkpoint", ck_path, "checkpoint file from train")->required();
  ev_cmd->add_option("--split", split, "train, val, or test")
      ->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  ev_cmd->add_flag("--force", force, "evaluate despite config digest mismatch");

  gc_cmd->add_option("--eps", eps, "finite-difference step")->capture_default_str();
  gc_cmd->add_option("--gc-samples", gc_samples, "training samples to average over")
      ->capture_default_str();
  gc_cmd->add_option("--max-params", max_params, "seeded parameter subset size (0 = all)")
      ->capture_default_str();
  gc_cmd->add_option("--min-cosine", min_cosine, "pass threshold on cosine similarity")
      ->capture_default_str();
  gc_cmd->add_option("--v-random", v_random, "draw V uniform in [-a, a] instead of task init")
      ->capture_default_str();

  sw_cmd->add_option("--param", sw_param, "g, beta, lr, or train_flags")
      ->required()
      ->check(CLI::IsMember({"g", "beta", "lr", "train_flags"}));
  sw_cmd->add_option("--values", sw_values, "one sub-run per value");

  CLI11_PARSE(app, argc, argv);

  try {
    if (tr_cmd->parsed()) return cmd_train(cfg);
    if (ev_cmd->parsed()) return cmd_eval(cfg, ck_path, split, force);
    if (gc_cmd->parsed()) return cmd_gradcheck(cfg, eps, max_params, gc_samples, min_cosine, v_random);
    return cmd_sweep(cfg, sw_param, sw_values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
