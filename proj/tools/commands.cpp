#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "acceptance.hpp"
#include "bnmf/checkpoint.hpp"
#include "bnmf/csv.hpp"
#include "bnmf/dataset.hpp"
#include "bnmf/ensemble.hpp"
#include "bnmf/mean_field.hpp"
#include "bnmf/parallel.hpp"
#include "bnmf/train.hpp"

namespace bnmf::cli {
namespace fs = std::filesystem;

namespace {

template <class T>
void require_nonempty(const std::vector<T>& grid, const char* name) {
  if (grid.empty()) throw UsageError(fmt::format("--{} grid is empty", name));
}

QuadratureRule rule_for(int nodes) {
  if (nodes == 0) return default_rule();
  if (nodes < 2) throw UsageError(fmt::format("--nodes must be >= 2, got {}", nodes));
  return gauss_hermite_rule(nodes);
}

MfParams make_params(double m, double b, double kappa) {
  MfParams p;
  p.sigma_m2 = m;
  p.sigma_b2 = b;
  p.kappa = kappa;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return p;
}

MeanInit mean_init_for(const std::string& name) {
  try {
    return parse_mean_init(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string tag(double v) { return format_double(v); }

void echo_into(CsvWriter& w, const ConfigEcho& echo, const std::vector<std::string>& extra = {}) {
  for (const auto& line : echo) w.comment(line);
  for (const auto& line : extra) w.comment(line);
}

// Writes through a temporary so that an interrupted run never leaves a
// file that --resume would mistake for a finished cell.
void write_atomically(const fs::path& path, const std::function<void(CsvWriter&)>& body) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    CsvWriter w(tmp);
    body(w);
    w.flush();
  }
  fs::rename(tmp, path);
}

void prepare_out(const SharedOptions& shared) { fs::create_directories(shared.out); }

}  // namespace

int cmd_theory(const SharedOptions& shared, const TheoryOptions& opts, const ConfigEcho& echo,
               std::ostream& out) {
  require_nonempty(opts.sigma_m2, "sigma-m2");
  require_nonempty(opts.sigma_b2, "sigma-b2");
  const auto rule = rule_for(opts.nodes);
  std::vector<MfParams> grid;
  for (double m : opts.sigma_m2)
    for (double b : opts.sigma_b2) grid.push_back(make_params(m, b, opts.kappa));

  const fs::path path = fs::path(shared.out) / "theory.csv";
  if (shared.dry_run) {
    fmt::print(out, "theory: {} grid points -> {}\n", grid.size(), path.string());
    for (const auto& p : grid) fmt::print(out, "  sigma_m2={} sigma_b2={}\n", tag(p.sigma_m2), tag(p.sigma_b2));
    return 0;
  }
  prepare_out(shared);
  int failures = 0;
  write_atomically(path, [&](CsvWriter& w) {
    echo_into(w, echo);
    w.header({"sigma_m2", "sigma_b2", "q_star", "c_star", "chi_cstar", "chi1", "xi_q", "xi_c",
              "error"});
    const double nan = std::nan("");
    for (const auto& p : grid) {
      try {
        const auto s = depth_scales(p, rule);
        w.row({p.sigma_m2, p.sigma_b2, s.q_star, s.c_star, s.chi_cstar, s.chi1, s.xi_q, s.xi_c,
               std::string()});
      } catch (const std::exception& e) {
        ++failures;
        w.row({p.sigma_m2, p.sigma_b2, nan, nan, nan, nan, nan, nan, std::string(e.what())});
      }
    }
  });
  fmt::print(out, "wrote {} ({} rows, {} with errors)\n", path.string(), grid.size(), failures);
  return 0;
}

int cmd_propagate(const SharedOptions& shared, const PropagateOptions& opts,
                  const ConfigEcho& echo, std::ostream& out) {
  require_nonempty(opts.sigma_m2, "sigma-m2");
  require_nonempty(opts.sigma_b2, "sigma-b2");
  const auto rule = rule_for(opts.nodes);
  const auto init = mean_init_for(opts.mean_init);

  struct Cell {
    EnsembleConfig config;
    fs::path path;
  };
  std::vector<Cell> cells;
  for (double m : opts.sigma_m2) {
    for (double b : opts.sigma_b2) {
      EnsembleConfig cfg;
      cfg.width = opts.width;
      cfg.depth = opts.depth;
      cfg.n_realizations = opts.realizations;
      cfg.params = make_params(m, b, opts.kappa);
      cfg.mean_init = init;
      cfg.q0_aa = opts.q0_aa;
      cfg.q0_bb = opts.q0_bb;
      cfg.c0_ab = opts.c0;
      cfg.seed = shared.seed;
      cfg.workers = shared.workers;
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      cells.push_back({cfg, fs::path(shared.out) / fmt::format("propagate_m{}_b{}.csv", tag(m), tag(b))});
    }
  }

  if (shared.dry_run) {
    fmt::print(out, "propagate: {} grid points, width {}, depth {}, {} realizations\n", cells.size(),
               opts.width, opts.depth, opts.realizations);
    for (const auto& c : cells)
      fmt::print(out, "  sigma_m2={} sigma_b2={} -> {}{}\n", tag(c.config.params.sigma_m2),
                 tag(c.config.params.sigma_b2), c.path.string(),
                 shared.resume && fs::exists(c.path) ? " (done)" : "");
    return 0;
  }
  prepare_out(shared);
  for (const auto& cell : cells) {
    if (shared.resume && fs::exists(cell.path)) {
      fmt::print(out, "skip {} (exists)\n", cell.path.string());
      continue;
    }
    const auto stats = run_ensemble(cell.config, rule);
    write_atomically(cell.path, [&](CsvWriter& w) {
      echo_into(w, echo,
                {fmt::format("cell.sigma_m2 = {}", tag(cell.config.params.sigma_m2)),
                 fmt::format("cell.sigma_b2 = {}", tag(cell.config.params.sigma_b2))});
      w.header({"layer", "q_theory", "q_emp_mean", "q_emp_std", "c_theory", "c_emp_mean",
                "c_emp_std"});
      for (int l = 0; l <= cell.config.depth; ++l)
        w.row({std::int64_t{l}, stats.theory.q_aa[l], stats.q_aa_mean[l], stats.q_aa_std[l],
               stats.theory.c_ab[l], stats.c_ab_mean[l], stats.c_ab_std[l]});
    });
    fmt::print(out, "wrote {}\n", cell.path.string());
  }
  return 0;
}

int cmd_jacobian(const SharedOptions& shared, const JacobianOptions& opts, const ConfigEcho& echo,
                 std::ostream& out) {
  require_nonempty(opts.widths, "widths");
  const auto rule = rule_for(opts.nodes);
  const auto init = mean_init_for(opts.mean_init);
  const auto p = make_params(opts.sigma_m2, opts.sigma_b2, opts.kappa);
  for (int w : opts.widths)
    if (w < 1) throw UsageError(fmt::format("widths must be positive, got {}", w));
  if (opts.networks < 1) throw UsageError("--networks must be >= 1");

  const fs::path path = fs::path(shared.out) / "jacobian.csv";
  if (shared.dry_run) {
    fmt::print(out, "jacobian: {} widths, {} networks each -> {}\n", opts.widths.size(),
               opts.networks, path.string());
    for (int w : opts.widths) fmt::print(out, "  width={}\n", w);
    return 0;
  }
  prepare_out(shared);
  std::vector<JacobianSweepRow> rows;
  for (int w : opts.widths)
    rows.push_back(jacobian_sweep(p, init, w, opts.networks, opts.probes, shared.seed, shared.workers, rule));
  write_atomically(path, [&](CsvWriter& w) {
    echo_into(w, echo);
    w.header({"width", "chi_theory", "msv_mean", "msv_std", "n_networks", "abs_err_mean"});
    for (const auto& r : rows)
      w.row({std::int64_t{r.width}, r.chi_theory, r.msv_mean, r.msv_std, std::int64_t{r.n_networks},
             r.abs_err_mean});
  });
  fmt::print(out, "wrote {} ({} rows)\n", path.string(), rows.size());
  return 0;
}

namespace {

struct TrainCell {
  TrainConfig config;
  fs::path run_path;
  fs::path checkpoint_path;
};

struct CellSummary {
  double train_acc = std::nan("");
  double test_acc = std::nan("");
  std::string error;
};

std::pair<Dataset, Dataset> load_training_data(const SharedOptions& shared, const TrainOptions& opts) {
  if (opts.dataset == "blobs") {
    return {make_blobs(opts.blob_samples, opts.blob_dim, opts.blob_margin, shared.seed),
            make_blobs(std::max(1, opts.blob_samples / 2), opts.blob_dim, opts.blob_margin,
                       shared.seed + 1)};
  }
  const auto dir = resolve_data_dir(shared.data_dir);
  if (!dir || !mnist_available(*dir))
    throw std::runtime_error(
        dir ? fmt::format("MNIST IDX files not found in {}", dir->string())
            : std::string("no MNIST directory: pass --data-dir or set BNMF_DATA_DIR"));
  auto split = load_mnist(*dir);
  return {subsample(split.train, opts.fraction, shared.seed), std::move(split.test)};
}

CellSummary summary_from_file(const fs::path& path) {
  const auto table = read_csv(path);
  CellSummary s;
  if (table.rows.empty()) return s;
  const auto& last = table.rows.back();
  s.train_acc = std::stod(last.at(table.column_index("train_acc")));
  s.test_acc = std::stod(last.at(table.column_index("test_acc")));
  return s;
}

double xi_c_theory(const TrainConfig& cfg) {
  MfParams p;
  p.sigma_m2 = cfg.sigma_m2;
  p.sigma_b2 = cfg.sigma_b2;
  p.kappa = cfg.activation_gain;
  try {
    return depth_scales(effective_params(p, cfg.mean_init)).xi_c;
  } catch (const ConvergenceError&) {
    return std::nan("");
  }
}

}  // namespace

int cmd_train(const SharedOptions& shared, const TrainOptions& opts, const ConfigEcho& echo,
              std::ostream& out) {
  if (opts.dataset != "mnist" && opts.dataset != "blobs")
    throw UsageError(fmt::format("--dataset must be mnist or blobs, got '{}'", opts.dataset));
  const auto depths = opts.smoke ? std::vector<int>{5, 15, 25} : opts.depths;
  const auto ms = opts.smoke ? std::vector<double>{0.1, 0.5, 0.95} : opts.sigma_m2;
  require_nonempty(depths, "depths");
  require_nonempty(ms, "sigma-m2");
  if (!(opts.fraction > 0.0 && opts.fraction <= 1.0))
    throw UsageError(fmt::format("--fraction must lie in (0, 1], got {}", opts.fraction));

  OptimizerConfig optimizer;
  try {
    optimizer.kind = parse_optimizer(opts.optimizer);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  optimizer.learning_rate = opts.lr;

  std::vector<TrainCell> cells;
  for (int d : depths) {
    for (double m : ms) {
      TrainCell cell;
      auto& cfg = cell.config;
      cfg.depth = d;
      cfg.width = opts.width;
      cfg.sigma_m2 = m;
      cfg.sigma_b2 = opts.sigma_b2;
      cfg.mean_init = mean_init_for(opts.mean_init);
      cfg.activation_gain = opts.activation_gain;
      cfg.optimizer = optimizer;
      cfg.batch_size = opts.batch;
      cfg.epochs = opts.epochs;
      cfg.seed = shared.seed;
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto stem = fmt::format("train_d{}_m{}", d, tag(m));
      cell.run_path = fs::path(shared.out) / (stem + ".csv");
      cell.checkpoint_path = fs::path(shared.out) / (stem + ".bnmf");
      cells.push_back(std::move(cell));
    }
  }
  const fs::path summary_path = fs::path(shared.out) / "train_summary.csv";

  if (shared.dry_run) {
    fmt::print(out, "train: {} cells on {} ({} epochs, width {}) -> {}\n", cells.size(),
               opts.dataset, opts.epochs, opts.width, summary_path.string());
    for (const auto& c : cells)
      fmt::print(out, "  depth={} sigma_m2={} -> {}{}\n", c.config.depth, tag(c.config.sigma_m2),
                 c.run_path.string(), shared.resume && fs::exists(c.run_path) ? " (done)" : "");
    return 0;
  }

  const auto [train_set, test_set] = load_training_data(shared, opts);
  prepare_out(shared);

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (shared.resume && fs::exists(cells[i].run_path))
      fmt::print(out, "skip {} (exists)\n", cells[i].run_path.string());
    else
      pending.push_back(i);
  }

  std::mutex log_mutex;
  const auto fresh = parallel_map(pending.size(), shared.workers, [&](std::size_t k) {
    const auto& cell = cells[pending[k]];
    CellSummary s;
    try {
      const auto result = train(cell.config, train_set, test_set, [&](const EpochMetrics& e) {
        std::lock_guard lock(log_mutex);
        fmt::print(out, "depth {} sigma_m2 {} epoch {}: loss {:.4f} train {:.4f} test {:.4f}\n",
                   cell.config.depth, tag(cell.config.sigma_m2), e.epoch, e.train_loss,
                   e.train_acc, e.test_acc);
      });
      write_atomically(cell.run_path, [&](CsvWriter& w) {
        echo_into(w, echo,
                  {fmt::format("cell.depth = {}", cell.config.depth),
                   fmt::format("cell.sigma_m2 = {}", tag(cell.config.sigma_m2))});
        w.header({"epoch", "train_loss", "train_acc", "test_acc"});
        for (const auto& e : result.history)
          w.row({std::int64_t{e.epoch}, e.train_loss, e.train_acc, e.test_acc});
      });
      if (opts.save_checkpoints) save_checkpoint(cell.checkpoint_path, result.network);
      s.train_acc = result.history.back().train_acc;
      s.test_acc = result.history.back().test_acc;
    } catch (const std::exception& e) {
      s.error = e.what();
      std::lock_guard lock(log_mutex);
      fmt::print(out, "depth {} sigma_m2 {} failed: {}\n", cell.config.depth,
                 tag(cell.config.sigma_m2), e.what());
    }
    return s;
  });

  std::vector<CellSummary> summaries(cells.size());
  for (std::size_t k = 0; k < pending.size(); ++k) summaries[pending[k]] = fresh[k];
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (std::find(pending.begin(), pending.end(), i) == pending.end())
      summaries[i] = summary_from_file(cells[i].run_path);

  int failures = 0;
  write_atomically(summary_path, [&](CsvWriter& w) {
    echo_into(w, echo);
    w.header({"depth", "sigma_m2", "final_train_acc", "final_test_acc", "xi_c_theory", "error"});
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i].config;
      failures += !summaries[i].error.empty();
      w.row({std::int64_t{c.depth}, c.sigma_m2, summaries[i].train_acc, summaries[i].test_acc,
             xi_c_theory(c), summaries[i].error});
    }
  });
  fmt::print(out, "wrote {} ({} cells, {} failed)\n", summary_path.string(), cells.size(), failures);
  return 0;
}

int cmd_verify(const SharedOptions& shared, const VerifyOptions& opts, std::ostream& out) {
  acceptance::Options a;
  a.quadrature_nodes = opts.nodes;
  a.seed = shared.seed;
  a.workers = shared.workers;
  a.data_dir = shared.data_dir;
  a.full_training_grid = opts.full;
  a.only = opts.only;
  if (opts.nodes != 0 && opts.nodes < 2)
    throw UsageError(fmt::format("--nodes must be >= 2, got {}", opts.nodes));
  for (const auto& name : a.only)
    if (std::find(acceptance::check_names().begin(), acceptance::check_names().end(), name) ==
        acceptance::check_names().end())
      throw UsageError("unknown check: " + name);

  if (shared.dry_run) {
    fmt::print(out, "verify: checks");
    for (const auto& name : acceptance::check_names())
      if (a.only.empty() || std::find(a.only.begin(), a.only.end(), name) != a.only.end())
        fmt::print(out, " {}", name);
    fmt::print(out, "\n");
    return 0;
  }
  const auto results = acceptance::run(a, [&](const acceptance::CheckResult& r) {
    fmt::print(out, "{}\n", acceptance::format_line(r));
    out.flush();
  });
  int counts[4] = {0, 0, 0, 0};
  for (const auto& r : results) ++counts[static_cast<int>(r.status)];
  fmt::print(out, "{} passed, {} failed, {} skipped, {} reported\n", counts[0], counts[1],
             counts[2], counts[3]);
  return acceptance::all_passed(results) ? 0 : 1;
}

}  // namespace bnmf::cli
