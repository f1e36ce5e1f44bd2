#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/core.h>

#include "bnmf/dataset.hpp"
#include "bnmf/ensemble.hpp"
#include "bnmf/mean_field.hpp"
#include "bnmf/parallel.hpp"
#include "bnmf/quadrature.hpp"
#include "bnmf/rng.hpp"
#include "bnmf/surrogate.hpp"
#include "bnmf/train.hpp"

namespace bnmf::acceptance {
namespace {

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Status::kPass : Status::kFail, std::move(detail)};
}

MfParams params(double m, double b) {
  MfParams p;
  p.sigma_m2 = m;
  p.sigma_b2 = b;
  return p;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

class Context {
 public:
  explicit Context(const Options& options)
      : options_(options),
        rule_(options.quadrature_nodes > 0 ? gauss_hermite_rule(options.quadrature_nodes)
                                           : default_rule()) {}

  const Options& options() const { return options_; }
  const QuadratureRule& rule() const { return rule_; }

 private:
  Options options_;
  QuadratureRule rule_;
};

// Doubling the node count must not move any theory quantity by 1e-8.
Outcome quadrature_consistency(const Context& ctx) {
  const auto& rule = ctx.rule();
  const auto fine = gauss_hermite_rule(2 * static_cast<int>(rule.size()));
  double worst = 0.0;
  std::string where;
  const auto track = [&](double a, double b, std::string label) {
    const double d = std::isfinite(a) && std::isfinite(b) ? std::abs(a - b) : kInfinity;
    if (d > worst || (std::isnan(d) && where.empty())) {
      worst = d;
      where = std::move(label);
    }
  };
  for (double m : {0.1, 0.5, 0.9, 0.99}) {
    for (double b : {1e-5, 1e-3, 1e-1}) {
      const auto p = params(m, b);
      const auto tag = [&](const char* what) { return fmt::format("{} at ({}, {})", what, m, b); };
      double q = 0.0;
      try {
        q = fixed_point_q(p, rule);
        track(q, fixed_point_q(p, fine), tag("q*"));
      } catch (const ConvergenceError& e) {
        return {Status::kFail, fmt::format("fixed point failed at ({}, {}): {}", m, b, e.what())};
      }
      for (double qq : {0.1, 1.0, 10.0}) track(e_phi2(qq, p, rule), e_phi2(qq, p, fine), tag("E[psi^2]"));
      track(variance_map(1.0, p, rule), variance_map(1.0, p, fine), tag("variance_map"));
      track(correlation_map(0.3, q, p, rule), correlation_map(0.3, q, p, fine), tag("correlation_map"));
      track(chi(1.0, q, p, rule), chi(1.0, q, p, fine), tag("chi(1)"));
      track(chi(0.5, q, p, rule), chi(0.5, q, p, fine), tag("chi(0.5)"));
      track(chi1_variance_slope(q, p, rule), chi1_variance_slope(q, p, fine), tag("variance slope"));
    }
  }
  return pass_if(worst < 1e-8, fmt::format("{} vs {} nodes: max change {:.3g} ({}), expected < 1e-8",
                                           rule.size(), fine.size(), worst, where));
}

Outcome theory_simulation_agreement(const Context& ctx) {
  bool ok = true;
  std::string detail;
  for (double m : {0.2, 0.5, 0.99}) {
    EnsembleConfig cfg;
    cfg.width = 1000;
    cfg.depth = 20;
    cfg.n_realizations = 50;
    cfg.params = params(m, 0.001);
    cfg.seed = ctx.options().seed;
    cfg.workers = ctx.options().workers;
    const auto stats = run_ensemble(cfg, ctx.rule());

    double worst = 0.0;
    std::string where;
    const auto score = [&](double mean, double std, double theory, int layer, const char* what) {
      const double se = stats.standard_error(std);
      const double diff = std::abs(mean - theory);
      const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : kInfinity);
      if (!(z <= worst)) {
        worst = z;
        where = fmt::format("{} layer {}", what, layer);
      }
    };
    for (int l = 1; l <= cfg.depth; ++l) {
      score(stats.q_aa_mean[l], stats.q_aa_std[l], stats.theory.q_aa[l], l, "q_aa");
      score(stats.q_bb_mean[l], stats.q_bb_std[l], stats.theory.q_bb[l], l, "q_bb");
      score(stats.c_ab_mean[l], stats.c_ab_std[l], stats.theory.c_ab[l], l, "c_ab");
    }
    ok = ok && worst <= 2.0;
    detail += fmt::format("{}sigma_m2={}: max |emp-theory|/SE {:.2f} ({})", detail.empty() ? "" : "; ",
                          m, worst, where);
  }
  return pass_if(ok, detail + "; expected <= 2");
}

Outcome fixed_point_identity(const Context& ctx) {
  double worst = 0.0;
  std::string where;
  for (double m : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (double b : {1e-5, 1e-3, 1e-2, 1e-1}) {
      const auto p = params(m, b);
      const double q = fixed_point_q(p, ctx.rule());
      const double d = std::abs(correlation_map(1.0, q, p, ctx.rule()) - 1.0);
      if (!(d <= worst)) {
        worst = d;
        where = fmt::format("({}, {})", m, b);
      }
    }
  }
  return pass_if(worst < 1e-9,
                 fmt::format("max |c(1) - 1| {:.3g} at {}, expected < 1e-9", worst, where));
}

Outcome depth_scale_divergence(const Context& ctx) {
  const std::vector<double> ms{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99};
  bool ok = true;
  double max_chi1 = 0.0;
  std::string detail;
  for (double b : {1e-5, 1e-3, 1e-1}) {
    double prev = -1.0;
    std::string problem;
    for (double m : ms) {
      const auto s = depth_scales(params(m, b), ctx.rule());
      max_chi1 = std::max(max_chi1, s.chi1);
      if (!std::isfinite(s.xi_c))
        problem = fmt::format("xi_c infinite at sigma_m2={}", m);
      else if (!(s.xi_c > prev))
        problem = fmt::format("xi_c not increasing at sigma_m2={} ({:.4g} <= {:.4g})", m, s.xi_c, prev);
      if (!problem.empty()) break;
      prev = s.xi_c;
    }
    if (!problem.empty()) {
      ok = false;
      detail += fmt::format("sigma_b2={}: {}; ", b, problem);
    } else {
      detail += fmt::format("sigma_b2={}: xi_c(0.99)={:.4g}; ", b, prev);
    }
  }
  ok = ok && max_chi1 < 1.0;
  return pass_if(ok, detail + fmt::format("max chi(1) {:.6f}, expected < 1", max_chi1));
}

Outcome chi_consistency(const Context& ctx) {
  const double h = 1e-5;
  double worst = 0.0;
  std::string where;
  int count = 0;
  for (double b : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
    for (double m : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99}) {
      const auto p = params(m, b);
      const double q = fixed_point_q(p, ctx.rule());
      for (int k = 0; k < 10; ++k) {
        const double c = -0.9 + 0.2 * k;
        const double fd = (correlation_map(c + h, q, p, ctx.rule()) -
                           correlation_map(c - h, q, p, ctx.rule())) /
                          (2 * h);
        const double e = rel_err(chi(c, q, p, ctx.rule()), fd);
        ++count;
        if (!(e <= worst)) {
          worst = e;
          where = fmt::format("c={:.1f}, sigma_m2={}, sigma_b2={}", c, m, b);
        }
      }
    }
  }
  return pass_if(worst < 1e-4, fmt::format("{} points, max relative error {:.3g} at {}, expected < 1e-4",
                                           count, worst, where));
}

Outcome convergence_rate(const Context& ctx) {
  bool ok = true;
  std::string detail;
  for (double m : {0.2, 0.5}) {
    const auto p = params(m, 0.001);
    const auto s = depth_scales(p, ctx.rule());
    std::vector<double> ell, log_err;
    double q = s.q_star * 1.05;
    for (int l = 0; l < 60; ++l) {
      const double e = std::abs(q - s.q_star);
      if (e < 1e-11 * s.q_star) break;
      if (l >= 2) {
        ell.push_back(l);
        log_err.push_back(std::log(e));
      }
      q = variance_map(q, p, ctx.rule());
    }
    if (ell.size() < 3) {
      ok = false;
      detail += fmt::format("sigma_m2={}: too few points to fit; ", m);
      continue;
    }
    const double n = static_cast<double>(ell.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < ell.size(); ++i) mx += ell[i], my += log_err[i];
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ell.size(); ++i)
      sxy += (ell[i] - mx) * (log_err[i] - my), sxx += (ell[i] - mx) * (ell[i] - mx);
    const double slope = sxy / sxx;
    const double e = rel_err(slope, -1.0 / s.xi_q);
    ok = ok && e < 0.05;
    detail += fmt::format("sigma_m2={}: slope {:.5f} vs -1/xi_q {:.5f} ({:.2g} rel); ", m, slope,
                          -1.0 / s.xi_q, e);
  }
  return pass_if(ok, detail + "expected < 5%");
}

Outcome jacobian_msv_check(const Context& ctx) {
  const auto seed = ctx.options().seed;
  // Part one: analytic Jacobian against central differences.
  double worst = 0.0;
  for (int instance = 0; instance < 10; ++instance) {
    EnsembleConfig cfg;
    cfg.width = 20;
    cfg.depth = 2;
    cfg.n_realizations = 10;
    cfg.params = params(instance % 2 ? 0.9 : 0.4, 0.01);
    cfg.mean_init = instance % 3 ? MeanInit::kSymmetricBernoulli : MeanInit::kClippedGaussian;
    cfg.seed = seed;
    const auto net = sample_network(cfg, instance);
    PhiloxEngine rng(seed, derive_stream({0x4a4143u, static_cast<std::uint64_t>(instance)}));
    Eigen::VectorXd h(cfg.width);
    for (int i = 0; i < cfg.width; ++i) h(i) = 1.3 * rng.normal();
    const Eigen::MatrixXd jac = single_layer_jacobian(net, 1, h);
    const double eps = 1e-6;
    for (int j = 0; j < cfg.width; ++j) {
      Eigen::VectorXd up = h, down = h;
      up(j) += eps;
      down(j) -= eps;
      const Eigen::VectorXd col =
          (hidden_layer_fields(net, 1, up) - hidden_layer_fields(net, 1, down)) / (2 * eps);
      for (int i = 0; i < cfg.width; ++i)
        worst = std::max(worst, std::abs(jac(i, j) - col(i)) / std::max(std::abs(col(i)), 1e-6));
    }
  }
  const bool fd_ok = worst < 1e-5;

  // Part two: |MSV - chi| shrinks with width.
  const auto p = params(0.5, 0.001);
  std::vector<double> errors;
  std::string series;
  for (int width : {50, 100, 200, 400, 800}) {
    const auto row = jacobian_sweep(p, MeanInit::kSymmetricBernoulli, width, 20, 0, seed,
                                    ctx.options().workers, ctx.rule());
    errors.push_back(row.abs_err_mean);
    series += fmt::format("{}{}:{:.3g}", series.empty() ? "" : " ", width, row.abs_err_mean);
  }
  int inversions = 0;
  for (std::size_t i = 1; i < errors.size(); ++i) inversions += errors[i] > errors[i - 1];
  const bool msv_ok = inversions <= 1;
  return pass_if(fd_ok && msv_ok,
                 fmt::format("max FD relative error {:.3g} (expected < 1e-5); |MSV-chi| by width "
                             "[{}], {} inversion(s) (expected <= 1)",
                             worst, series, inversions));
}

Outcome gradient_exactness(const Context& ctx) {
  const auto seed = ctx.options().seed;
  double worst = 0.0;
  double weakest_ablation = kInfinity;
  std::string worst_where, ablation_where;
  const int in = 6, classes = 3, batch = 7;
  PhiloxEngine rng(seed, derive_stream({0x475244u}));
  Eigen::MatrixXd x(in, batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * rng.uniform() - 1.0;
  std::vector<int> y(batch);
  for (int& v : y) v = static_cast<int>(rng.below(classes));

  LossOptions ablated;
  ablated.variance_path = false;
  for (int depth : {1, 2, 4}) {
    for (int width : {4, 8, 16}) {
      for (auto init : {MeanInit::kSymmetricBernoulli, MeanInit::kClippedGaussian}) {
        std::vector<int> widths{in};
        widths.insert(widths.end(), depth, width);
        widths.push_back(classes);
        const auto net = init_network(widths, 0.7, 0.05, init, seed + depth * 100 + width);
        const auto label = fmt::format("depth {} width {} {}", depth, width, to_string(init));
        const auto full = gradcheck(net, x, y, 1e-5, 1e-4);
        if (!(full.max_discrepancy <= worst)) {
          worst = full.max_discrepancy;
          worst_where = label;
        }
        const auto cut = gradcheck(net, x, y, 1e-5, 1e-4, ablated);
        if (cut.max_discrepancy < weakest_ablation) {
          weakest_ablation = cut.max_discrepancy;
          ablation_where = label;
        }
      }
    }
  }
  return pass_if(worst < 1e-4 && weakest_ablation > 1e-2,
                 fmt::format("max discrepancy {:.3g} ({}), expected < 1e-4; smallest ablated "
                             "discrepancy {:.3g} ({}), expected > 1e-2",
                             worst, worst_where, weakest_ablation, ablation_where));
}

Outcome clt_moments(const Context& ctx) {
  const int n = 1000, samples = 100000;
  PhiloxEngine rng(ctx.options().seed, derive_stream({0x434c54u}));
  std::vector<double> m(n), x(n);
  for (int j = 0; j < n; ++j) {
    m[j] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    x[j] = 2.0 * rng.uniform() - 1.0;
  }
  const auto s = stochastic_binary_field_sample(m, x, 0.0, samples, ctx.options().seed);
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= samples;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : s) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= samples;
  m3 /= samples;
  m4 /= samples;
  const double skew = m3 / std::pow(m2, 1.5);
  const double kurt = m4 / (m2 * m2) - 3.0;
  return pass_if(std::abs(skew) < 0.1 && std::abs(kurt) < 0.2,
                 fmt::format("skewness {:.4f} (expected |.| < 0.1), excess kurtosis {:.4f} "
                             "(expected |.| < 0.2)",
                             skew, kurt));
}

struct Cell {
  int depth;
  double sigma_m2;
  EpochMetrics final;
};

std::vector<Cell> train_grid(const Context& ctx, const Dataset& train_set, const Dataset& test_set,
                             const std::vector<int>& depths, const std::vector<double>& ms,
                             int epochs) {
  std::vector<std::pair<int, double>> grid;
  for (int d : depths)
    for (double m : ms) grid.emplace_back(d, m);
  return parallel_map(grid.size(), ctx.options().workers, [&](std::size_t i) {
    TrainConfig cfg;
    cfg.depth = grid[i].first;
    cfg.sigma_m2 = grid[i].second;
    cfg.width = 256;
    cfg.epochs = epochs;
    cfg.batch_size = 64;
    cfg.optimizer.kind = OptimizerKind::kAdam;
    cfg.optimizer.learning_rate = 2e-4;
    cfg.seed = ctx.options().seed;
    const auto result = train(cfg, train_set, test_set);
    return Cell{grid[i].first, grid[i].second, result.history.back()};
  });
}

std::optional<std::filesystem::path> mnist_dir(const Context& ctx) {
  auto dir = resolve_data_dir(ctx.options().data_dir);
  if (dir && mnist_available(*dir)) return dir;
  return std::nullopt;
}

std::string missing_mnist(const Context& ctx) {
  const auto dir = resolve_data_dir(ctx.options().data_dir);
  return dir ? fmt::format("MNIST IDX files not found in {}", dir->string())
             : std::string("no data directory (pass --data-dir or set BNMF_DATA_DIR)");
}

Outcome trainability_vs_init(const Context& ctx) {
  const auto dir = mnist_dir(ctx);
  if (!dir) return {Status::kSkipped, missing_mnist(ctx)};
  const auto mnist = load_mnist(*dir);
  const auto reduced = subsample(mnist.train, 0.25, ctx.options().seed);
  const std::vector<int> depths = ctx.options().full_training_grid
                                      ? std::vector<int>{5, 10, 15, 20, 25, 30, 35, 40}
                                      : std::vector<int>{5, 15, 25};
  const std::vector<double> ms = ctx.options().full_training_grid
                                     ? std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9, 0.95}
                                     : std::vector<double>{0.1, 0.5, 0.95};
  const auto cells = train_grid(ctx, reduced, mnist.test, depths, ms, 20);

  std::map<std::pair<int, double>, double> acc;
  for (const auto& c : cells) acc[{c.depth, c.sigma_m2}] = c.final.train_acc;
  bool gap_ok = true;
  std::string detail;
  for (int d : depths) {
    if (d < 25) continue;
    const double gap = acc[{d, 0.95}] - acc[{d, 0.1}];
    gap_ok = gap_ok && gap >= 0.20;
    detail += fmt::format("depth {}: acc(0.95)-acc(0.1) = {:.3f}; ", d, gap);
  }
  bool monotone = true;
  int prev_deepest = 0;
  std::string deepest;
  for (double m : ms) {
    int best = 0;
    for (int d : depths)
      if (acc[{d, m}] >= 0.9) best = std::max(best, d);
    monotone = monotone && best >= prev_deepest;
    prev_deepest = best;
    deepest += fmt::format("{}{}:{}", deepest.empty() ? "" : " ", m, best);
  }
  return pass_if(gap_ok && monotone,
                 detail + fmt::format("deepest depth at 90% train accuracy by sigma_m2 [{}] "
                                      "(expected gap >= 0.20, nondecreasing)",
                                      deepest));
}

Outcome train_test_tension(const Context& ctx) {
  const auto dir = mnist_dir(ctx);
  if (!dir) return {Status::kSkipped, missing_mnist(ctx)};
  const auto mnist = load_mnist(*dir);
  const std::vector<int> depths{4, 8, 12};
  const std::vector<double> ms{0.1, 0.3, 0.5, 0.7, 0.9, 0.99};
  const auto cells = train_grid(ctx, mnist.train, mnist.test, depths, ms, 10);
  std::vector<double> mean_test(ms.size(), 0.0);
  for (const auto& c : cells) {
    const auto k = std::find(ms.begin(), ms.end(), c.sigma_m2) - ms.begin();
    mean_test[k] += c.final.test_acc / depths.size();
  }
  const auto peak = std::max_element(mean_test.begin(), mean_test.end()) - mean_test.begin();
  std::string series;
  for (std::size_t k = 0; k < ms.size(); ++k)
    series += fmt::format("{}{}:{:.4f}", k ? " " : "", ms[k], mean_test[k]);
  const bool interior = peak > 0 && peak + 1 < static_cast<long>(ms.size());
  return {Status::kReport,
          fmt::format("mean test accuracy by sigma_m2 [{}]; peak at {} ({})", series, ms[peak],
                      interior ? "rises then falls" : "no interior peak")};
}

using CheckFn = Outcome (*)(const Context&);

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> checks{
      {"quadrature_consistency", quadrature_consistency},
      {"fixed_point_identity", fixed_point_identity},
      {"depth_scale_divergence", depth_scale_divergence},
      {"chi_consistency", chi_consistency},
      {"convergence_rate", convergence_rate},
      {"jacobian_msv", jacobian_msv_check},
      {"gradient_exactness", gradient_exactness},
      {"clt_moments", clt_moments},
      {"theory_simulation_agreement", theory_simulation_agreement},
      {"trainability_vs_init", trainability_vs_init},
      {"train_test_tension", train_test_tension},
  };
  return checks;
}

}  // namespace

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kPass: return "PASS";
    case Status::kFail: return "FAIL";
    case Status::kSkipped: return "SKIPPED";
    case Status::kReport: return "REPORT";
  }
  return "?";
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

std::vector<CheckResult> run(const Options& options, const Reporter& report) {
  for (const auto& name : options.only)
    if (std::find(check_names().begin(), check_names().end(), name) == check_names().end())
      throw std::invalid_argument("unknown acceptance check: " + name);

  const Context ctx(options);
  std::vector<CheckResult> results;
  for (const auto& [name, fn] : registry()) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), name) == options.only.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    CheckResult result{name, Status::kFail, {}, 0.0};
    try {
      auto outcome = fn(ctx);
      result.status = outcome.status;
      result.detail = std::move(outcome.detail);
    } catch (const std::exception& e) {
      result.detail = fmt::format("error: {}", e.what());
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (report) report(result);
    results.push_back(std::move(result));
  }
  return results;
}

std::string format_line(const CheckResult& r) {
  return fmt::format("{:<8}{:<30}({:.1f} s)  {}", to_string(r.status), r.name, r.seconds, r.detail);
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::none_of(results.begin(), results.end(),
                      [](const CheckResult& r) { return r.status == Status::kFail; });
}

}  // namespace bnmf::acceptance
