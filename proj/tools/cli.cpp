#include <sstream>

#include <CLI11.hpp>

#include "acceptance.hpp"
#include "commands.hpp"

namespace bnmf::cli {
namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

// Shared values first, then the subcommand's resolved options as
// config-file lines.
ConfigEcho make_echo(const SharedOptions& shared, const CLI::App& sub) {
  ConfigEcho echo{
      "bnmf " + sub.get_name(),
      "seed = " + std::to_string(shared.seed),
      "workers = " + std::to_string(shared.workers),
      "resume = " + std::string(shared.resume ? "true" : "false"),
  };
  for (auto& line : split_lines(sub.config_to_str(true, false)))
    echo.push_back(sub.get_name() + "." + line);
  return echo;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field theory, simulation and training for Gaussian-binary surrogate networks",
               "bnmf"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML config file; command-line values win over it");
  app.require_subcommand(1, 1);
  app.fallthrough();

  SharedOptions shared;
  app.add_option("--seed", shared.seed, "Base seed");
  app.add_option("--out", shared.out, "Output directory");
  app.add_option("--workers", shared.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", shared.dry_run, "Print the resolved grid and exit");
  app.add_flag("--resume", shared.resume, "Skip cells whose output file exists");
  app.add_option("--data-dir", shared.data_dir, "MNIST directory (overrides BNMF_DATA_DIR)");

  TheoryOptions theory;
  auto* t = app.add_subcommand("theory", "Fixed points, chi and depth scales over a grid")->configurable();
  t->add_option("--sigma-m2", theory.sigma_m2)->delimiter(',');
  t->add_option("--sigma-b2", theory.sigma_b2)->delimiter(',');
  t->add_option("--kappa", theory.kappa, "Activation gain");
  t->add_option("--nodes", theory.nodes, "Gauss-Hermite nodes (0: default)");

  PropagateOptions prop;
  auto* p = app.add_subcommand("propagate", "Empirical q and c on random networks vs theory")->configurable();
  p->add_option("--sigma-m2", prop.sigma_m2)->delimiter(',');
  p->add_option("--sigma-b2", prop.sigma_b2)->delimiter(',');
  p->add_option("--width", prop.width);
  p->add_option("--depth", prop.depth);
  p->add_option("--realizations", prop.realizations);
  p->add_option("--q0-aa", prop.q0_aa);
  p->add_option("--q0-bb", prop.q0_bb);
  p->add_option("--c0", prop.c0);
  p->add_option("--mean-init", prop.mean_init, "bernoulli | clipped");
  p->add_option("--kappa", prop.kappa);
  p->add_option("--nodes", prop.nodes);

  JacobianOptions jac;
  auto* j = app.add_subcommand("jacobian", "Single-layer Jacobian MSV against chi by width")->configurable();
  j->add_option("--sigma-m2", jac.sigma_m2);
  j->add_option("--sigma-b2", jac.sigma_b2);
  j->add_option("--widths", jac.widths)->delimiter(',');
  j->add_option("--networks", jac.networks);
  j->add_option("--probes", jac.probes, "Probe vectors per network (0: width)");
  j->add_option("--mean-init", jac.mean_init);
  j->add_option("--kappa", jac.kappa);
  j->add_option("--nodes", jac.nodes);

  TrainOptions tr;
  auto* r = app.add_subcommand("train", "Train surrogate networks over a depth x sigma_m2 grid")->configurable();
  r->add_option("--dataset", tr.dataset, "mnist | blobs");
  r->add_option("--depths", tr.depths)->delimiter(',');
  r->add_option("--sigma-m2", tr.sigma_m2)->delimiter(',');
  r->add_option("--sigma-b2", tr.sigma_b2);
  r->add_option("--width", tr.width);
  r->add_option("--epochs", tr.epochs);
  r->add_option("--batch", tr.batch);
  r->add_option("--optimizer", tr.optimizer, "sgd | momentum | adam");
  r->add_option("--lr", tr.lr);
  r->add_option("--fraction", tr.fraction, "Share of the MNIST training set");
  r->add_option("--mean-init", tr.mean_init);
  r->add_option("--activation-gain", tr.activation_gain);
  r->add_flag("--smoke", tr.smoke, "Depths {5,15,25} x sigma_m2 {0.1,0.5,0.95}");
  r->add_flag("--save-checkpoints", tr.save_checkpoints);
  r->add_option("--blob-samples", tr.blob_samples);
  r->add_option("--blob-dim", tr.blob_dim);
  r->add_option("--blob-margin", tr.blob_margin);

  VerifyOptions ver;
  auto* v = app.add_subcommand("verify", "Run the acceptance suite")->configurable();
  v->add_option("--nodes", ver.nodes, "Gauss-Hermite nodes for theory checks (0: default)");
  v->add_flag("--full", ver.full, "Full depth grid for the training check");
  v->add_option("--only", ver.only, "Run only these checks")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (t->parsed()) return cmd_theory(shared, theory, make_echo(shared, *t), out);
    if (p->parsed()) return cmd_propagate(shared, prop, make_echo(shared, *p), out);
    if (j->parsed()) return cmd_jacobian(shared, jac, make_echo(shared, *j), out);
    if (r->parsed()) return cmd_train(shared, tr, make_echo(shared, *r), out);
    return cmd_verify(shared, ver, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"bnmf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bnmf::cli
