#include <CLI11.hpp>

#include <iostream>

#include "causeprobe/app.hpp"
#include "causeprobe/error.hpp"
#include "causeprobe/io.hpp"

using namespace causeprobe;
namespace fs = std::filesystem;

namespace {

// 2 for a bad invocation or bad input files, 1 for failures while running.
int exit_code_for(const std::string& kind) {
  for (const char* k : {"usage", "input", "validation", "config", "parse"}) {
    if (kind == k) return 2;
  }
  return 1;
}

int report_error(const std::string& kind, const std::string& message) {
  const int code = exit_code_for(kind);
  io::json record{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << record.dump() << std::endl;
  return code;
}

void require_kind(const Manifest& m, std::initializer_list<ExperimentKind> allowed,
                  const std::string& verb) {
  for (auto k : allowed) {
    if (m.kind == k) return;
  }
  throw InputError("'" + verb + "' cannot run a manifest of kind " + std::string(to_string(m.kind)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Probe language models for causal knowledge and score the resulting graphs."};
  cli.fallthrough();
  cli.require_subcommand(1);

  std::string cache, provider, manifest_path, out, data_dir;
  std::uint64_t seed = 0;
  bool verbose = false, quiet = false;
  cli.add_option("--cache", cache, "exchange log (JSON lines); default .causeprobe/exchanges.jsonl");
  cli.add_option("--provider", provider, "provider name or config file; overrides the manifest");
  cli.add_option("--manifest", manifest_path, "experiment manifest (JSON)");
  auto* seed_opt = cli.add_option("--seed", seed, "seed for randomized variants; overrides the manifest");
  cli.add_option("--out", out, "output run directory; overrides the manifest");
  cli.add_option("--data-dir", data_dir, "bundled data directory")->check(CLI::ExistingDirectory);
  cli.add_flag("-v,--verbose", verbose, "more output");
  cli.add_flag("-q,--quiet", quiet, "no progress output");

  auto* datasets = cli.add_subcommand("datasets", "bundled benchmark datasets");
  datasets->require_subcommand(1);
  auto* ds_list = datasets->add_subcommand("list", "list dataset names");
  auto* ds_show = datasets->add_subcommand("show", "print a dataset");
  std::string show_name;
  bool show_dot = false;
  ds_show->add_option("name", show_name, "dataset name or file")->required();
  ds_show->add_flag("--dot", show_dot, "print the ground truth as DOT");

  auto* probe = cli.add_subcommand("probe", "pairwise probing");
  probe->require_subcommand(1);
  auto* probe_run = probe->add_subcommand("run", "run a pairwise-probe or rename-probe manifest");
  std::vector<std::string> probe_datasets;
  std::vector<int> probe_templates;
  probe_run->add_option("--dataset", probe_datasets, "dataset without a manifest (repeatable)");
  probe_run->add_option("--templates", probe_templates, "template ids without a manifest")
      ->check(CLI::Range(1, 5));

  auto* chains = cli.add_subcommand("chains", "causal chains and natural word chains");
  chains->require_subcommand(1);
  auto* chains_run = chains->add_subcommand("run", "run a chains or word-chains manifest");

  auto* bank = cli.add_subcommand("bank", "question banks");
  bank->require_subcommand(1);
  auto* bank_run = bank->add_subcommand("run", "run a question-bank manifest");

  auto* labels = cli.add_subcommand("labels", "manual labels for unclassified answers");
  labels->require_subcommand(1);
  auto* labels_export = labels->add_subcommand("export", "write the label queue of a run");
  auto* labels_import = labels->add_subcommand("import", "apply a filled-in label file to a run");
  std::string run_dir, label_file;
  labels_export->add_option("run", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  labels_export->add_option("file", label_file, "queue file; default <run>/labels.tsv");
  labels_import->add_option("run", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  labels_import->add_option("file", label_file, "label file")->required()->check(CLI::ExistingFile);

  auto* knn = cli.add_subcommand("knn", "nearest-neighbour edge prediction from knowledge-base facts");
  knn->require_subcommand(1);
  auto* knn_build = knn->add_subcommand("build", "embed knowledge-base statements into a store");
  auto* knn_predict = knn->add_subcommand("predict", "predict one edge");
  auto* knn_graph = knn->add_subcommand("graph", "run a knn-graphs manifest");
  std::string store, pred_dataset, pred_cause, pred_effect;
  int pred_template = 4;
  knn_predict->add_option("--store", store, "store file")->required()->check(CLI::ExistingFile);
  knn_predict->add_option("--dataset", pred_dataset, "dataset name or file")->required();
  knn_predict->add_option("--cause", pred_cause, "cause variable")->required();
  knn_predict->add_option("--effect", pred_effect, "effect variable")->required();
  knn_predict->add_option("--template", pred_template, "template id")->check(CLI::Range(1, 5));

  auto* scm = cli.add_subcommand("scm", "structural causal models");
  scm->require_subcommand(1);
  auto* scm_demo = scm->add_subcommand("demo", "check the meta-model example");

  auto* report = cli.add_subcommand("report", "merge metric rows of graph runs");
  std::vector<std::string> report_runs;
  report->add_option("runs", report_runs, "run directories")->required();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  app::Context ctx;
  if (!data_dir.empty()) ctx.data_dir = data_dir;
  if (!cache.empty()) ctx.cache_path = fs::path(cache);
  if (!provider.empty()) ctx.provider = provider;
  if (seed_opt->count() > 0) ctx.seed = seed;
  if (!out.empty()) ctx.out = fs::path(out);
  ctx.verbose = verbose;
  ctx.log = quiet ? nullptr : &std::cout;

  auto manifest = [&]() {
    if (manifest_path.empty()) throw InputError("this command needs --manifest");
    return load_manifest(manifest_path);
  };

  try {
    if (ds_list->parsed()) {
      for (const auto& name : app::list_datasets(ctx)) {
        const auto ds = app::resolve_dataset(name, ctx);
        std::cout << name << "\t" << ds.size() << " variables\t" << ds.truth.edge_count()
                  << " edges\t" << ds.source << "\n";
      }
    } else if (ds_show->parsed()) {
      const auto ds = app::resolve_dataset(show_name, ctx);
      std::cout << (show_dot ? ds.truth.to_dot(ds.name) : serialize_dataset(ds));
    } else if (probe_run->parsed()) {
      Manifest m;
      if (manifest_path.empty()) {
        if (probe_datasets.empty()) throw InputError("probe run needs --manifest or --dataset");
        m.datasets = probe_datasets;
        if (!probe_templates.empty()) m.templates = probe_templates;
        if (provider.empty()) throw InputError("probe run without a manifest needs --provider");
        m.provider = provider;
      } else {
        m = manifest();
        require_kind(m, {ExperimentKind::PairwiseProbe, ExperimentKind::RenameProbe}, "probe run");
      }
      app::run_manifest(m, ctx);
    } else if (chains_run->parsed()) {
      const auto m = manifest();
      require_kind(m, {ExperimentKind::Chains, ExperimentKind::WordChains}, "chains run");
      app::run_manifest(m, ctx);
    } else if (bank_run->parsed()) {
      const auto m = manifest();
      require_kind(m, {ExperimentKind::QuestionBank}, "bank run");
      app::run_manifest(m, ctx);
    } else if (labels_export->parsed()) {
      const fs::path file = label_file.empty() ? fs::path(run_dir) / "labels.tsv" : fs::path(label_file);
      const auto n = app::cmd_labels_export(run_dir, file);
      if (!quiet) std::cout << n << " records to label in " << file.string() << "\n";
    } else if (labels_import->parsed()) {
      const auto n = app::cmd_labels_import(run_dir, label_file, ctx);
      if (!quiet) std::cout << n << " records labeled\n";
    } else if (knn_build->parsed()) {
      app::cmd_knn_build(manifest(), ctx);
    } else if (knn_predict->parsed()) {
      Manifest m;
      if (!manifest_path.empty()) m = manifest();
      if (!provider.empty()) m.provider = provider;
      if (m.provider.empty()) throw InputError("knn predict needs the embedding --provider");
      app::cmd_knn_predict(store, m, pred_dataset, pred_cause, pred_effect, pred_template, ctx);
    } else if (knn_graph->parsed()) {
      const auto m = manifest();
      require_kind(m, {ExperimentKind::KnnGraphs}, "knn graph");
      app::run_manifest(m, ctx);
    } else if (scm_demo->parsed()) {
      if (app::cmd_scm_demo(ctx) != 0) {
        return report_error("assertion", "scm demo: the three values do not all equal 1/4");
      }
    } else if (report->parsed()) {
      std::vector<fs::path> runs(report_runs.begin(), report_runs.end());
      app::cmd_report(runs, out.empty() ? std::nullopt : std::optional<fs::path>(out), ctx);
    }
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
