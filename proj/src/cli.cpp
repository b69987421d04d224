#include "cdaug/cli.hpp"

#include <csignal>
#include <fstream>
#include <map>
#include <optional>

#include <pthread.h>

#include <CLI11.hpp>

#include "cdaug/augment.hpp"
#include "cdaug/client.hpp"
#include "cdaug/codec.hpp"
#include "cdaug/config.hpp"
#include "cdaug/http_api.hpp"
#include "cdaug/job_store.hpp"
#include "cdaug/pipeline.hpp"
#include "cdaug/selection.hpp"
#include "cdaug/service.hpp"

namespace cdaug {

namespace {

struct GenerationFlags {
  GenerationConfig config;
  std::optional<std::uint64_t> seed;
  FilterThresholds thresholds;
  std::string tdf_measure = "f1";

  void add_to(CLI::App& app) {
    app.add_option("-k,--k", config.k, "Variants per history item")->capture_default_str();
    app.add_option("--temperature", config.temperature, "Sampling temperature")->capture_default_str();
    app.add_option("--max-output-tokens", config.max_output_tokens)->capture_default_str();
    app.add_option("--seed", seed, "Backend sampling seed");
    app.add_option("--scf", thresholds.scf, "Entailment threshold, both directions")->capture_default_str();
    app.add_option("--tdf", thresholds.tdf, "Maximum ROUGE-L against the source input")->capture_default_str();
    app.add_option("--min-len-ratio", thresholds.min_len_ratio)->capture_default_str();
    app.add_option("--max-len-ratio", thresholds.max_len_ratio)->capture_default_str();
    app.add_option("--tdf-measure", tdf_measure)->check(CLI::IsMember({"f1", "recall"}))->capture_default_str();
  }

  void finish() {
    config.seed = seed;
    thresholds.tdf_measure = tdf_measure == "recall" ? DiversityMeasure::kRecall : DiversityMeasure::kF1;
    config.validate();
    thresholds.validate();
  }
};

void write_output(const std::string& path, const std::string& bytes, std::ostream& out) {
  if (path == "-") {
    out << bytes << std::flush;
    return;
  }
  write_file_atomic(path, bytes);
}

UserProfile load_profile(const std::string& path) { return decode_profile(read_file(path)); }

void require_valid(const UserProfile& profile, const TaskManifest& manifest) {
  auto result = validate_profile(profile, manifest);
  if (!result.ok()) throw ProfileRejected(std::move(result));
}

std::string summary_line(std::size_t generated, std::size_t failed, std::size_t kept, std::size_t quarantined) {
  return "generated=" + std::to_string(generated) + " failed_variants=" + std::to_string(failed) +
         " kept=" + std::to_string(kept) + " quarantined=" + std::to_string(quarantined);
}

int serve_until_signal(const AppConfig& config, std::ostream& out) {
  const auto [host, port] = parse_listen(config.listen);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  // Block before any thread starts so only sigwait below sees them.
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceOptions options;
  options.data_dir = config.store_dir;
  options.workers = config.workers;
  CollabService service(options, make_backend(config), make_scorer(config),
                        PromptCatalog::load_directory(config.prompts_dir), TaskManifest::load(config.manifest));
  HttpFrontend frontend(service);
  const int bound = frontend.start(host, port);
  out << "listening on " << host << ":" << bound << std::endl;

  int received = 0;
  sigwait(&signals, &received);
  frontend.stop();
  service.shutdown();
  out << "stopped" << std::endl;
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kPrecondition:
      return kExitValidation;
    case ErrorKind::kTransport:
    case ErrorKind::kIntegrity:
    case ErrorKind::kTimeout:
      return kExitTransport;
    case ErrorKind::kJobFailed:
    case ErrorKind::kAugmentationFailed:
      return kExitJobFailed;
    default:
      return kExitFailure;
  }
}

int cli_dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Personalized data augmentation with cloud/device collaboration", "cdaug"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  // augment
  auto* augment = app.add_subcommand("augment", "Augment and filter one profile locally");
  std::string profile_path, out_path, reports_path;
  GenerationFlags gen;
  augment->add_option("--profile", profile_path, "User profile JSON")->required();
  augment->add_option("--out", out_path, "Filtered dataset output, - for stdout")->required();
  augment->add_option("--reports", reports_path, "Per-sample filter reports output");
  gen.add_to(*augment);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the collaboration service until SIGINT");
  std::optional<std::string> listen, store_dir;
  std::optional<std::size_t> workers;
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--workers", workers)->check(CLI::PositiveNumber);
  serve->add_option("--store", store_dir, "Job store directory");

  // submit
  auto* submit = app.add_subcommand("submit", "Upload a profile to the service");
  std::optional<std::string> server, idempotency_key;
  bool wait = false;
  submit->add_option("--profile", profile_path)->required();
  submit->add_option("--server", server, "Service origin, e.g. http://127.0.0.1:8080");
  submit->add_option("--key", idempotency_key, "Idempotency key");
  submit->add_flag("--wait", wait, "Wait for the job and download the dataset");
  submit->add_option("--out", out_path, "Dataset output when waiting");
  gen.add_to(*submit);

  // fetch
  auto* fetch = app.add_subcommand("fetch", "Download and verify a finished job's dataset");
  std::string job_id, user_id, task_name;
  fetch->add_option("--job", job_id)->required();
  fetch->add_option("--user", user_id)->required();
  fetch->add_option("--task", task_name)->required();
  fetch->add_option("--out", out_path)->required();
  fetch->add_option("--server", server);

  // merge
  auto* merge = app.add_subcommand("merge", "Union real history with a filtered dataset");
  std::string filtered_path;
  merge->add_option("--profile", profile_path)->required();
  merge->add_option("--filtered", filtered_path)->required();
  merge->add_option("--out", out_path)->required();

  // emit
  auto* emit = app.add_subcommand("emit", "Render a merged dataset as fine-tuning records");
  std::string train_path;
  EmitOptions emit_options;
  emit->add_option("--train", train_path, "Merged dataset")->required();
  emit->add_option("--out", out_path)->required();
  emit->add_flag("--with-history", emit_options.with_history, "Render recent history into each prompt");
  emit->add_option("--history-items", emit_options.history_items)->capture_default_str();

  // finetune
  auto* finetune = app.add_subcommand("finetune", "Train a LoRA adapter with the external runner");
  LoraConfig lora;
  std::optional<std::string> runner;
  finetune->add_option("--train", train_path, "Fine-tuning records")->required();
  finetune->add_option("--out", out_path, "Adapter directory")->required();
  finetune->add_option("--runner", runner, "Runner executable");
  finetune->add_option("--base", lora.base_model)->capture_default_str();
  finetune->add_option("--rank", lora.rank)->capture_default_str();
  finetune->add_option("--alpha", lora.alpha)->capture_default_str();
  finetune->add_option("--epochs", lora.epochs)->capture_default_str();
  finetune->add_option("--lr", lora.learning_rate)->capture_default_str();
  finetune->add_option("--lora-seed", lora.seed)->capture_default_str();
  finetune->add_flag("--quantize-4bit", lora.quantize_4bit);

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions against references");
  std::string predictions_path, references_path;
  bool as_json = false;
  eval->add_option("--task", task_name)->required();
  eval->add_option("--pred", predictions_path, "One prediction per line")->required()->check(CLI::ExistingFile);
  eval->add_option("--ref", references_path, "One reference per line")->required()->check(CLI::ExistingFile);
  eval->add_flag("--json", as_json, "Emit {task, metric, value} lines");

  // stats
  auto* stats = app.add_subcommand("stats", "Per-task dataset statistics for a set of profiles");
  std::vector<std::string> profile_paths;
  stats->add_option("profiles", profile_paths, "Profile JSON files")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto config = load_config(config_path ? std::optional<std::filesystem::path>(*config_path) : std::nullopt);

    if (*augment) {
      gen.finish();
      const auto manifest = TaskManifest::load(config.manifest);
      const auto catalog = PromptCatalog::load_directory(config.prompts_dir);
      const auto profile = load_profile(profile_path);
      require_valid(profile, manifest);
      auto backend = make_backend(config);
      auto scorer = make_scorer(config);
      AugmentationEngine engine(*backend, catalog, manifest);
      const auto augmented = engine.augment_user(profile, gen.config);
      const auto selected = select(profile, augmented.samples, gen.thresholds, *scorer);
      write_output(out_path, encode_filtered(selected.filtered), out);
      if (!reports_path.empty()) write_output(reports_path, encode_reports(selected.reports), out);
      err << summary_line(augmented.report.generated, augmented.report.failed_variants,
                          selected.filtered.samples.size(), selected.quarantined)
          << "\n";
      return kExitOk;
    }

    if (*serve) {
      auto effective = config;
      if (listen) effective.listen = *listen;
      if (workers) effective.workers = *workers;
      if (store_dir) effective.store_dir = *store_dir;
      return serve_until_signal(effective, out);
    }

    if (*submit) {
      gen.finish();
      const auto profile = load_profile(profile_path);
      CollabClient client(server.value_or(config.server));
      const auto id = client.submit(profile, gen.config, gen.thresholds, idempotency_key);
      out << id << "\n";
      if (!wait) return kExitOk;
      if (out_path.empty()) throw Error(ErrorKind::kValidation, "--wait requires --out");
      const auto filtered = client.fetch(id, profile.user_id, profile.task);
      write_output(out_path, encode_filtered(filtered), out);
      const auto view = client.status(id);
      err << summary_line(view.counters.generated, view.counters.failed_variants, view.counters.kept,
                          view.counters.quarantined)
          << "\n";
      return kExitOk;
    }

    if (*fetch) {
      CollabClient client(server.value_or(config.server));
      const auto filtered = client.fetch(job_id, user_id, parse_task_id(task_name));
      write_output(out_path, encode_filtered(filtered), out);
      return kExitOk;
    }

    if (*merge) {
      const auto profile = load_profile(profile_path);
      const auto filtered =
          FilteredDataset::from_labeled(decode_dataset(read_file(filtered_path), profile.user_id, profile.task));
      const auto train = merge_datasets(profile, filtered);
      write_output(out_path, encode_dataset(train.as_dataset()), out);
      return kExitOk;
    }

    if (*emit) {
      const auto manifest = TaskManifest::load(config.manifest);
      const auto catalog = PromptCatalog::load_directory(config.prompts_dir);
      const auto train = MergedTrainSet::from_dataset(decode_dataset(read_file(train_path)));
      write_output(out_path, emit_training_file(train, catalog, manifest, emit_options), out);
      return kExitOk;
    }

    if (*finetune) {
      const auto artifact = run_finetune(train_path, lora, runner ? std::filesystem::path(*runner) : config.runner,
                                         out_path);
      out << canonical_dump({{"adapter_dir", artifact.adapter_dir.string()},
                             {"initial_loss", artifact.initial_loss},
                             {"final_loss", artifact.final_loss},
                             {"steps", artifact.steps}})
          << "\n";
      return kExitOk;
    }

    if (*eval) {
      const auto report = evaluate_files(parse_task_id(task_name), predictions_path, references_path);
      out << (as_json ? encode_metrics_records(report) : format_metrics_table(report));
      return kExitOk;
    }

    if (*stats) {
      std::map<TaskId, std::vector<LabeledDataset>> by_task;
      for (const auto& path : profile_paths) {
        const auto profile = load_profile(path);
        LabeledDataset dataset{profile.user_id, profile.task, {}};
        for (std::size_t i = 0; i < profile.history.size(); ++i) {
          const auto& pair = profile.history[i];
          dataset.samples.push_back({pair.input, pair.output, Provenance::kReal, i, std::nullopt});
        }
        by_task[profile.task].push_back(std::move(dataset));
      }
      std::vector<std::pair<TaskId, DatasetStats>> rows;
      for (const auto& [task, datasets] : by_task) rows.emplace_back(task, dataset_stats(datasets));
      out << format_stats_table(rows);
      return kExitOk;
    }
  } catch (const ProfileRejected& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cdaug
