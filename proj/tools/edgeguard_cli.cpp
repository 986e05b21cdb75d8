// edgeguard command line: dataset preparation, evaluation, edge simulation
// and report rendering.
//
// exit codes: 0 ok, 1 usage, 2 data, 3 backend

#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "edgeguard/baseline.hpp"
#include "edgeguard/dataset.hpp"
#include "edgeguard/detector.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/remote.hpp"
#include "edgeguard/scenario.hpp"
#include "edgeguard/synth.hpp"
#include "edgeguard/taxonomy.hpp"
#include "edgeguard/telemetry.hpp"

using namespace edgeguard;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  bool strict_taxonomy = false;
  std::uint64_t seed = 1;
  std::string backend = "baseline";
};

TaxonomyMode mode_of(const Common& c) {
  return c.strict_taxonomy ? TaxonomyMode::StrictPaper : TaxonomyMode::Canonical;
}

DataFormat format_for(const std::string& flag, const std::string& path) {
  if (!flag.empty()) {
    try {
      return parse_data_format(flag);
    } catch (const Error&) {
      throw UsageError("unknown format '" + flag + "' (csv or jsonl)");
    }
  }
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".jsonl" || ext == ".ndjson" ? DataFormat::JsonLines : DataFormat::Delimited;
}

char separator_of(const std::string& s) {
  if (s == "\\t" || s == "tab") return '\t';
  if (s.size() != 1) throw UsageError("separator must be one character");
  return s[0];
}

LabeledDataset load_dataset(const std::string& path, const std::string& fmt, char sep,
                            TaxonomyMode mode, double max_malformed = 0.01) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path, path);
  IngestOptions opts;
  opts.format = format_for(fmt, path);
  opts.separator = sep;
  opts.taxonomy = mode;
  opts.max_malformed_fraction = max_malformed;
  IngestResult r = ingest(in, opts);
  if (!r.malformed.empty()) {
    std::cerr << path << ": skipped " << r.malformed.size() << " of " << r.rows_read
              << " rows (first: row " << r.malformed.front().row << ": "
              << r.malformed.front().message << ")\n";
  }
  return std::move(r.dataset);
}

void save_dataset(const std::string& path, const LabeledDataset& d, const std::string& fmt,
                  char sep) {
  const DataFormat f = format_for(fmt, path);
  if (path == "-") {
    export_dataset(std::cout, d, f, sep);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path, path);
  export_dataset(out, d, f, sep);
}

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path, path);
  fn(out);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path, path);
}

std::map<int, double> proportions_named(const std::string& name) {
  if (name == "uniform") return uniform_proportions();
  if (name == "iot23" || name == "IoT-23") return table_proportions(Dataset::IoT23);
  if (name == "toniot" || name == "TON_IoT") return table_proportions(Dataset::TonIoT);
  throw UsageError("unknown proportions '" + name + "' (uniform, iot23, toniot)");
}

ProfileSet load_profiles(const std::string& path) {
  if (path.empty()) return ProfileSet::builtin();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path, path);
  return ProfileSet::load(in);
}

// Baseline fitted on a file, or on seeded synthetic traffic when no file is given.
std::unique_ptr<ClassifierBackend> make_backend(const Common& c, const LabeledDataset* train,
                                                std::size_t synthetic_samples) {
  if (c.backend == "baseline") {
    BaselineBackend b = train ? BaselineBackend::fit(*train, {})
                              : scenario_baseline(c.seed, synthetic_samples);
    for (const auto& w : b.warnings()) std::cerr << "baseline: " << w << '\n';
    return std::make_unique<BaselineBackend>(std::move(b));
  }
  if (c.backend.rfind("remote:", 0) == 0 && c.backend.size() > 7) {
    return std::make_unique<RemoteBackend>(c.backend.substr(7));
  }
  throw UsageError("backend must be 'baseline' or 'remote:<address>'");
}

double mean_loss(const LabeledDataset& d, const ClassifierBackend& backend) {
  double sum = 0.0;
  for (const auto& r : d.records) sum += cross_entropy(r.label, classify(r.flow, backend).probs);
  return d.records.empty() ? 0.0 : sum / static_cast<double>(d.records.size());
}

std::vector<double> read_energy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path, path);
  std::vector<double> v;
  for (double x; in >> x;) v.push_back(x);
  if (!in.eof()) throw Error(ErrorCode::MalformedNumber, "bad energy sample in " + path, path);
  return v;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::BackendUnavailable:
    case ErrorCode::BackendMalformedOutput:
      return kBackend;
    default:
      return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"edgeguard: IoT flow classification, edge prevention and simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_flag("--strict-paper-taxonomy", common.strict_taxonomy,
               "Use label ids exactly as printed in the source tables (C&C-FileDownload = 5)");
  app.add_option("--seed", common.seed, "Seed for every stochastic step");
  app.add_option("--backend", common.backend, "baseline | remote:<host:port|exec:cmd>");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a labeled flow file and normalize it");
  std::string in_path, in_fmt, out_path = "-", out_fmt, sep_str = ",";
  double max_malformed = 0.01;
  ingest_cmd->add_option("input", in_path, "Input csv/jsonl")->required();
  ingest_cmd->add_option("-o,--output", out_path, "Output path ('-' for stdout)");
  ingest_cmd->add_option("--format", in_fmt, "Input format: csv | jsonl");
  ingest_cmd->add_option("--output-format", out_fmt, "Output format: csv | jsonl");
  ingest_cmd->add_option("--separator", sep_str, "Delimiter for csv input");
  ingest_cmd->add_option("--max-malformed", max_malformed, "Tolerated malformed row fraction")
      ->check(CLI::Range(0.0, 1.0));

  // split
  auto* split_cmd = app.add_subcommand("split", "60/20/20 train/validation/test split");
  std::string split_dir = ".";
  bool no_stratify = false;
  split_cmd->add_option("input", in_path, "Input csv/jsonl")->required();
  split_cmd->add_option("--format", in_fmt, "Input format: csv | jsonl");
  split_cmd->add_option("--out-dir", split_dir, "Directory for train/val/test files");
  split_cmd->add_option("--output-format", out_fmt, "Output format: csv | jsonl");
  split_cmd->add_flag("--random", no_stratify, "Global shuffle instead of per-class");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled flow set");
  std::size_t synth_n = 10000;
  std::string proportions = "uniform", profiles_path;
  synth_cmd->add_option("-n,--count", synth_n, "Number of flows")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--proportions", proportions, "uniform | iot23 | toniot");
  synth_cmd->add_option("--profiles", profiles_path, "Profile set JSON (default: built in)");
  synth_cmd->add_option("-o,--output", out_path, "Output path ('-' for stdout)");
  synth_cmd->add_option("--output-format", out_fmt, "Output format: csv | jsonl");
  bool dump_profiles = false;
  synth_cmd->add_flag("--dump-profiles", dump_profiles, "Print the profile set as JSON and exit");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a backend on labeled flows");
  std::string train_path, test_path, dataset_path, metrics_out, energy_path, model_name;
  std::size_t train_samples = 6000;
  unsigned threads = 1;
  eval_cmd->add_option("--dataset", dataset_path, "One labeled file, split 60/20/20 internally");
  eval_cmd->add_option("--train", train_path, "Training file (baseline)");
  eval_cmd->add_option("--test", test_path, "Test file");
  eval_cmd->add_option("--format", in_fmt, "Input format: csv | jsonl");
  eval_cmd->add_option("--training-samples", train_samples,
                       "Synthetic training size when no training data is given");
  eval_cmd->add_option("--energy-file", energy_path, "Joules per request, one per line");
  eval_cmd->add_option("--threads", threads, "Parallel requests for thread-safe backends");
  eval_cmd->add_option("--model-name", model_name, "Name in the results row");
  eval_cmd->add_option("--metrics-out", metrics_out, "Write key=value metrics here");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Run an edge/cloud scenario");
  std::string scenario_path, events_out, report_out, actions_out, report_fmt = "text",
                                                                  transport;
  bool seed_given = false, backend_given = false;
  sim_cmd->add_option("config", scenario_path, "Scenario JSON")->required();
  sim_cmd->add_option("--events-out", events_out, "Telemetry JSON lines");
  sim_cmd->add_option("--actions-out", actions_out, "Action log JSON lines");
  sim_cmd->add_option("--report-out", report_out, "Report path ('-' for stdout)");
  sim_cmd->add_option("--report-format", report_fmt, "json | text");
  sim_cmd->add_option("--transport", transport, "inproc | socket");
  sim_cmd->add_option("--profiles", profiles_path, "Profile set JSON (default: built in)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Aggregate telemetry into a report");
  std::string events_in;
  report_cmd->add_option("events", events_in, "Telemetry JSON lines ('-' for stdin)")->required();
  report_cmd->add_option("--format", report_fmt, "json | text");
  report_cmd->add_option("-o,--output", out_path, "Output path ('-' for stdout)");
  report_cmd->add_option("--model-name", model_name, "Name in the results row");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve the baseline over the line protocol");
  int port = 0;
  bool use_stdio = false;
  serve_cmd->add_option("--train", train_path, "Training file (default: synthetic)");
  serve_cmd->add_option("--format", in_fmt, "Input format: csv | jsonl");
  serve_cmd->add_option("--training-samples", train_samples, "Synthetic training size");
  serve_cmd->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_flag("--stdio", use_stdio, "Answer on stdin/stdout instead of TCP");

  // taxonomy
  auto* tax_cmd = app.add_subcommand("taxonomy", "Print the label table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  seed_given = app.count("--seed") > 0;
  backend_given = app.count("--backend") > 0;

  try {
    const char sep = separator_of(sep_str);

    if (*ingest_cmd) {
      LabeledDataset d = load_dataset(in_path, in_fmt, sep, mode_of(common), max_malformed);
      save_dataset(out_path, d, out_fmt, ',');
      std::cerr << "ingested " << d.records.size() << " records\n";
    } else if (*split_cmd) {
      const LabeledDataset d = load_dataset(in_path, in_fmt, sep, mode_of(common));
      const SplitAssignment s = split(d, common.seed, !no_stratify);
      const std::string ext = out_fmt == "jsonl" ? ".jsonl" : ".csv";
      std::filesystem::create_directories(split_dir);
      const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
          {"train", &s.train_idx}, {"val", &s.val_idx}, {"test", &s.test_idx}};
      for (const auto& [name, idx] : parts) {
        save_dataset((std::filesystem::path(split_dir) / (std::string(name) + ext)).string(),
                     subset(d, *idx), out_fmt, ',');
      }
      std::cout << "mode=" << to_string(s.mode) << " train=" << s.train_idx.size()
                << " val=" << s.val_idx.size() << " test=" << s.test_idx.size() << '\n';
    } else if (*synth_cmd) {
      const ProfileSet profiles = load_profiles(profiles_path);
      if (dump_profiles) {
        with_output(out_path, [&](std::ostream& o) { profiles.save(o); });
        return kOk;
      }
      const LabeledDataset d =
          synthesize(proportions_named(proportions), synth_n, common.seed, profiles);
      save_dataset(out_path, d, out_fmt, ',');
    } else if (*eval_cmd) {
      LabeledDataset train, val, test;
      bool have_train = false, have_val = false;
      if (!dataset_path.empty()) {
        if (!train_path.empty() || !test_path.empty()) {
          throw UsageError("--dataset excludes --train/--test");
        }
        const LabeledDataset all = load_dataset(dataset_path, in_fmt, sep, mode_of(common));
        const SplitAssignment s = split(all, common.seed);
        train = subset(all, s.train_idx);
        val = subset(all, s.val_idx);
        test = subset(all, s.test_idx);
        have_train = have_val = true;
      } else {
        if (test_path.empty()) throw UsageError("evaluate needs --dataset or --test");
        test = load_dataset(test_path, in_fmt, sep, mode_of(common));
        if (!train_path.empty()) {
          train = load_dataset(train_path, in_fmt, sep, mode_of(common));
          have_train = true;
        }
      }
      auto backend = make_backend(common, have_train ? &train : nullptr, train_samples);

      EvaluateOptions opts;
      opts.model_name = model_name;
      opts.threads = threads;
      std::vector<double> energy;
      if (!energy_path.empty()) {
        energy = read_energy(energy_path);
        if (energy.size() != test.records.size()) {
          throw Error(ErrorCode::SchemaMismatch,
                      "energy file has " + std::to_string(energy.size()) + " samples for " +
                          std::to_string(test.records.size()) + " requests");
        }
        opts.energy_source = [&energy](std::size_t i) { return energy[i]; };
      }
      Evaluation ev = evaluate(test, *backend, opts);
      if (have_train && common.backend == "baseline") ev.report.train_loss = mean_loss(train, *backend);
      if (have_val) ev.report.validation_loss = mean_loss(val, *backend);

      std::cout << results_table_header() << '\n' << results_table_row(ev.report) << '\n';
      if (!metrics_out.empty()) {
        with_output(metrics_out, [&](std::ostream& o) { write_key_values(o, ev.report); });
      }
    } else if (*sim_cmd) {
      std::ifstream in(scenario_path);
      if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + scenario_path, scenario_path);
      ScenarioConfig cfg = load_scenario(in);
      if (seed_given) cfg.seed = common.seed;
      if (backend_given) cfg.backend = common.backend;
      if (transport == "socket") cfg.transport = Transport::Socket;
      else if (transport == "inproc") cfg.transport = Transport::InProcess;
      else if (!transport.empty()) throw UsageError("transport must be inproc or socket");
      const ReportFormat rf = [&] {
        try {
          return parse_report_format(report_fmt);
        } catch (const Error&) {
          throw UsageError("report format must be json or text");
        }
      }();
      const ProfileSet profiles = load_profiles(profiles_path);
      const ScenarioResult r = run_scenario(cfg, profiles);
      if (!events_out.empty()) {
        with_output(events_out, [&](std::ostream& o) { write_events(o, r.events); });
      }
      if (!actions_out.empty()) {
        with_output(actions_out, [&](std::ostream& o) {
          for (const auto& [node, log] : r.action_logs) export_action_log(o, log, node);
        });
      }
      with_output(report_out, [&](std::ostream& o) { o << emit_report(r.snapshot, rf); });
    } else if (*report_cmd) {
      ReportFormat rf;
      try {
        rf = parse_report_format(report_fmt);
      } catch (const Error&) {
        throw UsageError("report format must be json or text");
      }
      std::vector<TelemetryEvent> events;
      if (events_in == "-") {
        events = read_events(std::cin);
      } else {
        std::ifstream in(events_in);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + events_in, events_in);
        events = read_events(in);
      }
      const MonitoringSnapshot snap =
          aggregate(events, model_name.empty() ? std::string("baseline-tree") : model_name);
      with_output(out_path, [&](std::ostream& o) { o << emit_report(snap, rf); });
    } else if (*serve_cmd) {
      if (common.backend != "baseline") throw UsageError("serve only hosts the baseline");
      LabeledDataset train;
      if (!train_path.empty()) train = load_dataset(train_path, in_fmt, sep, mode_of(common));
      auto backend = make_backend(common, train_path.empty() ? nullptr : &train, train_samples);
      if (use_stdio) {
        serve_stream(*backend, STDIN_FILENO, STDOUT_FILENO);
      } else {
        LineServer server(*backend, static_cast<std::uint16_t>(port));
        std::cout << "listening on 127.0.0.1:" << server.port() << std::endl;
        // Runs until killed.
        for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
      }
    } else if (*tax_cmd) {
      Taxonomy::builtin(mode_of(common)).export_delimited(std::cout);
    }
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
