// Copyright 2026 The Neptune Select Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "neptune/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include "neptune/atdf.hpp"
#include "neptune/attn_check.hpp"
#include "neptune/io.hpp"
#include "neptune/metrics.hpp"
#include "neptune/selection.hpp"
#include "neptune/synth.hpp"

namespace neptune::cli {

namespace {

using io::Json;

struct Output {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::vector<Output> outputs;
  std::optional<RunError> failure;  ///< checks ran but did not pass
};

class Stopwatch {
 public:
  Stopwatch(RunReport& report, std::string name)
      : report_(report), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    const auto dt = std::chrono::steady_clock::now() - start_;
    report_.timings.emplace_back(name_, std::chrono::duration<double>(dt).count());
  }

 private:
  RunReport& report_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

Json maybe(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

CommandResult cmd_atdf(const RunConfig& config, RunReport& report, std::ostream& out) {
  const EngineConfig engine = config.engine();
  io::Manifest manifest;
  std::vector<LabeledImage> images;
  {
    Stopwatch t(report, "load");
    manifest = io::load_manifest(config.required_path("manifest"));
    const auto table = io::load_predictions(config.required_path("predictions"), manifest.taxonomy);
    images = io::join(manifest.records, table);
    validate_images(images, manifest.taxonomy);
  }

  Stopwatch t(report, "run");
  auto [state, dist] = run_stream(AtdfState(manifest.taxonomy, engine), images, engine);

  Json unseen = Json::array();
  Json hardest = Json::object();
  for (Dimension d : kAllDimensions) {
    const AttributeProbability* top = nullptr;
    for (const auto& a : dist.dimension(d)) {
      if (!a.seen) unseen.push_back(std::string(dimension_name(d)) + "/" + a.name);
      if (!top || a.probability > top->probability) top = &a;
    }
    hardest[std::string(dimension_name(d))] = top->name;
  }
  report.results["images"] = images.size();
  report.results["batches"] = state.iteration();
  report.results["hardest"] = hardest;
  report.results["unseen"] = unseen;

  out << "atdf: " << images.size() << " images in " << state.iteration() << " batches";
  if (!unseen.empty()) out << ", " << unseen.size() << " attribute(s) never observed";
  out << "\n";
  return {{{"atdf.csv", io::atdf_csv(state, dist)},
           {"distribution.json", io::dump_distribution(manifest.taxonomy, dist)}},
          std::nullopt};
}

CommandResult cmd_select(const RunConfig& config, RunReport& report, std::ostream& out) {
  const EngineConfig engine = config.engine();
  io::DistributionFile dist;
  io::Pool pool;
  {
    Stopwatch t(report, "load");
    dist = io::load_distribution(config.required_path("distribution"));
    pool = io::load_pool(config.required_path("pool"));
    if (!(pool.taxonomy == dist.taxonomy)) {
      throw ValidationError("select: pool taxonomy differs from the distribution taxonomy");
    }
  }
  Stopwatch t(report, "run");
  const SelectionManifest manifest = run_selection(pool.samples, dist.distribution, engine);
  report.results["statistics"] = io::statistics_json(manifest.statistics);
  Json head = Json::array();
  for (std::size_t i = 0; i < manifest.entries.size() && i < 10; ++i) {
    head.push_back(manifest.entries[i].id);
  }
  report.results["top_ids"] = head;

  const auto& s = manifest.statistics;
  out << "select: pool " << s.total << ", filtered " << s.filtered_out() << " (layout "
      << s.filtered_layout << ", semantic " << s.filtered_semantic << ", degenerate "
      << s.filtered_degenerate << "), selected " << s.selected << "\n";
  return {{{"selection.json", io::dump_selection(manifest)}}, std::nullopt};
}

CommandResult cmd_eval(const RunConfig& config, RunReport& report, std::ostream& out) {
  const bool detection = !config.text("manifest").empty() || !config.text("predictions").empty();
  const bool cas = !config.text("labels_predicted").empty() || !config.text("labels_condition").empty();
  const bool fid = !config.text("features_a").empty() || !config.text("features_b").empty();
  if (!detection && !cas && !fid) {
    throw ValidationError("eval: set manifest/predictions, labels_* or features_* to evaluate");
  }
  metrics::EvalDataset dataset;
  std::vector<std::string> predicted, conditioned;
  std::optional<metrics::FeatureSet> fa, fb;
  {
    Stopwatch t(report, "load");
    if (detection) {
      const auto manifest = io::load_manifest(config.required_path("manifest"));
      const auto table =
          io::load_predictions(config.required_path("predictions"), manifest.taxonomy);
      dataset.categories = manifest.taxonomy.attributes(Dimension::kCategory);
      for (auto& li : io::join(manifest.records, table)) {
        dataset.images.push_back({li.record.id, li.record.objects, std::move(li.predictions)});
      }
    }
    if (cas) {
      predicted = io::load_labels(config.required_path("labels_predicted"));
      conditioned = io::load_labels(config.required_path("labels_condition"));
    }
    if (fid) {
      fa = io::load_features(config.required_path("features_a"));
      fb = io::load_features(config.required_path("features_b"));
    }
  }

  Stopwatch t(report, "run");
  std::string csv = "metric,value\n";
  if (detection) {
    const auto summary = metrics::mean_ap(dataset);
    report.results["mAP"] = summary.map;
    report.results["mAP50"] = summary.map50;
    report.results["mAP75"] = summary.map75;
    Json per = Json::object();
    for (const auto& cat : dataset.categories) {
      Json j = Json::object();
      j["AP50"] = maybe(metrics::average_precision(dataset, cat, 0.5));
      j["AP75"] = maybe(metrics::average_precision(dataset, cat, 0.75));
      per[cat] = std::move(j);
    }
    report.results["per_category"] = std::move(per);
    csv += "mAP," + io::format_real(summary.map) + "\n";
    csv += "mAP50," + io::format_real(summary.map50) + "\n";
    csv += "mAP75," + io::format_real(summary.map75) + "\n";
    out << "eval: mAP " << summary.map << ", mAP50 " << summary.map50 << ", mAP75 "
        << summary.map75 << "\n";
  }
  if (cas) {
    double v = 0.0;
    try {
      v = metrics::cas_accuracy(predicted, conditioned);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("eval: CAS: ") + e.what());
    }
    report.results["CAS"] = v;
    csv += "CAS," + io::format_real(v) + "\n";
    out << "eval: CAS " << v << "\n";
  }
  if (fid) {
    double v = 0.0;
    try {
      v = metrics::frechet_distance(*fa, *fb);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("eval: FID: ") + e.what());
    }
    report.results["FID"] = v;
    csv += "FID," + io::format_real(v) + "\n";
    out << "eval: FID " << v << "\n";
  }
  return {{{"metrics.csv", csv}}, std::nullopt};
}

CommandResult cmd_attn_check(const RunConfig& config, RunReport& report, std::ostream& out) {
  attn::DeskSpec spec;
  spec.grid_w = config.count("grid_w");
  spec.grid_h = config.count("grid_h");
  spec.objects = config.count("objects");
  spec.width = config.count("width");
  spec.heads = config.count("heads");
  spec.sequence_length = config.count("sequence_length");
  spec.frequencies = config.count("frequencies");
  spec.mask_scale = config.count("mask_scale");
  spec.seed = config.seed();
  spec.init_sigma = config.real("init_sigma");
  spec.beta_o = config.real("beta_o");
  spec.beta_w = config.real("beta_w");
  attn::AttnCheckOptions options;
  options.eps = config.real("eps");
  if (!(options.eps >= 1e-6 && options.eps <= 1e-4)) {
    throw ValidationError("config: eps must lie in [1e-6, 1e-4]");
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  Stopwatch t(report, "run");
  const auto result = attn::run_attention_checks(spec, options);

  std::string csv = "check,status,value,tolerance,detail\n";
  Json checks = Json::array();
  for (const auto& c : result.checks) {
    Json j = Json::object();
    j["check"] = c.name;
    j["status"] = attn::status_name(c.status);
    j["value"] = c.value;
    j["tolerance"] = c.tolerance;
    j["detail"] = c.detail;
    checks.push_back(std::move(j));
    csv += c.name + "," + attn::status_name(c.status) + "," + io::format_real(c.value) + "," +
           io::format_real(c.tolerance) + ",\"" + c.detail + "\"\n";
    out << "  " << c.name << ": " << attn::status_name(c.status) << " (" << c.value << ")\n";
  }
  report.results["checks"] = std::move(checks);
  report.results["max_gradient_error"] = result.max_gradient_error();
  report.results["passed"] = result.passed();
  out << "attn-check: " << (result.passed() ? "all invariants hold" : "FAILED")
      << ", max gradient error " << result.max_gradient_error() << "\n";

  CommandResult r{{{"attn_check.csv", csv}}, std::nullopt};
  if (!result.passed()) {
    r.failure = RunError{kInvariant, "invariant", "one or more attention invariants failed"};
  }
  return r;
}

CommandResult cmd_synth(const RunConfig& config, RunReport& report, std::ostream& out) {
  AttributeTaxonomy taxonomy = taxonomy_default();
  synth::DifficultyProfile profile = synth::default_profile();
  synth::ScenarioSpec spec;
  spec.n_images = config.count("n_images");
  spec.objects_min = config.count("objects_min");
  spec.objects_max = config.count("objects_max");
  spec.box_min = config.real("box_min");
  spec.box_max = config.real("box_max");
  const std::size_t n_pool = config.count("n_pool");
  const std::uint64_t seed = config.seed();
  {
    Stopwatch t(report, "load");
    if (const auto& path = config.text("profile"); !path.empty()) {
      std::tie(taxonomy, profile) = io::parse_profile(io::read_text(path), path);
    }
  }

  Stopwatch t(report, "run");
  const auto scenario = synth::generate_scenario(taxonomy, profile, spec, seed);
  io::PredictionTable table;
  std::size_t boxes = 0, predicted = 0;
  for (std::size_t i = 0; i < scenario.records.size(); ++i) {
    table.emplace_back(scenario.records[i].id, scenario.predictions[i]);
    boxes += scenario.records[i].objects.size();
    predicted += scenario.predictions[i].size();
  }
  std::vector<Output> outputs = {
      {"manifest.json", io::dump_manifest(taxonomy, scenario.records)},
      {"predictions.json", io::dump_predictions(table)},
  };
  if (n_pool > 0) {
    synth::ScenarioSpec pool_spec = spec;
    pool_spec.n_images = n_pool;
    const auto pool = synth::generate_pool(taxonomy, profile, pool_spec, seed);
    outputs.push_back({"pool.json", io::dump_pool(taxonomy, pool)});
  }
  outputs.push_back({"expected_ordering.json", io::dump_expected_ordering(profile, taxonomy)});

  report.results["seed"] = seed;
  report.results["images"] = scenario.records.size();
  report.results["boxes"] = boxes;
  report.results["predictions"] = predicted;
  report.results["pool"] = n_pool;
  out << "synth: seed " << seed << ", " << scenario.records.size() << " images, " << boxes
      << " boxes, " << predicted << " predictions, pool " << n_pool << "\n";
  return {std::move(outputs), std::nullopt};
}

CommandResult dispatch(const std::string& command, const RunConfig& config, RunReport& report,
                       std::ostream& out) {
  (void)config.engine();  // every command rejects invalid engine settings
  if (command == "atdf") return cmd_atdf(config, report, out);
  if (command == "select") return cmd_select(config, report, out);
  if (command == "eval") return cmd_eval(config, report, out);
  if (command == "attn-check") return cmd_attn_check(config, report, out);
  if (command == "synth") return cmd_synth(config, report, out);
  throw ValidationError("unknown command '" + command + "'");
}

std::string report_json(const RunReport& r) {
  Json j = Json::object();
  j["command"] = r.command;
  j["status"] = !r.error ? "ok" : (r.error->kind == "invariant" ? "failed" : "error");
  j["config"] = r.config;
  j["results"] = r.results;
  j["outputs"] = r.outputs;
  if (r.error) {
    Json e = Json::object();
    e["kind"] = r.error->kind;
    e["exit_code"] = r.error->exit_code;
    e["message"] = r.error->message;
    j["error"] = std::move(e);
  }
  return j.dump(2) + "\n";
}

std::string timings_json(const RunReport& r) {
  Json j = Json::object();
  j["command"] = r.command;
  Json t = Json::object();
  double total = 0.0;
  for (const auto& [name, secs] : r.timings) {
    t[name] = secs;
    total += secs;
  }
  j["seconds"] = std::move(t);
  j["total_seconds"] = total;
  return j.dump(2) + "\n";
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"atdf", "select", "eval", "attn-check", "synth"};
  return names;
}

int execute(const std::string& command, const RunConfig& config, std::ostream& out,
            std::ostream& err, RunReport* report_out) {
  namespace fs = std::filesystem;
  RunReport report;
  report.command = command;
  report.config = config.echo();
  const std::string outdir = config.text("output_dir");
  bool have_dir = false;

  auto record = [&](int code, const char* kind, const std::string& message) {
    report.error = RunError{code, kind, message};
    err << "neptune-select " << command << ": " << message << "\n";
  };

  try {
    if (outdir.empty()) throw ValidationError("config: output_dir must not be empty");
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec || !fs::is_directory(outdir)) {
      throw IoError("cannot create output directory " + outdir + (ec ? ": " + ec.message() : ""));
    }
    have_dir = true;

    CommandResult result = dispatch(command, config, report, out);
    {
      Stopwatch t(report, "write");
      for (const auto& o : result.outputs) {
        io::write_atomic((fs::path(outdir) / o.name).string(), o.content);
        report.outputs.push_back(o.name);
      }
    }
    if (result.failure) record(result.failure->exit_code, "invariant", result.failure->message);
  } catch (const ValidationError& e) {
    record(kValidation, "validation", e.what());
  } catch (const std::invalid_argument& e) {
    record(kValidation, "validation", e.what());
  } catch (const InvariantError& e) {
    record(kInvariant, "invariant", e.what());
  } catch (const IoError& e) {
    record(kIo, "io", e.what());
  } catch (const std::exception& e) {
    record(kInvariant, "internal", e.what());
  }

  int code = report.error ? report.error->exit_code : kOk;
  if (have_dir) {
    try {
      io::write_atomic((fs::path(outdir) / "report.json").string(), report_json(report));
      io::write_atomic((fs::path(outdir) / "timings.json").string(), timings_json(report));
    } catch (const IoError& e) {
      err << "neptune-select " << command << ": " << e.what() << "\n";
      if (code == kOk) code = kIo;
    }
  }
  if (report_out) *report_out = std::move(report);
  return code;
}

}  // namespace neptune::cli
