// Command-line pipeline driver: synthetic data generation, attribute model
// training, circuit construction (knowledge rules or LearnSPN), CCCP weight
// fitting, joint optimization, prediction, explanations, metrics, and the
// compositional error-bound check.
//
// Exit codes: 0 success, 1 usage error, 2 data/model error, 3 invariant
// violation detected.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "npc/attribute_model.hpp"
#include "npc/cccp.hpp"
#include "npc/circuit_io.hpp"
#include "npc/dataset.hpp"
#include "npc/errors.hpp"
#include "npc/explanations.hpp"
#include "npc/learnspn.hpp"
#include "npc/metrics.hpp"
#include "npc/npc_model.hpp"
#include "npc/rules.hpp"
#include "npc/synthetic.hpp"
#include "npc/text_io.hpp"
#include "npc/world.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

struct GenArgs {
  std::string spec_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_gen(const GenArgs& args) {
  nlohmann::json spec_json;
  try {
    spec_json = nlohmann::json::parse(npc::io::read_text_file(args.spec_path));
  } catch (const nlohmann::json::exception& e) {
    throw npc::ParseError(args.spec_path + ": " + e.what());
  }
  npc::SyntheticSpec spec = npc::SyntheticSpec::from_json(spec_json);
  if (args.seed_set) spec.seed = args.seed;
  const npc::SyntheticData data = npc::generate_synthetic(spec);
  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);
  npc::write_dataset_jsonl(data.train, dir / "train.jsonl");
  npc::write_dataset_jsonl(data.validation, dir / "validation.jsonl");
  npc::write_dataset_jsonl(data.test, dir / "test.jsonl");
  npc::write_world_file(data.world, dir / "world.json");
  std::cout << "wrote " << data.train.samples.size() << "/" << data.validation.samples.size()
            << "/" << data.test.samples.size() << " train/validation/test rows to "
            << dir.string() << "\n";
  return kExitOk;
}

struct TrainAttrArgs {
  std::string train_path;
  std::string validation_path;
  std::string out_path;
  std::string trace_path;
  npc::SgdConfig config;
};

int run_train_attr(const TrainAttrArgs& args) {
  const npc::Dataset train = npc::read_dataset_jsonl(args.train_path);
  std::optional<npc::Dataset> validation;
  if (!args.validation_path.empty()) {
    validation = npc::read_dataset_jsonl(args.validation_path);
  }
  const npc::AttributeTrainResult result =
      npc::train_attributes(train, validation ? &*validation : nullptr, args.config);
  npc::write_attribute_model_file(result.model, args.out_path);
  if (!args.trace_path.empty()) {
    std::ostringstream csv;
    csv << "epoch,train_loss,validation_loss\n";
    for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
      csv << e << "," << npc::io::format_double(result.train_loss[e]) << ",";
      if (e < result.validation_loss.size()) {
        csv << npc::io::format_double(result.validation_loss[e]);
      }
      csv << "\n";
    }
    npc::io::write_text_file(args.trace_path, csv.str());
  }
  std::cout << "trained attribute model over " << result.train_loss.size()
            << " epochs, final train loss "
            << (result.train_loss.empty() ? 0.0 : result.train_loss.back()) << "\n";
  return kExitOk;
}

struct BuildCircuitArgs {
  std::string mode;
  std::string rules_path;
  std::string train_path;
  std::string out_path;
  std::string export_rules_path;
  std::uint64_t seed = 0;
  npc::LearnSpnConfig learnspn;
};

int run_build_circuit(const BuildCircuitArgs& args) {
  npc::Circuit circuit = [&] {
    if (args.mode == "knowledge") {
      npc::RuleSet rules = [&] {
        if (!args.rules_path.empty()) return npc::read_rules_file(args.rules_path);
        if (args.train_path.empty()) {
          throw npc::Error("knowledge mode requires --rules or --train");
        }
        const npc::Dataset dataset = npc::read_dataset_jsonl(args.train_path);
        return npc::rules_from_dataset(npc::sample_attribute_values(dataset, args.seed));
      }();
      if (!args.export_rules_path.empty()) {
        npc::write_rules_file(rules, args.export_rules_path);
      }
      return npc::compile_rules(rules);
    }
    if (args.mode == "learn") {
      if (args.train_path.empty()) throw npc::Error("learn mode requires --train");
      const npc::Dataset dataset = npc::read_dataset_jsonl(args.train_path);
      npc::LearnSpnConfig config = args.learnspn;
      config.rng_seed = args.seed;
      return npc::learn_structure(npc::sample_attribute_values(dataset, args.seed), config);
    }
    throw npc::Error("unknown --mode '" + args.mode + "' (expected knowledge or learn)");
  }();
  const npc::ValidationReport report = circuit.validate();
  if (!report.ok()) {
    throw npc::ValidationError("constructed circuit fails validation:\n" + report.to_string());
  }
  npc::write_circuit_file(circuit, args.out_path);
  std::cout << "wrote circuit with " << circuit.nodes().size() << " nodes to " << args.out_path
            << "\n";
  return kExitOk;
}

struct FitCccpArgs {
  std::string circuit_path;
  std::string train_path;
  std::string out_path;
  std::string trace_path;
  std::uint64_t seed = 0;
  npc::CccpConfig config;
};

int run_fit_cccp(const FitCccpArgs& args) {
  const npc::Circuit circuit = npc::read_circuit_file(args.circuit_path);
  const npc::Dataset dataset = npc::read_dataset_jsonl(args.train_path);
  const npc::SampledDataset rows = npc::sample_attribute_values(dataset, args.seed);
  const auto [fitted, trace] = npc::cccp_fit(circuit, rows, args.config);
  npc::write_circuit_file(fitted, args.out_path);
  if (!args.trace_path.empty()) npc::write_trace_csv_file(trace, args.trace_path);
  std::cout << "cccp ran " << trace.iterations_run << " iterations, mean log-likelihood "
            << trace.mean_log_likelihood.front() << " -> " << trace.mean_log_likelihood.back()
            << (trace.converged ? " (converged)" : "") << "\n";
  return kExitOk;
}

struct JointTrainArgs {
  std::string model_path;
  std::string circuit_path;
  std::string train_path;
  std::string out_dir;
  npc::JointOptConfig config;
};

int run_joint_train(const JointTrainArgs& args) {
  npc::NpcModel model(npc::read_attribute_model_file(args.model_path),
                      npc::read_circuit_file(args.circuit_path));
  const npc::Dataset dataset = npc::read_dataset_jsonl(args.train_path);
  const npc::JointTrainResult result = npc::joint_optimize(model, dataset, args.config);
  npc::write_model_bundle(result.model, args.out_dir);
  std::cout << "joint training ran " << result.train_loss.size() << " epochs";
  if (!result.train_loss.empty()) {
    std::cout << ", loss " << result.train_loss.front() << " -> " << result.train_loss.back();
  }
  std::cout << "; bundle written to " << args.out_dir << "\n";
  return kExitOk;
}

std::vector<bool> exclusion_mask(const npc::AttributeSchema& schema,
                                 const std::vector<std::string>& names) {
  std::vector<bool> mask(static_cast<std::size_t>(schema.attribute_count()), false);
  for (const std::string& name : names) {
    mask[static_cast<std::size_t>(schema.attribute_index(name))] = true;
  }
  return mask;
}

struct PredictArgs {
  std::string bundle_dir;
  std::string data_path;
  std::string out_path;
  std::vector<std::string> excluded;
  std::uint64_t enumeration_cap = npc::kDefaultEnumerationCap;
};

int run_predict(const PredictArgs& args) {
  const npc::NpcModel model = npc::read_model_bundle(args.bundle_dir);
  const npc::Dataset dataset = npc::read_dataset_jsonl(args.data_path);
  if (dataset.schema != model.schema()) {
    throw npc::SchemaMismatchError("dataset schema does not match the model bundle");
  }
  const std::vector<bool> mask = exclusion_mask(model.schema(), args.excluded);
  const bool any_excluded = args.excluded.size() > 0;
  std::optional<npc::ConditionalCache> cache;
  if (!any_excluded) cache.emplace(model.circuit, args.enumeration_cap);
  std::ostringstream out;
  int correct = 0;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const npc::Sample& sample = dataset.samples[i];
    const npc::PredictResult result =
        cache ? npc::predict_from_probabilities(*cache,
                                                model.attribute_model.predict(sample.features))
              : npc::predict_with_exclusion(model, sample.features, mask, args.enumeration_cap);
    correct += result.predicted_class == sample.class_label;
    nlohmann::json record = {
        {"index", i},
        {"predicted_class",
         model.schema().value_name(model.schema().class_variable(), result.predicted_class)},
        {"true_class",
         model.schema().value_name(model.schema().class_variable(), sample.class_label)},
        {"posterior", result.posterior.probabilities},
        {"raw_mass", result.posterior.raw_mass}};
    out << record.dump() << "\n";
  }
  npc::io::write_text_file(args.out_path, out.str());
  std::cout << "accuracy " << static_cast<double>(correct) / dataset.samples.size() << " over "
            << dataset.samples.size() << " samples\n";
  return kExitOk;
}

struct ExplainArgs {
  std::string bundle_dir;
  std::string data_path;
  std::string out_path;
  bool mpe = false;
  bool ce = false;
  bool trace_objective = false;
  npc::CeConfig ce_config;
  std::uint64_t enumeration_cap = npc::kDefaultEnumerationCap;
};

int run_explain(const ExplainArgs& args) {
  if (!args.mpe && !args.ce) throw npc::Error("explain requires --mpe and/or --ce");
  const npc::NpcModel model = npc::read_model_bundle(args.bundle_dir);
  const npc::Dataset dataset = npc::read_dataset_jsonl(args.data_path);
  if (dataset.schema != model.schema()) {
    throw npc::SchemaMismatchError("dataset schema does not match the model bundle");
  }
  const npc::AttributeSchema& schema = model.schema();
  const npc::ConditionalCache cache(model.circuit, args.enumeration_cap);
  std::ostringstream out;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const npc::Sample& sample = dataset.samples[i];
    const auto probabilities = model.attribute_model.predict(sample.features);
    const npc::PredictResult prediction = npc::predict_from_probabilities(cache, probabilities);
    const bool is_correct = prediction.predicted_class == sample.class_label;
    nlohmann::json record = {
        {"index", i},
        {"predicted_class",
         schema.value_name(schema.class_variable(), prediction.predicted_class)},
        {"true_class", schema.value_name(schema.class_variable(), sample.class_label)},
        {"raw_mass", prediction.posterior.raw_mass}};
    if (args.mpe) {
      try {
        const npc::MpeResult mpe =
            npc::mpe_cached(cache, probabilities, prediction.predicted_class);
        nlohmann::json assignment;
        for (int k = 0; k < schema.attribute_count(); ++k) {
          assignment[schema.attribute_name(k)] = schema.value_name(
              npc::VariableId{k}, mpe.assignment[static_cast<std::size_t>(k)]);
        }
        bool aligned = true;
        for (int k = 0; k < schema.attribute_count(); ++k) {
          aligned = aligned &&
                    sample.attribute_targets[static_cast<std::size_t>(k)][static_cast<std::size_t>(
                        mpe.assignment[static_cast<std::size_t>(k)])] > 0.0;
        }
        record["mpe"] = {{"assignment", assignment},
                         {"contribution", mpe.contribution},
                         {"aligned", is_correct ? nlohmann::json(aligned) : nlohmann::json()}};
      } catch (const npc::NoExplanationError& e) {
        record["mpe"] = {{"error", e.what()}};
      }
    }
    if (args.ce && !is_correct) {
      try {
        const npc::CeResult ce = npc::counterfactual_cached(cache, probabilities,
                                                            sample.class_label, args.ce_config);
        record["ce"] = {{"b", ce.b},
                        {"corrected", ce.corrected},
                        {"first_corrected_iteration", ce.first_corrected_iteration}};
        if (args.trace_objective) record["ce"]["objective_trace"] = ce.objective_trace;
      } catch (const npc::UncorrectableError& e) {
        record["ce"] = {{"error", e.what()}, {"corrected", false}};
      }
    }
    out << record.dump() << "\n";
  }
  npc::io::write_text_file(args.out_path, out.str());
  std::cout << "wrote explanations for " << dataset.samples.size() << " samples to "
            << args.out_path << "\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string bundle_dir;
  std::string data_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool with_alignment = false;
  bool with_correction = false;
  npc::CeConfig ce_config;
  std::uint64_t enumeration_cap = npc::kDefaultEnumerationCap;
};

int run_evaluate(const EvaluateArgs& args) {
  const npc::NpcModel model = npc::read_model_bundle(args.bundle_dir);
  const npc::Dataset dataset = npc::read_dataset_jsonl(args.data_path);
  if (dataset.schema != model.schema()) {
    throw npc::SchemaMismatchError("dataset schema does not match the model bundle");
  }
  npc::MetricsReport report;
  report.mean_tv_distance = npc::mean_tv_distance(model.attribute_model, dataset);
  report.mean_concept_accuracy = npc::mean_concept_accuracy(model.attribute_model, dataset);
  report.mean_likelihood =
      npc::mean_likelihood(model.circuit, npc::sample_attribute_values(dataset, args.seed));
  report.classification_accuracy =
      npc::classification_accuracy(model, dataset, args.enumeration_cap);
  if (args.with_alignment) {
    report.alignment_rate = npc::alignment_rate(model, dataset, args.enumeration_cap);
  }
  if (args.with_correction) {
    report.correction_rate =
        npc::correction_rate(model, dataset, args.ce_config, args.enumeration_cap);
  }
  npc::io::write_text_file(args.out_path, report.to_json().dump(2) + "\n");
  std::cout << report.to_json().dump() << "\n";
  return kExitOk;
}

struct CheckBoundArgs {
  std::string bundle_dir;
  std::string world_path;
  std::string out_path;
};

int run_check_bound(const CheckBoundArgs& args) {
  const npc::NpcModel model = npc::read_model_bundle(args.bundle_dir);
  const npc::DiscreteWorld world = npc::read_world_file(args.world_path);
  const npc::ModelTables tables = npc::model_tables_from_npc(model, world);
  const npc::BoundReport report = npc::check_error_bound(world, tables);
  npc::io::write_text_file(args.out_path, report.to_json().dump(2) + "\n");
  std::cout << report.to_json().dump() << "\n";
  return report.holds ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural probabilistic circuit pipeline"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset and its world");
  gen_cmd->add_option("--spec", gen.spec_path, "Generator spec JSON file")->required();
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Override the spec's seed")
      ->each([&](const std::string&) { gen.seed_set = true; });

  TrainAttrArgs train_attr;
  CLI::App* train_cmd = app.add_subcommand("train-attr", "Train the attribute recognizer");
  train_cmd->add_option("--train", train_attr.train_path, "Training dataset")->required();
  train_cmd->add_option("--validation", train_attr.validation_path, "Validation dataset");
  train_cmd->add_option("--out", train_attr.out_path, "Model checkpoint path")->required();
  train_cmd->add_option("--trace", train_attr.trace_path, "Loss trace CSV path");
  train_cmd->add_option("--learning-rate", train_attr.config.learning_rate, "SGD step size");
  train_cmd->add_option("--epochs", train_attr.config.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", train_attr.config.batch_size, "Mini-batch size");
  train_cmd->add_option("--seed", train_attr.config.seed, "Shuffle seed");
  train_cmd->add_option("--plateau-factor", train_attr.config.lr_plateau_factor,
                        "Learning-rate decay on plateau");
  train_cmd->add_option("--plateau-patience", train_attr.config.plateau_patience,
                        "Epochs without improvement before decay");

  BuildCircuitArgs build;
  CLI::App* build_cmd = app.add_subcommand("build-circuit", "Construct the task predictor");
  build_cmd->add_option("--mode", build.mode, "knowledge or learn")->required();
  build_cmd->add_option("--rules", build.rules_path, "Rule file (knowledge mode)");
  build_cmd->add_option("--train", build.train_path, "Training dataset");
  build_cmd->add_option("--out", build.out_path, "Circuit file path")->required();
  build_cmd->add_option("--export-rules", build.export_rules_path,
                        "Write the derived rule set (knowledge mode)");
  build_cmd->add_option("--seed", build.seed, "Attribute sampling / clustering seed");
  build_cmd->add_option("--independence-threshold", build.learnspn.independence_threshold,
                        "G-test p-value cutoff");
  build_cmd->add_option("--min-rows-to-split", build.learnspn.min_rows_to_split,
                        "Minimum rows before splitting");
  build_cmd->add_option("--cluster-count", build.learnspn.cluster_count, "Clusters per sum node");
  build_cmd->add_option("--max-depth", build.learnspn.max_depth, "Recursion depth cap");
  build_cmd->add_option("--laplace-alpha", build.learnspn.laplace_alpha, "Leaf smoothing");

  FitCccpArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit-cccp", "Fit circuit weights by CCCP");
  fit_cmd->add_option("--circuit", fit.circuit_path, "Input circuit")->required();
  fit_cmd->add_option("--train", fit.train_path, "Training dataset")->required();
  fit_cmd->add_option("--out", fit.out_path, "Output circuit")->required();
  fit_cmd->add_option("--trace", fit.trace_path, "Log-likelihood trace CSV");
  fit_cmd->add_option("--seed", fit.seed, "Attribute sampling seed");
  fit_cmd->add_option("--max-iterations", fit.config.max_iterations, "Update cap");
  fit_cmd->add_option("--tolerance", fit.config.ll_abs_tolerance,
                      "Log-likelihood improvement stop");
  fit_cmd->add_option("--weight-floor", fit.config.weight_floor, "Minimum weight");

  JointTrainArgs joint;
  CLI::App* joint_cmd =
      app.add_subcommand("joint-train", "Jointly optimize both modules, write the bundle");
  joint_cmd->add_option("--model", joint.model_path, "Attribute model checkpoint")->required();
  joint_cmd->add_option("--circuit", joint.circuit_path, "Circuit file")->required();
  joint_cmd->add_option("--train", joint.train_path, "Training dataset")->required();
  joint_cmd->add_option("--out-dir", joint.out_dir, "Bundle directory")->required();
  joint_cmd->add_option("--eta-attr", joint.config.eta_attribute, "Attribute learning rate");
  joint_cmd->add_option("--eta-circuit", joint.config.eta_circuit,
                        "Circuit learning rate (0 freezes the circuit)");
  joint_cmd->add_option("--epochs", joint.config.epochs, "Training epochs");
  joint_cmd->add_option("--batch-size", joint.config.batch_size, "Mini-batch size");
  joint_cmd->add_option("--seed", joint.config.seed, "Shuffle seed");
  joint_cmd->add_option("--weight-floor", joint.config.weight_floor, "Projection floor");
  joint_cmd->add_option("--enumeration-cap", joint.config.enumeration_cap,
                        "Assignment enumeration cap");

  PredictArgs predict_args;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Predict classes for a dataset");
  predict_cmd->add_option("--bundle", predict_args.bundle_dir, "Model bundle directory")
      ->required();
  predict_cmd->add_option("--data", predict_args.data_path, "Dataset to predict")->required();
  predict_cmd->add_option("--out", predict_args.out_path, "Predictions JSON-lines path")
      ->required();
  predict_cmd->add_option("--exclude", predict_args.excluded,
                          "Attribute names to exclude from inference");
  predict_cmd->add_option("--enumeration-cap", predict_args.enumeration_cap,
                          "Assignment enumeration cap");
  std::uint64_t predict_seed = 0;
  predict_cmd->add_option("--seed", predict_seed, "Unused; accepted for uniformity");

  ExplainArgs explain;
  CLI::App* explain_cmd = app.add_subcommand("explain", "Emit MPE and CE explanations");
  explain_cmd->add_option("--bundle", explain.bundle_dir, "Model bundle directory")->required();
  explain_cmd->add_option("--data", explain.data_path, "Dataset to explain")->required();
  explain_cmd->add_option("--out", explain.out_path, "Explanations JSON-lines path")->required();
  explain_cmd->add_flag("--mpe", explain.mpe, "Most probable explanations");
  explain_cmd->add_flag("--ce", explain.ce, "Counterfactual explanations for mispredictions");
  explain_cmd->add_flag("--trace-objective", explain.trace_objective,
                        "Record the CE objective trace");
  explain_cmd->add_option("--gamma", explain.ce_config.gamma, "CE learning rate");
  explain_cmd->add_option("--iterations", explain.ce_config.iterations, "CE iterations");
  explain_cmd->add_option("--enumeration-cap", explain.enumeration_cap,
                          "Assignment enumeration cap");
  std::uint64_t explain_seed = 0;
  explain_cmd->add_option("--seed", explain_seed, "Unused; accepted for uniformity");

  EvaluateArgs evaluate;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Compute the metrics report");
  evaluate_cmd->add_option("--bundle", evaluate.bundle_dir, "Model bundle directory")->required();
  evaluate_cmd->add_option("--data", evaluate.data_path, "Evaluation dataset")->required();
  evaluate_cmd->add_option("--out", evaluate.out_path, "Metrics JSON path")->required();
  evaluate_cmd->add_option("--seed", evaluate.seed, "Attribute sampling seed (mean likelihood)");
  evaluate_cmd->add_flag("--alignment", evaluate.with_alignment, "Include the MPE alignment rate");
  evaluate_cmd->add_flag("--correction", evaluate.with_correction,
                         "Include the CE correction rate");
  evaluate_cmd->add_option("--gamma", evaluate.ce_config.gamma, "CE learning rate");
  evaluate_cmd->add_option("--iterations", evaluate.ce_config.iterations, "CE iterations");
  evaluate_cmd->add_option("--enumeration-cap", evaluate.enumeration_cap,
                           "Assignment enumeration cap");

  CheckBoundArgs bound;
  CLI::App* bound_cmd =
      app.add_subcommand("check-bound", "Verify the compositional error bound against a world");
  bound_cmd->add_option("--bundle", bound.bundle_dir, "Model bundle directory")->required();
  bound_cmd->add_option("--world", bound.world_path, "World tables JSON")->required();
  bound_cmd->add_option("--out", bound.out_path, "Bound report JSON path")->required();
  std::uint64_t bound_seed = 0;
  bound_cmd->add_option("--seed", bound_seed, "Unused; accepted for uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (train_cmd->parsed()) return run_train_attr(train_attr);
    if (build_cmd->parsed()) return run_build_circuit(build);
    if (fit_cmd->parsed()) return run_fit_cccp(fit);
    if (joint_cmd->parsed()) return run_joint_train(joint);
    if (predict_cmd->parsed()) return run_predict(predict_args);
    if (explain_cmd->parsed()) return run_explain(explain);
    if (evaluate_cmd->parsed()) return run_evaluate(evaluate);
    if (bound_cmd->parsed()) return run_check_bound(bound);
  } catch (const npc::ValidationError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const npc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
